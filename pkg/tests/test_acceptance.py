"""Acceptance suite: one test per shipped criterion, each printing a
PASS/FAIL line (run with -s to stream them). Tolerances are fixed here, not
calibrated at runtime."""

import json
import time

import numpy as np
import pytest

from metrilab.cce import DoubleWellParams, simulate_bitflip, simulate_erasure
from metrilab.circuits import LogicalReadout, build_gate, flipflop_space, logical_table, run_flipflop, verify_truth_table
from metrilab.cce import preserved_information
from metrilab.cli import main as cli_main
from metrilab.experiments import (
    Exp1Config, Exp2Config, Exp3Config, Exp4Config,
    run_exp1, run_exp2, run_exp3, run_exp4,
)
from metrilab.metrics import (
    biased_walk_currents,
    classical_bound_check,
    linear_gaussian_channel,
    logistic_mean_channel,
    report_fluxes,
    trace_bound_check,
    tur_check,
)
from metrilab.numerics import SeededRng

RESULTS = []


def report(num, ok, detail, elapsed, budget):
    line = f"{'PASS' if ok else 'FAIL'} - criterion {num}: {detail} [{elapsed:.1f}s / budget {budget:.0f}s]"
    RESULTS.append(line)
    print(line)
    assert ok, line
    assert elapsed < budget, f"criterion {num} exceeded runtime budget: {elapsed:.1f}s"


@pytest.fixture(scope="module", autouse=True)
def summary():
    yield
    print("\n=== acceptance summary ===")
    for line in RESULTS:
        print(line)


def test_criterion_1_memory_sweep_monotonicity():
    t0 = time.time()
    res = run_exp1(Exp1Config(), seed=0)
    lam = res.column("lambda")
    mc = res.column("MC")
    irr = res.column("I_irr_rate")
    chi = res.column("chi")
    strictly_decreasing = bool(np.all(np.diff(chi) < 0))
    info_exact = bool(np.all(irr == lam))
    ratio = mc[0] / mc[-1]
    ok = strictly_decreasing and info_exact and ratio >= 4.0
    report(1, ok,
           f"chi strictly decreasing={strictly_decreasing}, I_irr==lambda exact={info_exact}, "
           f"MC({lam[0]:g})/MC({lam[-1]:g})={ratio:.2f} (>=4)",
           time.time() - t0, 60)


def test_criterion_2_substrate_gap():
    t0 = time.time()
    res = run_exp2(Exp2Config(), seed=0)
    rows = {r["substrate"]: r for r in res.rows}
    acc_ok = rows["oscillator"]["accuracy"] == 1.0 and rows["digital"]["accuracy"] == 1.0
    ratio = rows["digital"]["I_irr"] / rows["oscillator"]["I_irr"]
    ok = acc_ok and ratio >= 100.0
    report(2, ok,
           f"accuracies osc={rows['oscillator']['accuracy']} dig={rows['digital']['accuracy']}, "
           f"cost ratio={ratio:.0f} (>=100; B={res.metadata['bits']}, "
           f"clock={res.metadata['clock_period']} logged)",
           time.time() - t0, 120)


def test_criterion_3_interior_optimum():
    t0 = time.time()
    ok = True
    details = []
    for seed in range(5):
        res = run_exp3(Exp3Config(), seed=seed)
        rho = res.column("rho")
        chi = res.column("chi")
        am = int(np.argmax(chi))
        good = (0.3 < rho[am] < 1.5) and chi[am] >= 2 * chi[0] and chi[am] >= 2 * chi[-1]
        ok &= good
        details.append(f"s{seed}:rho*={rho[am]:.2f}")
    report(3, ok, "argmax chi interior and >=2x endpoints on seeds 0-4 (" + " ".join(details) + ")",
           time.time() - t0, 120)


def test_criterion_4_lattice_conservation_and_phases():
    t0 = time.time()
    res = run_exp4(Exp4Config(), seed=0)
    te = res.column("total_energy")
    ms = res.column("mean_S")
    gc = res.column("grad_corr")
    jc = res.column("jaccard")
    k = max(1, len(res.rows) // 5)
    conserved = len(set(int(v) for v in te)) == 1
    early_coupling = gc[:k].mean() > gc[-k:].mean()
    collapse = ms[-1] < 0.25 * ms.max()
    consolidation = jc[-k:].mean() > jc[:k].mean()
    ok = conserved and early_coupling and collapse and consolidation
    report(4, ok,
           f"energy constant={conserved}, grad-corr early {gc[:k].mean():.3f} > late {gc[-k:].mean():.3f}, "
           f"mean_S final/peak={ms[-1]/ms.max():.3f} (<0.25), "
           f"jaccard early {jc[:k].mean():.2f} < late {jc[-k:].mean():.2f}",
           time.time() - t0, 180)


def test_criterion_5_gate_suite():
    t0 = time.time()
    readout = LogicalReadout()
    ok = True
    for kind in ("NOT", "AND", "OR", "NAND", "NOR", "XOR"):
        g = build_gate(kind)
        for noise, rng in ((0.0, None), (1e-3, SeededRng(5))):
            ok &= verify_truth_table(g, logical_table(kind), readout, noise=noise, rng=rng).passed
    ff_ok = True
    for noise, rng in ((0.0, None), (1e-3, SeededRng(6))):
        ff = build_gate("FLIPFLOP")
        readings, ledger = run_flipflop(ff, [("set", 5.0, 10.0), ("reset", 40.0, 45.0)],
                                        readout, hold_after=30.0, noise=noise, rng=rng)
        ff_ok &= [b for _, b in readings] == [1, 0]
    # retention: pulse-free horizon preserves exactly the stored binary choice
    ff = build_gate("FLIPFLOP")
    _, ledger = run_flipflop(ff, [("set", 2.0, 8.0)], readout, hold_after=100.0)
    retained = preserved_information(ledger, flipflop_space(), (8.0, 108.0))
    retention_ok = retained == pytest.approx(np.log(2.0), abs=1e-12)
    ok = ok and ff_ok and retention_ok
    report(5, ok,
           f"7 gates pass with/without 1e-3 noise={ok and ff_ok}, "
           f"flip-flop preserved information={retained:.4f} (= ln 2)",
           time.time() - t0, 30)


def test_criterion_6_thermodynamic_suite():
    t0 = time.time()
    params = DoubleWellParams()
    era = simulate_erasure(params, 40.0, 1200, SeededRng(60))
    bound = params.kT * np.log(2.0)
    erasure_ok = era.heat_env >= bound - 3 * era.heat_std

    reps = [simulate_bitflip(params, T, 1000, SeededRng(61).derive(i))
            for i, T in enumerate((10.0, 20.0, 40.0, 80.0))]
    monotone_ok = all(
        b.dissipated_work <= a.dissipated_work + 2 * np.hypot(a.work_std, b.work_std)
        for a, b in zip(reps, reps[1:]))
    first_law_ok = all(
        abs(r.first_law_residual()) < 3 * np.hypot(r.work_std, r.heat_std) + 1e-9
        for r in reps + [era])
    power_ok = True
    for rep, T in zip(reps + [era], (10.0, 20.0, 40.0, 80.0, 40.0)):
        fluxes, T_env = report_fluxes(rep)
        power_ok &= classical_bound_check(fluxes, T_env,
                                          stat_tol=3 * rep.work_std / T)["satisfied"]
    ok = erasure_ok and monotone_ok and first_law_ok and power_ok
    report(6, ok,
           f"erasure heat {era.heat_env:.3f}>=ln2 bound {bound:.3f} within 3sigma={erasure_ok}, "
           f"W_diss nonincreasing={monotone_ok} "
           f"({', '.join(f'{r.dissipated_work:.3f}' for r in reps)}), "
           f"first law={first_law_ok}, power bound={power_ok}",
           time.time() - t0, 300)


def test_criterion_7_bound_suite():
    t0 = time.time()
    chan = linear_gaussian_channel(1.0)
    z = SeededRng(70).generator().standard_normal(300)
    gauss = trace_bound_check(chan, z)
    gaps = []
    for k, snr in enumerate((0.1, 0.01, 0.001)):
        zz = np.sqrt(snr) * SeededRng(71).derive(k).generator().standard_normal(300)
        r = trace_bound_check(chan, zz)
        gaps.append(abs(r["tightness"] - 1.0))
    tight_ok = gauss["satisfied"] and gaps[0] > gaps[1] > gaps[2] and gaps[-1] < 5e-3

    gen = SeededRng(72).generator()
    random_ok = True
    for _ in range(20):
        ch = logistic_mean_channel(level=gen.uniform(0.5, 3.0), slope=gen.uniform(0.5, 3.0),
                                   center=gen.uniform(-1.0, 1.0), sigma=gen.uniform(0.3, 1.5))
        atoms = np.array([gen.uniform(-2.0, 0.0), gen.uniform(0.0, 2.0)])
        random_ok &= trace_bound_check(ch, atoms)["satisfied"]

    tur_ok = True
    for i in range(100):
        j, sigma = biased_walk_currents(0.06, 0.04, 1000, 2000, SeededRng(73).derive(i))
        tur_ok &= tur_check(j, sigma)["satisfied"]
    f = 0.1 * 1.01 / 2.01 * 2
    j, sigma = biased_walk_currents(f, 0.2 - f, 10000, 10000, SeededRng(74))
    r = tur_check(j, sigma)
    near_eq_ok = r["satisfied"] and 0.5 <= r["lhs"] / r["rhs"] <= 2.0

    ok = tight_ok and random_ok and tur_ok and near_eq_ok
    report(7, ok,
           f"trace bound holds+tightens to 1 (gap {gaps[-1]:.1e})={tight_ok}, "
           f"20 random channels={random_ok}, TUR 100 ensembles={tur_ok}, "
           f"near-equilibrium saturation ratio={r['lhs']/r['rhs']:.3f} in [0.5,2]={near_eq_ok}",
           time.time() - t0, 60)


def test_criterion_8_determinism(tmp_path):
    t0 = time.time()
    cfg = tmp_path / "small.cfg"
    cfg.write_text("\n".join([
        "exp1.dim = 40", "exp1.rot_pairs = 19", "exp1.steps = 400", "exp1.k_lags = 5",
        "exp1.lambda_grid = [1e-3, 1]",
        "exp2.trials_per_freq = 5", "exp2.horizon = 30.0",
        "exp3.n_reservoir = 60", "exp3.washout = 50", "exp3.train = 200", "exp3.test = 200",
        "exp3.rho_grid = [0.1 .. 1.8 : 5]",
        "exp4.height = 64", "exp4.width = 64", "exp4.steps = 60", "exp4.radius = 9",
        "exp4.peak = 120",
        "bitflip.trials = 120", "bitflip.durations = [5.0, 10.0]",
        "erasure.trials = 120", "erasure.T_protocol = 10.0",
        "checks.tur_ensembles = 3", "checks.trace_random_channels = 3",
        "checks.classical_trials = 100",
        "monitor.steps = 50",
    ]) + "\n")
    mismatches = []
    for sub in ("exp1", "exp2", "exp3", "exp4", "gates", "bitflip", "erasure", "checks", "monitor"):
        payloads = []
        for attempt in ("a", "b"):
            out = tmp_path / f"{sub}_{attempt}"
            code = cli_main([sub, "--config", str(cfg), "--seed", "7",
                             "--out", str(out), "--quiet"])
            assert code == 0, f"{sub} exited {code}"
            blob = b""
            for f in sorted(out.iterdir()):
                if f.name == "manifest.json":
                    continue  # carries timestamp/wall time by design
                blob += f.name.encode() + f.read_bytes()
            payloads.append(blob)
        if payloads[0] != payloads[1]:
            mismatches.append(sub)
    ok = not mismatches
    report(8, ok, f"byte-identical CSV/JSON for all 9 subcommands"
           + (f" (mismatched: {mismatches})" if mismatches else ""),
           time.time() - t0, 300)
