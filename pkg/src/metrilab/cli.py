"""Single entry point: seeded experiment runs, gate verification, double-well
protocols, and bound-check suites, each writing CSV/JSON artifacts plus a run
manifest into the output directory.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 check failure.
CSV tables and *.meta.json / *.json result sidecars are byte-deterministic
for a fixed (config, seed); manifest.json additionally records timestamp and
wall time and is the one artifact excluded from the byte-identity guarantee.
"""

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .cce import landauer_bound, simulate_bitflip, simulate_erasure
from .circuits import (
    GATE_DEFAULTS,
    LogicalReadout,
    build_gate,
    logical_table,
    run_flipflop,
    verify_truth_table,
)
from .config import RunConfig, parse_config
from .errors import InvalidConfigError, MetrilabError
from .experiments import run_exp1, run_exp2, run_exp3, run_exp4
from .experiments.base import ExperimentResult, write_json, write_result
from .metrics import (
    SafetyLimits,
    biased_walk_currents,
    classical_bound_check,
    linear_gaussian_channel,
    logistic_mean_channel,
    report_fluxes,
    safety_monitor,
    trace_bound_check,
    tur_check,
)
from .numerics import SeededRng

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CHECK_FAILED = 4


def _run_experiment(which):
    def handler(cfg: RunConfig, seed, out, threads, quiet):
        sub = getattr(cfg, which)
        if which == "exp4":
            os.makedirs(out, exist_ok=True)

            def sink(t, field):
                np.save(os.path.join(out, f"field_t{t:04d}.npy"), field)

            result = run_exp4(sub, seed, field_sink=sink if sub.save_fields else None)
        elif which in ("exp1", "exp3"):
            runner = run_exp1 if which == "exp1" else run_exp3
            result = runner(sub, seed, threads=threads)
        else:
            result = run_exp2(sub, seed)
        write_result(result, out)
        if not quiet:
            print(f"{which}: wrote {len(result.rows)} rows to {out}")
        return EXIT_OK
    return handler


def _gate_rows(gcfg, seed):
    readout = LogicalReadout()
    params = gcfg.gate_params()
    rows = []
    rng = SeededRng(seed)
    for i, kind in enumerate(("NOT", "AND", "OR", "NAND", "NOR", "XOR")):
        circuit = build_gate(kind, params)
        table = logical_table(kind)
        for noise in (0.0, gcfg.noise):
            res = verify_truth_table(circuit, table, readout, noise=noise,
                                     rng=rng.derive(i) if noise else None)
            rows.append({"gate": kind, "noise": noise, "passed": res.passed,
                         "counterexamples": len(res.counterexamples)})
    for noise in (0.0, gcfg.noise):
        ff = build_gate("FLIPFLOP", params)
        ok = True
        try:
            readings, _ = run_flipflop(
                ff,
                [("set", 5.0, 10.0), ("reset", 40.0, 45.0)],
                readout, hold_after=30.0, noise=noise,
                rng=SeededRng(seed).derive(99) if noise else None)
            bits = [b for _, b in readings]
            ok = bits[-2:] == [1, 0] if len(bits) >= 2 else False
        except MetrilabError:
            ok = False
        rows.append({"gate": "FLIPFLOP", "noise": noise, "passed": ok, "counterexamples": 0 if ok else 1})
    return rows


def _handle_gates(cfg: RunConfig, seed, out, threads, quiet):
    rows = _gate_rows(cfg.gates, seed)
    result = ExperimentResult(name="gates",
                              columns=["gate", "noise", "passed", "counterexamples"],
                              metadata={"seed": seed, "config": cfg.gates.__dict__.copy(),
                                        "defaults": dict(GATE_DEFAULTS)})
    for r in rows:
        result.add_row(**r)
    write_result(result, out)
    ok = all(r["passed"] for r in rows)
    if not quiet:
        print(f"gates: {'all pass' if ok else 'FAILURES'} ({len(rows)} checks)")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _write_trials_csv(path, report):
    from .experiments.base import format_cell

    pt = report.per_trial
    with open(path, "w") as fh:
        fh.write("trial,work,heat,final_state,final_label\n")
        for i in range(report.trials):
            cells = (i, pt["work"][i], pt["heat"][i], pt["final_state"][i], pt["final_label"][i])
            fh.write(",".join(format_cell(c) for c in cells) + "\n")


def _handle_bitflip(cfg: RunConfig, seed, out, threads, quiet):
    pc = cfg.bitflip
    params = pc.params()
    result = ExperimentResult(
        name="bitflip",
        columns=["T_protocol", "success_prob", "work_total", "heat_env",
                 "dU_sys", "dS_sys", "dissipated_work", "work_std"],
        metadata={"seed": seed, "config": pc.__dict__.copy()},
    )
    last = None
    for i, T in enumerate(pc.duration_sweep()):
        rep = simulate_bitflip(params, T, pc.trials, SeededRng(seed).derive(i))
        result.add_row(T_protocol=T, success_prob=rep.success_prob, work_total=rep.work_total,
                       heat_env=rep.heat_env, dU_sys=rep.dU_sys, dS_sys=rep.dS_sys,
                       dissipated_work=rep.dissipated_work, work_std=rep.work_std)
        last = rep
    write_result(result, out)
    write_json(os.path.join(out, "bitflip.report.json"), last.to_json_dict())
    if pc.per_trial_csv:
        _write_trials_csv(os.path.join(out, "bitflip.trials.csv"), last)
    if not quiet:
        print(f"bitflip: success={last.success_prob:.3f} W_diss={last.dissipated_work:.4f}")
    return EXIT_OK


def _handle_erasure(cfg: RunConfig, seed, out, threads, quiet):
    pc = cfg.erasure
    rep = simulate_erasure(pc.params(), pc.T_protocol, pc.trials, SeededRng(seed))
    bound = landauer_bound(rep)
    result = ExperimentResult(
        name="erasure",
        columns=["T_protocol", "success_prob", "heat_env", "heat_std", "landauer_bound",
                 "work_total", "dS_sys", "dissipated_work"],
        metadata={"seed": seed, "config": pc.__dict__.copy()},
    )
    result.add_row(T_protocol=pc.T_protocol, success_prob=rep.success_prob, heat_env=rep.heat_env,
                   heat_std=rep.heat_std, landauer_bound=bound, work_total=rep.work_total,
                   dS_sys=rep.dS_sys, dissipated_work=rep.dissipated_work)
    write_result(result, out)
    write_json(os.path.join(out, "erasure.report.json"), rep.to_json_dict())
    if pc.per_trial_csv:
        _write_trials_csv(os.path.join(out, "erasure.trials.csv"), rep)
    if not quiet:
        print(f"erasure: heat={rep.heat_env:.4f} >= bound={bound:.4f}?"
              f" {'yes' if rep.heat_env >= bound else 'NO'}")
    return EXIT_OK


def _checks_rows(cfg: RunConfig, seed, threads=1):
    cc = cfg.checks
    rows = []

    def walk_check(i):
        rng = SeededRng(seed).derive(i)
        j, sigma = biased_walk_currents(cc.tur_forward, cc.tur_backward,
                                        cc.tur_steps, cc.tur_walkers, rng)
        r = tur_check(j, sigma)
        return {"name": f"tur_walk_{i:03d}", "lhs": r["lhs"], "rhs": r["rhs"],
                "satisfied": r["satisfied"], "slack": r["slack"], "seed": seed}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows.extend(ex.map(walk_check, range(cc.tur_ensembles)))
    else:
        rows.extend(walk_check(i) for i in range(cc.tur_ensembles))

    hop = 0.5 * (cc.tur_forward + cc.tur_backward)
    f_eq = hop * cc.near_eq_ratio / (1.0 + cc.near_eq_ratio) * 2.0
    b_eq = 2.0 * hop - f_eq
    j, sigma = biased_walk_currents(f_eq, b_eq, cc.tur_steps * 10, cc.tur_walkers * 5,
                                    SeededRng(seed).derive(9000))
    r = tur_check(j, sigma)
    saturation = r["lhs"] / r["rhs"] if np.isfinite(r["lhs"]) else np.inf
    rows.append({"name": "tur_near_equilibrium", "lhs": r["lhs"], "rhs": r["rhs"],
                 "satisfied": bool(r["satisfied"] and 0.5 <= saturation <= 2.0),
                 "slack": r["slack"], "seed": seed})

    score_scale = 0.3 if cc.channel_preset == "corrupted" else 1.0
    chan = linear_gaussian_channel(cc.gauss_sigma)
    chan.score_scale = score_scale
    z = cc.gauss_tau * SeededRng(seed).derive(9100).generator().standard_normal(cc.trace_prior_samples)
    r = trace_bound_check(chan, z)
    rows.append({"name": "trace_bound_gaussian", "lhs": r["c_t"], "rhs": r["half_trace_G"],
                 "satisfied": r["satisfied"], "slack": r["half_trace_G"] - r["c_t"], "seed": seed})

    prev_gap = None
    for k, snr in enumerate(sorted(cc.tight_snrs, reverse=True)):
        tau = cc.gauss_sigma * np.sqrt(snr)
        zz = tau * SeededRng(seed).derive(9200 + k).generator().standard_normal(cc.trace_prior_samples)
        rr = trace_bound_check(linear_gaussian_channel(cc.gauss_sigma), zz)
        gap = abs(rr["tightness"] - 1.0)
        ok = rr["satisfied"] and (prev_gap is None or gap <= prev_gap + 1e-9)
        prev_gap = gap
        rows.append({"name": f"trace_tightness_snr_{snr:g}", "lhs": rr["tightness"], "rhs": 1.0,
                     "satisfied": bool(ok), "slack": -gap, "seed": seed})

    gen = SeededRng(seed).derive(9300).generator()
    for k in range(cc.trace_random_channels):
        chan = logistic_mean_channel(level=gen.uniform(0.5, 3.0), slope=gen.uniform(0.5, 3.0),
                                     center=gen.uniform(-1.0, 1.0), sigma=gen.uniform(0.3, 1.5),
                                     name=f"logistic_{k:02d}")
        if cc.channel_preset == "corrupted":
            chan.score_scale = 0.3
        atoms = np.array([gen.uniform(-2.0, 0.0), gen.uniform(0.0, 2.0)])
        reps = np.repeat(atoms, [1, 1])
        r = trace_bound_check(chan, reps)
        rows.append({"name": f"trace_bound_{chan.name}", "lhs": r["c_t"], "rhs": r["half_trace_G"],
                     "satisfied": r["satisfied"], "slack": r["half_trace_G"] - r["c_t"], "seed": seed})

    # isothermal power bound on a quick protocol pair plus synthetic saturation
    for name, sim in (("classical_bitflip", simulate_bitflip), ("classical_erasure", simulate_erasure)):
        rep = sim(cfg.bitflip.params(), cc.classical_T, cc.classical_trials,
                  SeededRng(seed).derive(9400 + (name == "classical_erasure")))
        fluxes, T_env = report_fluxes(rep)
        r = classical_bound_check(fluxes, T_env, stat_tol=3.0 * rep.work_std / cc.classical_T)
        rows.append({"name": name, "lhs": r["lhs_power"], "rhs": r["rhs_power"],
                     "satisfied": r["satisfied"], "slack": r["slack"], "seed": seed})
    t = np.linspace(0.0, 1.0, 11)
    w = np.ones_like(t)
    synth = {"times": t, "w_dot": w, "i_irr_dot": w, "f_sys_dot": 0.0 * t, "s_prod_dot": 0.0 * t}
    r = classical_bound_check(synth, T_env=1.0)
    rows.append({"name": "classical_synthetic_saturation", "lhs": r["lhs_power"],
                 "rhs": r["rhs_power"], "satisfied": bool(r["satisfied"] and abs(r["slack"]) < 1e-12),
                 "slack": r["slack"], "seed": seed})
    return rows


def _handle_checks(cfg: RunConfig, seed, out, threads, quiet):
    rows = _checks_rows(cfg, seed, threads)
    result = ExperimentResult(name="checks",
                              columns=["name", "lhs", "rhs", "satisfied", "slack", "seed"],
                              metadata={"seed": seed, "config": cfg.checks.__dict__.copy()})
    for r in rows:
        result.add_row(**{k: r[k] for k in result.columns})
    write_result(result, out)
    write_json(os.path.join(out, "checks.json"), rows)
    failures = [r["name"] for r in rows if not r["satisfied"]]
    if not quiet:
        print(f"checks: {len(rows) - len(failures)}/{len(rows)} satisfied"
              + (f"; failed: {', '.join(failures[:5])}" if failures else ""))
    return EXIT_CHECK_FAILED if failures else EXIT_OK


def _handle_monitor(cfg: RunConfig, seed, out, threads, quiet):
    mc = cfg.monitor
    # Constant-flux series from the renormalized rotor regime: information and
    # entropy rates are exactly lam; the work channel carries no task proxy.
    t = np.arange(mc.steps) * mc.dt
    series = {
        "times": t,
        "w_dot": np.zeros(mc.steps),
        "i_irr_dot": np.full(mc.steps, mc.lam),
        "s_prod_dot": np.full(mc.steps, mc.lam),
        "f_sys_dot": np.zeros(mc.steps),
    }
    limits = SafetyLimits(chi_range=(mc.chi_min, mc.chi_max), P_max=mc.P_max,
                          I_dot_max=mc.I_dot_max, s_crit=mc.s_crit, f_max=mc.f_max)
    report = safety_monitor(series, limits, window=mc.window)
    payload = {"seed": seed, "lambda": mc.lam, "n_samples": report.n_samples,
               "first_violation_time": report.first_violation_time,
               "counts": report.counts, "total": report.total,
               "limits": cfg.monitor.__dict__.copy()}
    os.makedirs(out, exist_ok=True)
    write_json(os.path.join(out, "monitor.json"), payload)
    if not quiet:
        print(f"monitor: {report.total} violations over {report.n_samples} samples")
    return EXIT_OK


HANDLERS = {
    "exp1": _run_experiment("exp1"),
    "exp2": _run_experiment("exp2"),
    "exp3": _run_experiment("exp3"),
    "exp4": _run_experiment("exp4"),
    "gates": _handle_gates,
    "bitflip": _handle_bitflip,
    "erasure": _handle_erasure,
    "checks": _handle_checks,
    "monitor": _handle_monitor,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="metrilab",
                                     description="seeded dynamics experiments and bound checks")
    parser.add_argument("subcommand", choices=sorted(HANDLERS))
    parser.add_argument("--config", default=None, help="key=value config file")
    parser.add_argument("--seed", type=int, default=None, help="overrides config seed")
    parser.add_argument("--out", default=None, help="output directory (default runs/<subcommand>)")
    parser.add_argument("--threads", type=int, default=1, help="parallelism cap for sweeps")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    start = time.time()
    try:
        cfg = parse_config(args.config)
    except FileNotFoundError as exc:
        print(json.dumps({"error": "config-not-found", "detail": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except InvalidConfigError as exc:
        print(json.dumps({"error": "config-error", "detail": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG

    seed = args.seed if args.seed is not None else cfg.seed
    out = args.out or os.path.join("runs", args.subcommand)
    os.makedirs(out, exist_ok=True)
    try:
        code = HANDLERS[args.subcommand](cfg, seed, out, max(1, args.threads), args.quiet)
    except InvalidConfigError as exc:
        print(json.dumps({"error": "config-error", "detail": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except MetrilabError as exc:
        print(json.dumps({"error": "numerical-failure", "kind": type(exc).__name__,
                          "detail": str(exc)}), file=sys.stderr)
        return EXIT_NUMERICAL

    manifest = {
        "subcommand": args.subcommand,
        "config_path": args.config,
        "seed": seed,
        "out": out,
        "parameters": cfg.resolved(),
        "code_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "wall_time_s": round(time.time() - start, 3),
        "exit_code": code,
    }
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
