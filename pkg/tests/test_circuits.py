import numpy as np
import pytest

from metrilab.cce import preserved_information
from metrilab.circuits import (
    GATE_DEFAULTS,
    CircuitGraph,
    LogicalReadout,
    NodeSpec,
    build_gate,
    flipflop_space,
    logical_table,
    logistic,
    run_flipflop,
    settle_and_read,
    verify_truth_table,
)
from metrilab.errors import AmbiguousStateError, InvalidGateParamsError, NoSettleError
from metrilab.numerics import SeededRng

READOUT = LogicalReadout()
ALL_GATES = ("NOT", "AND", "OR", "NAND", "NOR", "XOR")


def bisect_fixed_point(drive, gain, lo=0.0, hi=1.0, iters=80):
    """Root of x - sigma(gain * drive) ... constant drive: solve by bisection."""
    f = lambda x: logistic(gain * drive) - x
    a, b = lo, hi
    for _ in range(iters):
        m = 0.5 * (a + b)
        if f(a) * f(m) <= 0:
            b = m
        else:
            a = m
    return 0.5 * (a + b)


class TestBuildAndTables:
    @pytest.mark.parametrize("kind", ALL_GATES)
    def test_truth_table_clean(self, kind):
        res = verify_truth_table(build_gate(kind), logical_table(kind), READOUT)
        assert res.passed, res.counterexamples

    @pytest.mark.parametrize("kind", ALL_GATES)
    def test_truth_table_with_state_noise(self, kind):
        res = verify_truth_table(build_gate(kind), logical_table(kind), READOUT,
                                 noise=1e-3, rng=SeededRng(13))
        assert res.passed, res.counterexamples

    def test_not_with_raw_sigmoid_parameterization(self):
        # steep weights with unit gain: the same inversion
        g = build_gate("NOT", {"w": 8.0, "b_not": 4.0, "gain": 1.0})
        assert settle_and_read(g, {"in": 1.0}, READOUT)["out"] == 0
        assert settle_and_read(g, {"in": 0.0}, READOUT)["out"] == 1

    def test_and_only_both_high(self):
        g = build_gate("AND")
        for a, b in ((0, 0), (0, 1), (1, 0)):
            assert settle_and_read(g, {"in1": a, "in2": b}, READOUT)["out"] == 0
        assert settle_and_read(g, {"in1": 1, "in2": 1}, READOUT)["out"] == 1

    def test_or_whenever_either_high(self):
        g = build_gate("OR")
        assert settle_and_read(g, {"in1": 0, "in2": 0}, READOUT)["out"] == 0
        assert settle_and_read(g, {"in1": 1, "in2": 0}, READOUT)["out"] == 1

    def test_xor_composite_identity(self):
        res = verify_truth_table(build_gate("XOR"), logical_table("XOR"), READOUT)
        assert res.passed

    def test_and_against_or_table_fails_with_counterexample(self):
        res = verify_truth_table(build_gate("AND"), logical_table("OR"), READOUT)
        assert not res.passed
        bad_inputs = {tuple(sorted(c["inputs"].items())) for c in res.counterexamples}
        assert (("in1", 1.0), ("in2", 0.0)) in bad_inputs

    def test_nand_chain_matches_table(self):
        res = verify_truth_table(build_gate("NAND"), logical_table("NAND"), READOUT)
        assert res.passed

    def test_interval_semantics(self):
        # any analog level inside a logical interval produces the same label
        g = build_gate("AND")
        for a in (0.0, 0.15, 0.2):
            for b in (0.8, 0.93, 1.0):
                assert settle_and_read(g, {"in1": a, "in2": b}, READOUT)["out"] == 0
        for a in (0.8, 1.0):
            for b in (0.85, 1.0):
                assert settle_and_read(g, {"in1": a, "in2": b}, READOUT)["out"] == 1

    def test_degenerate_threshold_rejected(self):
        with pytest.raises(InvalidGateParamsError):
            build_gate("AND", {"theta_and": 1.0})

    def test_flipflop_low_gain_rejected(self):
        with pytest.raises(InvalidGateParamsError):
            build_gate("FLIPFLOP", {"g_ff": 0.5})


class TestSettle:
    def test_fixed_point_matches_bisection_oracle(self):
        p = GATE_DEFAULTS
        g = build_gate("AND")
        labels, state = settle_and_read(g, {"in1": 1.0, "in2": 0.0}, READOUT, return_state=True)
        assert labels["out"] == 0
        oracle = bisect_fixed_point(p["w"] * 1.0 + p["w"] * 0.0 - p["theta_and"], p["gain"])
        assert abs(state[0] - oracle) < 1e-3

    def test_idempotent_on_settled_state(self):
        g = build_gate("OR")
        labels, state = settle_and_read(g, {"in1": 1.0, "in2": 0.0}, READOUT, return_state=True)
        again = settle_and_read(g, {"in1": 1.0, "in2": 0.0}, READOUT, x0=state)
        assert again == labels

    def test_no_settle_error_reports_state(self):
        # an oscillator node can never satisfy a fixed-point readout
        circ = CircuitGraph({"o": NodeSpec("oscillator", {"omega": 2.0})}, [],
                            {"in": [("o", 1.0)]}, {"out": "o"})
        with pytest.raises(NoSettleError) as err:
            settle_and_read(circ, {"in": 0.0}, LogicalReadout(t_max=5.0))
        assert err.value.final_state is not None

    def test_settling_time_below_half_tmax(self):
        # measured settle horizon stays comfortably inside the budget
        fast = LogicalReadout(t_max=READOUT.t_max / 2)
        for kind in ALL_GATES:
            res = verify_truth_table(build_gate(kind), logical_table(kind), fast)
            assert res.passed


class TestFlipFlop:
    def test_set_then_hold_retains_bit(self):
        ff = build_gate("FLIPFLOP")
        readings, ledger = run_flipflop(ff, [("set", 2.0, 8.0)], READOUT, hold_after=60.0)
        assert [b for _, b in readings] == [1]
        assert len(ledger) == 0  # no transitions during the hold

    def test_set_then_reset_sequence(self):
        ff = build_gate("FLIPFLOP")
        readings, ledger = run_flipflop(
            ff, [("set", 2.0, 8.0), ("reset", 30.0, 36.0)], READOUT, hold_after=20.0)
        assert [b for _, b in readings] == [1, 0]
        assert len(ledger) == 1 and ledger.entries[0].kind == "jump"

    def test_perturbed_symmetric_start_settles_high_side(self):
        ff = build_gate("FLIPFLOP")
        readings, _ = run_flipflop(ff, [], READOUT, x0=np.array([1e-3, 0.0]), hold_after=60.0)
        assert readings[-1][1] == 1

    def test_pure_symmetric_start_is_ambiguous(self):
        ff = build_gate("FLIPFLOP")
        with pytest.raises(AmbiguousStateError):
            run_flipflop(ff, [], READOUT, hold_after=30.0)

    def test_simultaneous_pulses_race(self):
        ff = build_gate("FLIPFLOP")
        with pytest.raises(AmbiguousStateError):
            run_flipflop(ff, [("set", 1.0, 6.0), ("reset", 3.0, 9.0)], READOUT)

    def test_retention_preserves_ln2(self):
        # no merges over a pulse-free horizon: the stored binary distinction
        # carries ln 2 nats of preserved information
        ff = build_gate("FLIPFLOP")
        readings, ledger = run_flipflop(ff, [("set", 2.0, 8.0)], READOUT, hold_after=100.0)
        space = flipflop_space()
        hold = (8.0, 108.0)
        assert preserved_information(ledger, space, hold) == pytest.approx(np.log(2.0))
