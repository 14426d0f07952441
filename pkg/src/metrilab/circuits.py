"""Continuous dynamical circuits: node primitives, gate library, settle-and-read.

Nodes are scalar dynamical systems (leaky integrator, saturating activation,
phase oscillator) wired by weighted directed edges. Logic emerges from
attractor selection: a gate is read by letting the state relax with inputs
clamped and mapping encoding-port states through disjoint logical intervals
(low = [0, low_max], high = [high_min, 1]); the band in between is forbidden.

Gate constants live in GATE_DEFAULTS. Thresholds sit mid-gap between the
worst-case drive sums of adjacent truth-table rows so that any analog input
level inside a logical interval yields the same output label.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cce import BOUNDARY, EncodingSpace, IrreversibilityLedger
from .errors import (
    AmbiguousStateError,
    InvalidGateParamsError,
    NonFixedPointError,
    NoSettleError,
)
from .numerics import SeededRng

GATE_DEFAULTS = {
    "gain": 8.0,     # logistic steepness
    "w": 1.0,        # input weight
    "theta_and": 1.4,
    "theta_or": 0.6,
    "b_not": 0.5,    # = 0.5 * w
    "g_ff": 2.0,     # flip-flop self-excitation (> 1)
    "h_ff": 2.0,     # flip-flop mutual inhibition
    "pulse_amplitude": 2.0,
}

NODE_KINDS = ("integrator", "activation", "oscillator")


def logistic(z):
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class NodeSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind {self.kind!r}")
        if self.kind == "integrator" and self.params.get("leak", 1.0) <= 0:
            raise ValueError("integrator leak must be positive")
        if self.kind == "oscillator" and self.params.get("omega", 1.0) <= 0:
            raise ValueError("oscillator omega must be positive")


@dataclass
class LogicalReadout:
    low_max: float = 0.2
    high_min: float = 0.8
    t_max: float = 50.0
    window: float = 5.0
    tol: float = 1e-4
    dt: float = 0.02

    def __post_init__(self):
        if not self.low_max < self.high_min:
            raise ValueError("forbidden band must be nonempty (low_max < high_min)")

    def label(self, value):
        if value <= self.low_max:
            return 0
        if value >= self.high_min:
            return 1
        return None


class CircuitGraph:
    """Directed graph of scalar nodes with weighted-sum aggregation.

    Ports: `input_ports` maps an external port name to weighted injection
    points; every node state is an output port addressable by node name;
    `encoding_ports` name the states carrying the logical value. Context
    parameters live in each NodeSpec.
    """

    def __init__(self, nodes, edges, input_ports, encoding_ports, name=""):
        self.name = name
        self.node_names = list(nodes)
        self.nodes = dict(nodes)
        self.edges = list(edges)
        self.input_ports = {k: list(v) for k, v in input_ports.items()}
        self.encoding_ports = dict(encoding_ports)
        self._index = {n: i for i, n in enumerate(self.node_names)}
        self._validate()
        n = len(self.node_names)
        self._W = np.zeros((n, n))
        for src, dst, w in self.edges:
            self._W[self._index[dst], self._index[src]] += w
        self._bias = np.array([self.nodes[m].params.get("bias", 0.0) for m in self.node_names])
        self._gain = np.array([self.nodes[m].params.get("gain", GATE_DEFAULTS["gain"]) for m in self.node_names])
        self._leak = np.array([self.nodes[m].params.get("leak", 1.0) for m in self.node_names])
        self._omega = np.array([self.nodes[m].params.get("omega", 0.0) for m in self.node_names])
        self._kind = [self.nodes[m].kind for m in self.node_names]
        self._act = np.array([k == "activation" for k in self._kind])
        self._intg = np.array([k == "integrator" for k in self._kind])
        self._osc = np.array([k == "oscillator" for k in self._kind])

    def _validate(self):
        for src, dst, _ in self.edges:
            if src not in self.nodes or dst not in self.nodes:
                raise ValueError(f"edge ({src!r} -> {dst!r}) references undeclared node")
        for port, targets in self.input_ports.items():
            for node, _ in targets:
                if node not in self.nodes:
                    raise ValueError(f"input port {port!r} targets undeclared node {node!r}")
        for port, node in self.encoding_ports.items():
            if node not in self.nodes:
                raise ValueError(f"encoding port {port!r} reads undeclared node {node!r}")

    @property
    def dim(self):
        return len(self.node_names)

    def drive(self, x, inputs):
        v = self._W @ x
        for port, value in inputs.items():
            if port not in self.input_ports:
                raise ValueError(f"unknown input port {port!r}")
            for node, w in self.input_ports[port]:
                v[self._index[node]] += w * value
        return v

    def field(self, x, inputs):
        v = self.drive(x, inputs)
        dx = np.empty_like(x)
        a = self._act
        dx[a] = -x[a] + logistic(self._gain[a] * (v[a] + self._bias[a]))
        i = self._intg
        dx[i] = -self._leak[i] * x[i] + v[i]
        o = self._osc
        dx[o] = self._omega[o] + v[o]
        return dx

    def state_of(self, x, node):
        return float(x[self._index[node]])


def integrate_circuit(circuit: CircuitGraph, inputs, x0, T, dt=0.02, noise=0.0,
                      gen: Optional[np.random.Generator] = None):
    """Clamped-input RK4 integration (plus optional additive state noise);
    returns the state time series including the initial state."""
    steps = int(round(T / dt))
    x = np.asarray(x0, dtype=float).copy()
    out = np.empty((steps + 1, circuit.dim))
    out[0] = x
    sq = np.sqrt(dt)
    f = lambda s: circuit.field(s, inputs)
    for k in range(steps):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if noise > 0.0 and gen is not None:
            x = x + noise * sq * gen.standard_normal(circuit.dim)
        out[k + 1] = x
    return out


def settle_and_read(circuit: CircuitGraph, inputs, readout: LogicalReadout,
                    x0=None, noise=0.0, rng: Optional[SeededRng] = None,
                    return_state=False):
    """Integrate with inputs clamped until every encoding-port state has sat
    inside a single logical interval for a full window, then return labels.

    Raises NoSettleError if an encoding state is still in the forbidden band
    at t_max, and NonFixedPointError if labels are stable but the state keeps
    moving by more than `tol` across the window (limit cycle inside an
    interval)."""
    dt = readout.dt
    steps = int(round(readout.t_max / dt))
    window_steps = max(1, int(round(readout.window / dt)))
    gen = rng.generator() if (rng is not None and noise > 0.0) else None
    x = np.zeros(circuit.dim) if x0 is None else np.asarray(x0, dtype=float).copy()
    enc_idx = {port: circuit._index[node] for port, node in circuit.encoding_ports.items()}
    sq = np.sqrt(dt)
    f = lambda s: circuit.field(s, inputs)

    tol = readout.tol if noise == 0.0 else max(readout.tol, 8.0 * noise)
    run_labels = None
    run_len = 0
    history = [x.copy()]
    for k in range(steps):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if noise > 0.0 and gen is not None:
            x = x + noise * sq * gen.standard_normal(circuit.dim)
        history.append(x.copy())
        if len(history) > window_steps + 1:
            history.pop(0)
        labels = {port: readout.label(x[i]) for port, i in enc_idx.items()}
        if None in labels.values():
            run_labels, run_len = None, 0
            continue
        if labels == run_labels:
            run_len += 1
        else:
            run_labels, run_len = labels, 1
        if run_len >= window_steps:
            move = float(np.max(np.abs(history[-1] - history[0])))
            if move <= tol:
                return (run_labels, x) if return_state else run_labels
    if run_len >= window_steps:
        raise NonFixedPointError(
            f"labels held but the state kept moving past t_max={readout.t_max} "
            "(non-fixed-point attractor inside a logical interval)")
    raise NoSettleError(f"no settle within t_max={readout.t_max}", final_state=x)


# ---------------------------------------------------------------------------
# gate construction
# ---------------------------------------------------------------------------

def _activation_node(gain, bias):
    return NodeSpec("activation", {"gain": gain, "bias": bias})


def _feedforward_fixed_point(circuit: CircuitGraph, inputs):
    """Exact attractor of an acyclic gate by forward propagation."""
    n = circuit.dim
    x = np.zeros(n)
    # iterate n passes: suffices for any topological depth <= n
    for _ in range(n):
        v = circuit.drive(x, inputs)
        x = logistic(circuit._gain * (v + circuit._bias))
    return x


def _validate_combinational(circuit, truth, readout=None):
    readout = readout or LogicalReadout()
    for row_inputs, expected in truth:
        x = _feedforward_fixed_point(circuit, row_inputs)
        for port, want in expected.items():
            got = readout.label(circuit.state_of(x, circuit.encoding_ports[port]))
            if got != want:
                raise InvalidGateParamsError(
                    f"{circuit.name}: corner {row_inputs} settles to "
                    f"{circuit.state_of(x, circuit.encoding_ports[port]):.3f} "
                    f"(label {got}), expected {want}")


TRUTH_TABLES = {
    "NOT": [((0,), 1), ((1,), 0)],
    "AND": [((0, 0), 0), ((0, 1), 0), ((1, 0), 0), ((1, 1), 1)],
    "OR": [((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((1, 1), 1)],
    "NAND": [((0, 0), 1), ((0, 1), 1), ((1, 0), 1), ((1, 1), 0)],
    "NOR": [((0, 0), 1), ((0, 1), 0), ((1, 0), 0), ((1, 1), 0)],
    "XOR": [((0, 0), 0), ((0, 1), 1), ((1, 0), 1), ((1, 1), 0)],
}


def build_gate(kind, params=None) -> CircuitGraph:
    """Construct one of the shipped gates; raises InvalidGateParamsError when
    the requested parameters do not reproduce the gate's attractor structure
    at the four (or two) logical input corners."""
    p = dict(GATE_DEFAULTS)
    if params:
        p.update(params)
    kind = kind.upper()
    gain, w = p["gain"], p["w"]

    if kind == "NOT":
        nodes = {"y": _activation_node(gain, p["b_not"])}
        circ = CircuitGraph(nodes, [], {"in": [("y", -w)]}, {"out": "y"}, name="NOT")
    elif kind in ("AND", "OR"):
        theta = p["theta_and"] if kind == "AND" else p["theta_or"]
        nodes = {"y": _activation_node(gain, -theta)}
        circ = CircuitGraph(nodes, [], {"in1": [("y", w)], "in2": [("y", w)]},
                            {"out": "y"}, name=kind)
    elif kind in ("NAND", "NOR"):
        theta = p["theta_and"] if kind == "NAND" else p["theta_or"]
        nodes = {"g": _activation_node(gain, -theta), "y": _activation_node(gain, p["b_not"])}
        circ = CircuitGraph(nodes, [("g", "y", -w)],
                            {"in1": [("g", w)], "in2": [("g", w)]}, {"out": "y"}, name=kind)
    elif kind == "XOR":
        # AND(NAND(v1, v2), OR(v1, v2))
        nodes = {
            "a": _activation_node(gain, -p["theta_and"]),
            "na": _activation_node(gain, p["b_not"]),
            "o": _activation_node(gain, -p["theta_or"]),
            "y": _activation_node(gain, -p["theta_and"]),
        }
        edges = [("a", "na", -w), ("na", "y", w), ("o", "y", w)]
        circ = CircuitGraph(nodes, edges,
                            {"in1": [("a", w), ("o", w)], "in2": [("a", w), ("o", w)]},
                            {"out": "y"}, name="XOR")
    elif kind == "FLIPFLOP":
        g, h = p["g_ff"], p["h_ff"]
        if g <= 1.0:
            raise InvalidGateParamsError("flip-flop self-excitation g must exceed 1")
        nodes = {"A": _activation_node(gain, 0.0), "B": _activation_node(gain, 0.0)}
        edges = [("A", "A", g), ("B", "B", g), ("A", "B", -h), ("B", "A", -h)]
        circ = CircuitGraph(nodes, edges,
                            {"set": [("A", 1.0)], "reset": [("B", 1.0)]},
                            {"q": "A", "qbar": "B"}, name="FLIPFLOP")
        _validate_flipflop(circ)
        return circ
    else:
        raise ValueError(f"unknown gate kind {kind!r}")

    table = TRUTH_TABLES[kind]
    ports = sorted(circ.input_ports)
    truth = [({port: val for port, val in zip(ports, row)}, {"out": out}) for row, out in table]
    _validate_combinational(circ, truth)
    return circ


def _validate_flipflop(circ):
    readout = LogicalReadout()
    for hi, lo, want in (("A", "B", {"q": 1, "qbar": 0}), ("B", "A", {"q": 0, "qbar": 1})):
        x0 = np.zeros(circ.dim)
        x0[circ._index[hi]] = 1.0
        try:
            labels = settle_and_read(circ, {"set": 0.0, "reset": 0.0}, readout, x0=x0)
        except (NoSettleError, NonFixedPointError) as exc:
            raise InvalidGateParamsError(f"flip-flop failed to hold from {hi}-high: {exc}") from exc
        if labels != want:
            raise InvalidGateParamsError(f"flip-flop holds wrong labels from {hi}-high: {labels}")


# ---------------------------------------------------------------------------
# verification and stateful runs
# ---------------------------------------------------------------------------

def load_circuit(text) -> CircuitGraph:
    """Build a circuit from structured text: node / edge / input / encoding lines.

        node  a activation gain=8 bias=-1.4
        node  b activation gain=8 bias=0.5
        edge  a b -1.0
        input in1 a 1.0
        input in2 a 1.0
        encoding out b

    Unknown directives or references to undeclared nodes raise ValueError.
    """
    nodes = {}
    edges = []
    input_ports = {}
    encoding_ports = {}
    name = ""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind, args = parts[0].lower(), parts[1:]
        if kind == "circuit":
            name = args[0]
        elif kind == "node":
            node_name, node_kind = args[0], args[1]
            params = {}
            for tok in args[2:]:
                key, val = tok.split("=", 1)
                params[key] = float(val)
            nodes[node_name] = NodeSpec(node_kind, params)
        elif kind == "edge":
            src, dst, weight = args[0], args[1], float(args[2])
            edges.append((src, dst, weight))
        elif kind == "input":
            port, node, weight = args[0], args[1], float(args[2])
            input_ports.setdefault(port, []).append((node, weight))
        elif kind == "encoding":
            encoding_ports[args[0]] = args[1]
        else:
            raise ValueError(f"line {lineno}: unknown directive {kind!r}")
    return CircuitGraph(nodes, edges, input_ports, encoding_ports, name=name)


def load_truth_table(text):
    """Parse truth-table CSV rows: header names the input ports then the
    expected encoding ports prefixed with 'out:'; one row per corner."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    header = [h.strip() for h in lines[0].split(",")]
    in_cols = [h for h in header if not h.startswith("out:")]
    out_cols = [h[4:] for h in header if h.startswith("out:")]
    if not out_cols:
        raise ValueError("truth table needs at least one out: column")
    table = []
    for ln in lines[1:]:
        cells = [c.strip() for c in ln.split(",")]
        if len(cells) != len(header):
            raise ValueError(f"row {ln!r} does not match header width")
        inputs = {h: float(c) for h, c in zip(in_cols, cells)}
        expected = {h: int(c) for h, c in zip(out_cols, cells[len(in_cols):])}
        table.append((inputs, expected))
    return table


@dataclass
class TruthTableResult:
    passed: bool
    counterexamples: list


def verify_truth_table(circuit: CircuitGraph, table, readout: LogicalReadout,
                       noise=0.0, rng: Optional[SeededRng] = None) -> TruthTableResult:
    """Run settle_and_read per row; rows are (inputs dict, expected label dict)."""
    bad = []
    for i, (row_inputs, expected) in enumerate(table):
        r = rng.derive(i) if rng is not None else None
        labels = settle_and_read(circuit, row_inputs, readout, noise=noise, rng=r)
        for port, want in expected.items():
            if labels[port] != want:
                bad.append({"inputs": dict(row_inputs), "port": port,
                            "expected": want, "got": labels[port]})
    return TruthTableResult(passed=not bad, counterexamples=bad)


def logical_table(kind):
    """Truth table rows for verify_truth_table, with canonical analog levels."""
    table = TRUTH_TABLES[kind.upper()]
    if kind.upper() == "NOT":
        return [({"in": float(v)}, {"out": out}) for (v,), out in table]
    return [({"in1": float(a), "in2": float(b)}, {"out": out}) for (a, b), out in table]


def flipflop_space(alpha=1.0) -> EncodingSpace:
    """Two-label encoding over the cross-coupled pair: sign of x_A - x_B with a
    small undecided band."""

    def classify(x, c=0.0):
        d = x[0] - x[1] if np.ndim(x) else x
        if d > 0.1:
            return 1
        if d < -0.1:
            return 0
        return BOUNDARY

    return EncodingSpace(labels=(0, 1), classify=classify, alpha=alpha)


def read_stored_bit(circuit, x, readout):
    la = readout.label(circuit.state_of(x, circuit.encoding_ports["q"]))
    lb = readout.label(circuit.state_of(x, circuit.encoding_ports["qbar"]))
    if la is None or lb is None or la == lb:
        raise AmbiguousStateError(f"flip-flop state q={la} qbar={lb} is not a stored bit")
    return la


def run_flipflop(circuit: CircuitGraph, pulse_schedule, readout: LogicalReadout,
                 x0=None, hold_after=None, noise=0.0, rng: Optional[SeededRng] = None):
    """Apply timed set/reset pulses and track the stored bit.

    pulse_schedule: list of (port, t_on, t_off) with port in {set, reset};
    amplitude is the gate default. Overlapping set and reset pulses raise
    AmbiguousStateError. Returns (list of (time, bit) read after each pulse
    and at the end of the final hold, ledger of bit transitions).
    """
    pulses = sorted(pulse_schedule, key=lambda q: q[1])
    for a in pulses:
        for b in pulses:
            if a is not b and a[0] != b[0] and max(a[1], b[1]) < min(a[2], b[2]):
                raise AmbiguousStateError("set and reset pulses overlap (symmetric race)")
    amp = GATE_DEFAULTS["pulse_amplitude"]
    dt = readout.dt
    x = np.zeros(circuit.dim) if x0 is None else np.asarray(x0, dtype=float).copy()
    gen = rng.generator() if (rng is not None and noise > 0.0) else None
    space = flipflop_space()
    ledger = IrreversibilityLedger()
    readings = []
    prev_bit = None

    events = []
    t_cursor = 0.0
    for port, t_on, t_off in pulses:
        if t_on < t_cursor:
            raise ValueError("pulses must be separated by at least the settle gap")
        events.append((t_cursor, t_on, {}))
        events.append((t_on, t_off, {port: amp}))
        t_cursor = t_off
    tail = hold_after if hold_after is not None else readout.t_max
    events.append((t_cursor, t_cursor + tail, {}))

    pulsed = False
    for t0, t1, inputs in events:
        if t1 <= t0:
            continue
        traj = integrate_circuit(circuit, {"set": 0.0, "reset": 0.0, **inputs}, x, t1 - t0,
                                 dt=dt, noise=noise, gen=gen)
        x = traj[-1]
        if inputs:
            pulsed = True
            continue
        if pulses and not pulsed:
            continue  # latch not set yet: holds before the first pulse carry no bit
        # read the stored bit at the end of every post-pulse hold segment
        try:
            bit = read_stored_bit(circuit, x, readout)
        except AmbiguousStateError:
            if prev_bit is None and pulses:
                continue
            raise
        readings.append((t1, bit))
        if prev_bit is not None and bit != prev_bit:
            ledger.append(t1, "jump", space.alpha * np.log(2.0), (prev_bit,), (bit,))
        prev_bit = bit
    return readings, ledger
