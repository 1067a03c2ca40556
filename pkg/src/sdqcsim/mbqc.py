"""Graph states and measurement patterns with flow corrections.

All vertices, outputs included, are measured in the X-Y plane. A run returns
the corrected outcomes s(o) of the output vertices in ascending vertex order.
Blinded rounds (run_ubqc and the test/computation rounds built on top of it)
go through `run_blinded_round`, which talks to a Prover only via its
callbacks and records every message in a Transcript.
"""

from __future__ import annotations

import heapq
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import Angle, ZERO, pi_times, sample_uniform_angle
from .sv import StateVector, fidelity

Vertex = int


class PatternError(ValueError):
    pass


class ProtocolViolation(RuntimeError):
    """The prover broke the message interface (bad or missing outcome)."""


# ---------------------------------------------------------------------------
# graphs

@dataclass(frozen=True)
class OpenGraph:
    vertices: tuple[Vertex, ...]
    edges: frozenset
    inputs: frozenset = frozenset()
    outputs: frozenset = frozenset()
    order_pairs: tuple[tuple[Vertex, Vertex], ...] = ()

    def __post_init__(self):
        vs = tuple(sorted(set(self.vertices)))
        object.__setattr__(self, "vertices", vs)
        es = set()
        for u, v in self.edges:
            if u == v:
                raise PatternError(f"self-loop on vertex {u}")
            if u not in vs or v not in vs:
                raise PatternError(f"edge ({u}, {v}) uses an unknown vertex")
            es.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(es))
        for name in ("inputs", "outputs"):
            s = frozenset(getattr(self, name))
            if not s <= set(vs):
                raise PatternError(f"{name} not contained in the vertex set")
            object.__setattr__(self, name, s)

    @classmethod
    def build(cls, edges: Iterable[tuple[int, int]], inputs=(), outputs=(),
              vertices: Iterable[int] | None = None, order_pairs=()) -> "OpenGraph":
        edges = [tuple(e) for e in edges]
        vs = set(vertices or ())
        for u, v in edges:
            vs.update((u, v))
        vs.update(inputs)
        vs.update(outputs)
        return cls(tuple(vs), frozenset(edges), frozenset(inputs), frozenset(outputs),
                   tuple(order_pairs))

    def neighbors(self, v: Vertex) -> set[Vertex]:
        return self._adjacency()[v]

    def _adjacency(self) -> dict[Vertex, set[Vertex]]:
        adj = getattr(self, "_adj", None)
        if adj is None:
            adj = {v: set() for v in self.vertices}
            for u, w in self.edges:
                adj[u].add(w)
                adj[w].add(u)
            object.__setattr__(self, "_adj", adj)
        return adj

    def degree(self, v: Vertex) -> int:
        return len(self.neighbors(v))

    def index(self) -> dict[Vertex, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def sorted_outputs(self) -> list[Vertex]:
        return sorted(self.outputs)


def line_graph(n: int, first: int = 1) -> OpenGraph:
    vs = list(range(first, first + n))
    return OpenGraph.build(zip(vs, vs[1:]), inputs=[vs[0]], outputs=[vs[-1]], vertices=vs)


def cycle_graph(n: int, first: int = 1) -> OpenGraph:
    vs = list(range(first, first + n))
    return OpenGraph.build([(vs[i], vs[(i + 1) % n]) for i in range(n)], vertices=vs)


def grid_graph(rows: int, cols: int, first: int = 1) -> OpenGraph:
    """rows x cols grid; inputs on the left column, outputs on the right."""
    vid = lambda r, c: first + r * cols + c
    edges = [(vid(r, c), vid(r, c + 1)) for r in range(rows) for c in range(cols - 1)]
    edges += [(vid(r, c), vid(r + 1, c)) for r in range(rows - 1) for c in range(cols)]
    return OpenGraph.build(edges, inputs=[vid(r, 0) for r in range(rows)],
                           outputs=[vid(r, cols - 1) for r in range(rows)])


def entangle_graph(sv: StateVector, graph: OpenGraph,
                   index: Mapping[Vertex, int] | None = None) -> StateVector:
    """CZ on every edge; `index` maps vertices to register positions."""
    if index is None:
        index = graph.index()
    if sv.num_qubits < len(index):
        raise PatternError("register has fewer qubits than the graph has vertices")
    for u, v in sorted(graph.edges):
        sv.cz(index[u], index[v])
    return sv


# ---------------------------------------------------------------------------
# flow

@dataclass(frozen=True)
class Flow:
    f: Mapping[Vertex, Vertex]
    s_x: Mapping[Vertex, frozenset]
    s_z: Mapping[Vertex, frozenset]
    precedes: frozenset  # pairs (i, j) meaning i must be measured before j

    @classmethod
    def from_map(cls, graph: OpenGraph, f: Mapping[Vertex, Vertex]) -> "Flow":
        f = dict(f)
        non_out = set(graph.vertices) - graph.outputs
        if set(f) != non_out:
            missing = sorted(non_out - set(f))
            raise PatternError(f"flow undefined for non-output vertices {missing}")
        if len(set(f.values())) != len(f):
            raise PatternError("flow map is not injective")
        s_x = {v: set() for v in graph.vertices}
        s_z = {v: set() for v in graph.vertices}
        pairs = set()
        for i, fi in f.items():
            if fi not in graph.neighbors(i):
                raise PatternError(f"f({i}) = {fi} is not a neighbour of {i}")
            if fi in graph.inputs:
                raise PatternError(f"f({i}) = {fi} is an input vertex")
            s_x[fi].add(i)
            pairs.add((i, fi))
            for k in graph.neighbors(fi):
                if k != i:
                    s_z[k].add(i)
                    pairs.add((i, k))
        pairs.update(graph.order_pairs)
        if _topological(graph.vertices, pairs) is None:
            raise PatternError("flow induces a cyclic order")
        return cls(f, {v: frozenset(s) for v, s in s_x.items()},
                   {v: frozenset(s) for v, s in s_z.items()}, frozenset(pairs))

    def x_parity(self, v: Vertex, s: Mapping[Vertex, int]) -> int:
        return sum(s[i] for i in self.s_x[v]) & 1

    def z_parity(self, v: Vertex, s: Mapping[Vertex, int]) -> int:
        return sum(s[i] for i in self.s_z[v]) & 1


def find_flow(graph: OpenGraph) -> Flow | None:
    """Causal flow by the standard backward layering (None if none exists)."""
    processed = set(graph.outputs)
    correctors = set(graph.outputs) - set(graph.inputs)
    f: dict[Vertex, Vertex] = {}
    while True:
        new_out, used = set(), set()
        for v in sorted(correctors):
            open_nb = [u for u in graph.neighbors(v) if u not in processed]
            if len(open_nb) == 1 and open_nb[0] not in new_out:
                u = open_nb[0]
                f[u] = v
                new_out.add(u)
                used.add(v)
        if not new_out:
            break
        processed |= new_out
        correctors = (correctors - used) | (new_out - set(graph.inputs))
    if processed != set(graph.vertices):
        return None
    return Flow.from_map(graph, f)


def _topological(vertices: Sequence[Vertex], pairs: Iterable[tuple[Vertex, Vertex]]) -> list[Vertex] | None:
    succ = {v: set() for v in vertices}
    indeg = {v: 0 for v in vertices}
    for a, b in set(pairs):
        if b not in succ[a]:
            succ[a].add(b)
            indeg[b] += 1
    heap = [v for v in vertices if indeg[v] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        v = heapq.heappop(heap)
        out.append(v)
        for w in sorted(succ[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, w)
    return out if len(out) == len(vertices) else None


# ---------------------------------------------------------------------------
# patterns

@dataclass(frozen=True)
class Pattern:
    graph: OpenGraph
    angles: Mapping[Vertex, Angle]
    flow: Flow
    order: tuple[Vertex, ...] = field(default=())

    def __post_init__(self):
        missing = [v for v in self.graph.vertices if v not in self.angles]
        if missing:
            raise PatternError(f"no angle for vertices {missing}")
        order = self.order or tuple(_topological(self.graph.vertices, self.flow.precedes))
        pos = {v: i for i, v in enumerate(order)}
        if sorted(order) != list(self.graph.vertices):
            raise PatternError("measurement order must list every vertex once")
        for a, b in self.flow.precedes:
            if pos[a] > pos[b]:
                raise PatternError(f"order measures {b} before {a}")
        object.__setattr__(self, "order", tuple(order))
        object.__setattr__(self, "angles", {v: Angle(self.angles[v]) for v in self.graph.vertices})

    @classmethod
    def build(cls, graph: OpenGraph, angles: Mapping[Vertex, "Angle | int"],
              flow: Flow | Mapping[Vertex, Vertex] | None = None,
              order: Sequence[Vertex] = ()) -> "Pattern":
        if flow is None:
            flow = find_flow(graph)
            if flow is None:
                raise PatternError("graph has no causal flow")
        elif not isinstance(flow, Flow):
            flow = Flow.from_map(graph, flow)
        return cls(graph, {v: Angle(a) for v, a in angles.items()}, flow, tuple(order))

    def with_angles(self, angles: Mapping[Vertex, "Angle | int"]) -> "Pattern":
        return Pattern(self.graph, {v: Angle(a) for v, a in angles.items()}, self.flow, self.order)

    def corrected_angle(self, v: Vertex, s: Mapping[Vertex, int]) -> Angle:
        """phi'(v) = (-1)^{s_X(v)} phi(v) + s_Z(v) pi."""
        return self.angles[v].signed(self.flow.x_parity(v, s)) + pi_times(self.flow.z_parity(v, s))


def compute_delta(phi: Angle, theta: Angle, r: int, s_x: int, s_z: int) -> Angle:
    """delta = (-1)^{s_X} phi + theta + (s_Z + r) pi, exactly in Z8."""
    return phi.signed(s_x) + theta + pi_times(s_z + r)


# ---------------------------------------------------------------------------
# text formats

def parse_graph(text: str) -> OpenGraph:
    """Edges "u v" one per line; headers "I: ...", "O: ...", "order: ..." and
    optionally "V: ..." (isolated vertices). '#' starts a comment."""
    edges, inputs, outputs, order, extra = [], [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" in line:
            key, rest = line.split(":", 1)
            vals = [int(x) for x in rest.replace(",", " ").split()]
            key = key.strip().lower()
            if key == "i":
                inputs = vals
            elif key == "o":
                outputs = vals
            elif key == "order":
                order = vals
            elif key == "v":
                extra = vals
            else:
                raise PatternError(f"line {lineno}: unknown header {key!r}")
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PatternError(f"line {lineno}: expected 'u v', got {raw!r}")
        edges.append((int(parts[0]), int(parts[1])))
    pairs = tuple(zip(order, order[1:]))
    return OpenGraph.build(edges, inputs, outputs, vertices=extra + order, order_pairs=pairs)


def format_graph(graph: OpenGraph) -> str:
    out = io.StringIO()
    out.write("I: " + " ".join(map(str, sorted(graph.inputs))) + "\n")
    out.write("O: " + " ".join(map(str, sorted(graph.outputs))) + "\n")
    for u, v in sorted(graph.edges):
        out.write(f"{u} {v}\n")
    return out.getvalue()


def parse_angles(text: str) -> dict[Vertex, Angle]:
    angles = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PatternError(f"line {lineno}: expected 'vertex k', got {raw!r}")
        angles[int(parts[0])] = Angle(int(parts[1]))
    return angles


def load_pattern(graph_path: str | Path, angle_path: str | Path | None = None) -> Pattern:
    graph = parse_graph(Path(graph_path).read_text())
    angles = parse_angles(Path(angle_path).read_text()) if angle_path else {}
    for v in graph.vertices:
        angles.setdefault(v, ZERO)
    order = ()
    if graph.order_pairs:
        order = tuple([graph.order_pairs[0][0]] + [b for _, b in graph.order_pairs])
        if len(order) != len(graph.vertices):
            order = ()
    return Pattern.build(graph, angles, order=order)


# ---------------------------------------------------------------------------
# transcripts

@dataclass(frozen=True)
class Message:
    round: int
    role: str      # "verifier" or "prover"
    kind: str
    payload: str

    def to_line(self) -> str:
        return f"{self.round}\t{self.role}\t{self.kind}\t{self.payload}"


class Transcript:
    """Append-only list of protocol messages."""

    def __init__(self, messages: Iterable[Message] = ()):
        self._messages: list[Message] = list(messages)

    def append(self, round_index: int, role: str, kind: str, payload) -> None:
        self._messages.append(Message(round_index, role, kind, str(payload)))

    @property
    def messages(self) -> tuple[Message, ...]:
        return tuple(self._messages)

    def __len__(self) -> int:
        return len(self._messages)

    def __iter__(self):
        return iter(self._messages)

    def __eq__(self, other) -> bool:
        return isinstance(other, Transcript) and self._messages == other._messages

    def dumps(self) -> str:
        return "".join(m.to_line() + "\n" for m in self._messages)

    @classmethod
    def loads(cls, text: str) -> "Transcript":
        msgs = []
        for line in text.splitlines():
            if not line:
                continue
            rnd, role, kind, payload = line.split("\t", 3)
            msgs.append(Message(int(rnd), role, kind, payload))
        return cls(msgs)

    def of_kind(self, kind: str) -> list[Message]:
        return [m for m in self._messages if m.kind == kind]


# ---------------------------------------------------------------------------
# provers

class Prover:
    """Message interface every prover implements.

    begin_round announces the public graph and order; receive_qubit hands over
    the qubit for one vertex (with the leaked angle when a leak occurred);
    measure receives delta and must return a bit; finalize closes the round.
    """

    wants_leak = False

    def begin_round(self, graph: OpenGraph, order: Sequence[Vertex], round_index: int) -> None:
        pass

    def receive_qubit(self, vertex: Vertex, state: np.ndarray, leak: Angle | None) -> None:
        raise NotImplementedError

    def measure(self, vertex: Vertex, delta: Angle) -> int:
        raise NotImplementedError

    def finalize(self) -> None:
        pass


class HonestProver(Prover):
    """Entangles the received qubits and measures each at the announced delta."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self._graph = None
        self._qubits: dict[Vertex, np.ndarray] = {}
        self._sv: StateVector | None = None
        self._pos: list[Vertex] = []
        self.leaks: dict[Vertex, Angle] = {}

    def begin_round(self, graph, order, round_index):
        self._graph = graph
        self._qubits = {}
        self._sv = None
        self._pos = []
        self.leaks = {}
        self.round_index = round_index

    def receive_qubit(self, vertex, state, leak):
        self._qubits[vertex] = np.asarray(state, dtype=complex)
        if leak is not None:
            self.leaks[vertex] = leak

    def _prepare(self):
        vs = list(self._graph.vertices)
        missing = [v for v in vs if v not in self._qubits]
        if missing:
            raise ProtocolViolation(f"no qubit received for vertices {missing}")
        self._sv = StateVector.product([self._qubits[v] for v in vs])
        entangle_graph(self._sv, self._graph)
        self._pos = vs

    def deviation(self, vertex: Vertex, delta: Angle) -> None:
        """Hook for deviating provers: act on the register before measuring."""

    def apply_to(self, vertex: Vertex, gate) -> None:
        self._sv.apply(gate, self._pos.index(vertex))

    def measure(self, vertex, delta):
        if self._sv is None:
            self._prepare()
        self.deviation(vertex, delta)
        q = self._pos.index(vertex)
        if self._sv.num_qubits == 1:
            bit, _ = self._sv.measure_xy(q, delta, self.rng)
        else:
            bit, _ = self._sv.measure_xy(q, delta, self.rng, remove=True)
        self._pos.pop(q)
        return bit


class ReplayProver(Prover):
    """Answers from the outcome messages of a recorded transcript."""

    def __init__(self, transcript: Transcript):
        self._answers = [(m.round, m.payload) for m in transcript.of_kind("outcome")]
        self._i = 0
        self.round_index = 0

    def begin_round(self, graph, order, round_index):
        self.round_index = round_index

    def receive_qubit(self, vertex, state, leak):
        pass

    def measure(self, vertex, delta):
        if self._i >= len(self._answers):
            raise ProtocolViolation("recorded transcript has no further outcomes")
        rnd, payload = self._answers[self._i]
        self._i += 1
        v, b = payload.split(":")
        if rnd != self.round_index or int(v) != vertex:
            raise ProtocolViolation("replay diverged from the recorded transcript")
        return int(b)


# ---------------------------------------------------------------------------
# runs

# supplier(vertex, theta, prover, transcript, round_index) delivers one qubit
Supplier = Callable[[Vertex, Angle, Prover, Transcript, int], None]


def run_blinded_round(graph: OpenGraph, order: Sequence[Vertex],
                      target_angle: Callable[[Vertex, Mapping[Vertex, int]], Angle],
                      supply: Supplier, prover: Prover, rng: np.random.Generator,
                      transcript: Transcript | None = None,
                      round_index: int = 0) -> dict[Vertex, int]:
    """One blinded round; returns the corrected outcomes s(v) for every vertex.

    target_angle(v, s) gives the effective angle for v given the outcomes so
    far (the flow-corrected phi' in a computation round). The Verifier draws
    every theta first (ascending vertex order), then one r per measurement.
    """
    if transcript is None:
        transcript = Transcript()
    thetas = {v: sample_uniform_angle(rng) for v in graph.vertices}
    prover.begin_round(graph, order, round_index)
    for v in graph.vertices:
        supply(v, thetas[v], prover, transcript, round_index)
    s: dict[Vertex, int] = {}
    for v in order:
        r = int(rng.integers(2))
        delta = target_angle(v, s) + thetas[v] + pi_times(r)
        transcript.append(round_index, "verifier", "delta", f"{v}:{delta.k}")
        b = prover.measure(v, delta)
        if b not in (0, 1):
            transcript.append(round_index, "prover", "violation", f"{v}:{b}")
            raise ProtocolViolation(f"prover returned {b!r} for vertex {v}")
        transcript.append(round_index, "prover", "outcome", f"{v}:{int(b)}")
        s[v] = int(b) ^ r
    prover.finalize()
    return s


def direct_supplier(rsp, rng: np.random.Generator) -> Supplier:
    """Supplier that invokes one RSP resource per vertex."""
    from .resources import rsp_invoke

    def supply(v, theta, prover, transcript, round_index):
        state, leak, _valid = rsp_invoke(rsp, theta, prover.wants_leak, rng)
        transcript.append(round_index, "verifier", "qubit", f"{v}")
        if leak is not None:
            transcript.append(round_index, "resource", "leak", f"{v}:{leak.k}")
        prover.receive_qubit(v, state, leak)

    return supply


def run_ubqc(pattern: Pattern, rsp, prover: Prover, rng: np.random.Generator,
             resource_rng: np.random.Generator | None = None,
             transcript: Transcript | None = None, round_index: int = 0,
             supply: Supplier | None = None) -> tuple[tuple[int, ...], Transcript]:
    """Blinded execution of `pattern`; returns (output bits, transcript)."""
    if transcript is None:
        transcript = Transcript()
    if supply is None:
        supply = direct_supplier(rsp, resource_rng if resource_rng is not None else rng)
    s = run_blinded_round(pattern.graph, pattern.order, pattern.corrected_angle, supply,
                          prover, rng, transcript, round_index)
    out = tuple(s[o] for o in pattern.graph.sorted_outputs())
    transcript.append(round_index, "verifier", "output", "".join(map(str, out)))
    return out, transcript


def run_mbqc_reference(pattern: Pattern, rng: np.random.Generator | None = None,
                       forced: Mapping[Vertex, int] | None = None,
                       z_outputs: bool = False) -> tuple[int, ...]:
    """Unblinded MBQC with flow corrections; returns the corrected output bits.

    With z_outputs the output vertices are read in the computational basis
    (corrected by their X dependencies) instead of at their X-Y angles.
    """
    out, _ = _reference_branch(pattern, rng, forced or {}, z_outputs)
    return out


def _reference_branch(pattern, rng, forced, z_outputs):
    graph = pattern.graph
    sv = StateVector.product([np.array([1, 1], dtype=complex) / np.sqrt(2)] * len(graph.vertices))
    entangle_graph(sv, graph)
    pos = list(graph.vertices)
    s: dict[Vertex, int] = {}
    prob = 1.0
    for v in pattern.order:
        q = pos.index(v)
        remove = sv.num_qubits > 1
        if z_outputs and v in graph.outputs:
            b, p = sv.measure_z(q, rng, forced=forced.get(v), remove=remove)
            s[v] = b ^ pattern.flow.x_parity(v, s)
        else:
            b, p = sv.measure_xy(q, pattern.corrected_angle(v, s), rng,
                                 forced=forced.get(v), remove=remove)
            s[v] = b
        prob *= p
        pos.pop(q)
    return tuple(s[o] for o in graph.sorted_outputs()), prob


def exact_output_distribution(pattern: Pattern, z_outputs: bool = False) -> dict[tuple[int, ...], float]:
    """Output distribution by enumerating every measurement branch."""
    vs = list(pattern.order)
    dist: dict[tuple[int, ...], float] = {}
    for bits in range(1 << len(vs)):
        forced = {v: (bits >> i) & 1 for i, v in enumerate(vs)}
        try:
            out, p = _reference_branch(pattern, None, forced, z_outputs)
        except ValueError:
            continue
        dist[out] = dist.get(out, 0.0) + p
    return dist


def output_state(pattern: Pattern, forced: Mapping[Vertex, int]) -> np.ndarray:
    """State of the output qubits after measuring all non-outputs along a branch
    and applying the flow's X/Z corrections (for oracle comparisons)."""
    graph = pattern.graph
    sv = StateVector.product([np.array([1, 1], dtype=complex) / np.sqrt(2)] * len(graph.vertices))
    entangle_graph(sv, graph)
    pos = list(graph.vertices)
    s: dict[Vertex, int] = {}
    for v in pattern.order:
        if v in graph.outputs:
            continue
        q = pos.index(v)
        b, _ = sv.measure_xy(q, pattern.corrected_angle(v, s), None, forced=forced.get(v, 0), remove=True)
        s[v] = b
        pos.pop(q)
    for o in graph.sorted_outputs():
        q = pos.index(o)
        if pattern.flow.z_parity(o, s):
            sv.apply("Z", q)
        if pattern.flow.x_parity(o, s):
            sv.apply("X", q)
    order = [pos.index(o) for o in graph.sorted_outputs()]
    t = sv.amplitudes.reshape([2] * sv.num_qubits).transpose(order)
    return t.reshape(-1)


def same_state(a, b, tol: float = 1e-10) -> bool:
    return fidelity(a, b) >= 1 - tol
