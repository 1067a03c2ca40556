"""Dummyless stabilizer tests on graph states.

A test is a vertex set W such that every vertex outside W has an even number
of neighbours in W. Measuring W_even (even degree inside W) in X and W_odd in
Y then yields a deterministic parity, because the product of the graph-state
stabilizers over W is +-(X on W_even)(Y on W_odd) and acts trivially
elsewhere. A Z flip on a set D of qubits before measurement flips the parity
iff |D & W| is odd.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Angle, HALF_PI, ZERO
from .mbqc import (OpenGraph, Prover, Supplier, Transcript, direct_supplier,
                   entangle_graph, run_blinded_round)
from .sv import StateVector

# angles available to measurements outside W: the X and Y axes only
_XY_AXES = (Angle(0), Angle(2), Angle(4), Angle(6))


@dataclass(frozen=True)
class TestSpec:
    W: frozenset
    W_even: frozenset
    W_odd: frozenset
    expected_parity: int

    def effective_angle(self, v) -> Angle | None:
        if v in self.W_even:
            return ZERO
        if v in self.W_odd:
            return HALF_PI
        return None

    def to_json(self) -> str:
        return json.dumps({"W": sorted(self.W), "W_even": sorted(self.W_even),
                           "W_odd": sorted(self.W_odd), "expected_parity": self.expected_parity})


@dataclass(frozen=True)
class TestSet:
    tests: tuple[TestSpec, ...]
    epsilon: float

    def __len__(self) -> int:
        return len(self.tests)

    def sample(self, rng: np.random.Generator) -> TestSpec:
        return self.tests[int(rng.integers(len(self.tests)))]


class NoValidTest(ValueError):
    pass


# ---------------------------------------------------------------------------
# combinatorics

def odd_neighborhood(graph: OpenGraph, W: Iterable) -> set:
    W = set(W)
    return {v for v in graph.vertices if v not in W
            and len(graph.neighbors(v) & W) % 2 == 1}


def split_by_degree(graph: OpenGraph, W: Iterable) -> tuple[frozenset, frozenset]:
    W = set(W)
    even = frozenset(v for v in W if len(graph.neighbors(v) & W) % 2 == 0)
    return even, frozenset(W - even)


def odd_degree_vertices(graph: OpenGraph) -> frozenset:
    return frozenset(v for v in graph.vertices if graph.degree(v) % 2 == 1)


def _components(graph: OpenGraph, H: set) -> list[set]:
    seen, comps = set(), []
    for v in sorted(H):
        if v in seen:
            continue
        comp, stack = set(), [v]
        while stack:
            u = stack.pop()
            if u in comp:
                continue
            comp.add(u)
            stack.extend(graph.neighbors(u) & H - comp)
        seen |= comp
        comps.append(comp)
    return comps


def _removable(graph: OpenGraph, H: set) -> bool:
    """H is a union of non-adjacent pieces, each either one even-degree vertex
    or a chain whose ends have odd degree and whose interior has even degree."""
    for comp in _components(graph, H):
        if len(comp) == 1:
            (v,) = comp
            if graph.degree(v) % 2:
                return False
            continue
        inner = {v: len(graph.neighbors(v) & comp) for v in comp}
        ends = [v for v, d in inner.items() if d == 1]
        if len(ends) != 2 or any(d not in (1, 2) for d in inner.values()):
            return False  # not an induced path
        for v, d in inner.items():
            parity = graph.degree(v) % 2
            if (d == 1 and parity == 0) or (d == 2 and parity == 1):
                return False
    return True


def rule_test_sets(graph: OpenGraph) -> list[frozenset]:
    """All W = V minus H for removable H, W nonempty."""
    vs = list(graph.vertices)
    out = []
    for mask in range(1 << len(vs)):
        H = {vs[i] for i in range(len(vs)) if mask >> i & 1}
        if len(H) == len(vs) or not _removable(graph, H):
            continue
        out.append(frozenset(set(vs) - H))
    return out


def brute_force_test_sets(graph: OpenGraph) -> list[frozenset]:
    vs = list(graph.vertices)
    out = []
    for mask in range(1, 1 << len(vs)):
        W = frozenset(vs[i] for i in range(len(vs)) if mask >> i & 1)
        if not odd_neighborhood(graph, W):
            out.append(W)
    return out


def stabilizer_sign(graph: OpenGraph, W_even: Iterable, W_odd: Iterable) -> int:
    """Eigenvalue (+1 or -1) of the graph state under X on W_even, Y on W_odd."""
    vs = list(graph.vertices)
    sv = StateVector.product([np.array([1, 1], dtype=complex) / np.sqrt(2)] * len(vs))
    entangle_graph(sv, graph)
    pauli = "".join("X" if v in W_even else "Y" if v in W_odd else "I" for v in vs)
    val = sv.expectation(pauli)
    if abs(abs(val) - 1) > 1e-9:
        raise NoValidTest(f"{pauli} is not a stabilizer of the graph state (<P> = {val})")
    return 1 if val > 0 else -1


def make_test(graph: OpenGraph, W: Iterable) -> TestSpec:
    W = frozenset(W)
    bad = odd_neighborhood(graph, W)
    if bad:
        raise NoValidTest(f"W has odd neighbourhood {sorted(bad)}")
    even, odd = split_by_degree(graph, W)
    parity = 0 if stabilizer_sign(graph, even, odd) == 1 else 1
    return TestSpec(W, even, odd, parity)


def enumerate_tests(graph: OpenGraph, with_epsilon: bool = True) -> TestSet:
    sets = rule_test_sets(graph)
    if not sets:
        raise NoValidTest("graph admits no dummyless test")
    tests = tuple(make_test(graph, W) for W in sets)
    eps = detection_epsilon(graph, tests) if with_epsilon else float("nan")
    return TestSet(tests, eps)


def detects(test: TestSpec | Iterable, deviation: Iterable) -> bool:
    W = test.W if isinstance(test, TestSpec) else set(test)
    return len(W & set(deviation)) % 2 == 1


def _masks(vs: Sequence, sets: Iterable[Iterable]) -> np.ndarray:
    pos = {v: i for i, v in enumerate(vs)}
    return np.array([sum(1 << pos[v] for v in s) for s in sets], dtype=np.int64)


def _popcount_parity(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    p = np.zeros_like(x)
    while np.any(x):
        p ^= x & 1
        x >>= 1
    return p


def rejection_fractions(graph: OpenGraph, tests: Sequence[TestSpec]) -> np.ndarray:
    """Fraction of tests rejecting each Z deviation support (index = bitmask)."""
    vs = list(graph.vertices)
    if len(vs) > 16:
        raise ValueError("exhaustive deviation enumeration is limited to 16 vertices")
    w = _masks(vs, [t.W for t in tests])
    d = np.arange(1 << len(vs), dtype=np.int64)
    hits = np.zeros(d.shape[0], dtype=np.int64)
    for wm in w:
        hits += _popcount_parity(d & wm)
    return hits / len(tests)


def detection_epsilon(graph: OpenGraph, tests: Sequence[TestSpec] | TestSet) -> float:
    """Minimum rejection fraction over Z deviations other than the empty one
    and the all-odd-degree one (which no test can see)."""
    if isinstance(tests, TestSet):
        tests = tests.tests
    vs = list(graph.vertices)
    frac = rejection_fractions(graph, tests)
    harmless = int(_masks(vs, [odd_degree_vertices(graph)])[0])
    keep = np.ones(frac.shape[0], dtype=bool)
    keep[0] = False
    keep[harmless] = False
    return float(frac[keep].min()) if keep.any() else 0.0


# ---------------------------------------------------------------------------
# rounds

def test_target_angles(graph: OpenGraph, test: TestSpec, rng: np.random.Generator) -> dict:
    """Effective angle per vertex: 0 on W_even, pi/2 on W_odd, a uniformly
    random X/Y axis elsewhere (those outcomes are ignored)."""
    out = {}
    for v in graph.vertices:
        a = test.effective_angle(v)
        out[v] = a if a is not None else _XY_AXES[int(rng.integers(4))]
    return out


def run_test_round(graph: OpenGraph, test: TestSpec, rsp, prover: Prover,
                   rng: np.random.Generator, resource_rng: np.random.Generator | None = None,
                   transcript: Transcript | None = None, round_index: int = 0,
                   order: Sequence | None = None, supply: Supplier | None = None) -> int:
    """One blinded test round; returns 1 to accept, 0 to reject."""
    if supply is None:
        supply = direct_supplier(rsp, resource_rng if resource_rng is not None else rng)
    angles = test_target_angles(graph, test, rng)
    s = run_blinded_round(graph, order or graph.vertices, lambda v, _s: angles[v], supply,
                          prover, rng, transcript, round_index)
    parity = 0
    for v in test.W:
        parity ^= s[v]
    return int(parity == test.expected_parity)
