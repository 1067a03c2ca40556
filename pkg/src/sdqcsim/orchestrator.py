"""Protocol drivers: N blinded rounds, d of them computations, the rest traps.

One driver runs all three variants; they differ only in how each vertex's
|+_theta> reaches the prover (a single RSP call, a plugged merge of kappa
leaky calls, or the level-1 Safe pipeline of the RM15 code). The Verifier's
rng draws C, the tests, and every theta and r; resources draw from their own
generator and provers hold theirs, so changing one party's randomness never
shifts another's.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import Angle
from .mbqc import (HonestProver, OpenGraph, Pattern, Prover, ProtocolViolation, Supplier,
                   Transcript, direct_supplier, exact_output_distribution, run_blinded_round)
from .plugged_rsp import HonestReceiver, LeakReconstructingReceiver, PluggedReceiver, run_plugged_rsp
from .resources import CompromiseAdversary, ResourceModel
from .traps import TestSet, run_test_round


# ---------------------------------------------------------------------------
# plans and outcomes

@dataclass(frozen=True)
class RunPlan:
    N: int
    d: int
    w: int
    C: tuple[int, ...] | None = None
    c_bound: float = 2 / 3

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not 0 <= self.d <= self.N:
            raise ValueError("need 0 <= d <= N")
        if self.w < 0:
            raise ValueError("w must be nonnegative")
        if self.C is not None:
            if len(set(self.C)) != self.d or any(not 0 <= i < self.N for i in self.C):
                raise ValueError("C must hold d distinct round indices in [0, N)")

    @classmethod
    def default(cls, N: int = 100, w: int | None = None, d: int | None = None) -> "RunPlan":
        d = N // 2 if d is None else d
        return cls(N, d, max(1, (N - d) // 10) if w is None else w)

    def computation_rounds(self, rng: np.random.Generator) -> frozenset:
        if self.C is not None:
            return frozenset(self.C)
        return frozenset(int(i) for i in rng.choice(self.N, size=self.d, replace=False))


@dataclass
class ProtocolOutcome:
    accepted: int
    failed_tests: int
    output: tuple[int, ...] | None
    rounds: list = field(default_factory=list)
    computation_outputs: list = field(default_factory=list)
    transcript: Transcript | None = None

    def wrong(self, reference: Sequence[int]) -> bool:
        """Accepted with an output other than the reference."""
        return bool(self.accepted) and tuple(self.output) != tuple(reference)

    def to_record(self) -> dict:
        return {"accepted": self.accepted, "x": self.failed_tests,
                "output": None if self.output is None else "".join(map(str, self.output)),
                "computation_rounds": len(self.computation_outputs)}


def decide(x: int, w: int) -> int:
    """Accept (1) iff fewer than w tests failed."""
    return int(x < w)


def majority(outputs: Sequence[Sequence[int]], width: int | None = None) -> tuple[int, ...]:
    """Bitwise majority; a tied bit resolves to 0."""
    if not outputs:
        return tuple([0] * (width or 0))
    arr = np.asarray(outputs, dtype=np.int64)
    ones = arr.sum(axis=0)
    return tuple(int(2 * o > arr.shape[0]) for o in ones)


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    bound: float
    coefficient: float
    negative_coefficient: bool

    def __bool__(self) -> bool:
        return self.ok


def check_admissibility(plan: RunPlan, epsilon: float, c: float | None = None) -> Admissibility:
    """Evaluate w < (2c-1)/(2c-2) (N-d) (1-epsilon) as written.

    For c in (1/2, 1) the coefficient is negative, so no w >= 0 passes; the
    result carries that flag instead of reinterpreting c.
    """
    c = plan.c_bound if c is None else c
    if c == 1:
        raise ValueError("c = 1 makes the coefficient undefined")
    coef = (2 * c - 1) / (2 * c - 2)
    bound = coef * (plan.N - plan.d) * (1 - epsilon)
    return Admissibility(plan.w < bound, bound, coef, coef < 0)


# ---------------------------------------------------------------------------
# prover strategies

class ConstantZProver(HonestProver):
    """Applies Z to every vertex of `support` right before measuring it."""

    def __init__(self, rng: np.random.Generator, support: Iterable):
        super().__init__(rng)
        self.support = frozenset(support)

    def deviation(self, vertex, delta):
        if vertex in self.support:
            self.apply_to(vertex, "Z")


class RandomZProver(HonestProver):
    """Applies Z before each measurement independently with probability `rate`.

    The coin comes from a child generator, so measurement randomness matches
    an honest prover with the same rng.
    """

    def __init__(self, rng: np.random.Generator, rate: float):
        super().__init__(rng)
        if not 0 <= rate <= 1:
            raise ValueError("rate must lie in [0, 1]")
        self.rate = rate
        self.coin_rng = rng.spawn(1)[0]

    def deviation(self, vertex, delta):
        if self.coin_rng.random() < self.rate:
            self.apply_to(vertex, "Z")


class LeakAdaptiveProver(HonestProver):
    """Reads delta - theta on leaked vertices and corrupts computation rounds.

    Traps only use effective angles on the X and Y axes, so an odd multiple
    of pi/4 in delta - theta marks a computation round; from then on the
    prover flips the outcome of every output vertex it measures. Otherwise
    it is honest.
    """

    wants_leak = True

    def __init__(self, rng: np.random.Generator):
        super().__init__(rng)
        self.corrupting = False
        self.corrupted_rounds = 0
        self.leaked_vertices = 0

    def begin_round(self, graph, order, round_index):
        super().begin_round(graph, order, round_index)
        self.corrupting = False
        self._outputs = frozenset(graph.outputs)

    def receive_qubit(self, vertex, state, leak):
        super().receive_qubit(vertex, state, leak)
        self.leaked_vertices += leak is not None

    def measure(self, vertex, delta):
        theta = self.leaks.get(vertex)
        if theta is not None and not self.corrupting and (Angle(delta) - theta).is_odd_quarter():
            self.corrupting = True
            self.corrupted_rounds += 1
        b = super().measure(vertex, delta)
        if self.corrupting and vertex in self._outputs:
            b ^= 1
        return b

    def plugged_receiver(self) -> PluggedReceiver:
        return LeakReconstructingReceiver(self.rng)


class FunctionProver(HonestProver):
    """Honest register with a user hook: hook(prover, vertex, delta) -> bit or None.

    Returning None measures honestly; returning a bit reports that bit instead.
    """

    def __init__(self, rng: np.random.Generator, hook: Callable, wants_leak: bool = False):
        super().__init__(rng)
        self.hook = hook
        self.wants_leak = wants_leak

    def measure(self, vertex, delta):
        b = super().measure(vertex, delta)
        forced = self.hook(self, vertex, delta)
        return b if forced is None else forced


PROVER_TAGS = ("Honest", "ConstantZ", "RandomZ", "LeakAdaptive")


def make_prover(tag: str, rng: np.random.Generator, support: Iterable = (), rate: float = 0.0) -> Prover:
    key = tag.lower()
    if key == "honest":
        return HonestProver(rng)
    if key == "constantz":
        return ConstantZProver(rng, support)
    if key == "randomz":
        return RandomZProver(rng, rate)
    if key == "leakadaptive":
        return LeakAdaptiveProver(rng)
    raise ValueError(f"unknown prover tag {tag!r}; expected one of {PROVER_TAGS}")


def receiver_for(prover: Prover) -> PluggedReceiver:
    """The prover's side of the plugged merge."""
    make = getattr(prover, "plugged_receiver", None)
    if make is not None:
        return make()
    if prover.wants_leak:
        return LeakReconstructingReceiver(getattr(prover, "rng", None))
    return HonestReceiver(getattr(prover, "rng", None))


# ---------------------------------------------------------------------------
# suppliers

def plugged_supplier(kappa: int, rsp: ResourceModel, rng: np.random.Generator) -> Supplier:
    """Each vertex's qubit comes from a merge of kappa calls to `rsp`.

    The merge's own secrets and coins come from `rng`; the prover supplies the
    receiver. A leak reaches the prover only when it reconstructs theta.
    """

    def supply(v, theta, prover, transcript, round_index):
        receiver = receiver_for(prover)
        run = run_plugged_rsp(theta, kappa, rsp, receiver, rng)
        transcript.append(round_index, "verifier", "plugged", f"{v}:{run.b}:{run.correction.k}")
        leak = getattr(receiver, "reconstructed", None)
        if leak is not None:
            transcript.append(round_index, "resource", "leak", f"{v}:{leak.k}")
        prover.receive_qubit(v, run.final_qubit, leak)

    return supply


def level1_supplier(p_c: float, rng: np.random.Generator, safe: bool = True) -> Supplier:
    """Each vertex's qubit is a logical |+_theta> from the level-1 pipeline,
    handed over after ideal decoding (the syndrome is measured and dropped)."""
    from . import rm15

    def supply(v, theta, prover, transcript, round_index):
        adversary = getattr(prover, "compromise_adversary", None) or CompromiseAdversary()
        run = rm15.level1_safe_rsp(theta, p_c, adversary, rng, safe=safe, round_index=round_index)
        logical, _ = rm15.decode_and_measure_syndrome(run.state, rng)
        leak = run.reconstructed_theta()
        transcript.append(round_index, "verifier", "qubit", f"{v}")
        if leak is not None:
            transcript.append(round_index, "resource", "leak", f"{v}:{leak.k}")
        prover.receive_qubit(v, logical, leak)

    return supply


# ---------------------------------------------------------------------------
# drivers

def run_protocol(pattern: Pattern, plan: RunPlan, tests: TestSet, supply: Supplier, prover: Prover,
                 rng: np.random.Generator, transcript: Transcript | None = None,
                 check_plan: bool = False) -> ProtocolOutcome:
    """N rounds; computation at the indices in C, uniformly sampled tests elsewhere.

    A ProtocolViolation raised in a round counts as one failed round and the
    round contributes no output.
    """
    if check_plan and not check_admissibility(plan, tests.epsilon):
        raise ValueError("plan is not admissible for this test set")
    if not pattern.graph.outputs:
        raise ValueError("pattern has no classical output")
    if transcript is None:
        transcript = Transcript()
    graph: OpenGraph = pattern.graph
    C = plan.computation_rounds(rng)
    outs = graph.sorted_outputs()
    x = 0
    results, log = [], []
    for i in range(plan.N):
        if i in C:
            try:
                s = run_blinded_round(graph, pattern.order, pattern.corrected_angle, supply,
                                      prover, rng, transcript, i)
            except ProtocolViolation:
                x += 1
                log.append({"round": i, "kind": "computation", "violation": True})
                continue
            out = tuple(s[o] for o in outs)
            results.append(out)
            transcript.append(i, "verifier", "output", "".join(map(str, out)))
            log.append({"round": i, "kind": "computation", "output": out})
        else:
            test = tests.sample(rng)
            try:
                ok = run_test_round(graph, test, None, prover, rng, transcript=transcript,
                                    round_index=i, order=pattern.order, supply=supply)
            except ProtocolViolation:
                ok = 0
            x += 1 - ok
            log.append({"round": i, "kind": "test", "W": sorted(test.W), "accepted": ok})
    accepted = decide(x, plan.w)
    output = majority(results, len(outs)) if accepted else None
    return ProtocolOutcome(accepted, x, output, log, results, transcript)


def run_dummyless_sdqc(pattern: Pattern, plan: RunPlan, tests: TestSet, rsp: ResourceModel,
                       prover: Prover, rng: np.random.Generator,
                       resource_rng: np.random.Generator | None = None, **kw) -> ProtocolOutcome:
    supply = direct_supplier(rsp, resource_rng if resource_rng is not None else rng)
    return run_protocol(pattern, plan, tests, supply, prover, rng, **kw)


def run_leak_tolerant_sdqc(pattern: Pattern, plan: RunPlan, tests: TestSet, kappa: int, p_leak: float,
                           prover: Prover, rng: np.random.Generator,
                           resource_rng: np.random.Generator | None = None, p_noise: float = 0.0,
                           **kw) -> ProtocolOutcome:
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    rsp = ResourceModel.noisy_leaky(p_noise, p_leak) if p_noise else ResourceModel.leaky(p_leak)
    supply = plugged_supplier(kappa, rsp, resource_rng if resource_rng is not None else rng)
    return run_protocol(pattern, plan, tests, supply, prover, rng, **kw)


def run_ft_sdqc_level1(pattern: Pattern, plan: RunPlan, tests: TestSet, p_c: float, prover: Prover,
                       rng: np.random.Generator, resource_rng: np.random.Generator | None = None,
                       safe: bool = True, **kw) -> ProtocolOutcome:
    supply = level1_supplier(p_c, resource_rng if resource_rng is not None else rng, safe)
    return run_protocol(pattern, plan, tests, supply, prover, rng, **kw)


# ---------------------------------------------------------------------------
# helpers for experiments

def reference_output(pattern: Pattern) -> tuple[int, ...]:
    """The output of a deterministic pattern; raises if the pattern is not deterministic."""
    dist = exact_output_distribution(pattern)
    best = max(dist, key=dist.get)
    if dist[best] < 1 - 1e-9:
        raise ValueError("pattern output is not deterministic")
    return best


def per_round_rejection(tests: TestSet, support: Iterable) -> float:
    """Probability that one uniformly sampled test rejects a constant Z on `support`."""
    support = set(support)
    return sum(len(t.W & support) % 2 for t in tests.tests) / len(tests)


def rejection_probability_constant_z(plan: RunPlan, tests: TestSet, support: Iterable) -> float:
    """Exact Pr[x >= w] when every test independently rejects with the per-round rate."""
    q = per_round_rejection(tests, support)
    n = plan.N - plan.d
    return float(sum(math.comb(n, k) * q ** k * (1 - q) ** (n - k) for k in range(plan.w, n + 1)))
