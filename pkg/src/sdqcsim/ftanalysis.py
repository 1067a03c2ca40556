"""Good/bad extended rectangles, the threshold recursion, and error budgets.

Layout. A 1-SafeRec is one gadget followed by two ECs; its 1-exSafeRec also
includes the EC that precedes it, which is the last EC of the previous
SafeRec. Blocks are laid out as one chain: a level-m exRec consists of
`total` consecutive level-(m-1) SafeRecs, where `total` is the location
count of a 1-exSafeRec, and two consecutive exRecs share exactly one EC.
Leaves are level-1 locations, compromised independently with probability p_c.

Classification. A 1-exRec is bad when it holds two or more compromised
locations. A level-m exRec is bad when two of its children are bad and
independent: non-adjacent children never overlap, and an adjacent pair is
independent when the earlier child is still bad once the EC it shares with
the later one is removed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .core import binomial_stderr


@dataclass(frozen=True)
class GadgetShape:
    locations_ga: int = 30
    locations_ec: int = 50

    def __post_init__(self):
        if self.locations_ga < 1 or self.locations_ec < 1:
            raise ValueError("location counts must be at least 1")

    @property
    def structure(self) -> list[tuple[str, int]]:
        ec = self.locations_ec
        return [("leading EC", ec), ("Ga", self.locations_ga), ("EC", ec), ("EC", ec)]

    @property
    def total(self) -> int:
        """Locations in one 1-exSafeRec."""
        return sum(n for _, n in self.structure)

    @property
    def saferec(self) -> int:
        """Locations in one 1-SafeRec (no leading EC)."""
        return self.locations_ga + 2 * self.locations_ec

    @property
    def pairs(self) -> int:
        """A: pairs of locations in the 1-exSafeRec."""
        return math.comb(self.total, 2)

    @property
    def p0(self) -> float:
        return 1.0 / self.pairs

    @cached_property
    def _tables(self):
        return _chain_tables(self, 8)

    def block(self, m: int) -> int:
        """Leaves in one level-m SafeRec."""
        return int(self._tables[0][m])

    def reach(self, m: int) -> int:
        """Leaves spanned by one level-m exSafeRec."""
        return int(self._tables[1][m])


DEFAULT_SHAPE = GadgetShape()
SMALL_SHAPE = GadgetShape(3, 2)


def _chain_tables(shape: GadgetShape, kmax: int):
    block = np.zeros(kmax + 1, dtype=np.int64)
    reach = np.zeros(kmax + 1, dtype=np.int64)
    block[0] = 1
    reach[0] = 1
    for m in range(1, kmax + 1):
        block[m] = shape.saferec * block[m - 1]
        reach[m] = (shape.total - 1) * block[m - 1] + reach[m - 1]
    return block, reach


# ---------------------------------------------------------------------------
# classification

def classify_level1(compromised) -> str:
    return "good" if int(np.count_nonzero(compromised)) <= 1 else "bad"


def exrec_bad_sparse(shape: GadgetShape, k: int, positions, backend=None) -> bool:
    """Classify the level-k exRec spanning leaves [0, reach(k)) from sorted
    compromised leaf positions, with the compiled or numpy kernel."""
    kern = backend if backend is not None else _kernels.K
    block, reach = shape._tables
    pos = np.asarray(positions, dtype=np.int64)
    return kern.exrec_bad(pos, k, int(reach[k]), False, shape.total, shape.locations_ec, block, reach)


@dataclass
class ExRecSample:
    """Explicit level-k sample: dense compromise bits over the exRec's span."""
    shape: GadgetShape
    level: int
    bits: np.ndarray
    drop_shared: bool = False

    def __post_init__(self):
        if self.bits.shape[0] != self.shape.reach(self.level):
            raise ValueError(f"level-{self.level} exRec spans {self.shape.reach(self.level)} leaves, "
                             f"got {self.bits.shape[0]}")

    def children(self) -> list["ExRecSample"]:
        """The (k-1)-exRecs of the SafeRecs composing this exRec, in order.

        With drop_shared the trailing EC is removed; at level 1 that drops
        its leaves, above it drops the child SafeRecs forming it.
        """
        if self.level < 2:
            raise ValueError("level-1 samples have leaves, not children")
        m = self.level
        size = self.shape.block(m - 1)
        child_span = self.shape.reach(m - 1)
        n = self.shape.total - (self.shape.locations_ec if self.drop_shared else 0)
        span = self.bits.shape[0]
        out = []
        for c in range(n):
            end = span - (self.shape.total - 1 - c) * size
            out.append(ExRecSample(self.shape, m - 1, self.bits[end - child_span:end]))
        return out

    def without_shared_ec(self) -> "ExRecSample":
        return ExRecSample(self.shape, self.level, self.bits, True)

    def leaves(self) -> np.ndarray:
        if self.level != 1:
            raise ValueError("only level-1 samples expose leaves")
        if self.drop_shared:
            return self.bits[:self.bits.shape[0] - self.shape.locations_ec]
        return self.bits


def classify_recursive(sample: ExRecSample) -> str:
    if sample.level == 1:
        return classify_level1(sample.leaves())
    kids = sample.children()
    bad = [c for c, ch in enumerate(kids) if classify_recursive(ch) == "bad"]
    for i, a in enumerate(bad):
        for b in bad[i + 1:]:
            if b > a + 1:
                return "bad"
            if classify_recursive(kids[a].without_shared_ec()) == "bad":
                return "bad"
    return "good"


def sample_exrec(shape: GadgetShape, k: int, p_c: float, rng: np.random.Generator) -> ExRecSample:
    bits = (rng.random(shape.reach(k)) < p_c).astype(np.uint8)
    return ExRecSample(shape, k, bits)


def sample_positions(shape: GadgetShape, k: int, p_c: float, rng: np.random.Generator) -> np.ndarray:
    """Sorted compromised leaves; same law as independent coins per leaf."""
    n = shape.reach(k)
    count = int(rng.binomial(n, p_c))
    if count == 0:
        return np.empty(0, dtype=np.int64)
    return np.sort(rng.choice(n, size=count, replace=False)).astype(np.int64)


# ---------------------------------------------------------------------------
# Monte Carlo and closed forms

def exact_level1_bad(shape: GadgetShape, p_c: float) -> float:
    n = shape.total
    return 1.0 - (1.0 - p_c) ** n - n * p_c * (1.0 - p_c) ** (n - 1)


def doubly_exp_bound(shape: GadgetShape, p_c: float, k: int) -> float:
    """p0 (p_c / p0)^(2^k)."""
    p0 = shape.p0
    return p0 * (p_c / p0) ** (2 ** k)


def mc_bad_probability(shape: GadgetShape, p_c: float, k: int, trials: int,
                       rng: np.random.Generator, backend=None, record: list | None = None) -> dict:
    if k < 1:
        raise ValueError("k must be at least 1")
    if not 0.0 <= p_c <= 1.0:
        raise ValueError("p_c must lie in [0, 1]")
    bad = 0
    for t in range(trials):
        pos = sample_positions(shape, k, p_c, rng)
        hit = pos.shape[0] >= 2 and exrec_bad_sparse(shape, k, pos, backend)
        bad += hit
        if record is not None:
            record.append((t, "bad" if hit else "good"))
    est = bad / trials
    return {"estimate": est, "stderr": binomial_stderr(est, trials), "bad": bad, "trials": trials,
            "k": k, "p_c": p_c}


# ---------------------------------------------------------------------------
# budgets

class VacuousBound(ValueError):
    pass


def budget_rsp_error(k: int, p_c: float, p_0: float) -> float:
    """4 p0 (p_c/p0)^(2^k), the level-k RSP distinguishing error."""
    if p_c > p_0:
        raise VacuousBound(f"p_c = {p_c} exceeds p0 = {p_0}: the bound does not decay")
    return 4.0 * p_0 * (p_c / p_0) ** (2 ** k)


def budget_sdqc_error(N: int, V_size: int, k: int, p_c: float, p_0: float, eta_N: float) -> float:
    return eta_N + N * V_size * budget_rsp_error(k, p_c, p_0)


def required_level(N: int, V_size: int, p_c: float, p_0: float, eta_N: float) -> int:
    """Least k >= 1 with N |V| 4 p0 (p_c/p0)^(2^k) <= eta_N.

    Equivalent to 2^k >= log(N |V| 4 p0 / eta) / log(p0 / p_c).
    """
    if not 0 < p_c < p_0:
        raise VacuousBound("required_level needs 0 < p_c < p0")
    if eta_N <= 0:
        raise ValueError("eta_N must be positive")
    need = math.log(N * V_size * 4 * p_0 / eta_N) / math.log(p_0 / p_c)
    k = 1 if need <= 2 else math.ceil(math.log2(need))
    # guard against rounding at the boundary
    while N * V_size * budget_rsp_error(k, p_c, p_0) > eta_N:
        k += 1
    while k > 1 and N * V_size * budget_rsp_error(k - 1, p_c, p_0) <= eta_N:
        k -= 1
    return k


def ft_overhead(L: float, D: float, l: float, d_depth: float, eps0: float, eps_corr: float,
                delta: float) -> dict:
    """Size and depth overheads and the least concatenation level (constants set to 1)."""
    if not 0 < eps_corr < eps0:
        raise ValueError("need 0 < eps_corr < eps0")
    if delta <= 0 or L < 1 or D < 1:
        raise ValueError("need delta > 0, L >= 1, D >= 1")
    log_l = max(1.0, math.log(L))
    need = math.log(2 * eps0 * L / delta) / math.log(eps0 / eps_corr)
    k_min = 0 if need <= 1 else math.ceil(math.log2(need))
    return {"L_star": L * log_l ** math.log2(l), "D_star": D * log_l ** math.log2(d_depth),
            "k_min": k_min, "two_pow_k_needed": need}
