"""The [[15,1,3]] punctured quantum Reed-Muller code at level 1.

Qubit q (0..14) carries the label q + 1, read as a 4-bit vector. The X-type
generators are the four label-bit rows (weight 8); the Z-type generators are
those rows plus their six pairwise products (weight 4). Logical X and Z are
the all-ones operators. Every 15-bit support below is stored as an integer
in state-index space, i.e. qubit q is bit 14 - q, so that an X error on a
support is an XOR of basis indices.

The ideal full decoder maps the 15-qubit space to (logical qubit) x (4 X-type
syndrome bits) x (10 Z-type syndrome bits) using the basis
X^{e(sz)} Z^{f(sx)} |j_L>, with e and f minimum-weight coset leaders.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable, Iterable, Sequence

import numpy as np

from .core import ALL_ANGLES, Angle, sample_uniform_angle
from .resources import (CompromiseAdversary, CompromisedOpModel, LeakRecord, expose)
from .sv import PAULI, StateVector, is_unitary, plus_state, trace_distance_factored

N = 15
N_XGEN = 4
N_ZGEN = 10
ONES = (1 << N) - 1
_TINY = 1e-14


def qubit_bit(q: int) -> int:
    return 1 << (N - 1 - q)


def support_mask(qubits: Iterable[int]) -> int:
    m = 0
    for q in qubits:
        m |= qubit_bit(q)
    return m


def mask_qubits(mask: int) -> list[int]:
    return [q for q in range(N) if mask & qubit_bit(q)]


def _popcount(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    c = np.zeros_like(x)
    for b in range(N):
        c += (x >> b) & 1
    return c


def gf2_rank(rows: Sequence[int]) -> int:
    basis: list[int] = []
    for r in rows:
        for b in basis:
            r = min(r, r ^ b)
        if r:
            basis.append(r)
    return len(basis)


def _span(rows: Sequence[int]) -> np.ndarray:
    out = np.zeros(1 << len(rows), dtype=np.int64)
    for lam in range(1, 1 << len(rows)):
        low = lam & -lam
        out[lam] = out[lam ^ low] ^ rows[low.bit_length() - 1]
    return out


# ---------------------------------------------------------------------------
# stabilizers

@dataclass(frozen=True)
class StabilizerSet:
    x_generators: tuple[int, ...]
    z_generators: tuple[int, ...]
    logical_x: int
    logical_z: int
    distance: int

    def to_table(self) -> str:
        """One generator per line as a 15-character Pauli string."""
        lines = []
        for kind, gens in (("X", self.x_generators), ("Z", self.z_generators)):
            for g in gens:
                lines.append("".join(kind if g & qubit_bit(q) else "I" for q in range(N)))
        return "\n".join(lines) + "\n"


class CodeError(AssertionError):
    pass


def build_generators() -> StabilizerSet:
    labels = range(1, N + 1)
    rows = [support_mask(q for q, lab in enumerate(labels) if lab >> i & 1) for i in range(4)]
    xg = tuple(rows)
    zg = tuple(rows + [a & b for a, b in itertools.combinations(rows, 2)])
    for a in xg:
        for b in zg:
            if bin(a & b).count("1") % 2:
                raise CodeError("X and Z generators do not commute")
    if gf2_rank(xg) != N_XGEN or gf2_rank(zg) != N_ZGEN:
        raise CodeError("generators are not independent")
    for g in xg + zg:
        if bin(g & ONES).count("1") % 2:
            raise CodeError("a generator anticommutes with a logical operator")
    if bin(ONES).count("1") % 2 != 1:
        raise CodeError("logical X and Z must anticommute")
    return StabilizerSet(xg, zg, ONES, ONES, _distance(xg, zg))


def _distance(xg, zg) -> int:
    """Minimum weight of a nontrivial logical operator, by exhaustion."""
    allv = np.arange(1 << N, dtype=np.int64)
    wt = _popcount(allv)
    best = N
    for checks, stabs in ((zg, xg), (xg, zg)):
        # X-type logicals commute with every Z generator and are not X stabilizers
        ok = np.ones(allv.shape[0], dtype=bool)
        for g in checks:
            ok &= (_popcount(allv & g) % 2) == 0
        ok[_span(list(stabs))] = False
        best = min(best, int(wt[ok].min()))
    return best


@dataclass(frozen=True)
class Syndrome:
    """X-type block (4 bits, detects Z errors) then Z-type block (10 bits)."""
    sx: int
    sz: int

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(self.sx >> i & 1 for i in range(N_XGEN)) + tuple(self.sz >> i & 1 for i in range(N_ZGEN))

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "Syndrome":
        if len(bits) != N_XGEN + N_ZGEN:
            raise ValueError("a syndrome has 14 bits")
        sx = sum(int(b) << i for i, b in enumerate(bits[:N_XGEN]))
        sz = sum(int(b) << i for i, b in enumerate(bits[N_XGEN:]))
        return cls(sx, sz)

    @property
    def index(self) -> int:
        return self.sx * (1 << N_ZGEN) + self.sz

    @classmethod
    def from_index(cls, i: int) -> "Syndrome":
        return cls(int(i) >> N_ZGEN, int(i) & ((1 << N_ZGEN) - 1))

    def is_trivial(self) -> bool:
        return self.sx == 0 and self.sz == 0

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


# ---------------------------------------------------------------------------
# decoder tables

@dataclass(frozen=True)
class _Tables:
    code: StabilizerSet
    idx: np.ndarray          # [j, lambda, sz] -> basis index
    h16: np.ndarray          # [lambda, sx] -> (-1)^{lambda.sx} / 4
    sign: np.ndarray         # [j, sx]
    x_leader: np.ndarray     # sz -> X-error support
    z_leader: np.ndarray     # sx -> Z-error support
    correctable_sz: np.ndarray
    sigma: int


def _syndromes(gens: Sequence[int]) -> np.ndarray:
    allv = np.arange(1 << N, dtype=np.int64)
    s = np.zeros_like(allv)
    for i, g in enumerate(gens):
        s |= (_popcount(allv & g) % 2) << i
    return s


def _leaders(gens: Sequence[int]) -> np.ndarray:
    s = _syndromes(gens)
    wt = _popcount(np.arange(1 << N))
    order = np.lexsort((np.arange(1 << N), wt))   # by weight, then by integer
    leader = np.full(1 << len(gens), -1, dtype=np.int64)
    for e in order[::-1]:
        leader[s[e]] = e
    if np.any(leader < 0):
        raise CodeError("some syndrome has no error")
    return leader


@lru_cache(maxsize=1)
def tables() -> _Tables:
    code = build_generators()
    xl = _leaders(code.z_generators)      # X errors are seen by Z-type generators
    zl = _leaders(code.x_generators)
    c0 = _span(list(code.x_generators))
    j = np.arange(2)[:, None, None]
    idx = xl[None, None, :] ^ c0[None, :, None] ^ (j * ONES)
    lam = np.arange(16)
    h16 = np.where(_popcount(lam[:, None] & lam[None, :]) % 2, -1.0, 1.0) / 4
    sign = np.where((np.arange(2)[:, None] * _popcount(zl)[None, :]) % 2, -1.0, 1.0)
    corr_sz = _popcount(xl) <= 1
    t = _Tables(code, idx, h16, sign, xl, zl, corr_sz, 1)
    return _calibrate(t)


def _calibrate(t: _Tables) -> _Tables:
    """Fix sigma so that physical Z(sigma*theta) on all qubits is Z_L(theta)."""
    ref = _encode_raw(t, _logical_only(plus_state(Angle(1))))
    for sigma in (1, -1):
        psi = _encode_raw(t, _logical_only(plus_state(Angle(0))))
        psi = psi * np.exp(1j * sigma * np.pi / 4 * _popcount(np.arange(1 << N)))
        if abs(abs(np.vdot(ref, psi)) - 1) < 1e-10:
            return _Tables(t.code, t.idx, t.h16, t.sign, t.x_leader, t.z_leader, t.correctable_sz, sigma)
    raise CodeError("transversal Z is not a logical rotation")


def _logical_only(vec: np.ndarray) -> np.ndarray:
    d = np.zeros((2, 16, 1 << N_ZGEN), dtype=complex)
    d[:, 0, 0] = vec
    return d


def _encode_raw(t: _Tables, d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=complex).reshape(2, 16, 1 << N_ZGEN)
    psi = np.empty(1 << N, dtype=complex)
    psi[t.idx] = np.einsum("ls,jsz->jlz", t.h16, t.sign[:, :, None] * d)
    return psi


def code() -> StabilizerSet:
    return tables().code


def transversal_sign() -> int:
    return tables().sigma


def decode(sv: StateVector | np.ndarray) -> np.ndarray:
    """Ideal full decoder: amplitudes indexed [logical, syndrome index]."""
    t = tables()
    psi = sv.amplitudes if isinstance(sv, StateVector) else np.asarray(sv, dtype=complex)
    d = t.sign[:, :, None] * np.einsum("ls,jlz->jsz", t.h16, psi[t.idx])
    return d.reshape(2, -1)


def encode(logical: np.ndarray, syndrome: Syndrome | np.ndarray | None = None) -> StateVector:
    """Inverse decoder. `syndrome` is a basis syndrome or a 16384-vector."""
    logical = np.asarray(logical, dtype=complex)
    if logical.ndim == 2:
        d = logical
    else:
        if syndrome is None:
            syndrome = Syndrome(0, 0)
        if isinstance(syndrome, Syndrome):
            svec = np.zeros(1 << (N_XGEN + N_ZGEN), dtype=complex)
            svec[syndrome.index] = 1
        else:
            svec = np.asarray(syndrome, dtype=complex)
        d = np.outer(logical, svec)
    return StateVector(_encode_raw(tables(), d), copy=False)


def encode_logical_plus(theta: Angle = Angle(0)) -> StateVector:
    """Z_L(theta)|+_L>."""
    return encode(plus_state(theta))


def logical_state(sv: StateVector) -> np.ndarray:
    """Logical reduced density matrix (2x2)."""
    d = decode(sv)
    return d @ d.conj().T


def syndrome_factor(sv: StateVector | np.ndarray) -> np.ndarray:
    """F with F F^dag the syndrome reduced state."""
    d = sv if isinstance(sv, np.ndarray) and sv.ndim == 2 else decode(sv)
    return d.T


# ---------------------------------------------------------------------------
# gates and syndrome measurement

def transversal_zrot(sv: StateVector, theta: Angle) -> StateVector:
    """Physical Z(sigma*theta) on all 15 qubits, acting as Z_L(theta)."""
    phys = Angle(theta).signed(transversal_sign() == -1)
    for q in range(N):
        sv.zrot(q, phys)
    return sv


def stabilizer_expectations(sv: StateVector) -> np.ndarray:
    c = code()
    psi = sv.amplitudes
    allv = np.arange(1 << N)
    out = []
    for g in c.x_generators:
        out.append(np.vdot(psi, psi[allv ^ g]).real)
    for g in c.z_generators:
        out.append(np.vdot(psi, np.where(_popcount(allv & g) % 2, -1, 1) * psi).real)
    return np.array(out)


def _generator_action(psi: np.ndarray, g: int, xtype: bool) -> np.ndarray:
    allv = np.arange(psi.shape[0])
    if xtype:
        return psi[allv ^ g]
    return np.where(_popcount(allv & g) % 2, -1.0, 1.0) * psi


def _generators_in_order(order: Sequence[int] | None):
    c = code()
    gens = [(g, True, i) for i, g in enumerate(c.x_generators)]
    gens += [(g, False, N_XGEN + i) for i, g in enumerate(c.z_generators)]
    if order is not None:
        gens = [gens[i] for i in order]
    return gens


def measure_syndrome(sv: StateVector, rng: np.random.Generator | None = None,
                     order: Sequence[int] | None = None) -> tuple[Syndrome, StateVector]:
    """Sequential projective measurement of the 14 generators (X block first)."""
    psi = sv.amplitudes.copy()
    bits = [0] * (N_XGEN + N_ZGEN)
    for g, xtype, pos in _generators_in_order(order):
        gpsi = _generator_action(psi, g, xtype)
        plus = (psi + gpsi) / 2
        p0 = float(np.vdot(plus, plus).real)
        if rng is None:
            if _TINY < p0 < 1 - _TINY:
                raise ValueError("outcome is random; pass an rng")
            b = 0 if p0 >= 0.5 else 1
        else:
            b = 0 if rng.random() < p0 else 1
        proj = plus if b == 0 else (psi - gpsi) / 2
        psi = proj / np.linalg.norm(proj)
        bits[pos] = b
    return Syndrome.from_bits(bits), StateVector(psi, copy=False)


def syndrome_probabilities(sv: StateVector | np.ndarray) -> np.ndarray:
    d = sv if isinstance(sv, np.ndarray) and sv.ndim == 2 else decode(sv)
    return (np.abs(d) ** 2).sum(axis=0)


def syndrome_distribution(sv: StateVector) -> dict[str, float]:
    """Exact outcome distribution of the syndrome measurement (no sampling)."""
    p = syndrome_probabilities(sv)
    nz = np.nonzero(p > _TINY)[0]
    return {str(Syndrome.from_index(i)): float(p[i]) for i in nz}


def syndrome_distribution_projective(sv: StateVector, order: Sequence[int] | None = None) -> dict[str, float]:
    """Same distribution by branching through the sequential projectors."""
    gens = _generators_in_order(order)
    out: dict[str, float] = {}

    def walk(psi, k, bits, prob):
        if prob < _TINY:
            return
        if k == len(gens):
            key = str(Syndrome.from_bits(bits))
            out[key] = out.get(key, 0.0) + prob
            return
        g, xtype, pos = gens[k]
        gpsi = _generator_action(psi, g, xtype)
        for b, proj in ((0, (psi + gpsi) / 2), (1, (psi - gpsi) / 2)):
            p = float(np.vdot(proj, proj).real)
            if p > _TINY:
                nb = list(bits)
                nb[pos] = b
                walk(proj / np.sqrt(p), k + 1, nb, prob * p)

    walk(sv.amplitudes, 0, [0] * (N_XGEN + N_ZGEN), 1.0)
    return out


class UncorrectableSyndrome(ValueError):
    pass


@dataclass
class ECResult:
    state: StateVector
    syndrome: Syndrome
    probability: float
    correctable: bool


def is_correctable(s: Syndrome) -> bool:
    return bool(tables().correctable_sz[s.sz])


def ideal_ec(sv: StateVector, rng: np.random.Generator | None = None,
             forced: Syndrome | None = None) -> ECResult:
    """Measure the syndrome and undo the coset-leader error.

    The recovered logical state is whatever the decoder assigns to the
    measured syndrome; it equals the input logical state whenever the error
    had weight at most one.
    """
    d = decode(sv)
    p = (np.abs(d) ** 2).sum(axis=0)
    if forced is not None:
        i = forced.index
    elif rng is None:
        i = int(np.argmax(p))
        if p[i] < 1 - 1e-10:
            raise ValueError("syndrome is random; pass an rng")
    else:
        i = int(rng.choice(p.shape[0], p=p / p.sum()))
    if p[i] <= _TINY:
        raise ValueError("forced syndrome has zero probability")
    s = Syndrome.from_index(i)
    logical = d[:, i] / np.sqrt(p[i])
    return ECResult(encode(logical), s, float(p[i]), is_correctable(s))


def correct_single_error(sv: StateVector, rng: np.random.Generator | None = None) -> StateVector:
    res = ideal_ec(sv, rng)
    if not res.correctable:
        raise UncorrectableSyndrome(f"syndrome {res.syndrome} matches no weight-1 error")
    return res.state


def decode_and_measure_syndrome(sv: StateVector, rng: np.random.Generator) -> tuple[np.ndarray, Syndrome]:
    """Logical qubit handed onwards: ideal decode, syndrome measured and dropped."""
    d = decode(sv)
    p = (np.abs(d) ** 2).sum(axis=0)
    i = int(rng.choice(p.shape[0], p=p / p.sum()))
    return d[:, i] / np.sqrt(p[i]), Syndrome.from_index(i)


# ---------------------------------------------------------------------------
# the syndrome attack on the unsafe transversal gate

def tvd(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def tvd_table(dists: dict) -> np.ndarray:
    ths = list(dists)
    return np.array([[tvd(dists[a], dists[b]) for b in ths] for a in ths])


def ml_accuracy(dists: dict) -> float:
    """Success of the Bayes-optimal guess of theta (uniform prior) from one sample."""
    keys = set().union(*dists.values())
    return sum(max(d.get(k, 0.0) for d in dists.values()) for k in keys) / len(dists)


def ml_guesser(dists: dict):
    """Maximum-likelihood map from observation to theta; unseen observations give 0."""
    keys = set().union(*dists.values())
    table = {k: max(dists, key=lambda th: (dists[th].get(k, 0.0), -int(th))) for k in keys}
    return lambda obs: table.get(obs, Angle(0))


def attack_demo_theta_leak(qubit: int = 0, thetas: Sequence[Angle] = ALL_ANGLES) -> dict:
    """|+_L> -> X on one qubit -> transversal Z(theta) -> exact syndrome distribution."""
    dists = {}
    for th in thetas:
        sv = encode_logical_plus()
        sv.apply("X", qubit)
        transversal_zrot(sv, th)
        dists[Angle(th)] = syndrome_distribution(sv)
    return {"syndrome_distribution": dists, "tvd_table": tvd_table(dists),
            "ml_accuracy": ml_accuracy(dists)}


# ---------------------------------------------------------------------------
# Safe-Z and the level-1 pipeline

@dataclass(frozen=True)
class SafeRotationPlan:
    alphas: tuple[Angle, ...]
    betas: tuple[Angle, ...]
    theta: Angle

    @classmethod
    def sample(cls, theta: Angle, rng: np.random.Generator) -> "SafeRotationPlan":
        alphas = tuple(sample_uniform_angle(rng) for _ in range(N))
        return cls.from_alphas(theta, alphas)

    @classmethod
    def from_alphas(cls, theta: Angle, alphas: Sequence[Angle]) -> "SafeRotationPlan":
        theta = Angle(theta)
        alphas = tuple(Angle(a) for a in alphas)
        return cls(alphas, tuple(theta - a for a in alphas), theta)


def _physical(lam: Angle) -> Angle:
    return Angle(lam).signed(transversal_sign() == -1)


def prep_locations() -> list:
    return [("prep", q) for q in range(N)]


def rotation_locations(safe: bool = True) -> list:
    if safe:
        return [(kind, q) for kind in ("alpha", "beta") for q in range(N)]
    return [("rot", q) for q in range(N)]


def ec_locations(which: int) -> list:
    return [(f"ec{which}", q) for q in range(N)]


def pipeline_locations(safe: bool = True) -> list:
    return prep_locations() + rotation_locations(safe) + ec_locations(1) + ec_locations(2)


def safe_zrot(sv: StateVector, theta: Angle, compromise: CompromisedOpModel,
              adversary: CompromiseAdversary, rng: np.random.Generator,
              record: LeakRecord | None = None, plan: SafeRotationPlan | None = None,
              round_index: int = 0) -> tuple[StateVector, LeakRecord, SafeRotationPlan]:
    """Z(beta_i) Z(alpha_i) on every qubit with alpha_i uniform, beta_i = theta - alpha_i.

    Each of the 30 rotations is a compromisable location leaking its own
    parameter; physically the rotation by lam is Z(sigma*lam).
    """
    if record is None:
        record = LeakRecord()
    if plan is None:
        plan = SafeRotationPlan.sample(theta, rng)
    elif plan.theta != Angle(theta):
        raise ValueError("plan was drawn for a different theta")
    for kind, params in (("alpha", plan.alphas), ("beta", plan.betas)):
        for q in range(N):
            sv.zrot(q, _physical(params[q]))
        for q in range(N):
            expose(compromise, "zrot", params[q], sv, [q], adversary, rng, record,
                   [(kind, q)], round_index)
    return sv, record, plan


def unsafe_zrot(sv: StateVector, theta: Angle, compromise: CompromisedOpModel,
                adversary: CompromiseAdversary, rng: np.random.Generator,
                record: LeakRecord | None = None, round_index: int = 0) -> tuple[StateVector, LeakRecord]:
    """Transversal Z(theta) where each of the 15 rotations leaks theta itself."""
    if record is None:
        record = LeakRecord()
    transversal_zrot(sv, theta)
    for q in range(N):
        expose(compromise, "zrot", Angle(theta), sv, [q], adversary, rng, record, [("rot", q)], round_index)
    return sv, record


class _Forced(CompromiseAdversary):
    def __init__(self, inner: CompromiseAdversary, locations: Iterable[Hashable]):
        self.inner = inner
        self.locations = set(locations)

    def cheat(self, location):
        return location in self.locations

    def replace(self, lam, location, kind):
        return self.inner.replace(lam, location, kind)


@dataclass
class Level1Run:
    theta: Angle
    state: StateVector
    record: LeakRecord
    ec_syndromes: list
    plan: SafeRotationPlan | None
    safe: bool = True
    accuracy_ok: bool | None = None
    privacy_ok: bool | None = None
    checks: dict = field(default_factory=dict)

    @property
    def compromised(self) -> list:
        return [loc for _, loc, _ in self.record]

    @property
    def good(self) -> bool:
        """At level 1 the extended rectangle is good with at most one compromised location."""
        return len(self.compromised) <= 1

    def reconstructed_theta(self) -> Angle | None:
        """What the leaks alone reveal about theta."""
        vals: dict = {}
        for _, (kind, q), lam in self.record:
            if kind == "rot":
                return Angle(lam)
            vals.setdefault(q, {})[kind] = lam
        for got in vals.values():
            if "alpha" in got and "beta" in got:
                return Angle(got["alpha"]) + Angle(got["beta"])
        return None


def level1_safe_rsp(theta: Angle, p_c: float, adversary: CompromiseAdversary,
                    rng: np.random.Generator, forced: Iterable[Hashable] | None = None,
                    safe: bool = True, check: bool = False, round_index: int = 0) -> Level1Run:
    """Encode |+_L> -> Safe-Z(theta) -> ideal 1-EC -> ideal 1-EC, all locations compromisable.

    Draw order on rng: 15 preparation coins, 15 alphas, 15 alpha coins,
    15 beta coins, then per EC a syndrome draw and 15 coins. With `forced`
    the listed locations are compromised with certainty and no others.
    check=True adds the exact accuracy and privacy verdicts for the run's
    compromise pattern (see accuracy_and_privacy).
    """
    theta = Angle(theta)
    model = CompromisedOpModel(p_c)
    if forced is not None:
        model = CompromisedOpModel(1.0)
        adversary = _Forced(adversary, forced)
    record = LeakRecord()
    sv = encode_logical_plus()
    expose(model, "prep", None, sv, list(range(N)), adversary, rng, record, prep_locations(), round_index)
    plan = None
    if safe:
        sv, record, plan = safe_zrot(sv, theta, model, adversary, rng, record, round_index=round_index)
    else:
        sv, record = unsafe_zrot(sv, theta, model, adversary, rng, record, round_index)
    syndromes = []
    for which in (1, 2):
        res = ideal_ec(sv, rng)
        sv = res.state
        syndromes.append(res.syndrome)
        expose(model, "ec", str(res.syndrome), sv, list(range(N)), adversary, rng, record,
               ec_locations(which), round_index)
    run = Level1Run(theta, sv, record, syndromes, plan, safe)
    if check:
        inner = adversary.inner if isinstance(adversary, _Forced) else adversary
        verdict = accuracy_and_privacy(run.compromised, inner, safe)
        run.accuracy_ok = verdict["accuracy_distance"][theta] <= 1e-8
        run.privacy_ok = verdict["privacy_ok"]
        run.checks = verdict
    return run


# ---------------------------------------------------------------------------
# exact ensembles for accuracy and privacy

@dataclass
class Branch:
    weight: float
    leaks: tuple
    decoded: np.ndarray


def _replace(adversary, lam, loc, kind) -> np.ndarray:
    u = np.asarray(adversary.replace(lam, loc, kind), dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u):
        raise ValueError(f"replacement at {loc!r} is not a single-qubit unitary")
    return u


def level1_ensemble(theta: Angle, compromised: Iterable[Hashable], adversary: CompromiseAdversary,
                    safe: bool = True) -> list[Branch]:
    """Every branch of the level-1 pipeline for a fixed compromise pattern.

    Branches run over the Verifier's alphas on qubits whose rotations are
    compromised (uniform weight) and over the syndrome outcomes of both ECs.
    Each carries the adversary's leak tuple and the decoded final state.
    """
    theta = Angle(theta)
    comp = set(compromised)
    known = set(pipeline_locations(safe))
    if comp - known:
        raise ValueError(f"unknown locations {sorted(comp - known)}")
    rot_q = sorted({q for kind, q in comp if kind in ("alpha", "beta")})
    out: list[Branch] = []
    for combo in itertools.product(range(8), repeat=len(rot_q)):
        alphas = [Angle(0)] * N
        for q, a in zip(rot_q, combo):
            alphas[q] = Angle(a)
        plan = SafeRotationPlan.from_alphas(theta, alphas)
        w = 8.0 ** -len(rot_q)
        leaks: list = []
        sv = encode_logical_plus()
        for loc in prep_locations():
            if loc in comp:
                leaks.append((loc, None))
                sv.apply_matrix(_replace(adversary, None, loc, "prep"), loc[1])
        if safe:
            for kind, params in (("alpha", plan.alphas), ("beta", plan.betas)):
                for q in range(N):
                    sv.zrot(q, _physical(params[q]))
                for q in range(N):
                    if (kind, q) in comp:
                        leaks.append(((kind, q), params[q].k))
                        sv.apply_matrix(_replace(adversary, params[q], (kind, q), "zrot"), q)
        else:
            transversal_zrot(sv, theta)
            for q in range(N):
                if ("rot", q) in comp:
                    leaks.append((("rot", q), theta.k))
                    sv.apply_matrix(_replace(adversary, theta, ("rot", q), "zrot"), q)
        _ec_branches(sv, w, leaks, comp, adversary, 1, out)
    return out


def _ec_branches(sv, w, leaks, comp, adversary, which, out):
    d = decode(sv)
    p = (np.abs(d) ** 2).sum(axis=0)
    for i in np.nonzero(p > _TINY)[0]:
        s = Syndrome.from_index(i)
        nxt = encode(d[:, i] / np.sqrt(p[i]))
        lk = list(leaks)
        for loc in ec_locations(which):
            if loc in comp:
                lk.append((loc, str(s)))
                nxt.apply_matrix(_replace(adversary, str(s), loc, "ec"), loc[1])
        if which == 1:
            _ec_branches(nxt, w * p[i], lk, comp, adversary, 2, out)
        else:
            out.append(Branch(w * float(p[i]), tuple(lk), decode(nxt)))


def logical_mixture(branches: Sequence[Branch]) -> np.ndarray:
    rho = np.zeros((2, 2), dtype=complex)
    for b in branches:
        rho += b.weight * (b.decoded @ b.decoded.conj().T)
    return rho


def view_factors(branches: Sequence[Branch]) -> dict:
    """Leak tuple -> factor of the (unnormalized) syndrome state given that tuple."""
    groups: dict = {}
    for b in branches:
        groups.setdefault(b.leaks, []).append(np.sqrt(b.weight) * b.decoded.T)
    return {k: np.hstack(v) for k, v in groups.items()}


def view_distance(fa: dict, fb: dict) -> float:
    """Trace distance between classical-quantum views (leaks, syndrome state)."""
    total = 0.0
    for k in set(fa) | set(fb):
        a, b = fa.get(k), fb.get(k)
        if a is None:
            a = np.zeros_like(b)
        if b is None:
            b = np.zeros_like(a)
        total += trace_distance_factored(a, b)
    return total


def _trace_distance_2x2(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    return float(0.5 * np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum())


def accuracy_and_privacy(compromised: Iterable[Hashable], adversary: CompromiseAdversary,
                         safe: bool = True, thetas: Sequence[Angle] = ALL_ANGLES) -> dict:
    """Exact verdicts for one compromise pattern.

    accuracy: the logical reduced state equals |+_theta><+_theta| for each theta.
    privacy: the adversary's view, leaks together with the syndrome reduced
    state, has the same distribution for every theta.
    """
    compromised = list(compromised)
    acc, views = {}, {}
    for th in thetas:
        br = level1_ensemble(th, compromised, adversary, safe)
        ideal = np.outer(plus_state(th), plus_state(th).conj())
        acc[Angle(th)] = _trace_distance_2x2(logical_mixture(br), ideal)
        views[Angle(th)] = view_factors(br)
    ths = list(views)
    priv = max((view_distance(views[a], views[b]) for a, b in itertools.combinations(ths, 2)),
               default=0.0)
    return {"accuracy_distance": acc, "privacy_distance": priv,
            "accuracy_ok": max(acc.values()) <= 1e-8, "privacy_ok": priv <= 1e-8}


def output_view_distributions(compromised: Iterable[Hashable], adversary: CompromiseAdversary,
                              safe: bool = True, thetas: Sequence[Angle] = ALL_ANGLES) -> dict:
    """theta -> distribution of (leak tuple, measured output syndrome)."""
    compromised = list(compromised)
    out = {}
    for th in thetas:
        dist: dict = {}
        for b in level1_ensemble(th, compromised, adversary, safe):
            p = syndrome_probabilities(b.decoded)
            for i in np.nonzero(p > _TINY)[0]:
                key = (b.leaks, str(Syndrome.from_index(i)))
                dist[key] = dist.get(key, 0.0) + b.weight * float(p[i])
        out[Angle(th)] = dist
    return out


def safe_attack_experiment(qubit: int = 0, location: str = "prep", thetas: Sequence[Angle] = ALL_ANGLES,
                           replacement: str = "X") -> dict:
    """The unsafe-gate attack (X before the rotation) replayed through a good
    1-exSafeRec: one compromised location, adversary sees its leaks and the
    output block's syndrome."""
    from .resources import PauliAdversary
    adv = PauliAdversary(replacement)
    dists = output_view_distributions([(location, qubit)], adv, True, thetas)
    return {"view_distribution": dists, "tvd_table": tvd_table(dists), "ml_accuracy": ml_accuracy(dists)}


def guessing_trials(trials: int, rng: np.random.Generator, qubit: int = 0, location: str = "prep",
                    safe: bool = True, replacement: str = "X") -> dict:
    """Sampled theta-guessing game against the level-1 pipeline.

    The adversary forces an X at one location, then guesses theta from the
    measured output syndrome with the maximum-likelihood rule of the unsafe
    attack, or directly from a leak that reveals theta.
    """
    from .resources import PauliAdversary
    guess = ml_guesser(attack_demo_theta_leak(qubit)["syndrome_distribution"])
    adv = PauliAdversary(replacement)
    wins = 0
    for _ in range(trials):
        th = sample_uniform_angle(rng)
        run = level1_safe_rsp(th, 1.0, adv, rng, forced=[(location, qubit)], safe=safe)
        _, s = decode_and_measure_syndrome(run.state, rng)
        leaked = run.reconstructed_theta()
        g = leaked if leaked is not None else guess(str(s))
        wins += int(g == th)
    acc = wins / trials
    return {"trials": trials, "accuracy": acc, "stderr": float(np.sqrt(acc * (1 - acc) / trials)) if trials else 0.0}
