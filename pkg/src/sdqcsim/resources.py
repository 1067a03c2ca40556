"""Remote state preparation resources and stochastically compromised operations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Sequence

import numpy as np

from .core import Angle
from .sv import PAULI, StateVector, is_unitary, plus_state, zrot_matrix

IDEAL, LEAKY, NOISY_LEAKY, LEVEL_K = "Ideal", "Leaky", "NoisyLeaky", "LevelK"
_PAULI_LIST = (PAULI["I"], PAULI["X"], PAULI["Y"], PAULI["Z"])


def _check_prob(name: str, p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


@dataclass(frozen=True)
class ResourceModel:
    kind: str = IDEAL
    p_leak: float = 0.0
    p_noise: float = 0.0
    k: int = 0
    p_c: float = 0.0

    def __post_init__(self):
        if self.kind not in (IDEAL, LEAKY, NOISY_LEAKY, LEVEL_K):
            raise ValueError(f"unknown resource kind {self.kind!r}")
        for name in ("p_leak", "p_noise", "p_c"):
            _check_prob(name, getattr(self, name))
        if self.kind == IDEAL and (self.p_leak or self.p_noise):
            raise ValueError("the ideal resource has no leak or noise")
        if self.kind == LEAKY and self.p_noise:
            raise ValueError("use NoisyLeaky for a noisy resource")

    @classmethod
    def ideal(cls) -> "ResourceModel":
        return cls(IDEAL)

    @classmethod
    def leaky(cls, p_leak: float) -> "ResourceModel":
        return cls(LEAKY, p_leak=p_leak)

    @classmethod
    def noisy_leaky(cls, p_noise: float, p_leak: float) -> "ResourceModel":
        return cls(NOISY_LEAKY, p_leak=p_leak, p_noise=p_noise)

    @classmethod
    def level_k(cls, k: int, p_c: float) -> "ResourceModel":
        return cls(LEVEL_K, k=k, p_c=p_c)


def rsp_invoke(model: ResourceModel, theta: Angle, adversary_wants_leak: bool,
               rng: np.random.Generator) -> tuple[np.ndarray, Angle | None, int]:
    """One RSP call: (emitted qubit, leaked angle or None, valid flag).

    Random draws in order: noise coin and twirl Pauli (NoisyLeaky only), then
    the leak coin only when the adversary asks for the leak, so a Leaky
    resource that is never asked consumes the same randomness as Ideal.
    """
    theta = Angle(theta)
    if model.kind == LEVEL_K:
        raise NotImplementedError("level-k RSP is served by rm15.level1_safe_rsp (k = 1) "
                                  "and by the ftanalysis calculators (k >= 2)")
    state = plus_state(theta)
    valid = 1
    if model.kind == NOISY_LEAKY:
        if rng.random() < model.p_noise:
            valid = 0
            state = _PAULI_LIST[int(rng.integers(4))] @ state
    leak = None
    if adversary_wants_leak and model.kind != IDEAL and model.p_leak > 0:
        if rng.random() < model.p_leak:
            leak = theta
    return state, leak, valid


def stochastic_to_ideal_error(p_leak: float, set_size: int) -> float:
    """Distance between a stochastically leaky and an ideal RSP on a set of states."""
    if set_size < 1:
        raise ValueError("set_size must be at least 1")
    return (1.0 - 1.0 / set_size) * float(p_leak)


# ---------------------------------------------------------------------------
# compromised operations

class AdversaryError(ValueError):
    """An adversary callback returned something that is not a 2x2 unitary."""


@dataclass
class LeakRecord:
    entries: list = field(default_factory=list)

    def add(self, round_index: int, location: Hashable, value: Any) -> None:
        self.entries.append((round_index, location, value))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def values_at(self, location: Hashable) -> list:
        return [v for _, loc, v in self.entries if loc == location]


class CompromiseAdversary:
    """Eavesdropper for compromised operations.

    cheat(location) is asked before the parameter is revealed; replace(lam,
    location, kind) receives the parameter and returns the 2x2 unitary that
    substitutes the location's qubit. Subclasses may keep state.
    """

    def cheat(self, location: Hashable) -> bool:
        return False

    def replace(self, lam, location: Hashable, kind: str) -> np.ndarray:
        return PAULI["I"]


class LeakOnlyAdversary(CompromiseAdversary):
    """Asks for every location (or the given ones) and never disturbs the qubit."""

    def __init__(self, locations: Iterable[Hashable] | None = None):
        self.locations = None if locations is None else set(locations)
        self.seen: list = []

    def cheat(self, location):
        return self.locations is None or location in self.locations

    def replace(self, lam, location, kind):
        self.seen.append((location, lam))
        return PAULI["I"]


class PauliAdversary(CompromiseAdversary):
    """Replaces each compromised location's qubit by P applied to it."""

    def __init__(self, pauli: str | np.ndarray, locations: Iterable[Hashable] | None = None):
        self.matrix = PAULI[pauli] if isinstance(pauli, str) else np.asarray(pauli, dtype=complex)
        self.locations = None if locations is None else set(locations)
        self.seen: list = []

    def cheat(self, location):
        return self.locations is None or location in self.locations

    def replace(self, lam, location, kind):
        self.seen.append((location, lam))
        return self.matrix


class FunctionAdversary(CompromiseAdversary):
    def __init__(self, cheat: Callable[[Hashable], bool], replace: Callable[..., np.ndarray]):
        self._cheat = cheat
        self._replace = replace

    def cheat(self, location):
        return bool(self._cheat(location))

    def replace(self, lam, location, kind):
        return self._replace(lam, location, kind)


@dataclass(frozen=True)
class CompromisedOpModel:
    p_c: float
    locations: int = 1
    parameter_set: tuple = ()

    def __post_init__(self):
        _check_prob("p_c", self.p_c)
        if self.locations < 1:
            raise ValueError("an operation has at least one location")


OP_KINDS = ("prep", "zrot", "gate", "measure", "ec", "idle")


def compromise_coins(model: CompromisedOpModel, location_ids: Sequence[Hashable],
                     adversary: CompromiseAdversary, rng: np.random.Generator) -> list[bool]:
    """One coin per location; True where the adversary asked and the coin hit."""
    coins = rng.random(len(location_ids))
    return [bool(adversary.cheat(loc)) and bool(c < model.p_c) for loc, c in zip(location_ids, coins)]


def compromised_apply(model: CompromisedOpModel, op_kind: str, lam, sv: StateVector,
                      targets: Sequence[int], adversary: CompromiseAdversary,
                      rng: np.random.Generator, record: LeakRecord | None = None,
                      location_ids: Sequence[Hashable] | None = None,
                      round_index: int = 0) -> StateVector:
    """Apply U(lam) to `targets` in place, then run one compromise coin per target.

    zrot applies Z(lam) on every target; gate applies the named gate lam;
    prep, measure, ec and idle leave the register as produced by the caller
    (the ideal operation already happened) and only expose their wires.
    """
    if op_kind not in OP_KINDS:
        raise ValueError(f"unsupported operation kind {op_kind!r}")
    if op_kind == "zrot":
        for q in targets:
            sv.zrot(q, lam)
    elif op_kind == "gate":
        sv.apply(lam, *targets)
    return expose(model, op_kind, lam, sv, targets, adversary, rng, record, location_ids, round_index)


def expose(model: CompromisedOpModel, op_kind: str, lam, sv: StateVector,
           targets: Sequence[int], adversary: CompromiseAdversary,
           rng: np.random.Generator, record: LeakRecord | None = None,
           location_ids: Sequence[Hashable] | None = None,
           round_index: int = 0) -> StateVector:
    """Compromise step alone: coins, leak of lam, adversary substitution.

    For callers whose physical operation differs from the leaked parameter
    (a rotation realized as Z(-lam), say); compromised_apply ends here too.
    """
    if op_kind not in OP_KINDS:
        raise ValueError(f"unsupported operation kind {op_kind!r}")
    if location_ids is None:
        location_ids = [(op_kind, q) for q in targets]
    if len(location_ids) != len(targets):
        raise ValueError("one location id per target is required")
    hits = compromise_coins(model, location_ids, adversary, rng)
    for q, loc, hit in zip(targets, location_ids, hits):
        if not hit:
            continue
        if record is not None:
            record.add(round_index, loc, lam)
        u = adversary.replace(lam, loc, op_kind)
        u = np.asarray(u, dtype=complex) if u is not None else None
        if u is None or u.shape != (2, 2) or not is_unitary(u):
            raise AdversaryError(f"replacement at {loc!r} is not a single-qubit unitary")
        sv.apply_matrix(u, q)
    return sv


__all__ = [
    "ResourceModel", "rsp_invoke", "stochastic_to_ideal_error", "CompromisedOpModel",
    "compromised_apply", "expose", "compromise_coins", "LeakRecord", "CompromiseAdversary",
    "LeakOnlyAdversary", "PauliAdversary", "FunctionAdversary", "AdversaryError",
    "zrot_matrix",
]
