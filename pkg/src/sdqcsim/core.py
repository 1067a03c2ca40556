"""Exact angle arithmetic over the eight-element angle set and seeded randomness.

Every protocol angle lives in {k*pi/4 : k = 0..7} and is stored as the integer
residue k mod 8. Radians appear only when a gate matrix is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ANGLE_MODULUS = 8


@dataclass(frozen=True, order=True)
class Angle:
    """An angle k*pi/4 with k reduced modulo 8."""

    k: int

    def __post_init__(self):
        object.__setattr__(self, "k", int(self.k) % ANGLE_MODULUS)

    def __add__(self, other: "Angle | int") -> "Angle":
        return Angle(self.k + _residue(other))

    __radd__ = __add__

    def __sub__(self, other: "Angle | int") -> "Angle":
        return Angle(self.k - _residue(other))

    def __rsub__(self, other: "Angle | int") -> "Angle":
        return Angle(_residue(other) - self.k)

    def __neg__(self) -> "Angle":
        return Angle(-self.k)

    def signed(self, sign_bit: int) -> "Angle":
        return -self if sign_bit & 1 else self

    @property
    def radians(self) -> float:
        return self.k * math.pi / 4

    def is_odd_quarter(self) -> bool:
        """True for odd multiples of pi/4 (angles outside the X/Y axes)."""
        return self.k % 2 == 1

    def __int__(self) -> int:
        return self.k

    def __index__(self) -> int:
        return self.k

    def __repr__(self) -> str:
        return f"Angle({self.k})"


def _residue(x) -> int:
    return x.k if isinstance(x, Angle) else int(x)


ZERO = Angle(0)
PI = Angle(4)
HALF_PI = Angle(2)
QUARTER_PI = Angle(1)
ALL_ANGLES: tuple[Angle, ...] = tuple(Angle(k) for k in range(ANGLE_MODULUS))


def angle_add(a: Angle, b: Angle) -> Angle:
    return Angle(a.k + b.k)


def angle_signed(a: Angle, sign_bit: int) -> Angle:
    """Return (-1)**sign_bit * a."""
    return a.signed(sign_bit)


def angle_sum(angles: Iterable[Angle]) -> Angle:
    return Angle(sum(a.k for a in angles))


def pi_times(bit: int) -> Angle:
    """The angle bit*pi."""
    return Angle(4 * (bit & 1))


def sample_uniform_angle(rng: np.random.Generator) -> Angle:
    return Angle(int(rng.integers(ANGLE_MODULUS)))


def sample_bit(rng: np.random.Generator) -> int:
    return int(rng.integers(2))


def sample_bits(rng: np.random.Generator, n: int) -> list[int]:
    return [int(b) for b in rng.integers(2, size=n)]


# ---------------------------------------------------------------------------
# seeds

@dataclass(frozen=True)
class Seed:
    """Splittable seed: a root seed plus a path of stream indices.

    Children are derived with numpy's SeedSequence spawn keys and drive a
    counter-based Philox generator, so stream (seed, path) is a pure function
    of its coordinates and independent of how work is scheduled.
    """

    seed: int
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "path", tuple(int(i) for i in self.path))

    @property
    def stream_index(self) -> int:
        return self.path[-1] if self.path else 0

    def child(self, index: int) -> "Seed":
        if index < 0 or index >= 2**64:
            raise ValueError("stream index must be a 64-bit unsigned integer")
        return Seed(self.seed, self.path + (int(index),))

    def children(self, n: int) -> list["Seed"]:
        return [self.child(i) for i in range(n)]

    def sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=self.path)

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.sequence()))


def make_rng(seed: "int | Seed | np.random.Generator | None") -> np.random.Generator:
    """Normalize the accepted seed-like inputs into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, Seed):
        return seed.rng()
    if seed is None:
        return np.random.default_rng()
    return Seed(int(seed)).rng()


def split_rng(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Derive n independent child generators from rng (deterministic in its state)."""
    return list(rng.spawn(n))


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n > 0 else float("inf")


def bits_to_str(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)
