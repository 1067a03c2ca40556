"""Dense statevector simulation for up to 20 qubits.

StateVector methods mutate in place and return self so that long trajectories
avoid copies; the module-level functions are the value-style wrappers that
copy first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._kernels import K
from .core import Angle

MAX_QUBITS = 20
EQ_TOL = 1e-10
PSD_TOL = 1e-8
FORCED_TOL = 1e-12

SQRT2 = math.sqrt(2.0)

GATES_1Q = {
    "I": np.eye(2, dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
}
GATES_2Q = ("CZ", "CNOT")
PAULI = {k: GATES_1Q[k] for k in "IXYZ"}


def zrot_matrix(theta) -> np.ndarray:
    """Z(theta) = diag(1, e^{i theta}); theta is an Angle or radians."""
    rad = theta.radians if isinstance(theta, Angle) else float(theta)
    return np.array([[1, 0], [0, np.exp(1j * rad)]], dtype=complex)


def plus_state(theta=0) -> np.ndarray:
    """|+_theta> = Z(theta)|+> as a length-2 vector."""
    rad = theta.radians if isinstance(theta, Angle) else float(theta)
    return np.array([1, np.exp(1j * rad)], dtype=complex) / SQRT2


def basis_state(bit: int) -> np.ndarray:
    v = np.zeros(2, dtype=complex)
    v[bit] = 1
    return v


def is_unitary(m: np.ndarray, tol: float = 1e-9) -> bool:
    m = np.asarray(m)
    return m.shape == (2, 2) and np.allclose(m.conj().T @ m, np.eye(2), atol=tol)


class StateVector:
    """Normalized amplitudes of an n-qubit register (qubit 0 leftmost)."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes, copy: bool = True):
        amps = np.array(amplitudes, dtype=complex, copy=copy).reshape(-1)
        n = amps.shape[0].bit_length() - 1
        if amps.shape[0] != 1 << n or n < 1:
            raise ValueError("amplitude vector length must be a power of two >= 2")
        if n > MAX_QUBITS:
            raise ValueError(f"at most {MAX_QUBITS} qubits are supported")
        self.num_qubits = n
        self.amplitudes = amps

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, n: int) -> "StateVector":
        amps = np.zeros(1 << n, dtype=complex)
        amps[0] = 1
        return cls(amps, copy=False)

    @classmethod
    def product(cls, qubits: Sequence[np.ndarray]) -> "StateVector":
        amps = np.ones(1, dtype=complex)
        for q in qubits:
            amps = np.kron(amps, np.asarray(q, dtype=complex))
        return cls(amps, copy=False)

    @classmethod
    def plus_thetas(cls, thetas: Sequence[Angle]) -> "StateVector":
        return cls.product([plus_state(t) for t in thetas])

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes, copy=True)

    def tensor(self, other: "StateVector | np.ndarray") -> "StateVector":
        """Register with `other` appended as the trailing qubits."""
        amps = other.amplitudes if isinstance(other, StateVector) else np.asarray(other, dtype=complex)
        return StateVector(np.kron(self.amplitudes, amps), copy=False)

    # checks -------------------------------------------------------------
    def _check(self, targets: Iterable[int]) -> list[int]:
        ts = [int(t) for t in targets]
        for t in ts:
            if not 0 <= t < self.num_qubits:
                raise IndexError(f"qubit {t} out of range for {self.num_qubits} qubits")
        if len(set(ts)) != len(ts):
            raise ValueError(f"duplicate targets {ts}")
        return ts

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    # gates --------------------------------------------------------------
    def apply(self, gate, *targets, angle=None) -> "StateVector":
        """Apply a named gate, ("ZRot", angle), or a 2x2 matrix in place."""
        if isinstance(gate, tuple):
            gate, angle = gate
        if isinstance(gate, str):
            name = gate.upper() if gate.upper() in GATES_1Q or gate.upper() in GATES_2Q else gate
            if name in GATES_2Q:
                a, b = self._check(targets)
                if len(targets) != 2:
                    raise ValueError(f"{name} needs two targets")
                if name == "CZ":
                    K.apply_cz(self.amplitudes, self.num_qubits, a, b)
                else:
                    K.apply_cnot(self.amplitudes, self.num_qubits, a, b)
                return self
            if name.lower() == "zrot":
                if angle is None:
                    raise ValueError("ZRot needs an angle")
                for q in self._check(targets):
                    self.zrot(q, angle)
                return self
            if name not in GATES_1Q:
                raise ValueError(f"unknown gate {gate!r}")
            m = GATES_1Q[name]
        else:
            m = np.asarray(gate, dtype=complex)
            if m.shape != (2, 2):
                raise ValueError("matrix gates must be 2x2")
        for q in self._check(targets):
            K.apply_1q(self.amplitudes, self.num_qubits, q, m)
        return self

    def apply_matrix(self, m: np.ndarray, q: int) -> "StateVector":
        return self.apply(np.asarray(m, dtype=complex), q)

    def zrot(self, q: int, theta) -> "StateVector":
        rad = theta.radians if isinstance(theta, Angle) else float(theta)
        (q,) = self._check([q])
        K.apply_diag(self.amplitudes, self.num_qubits, q, 1.0 + 0j, complex(np.exp(1j * rad)))
        return self

    def cz(self, a: int, b: int) -> "StateVector":
        return self.apply("CZ", a, b)

    def cnot(self, control: int, target: int) -> "StateVector":
        return self.apply("CNOT", control, target)

    # measurement --------------------------------------------------------
    def prob_one(self, q: int) -> float:
        (q,) = self._check([q])
        return float(K.prob_one(self.amplitudes, self.num_qubits, q))

    def measure_z(self, q: int, rng: np.random.Generator | None = None,
                  forced: int | None = None, remove: bool = False) -> tuple[int, float]:
        """Projective Z measurement; returns (outcome, its probability).

        With `forced` the given branch is taken (for branch enumeration); a
        zero-probability forced branch raises ValueError. With `remove` the
        measured qubit is dropped from the register.
        """
        p1 = min(max(self.prob_one(q), 0.0), 1.0)
        if forced is None:
            if rng is None:
                raise ValueError("measurement needs an rng or a forced outcome")
            bit = int(rng.random() < p1)
        else:
            bit = int(forced)
        p = p1 if bit else 1.0 - p1
        # a forced branch below FORCED_TOL is a rounding residue (1 - p1 cancels)
        if p <= (FORCED_TOL if forced is not None else 1e-300):
            raise ValueError(f"outcome {bit} on qubit {q} has zero probability")
        norm = math.sqrt(p)
        n = self.num_qubits
        if remove:
            if n == 1:
                raise ValueError("cannot remove the last qubit")
            self.amplitudes = np.ascontiguousarray(K.project_out(self.amplitudes, n, q, bit, norm))
            self.num_qubits = n - 1
        else:
            keep = K.project_out(self.amplitudes, n, q, bit, norm)
            self.amplitudes[:] = 0
            view = self.amplitudes.reshape(1 << q, 2, 1 << (n - 1 - q))
            view[:, bit, :] = keep.reshape(1 << q, 1 << (n - 1 - q))
        return bit, p

    def measure_xy(self, q: int, delta: Angle, rng: np.random.Generator | None = None,
                   forced: int | None = None, remove: bool = False) -> tuple[int, float]:
        """Measure in {|+_delta>, |-_delta>}; outcome 0 is |+_delta>."""
        self.zrot(q, -delta.radians if isinstance(delta, Angle) else -float(delta))
        self.apply("H", q)
        return self.measure_z(q, rng, forced=forced, remove=remove)

    # readout ------------------------------------------------------------
    def qubit_state(self) -> np.ndarray:
        if self.num_qubits != 1:
            raise ValueError("register holds more than one qubit")
        return self.amplitudes.copy()

    def expectation(self, pauli: str) -> float:
        """<psi| P |psi> for a Pauli string such as 'XZI'."""
        if len(pauli) != self.num_qubits:
            raise ValueError("Pauli string length must equal the qubit count")
        phi = self.copy()
        for q, p in enumerate(pauli):
            if p != "I":
                phi.apply(p, q)
        return float(np.vdot(self.amplitudes, phi.amplitudes).real)

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"


# ---------------------------------------------------------------------------
# value-style operations

def apply_gate(sv: StateVector, gate, targets: Sequence[int], angle=None) -> StateVector:
    return sv.copy().apply(gate, *targets, angle=angle)


def measure_z(sv: StateVector, qubit: int, rng, forced: int | None = None) -> tuple[int, StateVector]:
    out = sv.copy()
    bit, _ = out.measure_z(qubit, rng, forced=forced)
    return bit, out


def measure_xy(sv: StateVector, qubit: int, delta: Angle, rng, forced: int | None = None) -> tuple[int, StateVector]:
    out = sv.copy()
    bit, _ = out.measure_xy(qubit, delta, rng, forced=forced)
    return bit, out


def fidelity(a, b) -> float:
    """|<a|b>|^2 for pure states given as StateVectors or vectors."""
    va = a.amplitudes if isinstance(a, StateVector) else np.asarray(a)
    vb = b.amplitudes if isinstance(b, StateVector) else np.asarray(b)
    return float(abs(np.vdot(va, vb)) ** 2)


# ---------------------------------------------------------------------------
# density matrices

@dataclass
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError("density matrix must be square")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def pure(cls, vec) -> "DensityMatrix":
        v = vec.amplitudes if isinstance(vec, StateVector) else np.asarray(vec, dtype=complex)
        return cls(np.outer(v, v.conj()))

    def validate(self, eq_tol: float = EQ_TOL, psd_tol: float = PSD_TOL) -> None:
        m = self.entries
        if not np.allclose(m, m.conj().T, atol=eq_tol):
            raise ValueError("not Hermitian")
        if abs(np.trace(m) - 1) > eq_tol:
            raise ValueError("trace is not 1")
        if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -psd_tol:
            raise ValueError("not positive semidefinite")


def reduced_state(sv: StateVector, keep: Sequence[int]) -> DensityMatrix:
    keep = sv._check(keep)
    if not keep:
        raise ValueError("keep must be nonempty")
    n = sv.num_qubits
    rest = [q for q in range(n) if q not in keep]
    t = sv.amplitudes.reshape([2] * n).transpose(keep + rest)
    m = t.reshape(1 << len(keep), -1)
    return DensityMatrix(m @ m.conj().T)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch {a.dim} vs {b.dim}")
    diff = a.entries - b.entries
    return float(0.5 * np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum())


def trace_distance_factored(fa: np.ndarray, fb: np.ndarray) -> float:
    """Trace distance between fa fa^dag and fb fb^dag for tall factors.

    Both states are supported on the column span of [fa fb], so the
    comparison reduces to a matrix of size at most rank(fa) + rank(fb).
    """
    fa = np.asarray(fa, dtype=complex)
    fb = np.asarray(fb, dtype=complex)
    if fa.shape[0] != fb.shape[0]:
        raise ValueError("factor row counts differ")
    q, _ = np.linalg.qr(np.hstack([fa, fb]))
    ra = q.conj().T @ fa
    rb = q.conj().T @ fb
    diff = ra @ ra.conj().T - rb @ rb.conj().T
    return float(0.5 * np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2)).sum())
