"""Merging N leaky RSP calls into one that leaks only when all N leak.

The receiver holds N qubits |+_{theta_j}>. Qubit N (index N-1 here) is the
control: for every other j it applies CNOT(control -> j) and Z-measures j,
which multiplies the control's angle by Z((-1)^{t_j} theta_j). The sender
then sends b and the correction (-1)^b theta - theta', and the receiver
applies X^b Z(correction), i.e. the Z rotation first and the X flip second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Angle, angle_sum, sample_uniform_angle
from .resources import ResourceModel, rsp_invoke
from .sv import PAULI, StateVector, fidelity, plus_state, zrot_matrix


def merge_theta(thetas: Sequence[Angle], t: Sequence[int]) -> Angle:
    """theta' = theta_N + sum_{j<N} (-1)^{t_j} theta_j."""
    if len(thetas) < 1:
        raise ValueError("need at least one angle")
    if len(t) != len(thetas) - 1:
        raise ValueError(f"expected {len(thetas) - 1} outcome bits, got {len(t)}")
    return Angle(thetas[-1]) + angle_sum(Angle(th).signed(tj) for th, tj in zip(thetas[:-1], t))


def correction_angle(theta: Angle, theta_prime: Angle, b: int) -> Angle:
    return Angle(theta).signed(b) - theta_prime


@dataclass
class PluggedRun:
    N: int
    thetas: list[Angle]
    t: list[int]
    b: int
    theta_prime: Angle
    correction: Angle
    leaked_indices: frozenset
    final_qubit: np.ndarray
    valid: int = 1
    adversary_view: list = field(default_factory=list)

    @property
    def merged_leak(self) -> bool:
        return len(self.leaked_indices) == self.N

    def fidelity_with(self, theta: Angle) -> float:
        return fidelity(self.final_qubit, plus_state(theta))


# ---------------------------------------------------------------------------
# receivers

class PluggedReceiver:
    """Receiver side of the merge. Qubit index N-1 is the control."""

    wants_leak = False

    def receive(self, qubits: Sequence[np.ndarray], leaks: dict[int, Angle]) -> list[int]:
        raise NotImplementedError

    def correct(self, b: int, angle: Angle) -> None:
        raise NotImplementedError

    def final_state(self) -> np.ndarray:
        raise NotImplementedError


class HonestReceiver(PluggedReceiver):
    """CNOT star onto the control, one target at a time.

    The qubits arrive in a product state and each CNOT touches only the
    control and one target, so the register never needs more than two
    qubits. `forced_t` pins the target outcomes for branch enumeration.
    """

    def __init__(self, rng: np.random.Generator | None = None, forced_t: Sequence[int] | None = None):
        self.rng = rng
        self.forced_t = forced_t
        self.control: np.ndarray | None = None
        self.t: list[int] = []

    def receive(self, qubits, leaks):
        n = len(qubits)
        ctrl = np.asarray(qubits[n - 1], dtype=complex)
        t = []
        for j in range(n - 1):
            pair = StateVector.product([ctrl, qubits[j]])
            pair.cnot(0, 1)
            forced = None if self.forced_t is None else self.forced_t[j]
            bit, _ = pair.measure_z(1, self.rng, forced=forced, remove=True)
            ctrl = pair.amplitudes
            t.append(bit)
        self.control = ctrl
        self.t = t
        return t

    def correct(self, b, angle):
        ctrl = zrot_matrix(angle) @ self.control
        if b:
            ctrl = PAULI["X"] @ ctrl
        self.control = ctrl

    def final_state(self):
        return self.control.copy()


class LeakReconstructingReceiver(HonestReceiver):
    """Honest receiver that asks for every leak and rebuilds theta when all leak."""

    wants_leak = True

    def __init__(self, rng=None, forced_t=None):
        super().__init__(rng, forced_t)
        self.leaks: dict[int, Angle] = {}
        self.n = 0
        self.reconstructed: Angle | None = None

    def receive(self, qubits, leaks):
        self.leaks = dict(leaks)
        self.n = len(qubits)
        self.reconstructed = None
        return super().receive(qubits, leaks)

    def correct(self, b, angle):
        super().correct(b, angle)
        if len(self.leaks) == self.n:
            thetas = [self.leaks[j] for j in range(self.n)]
            self.reconstructed = (angle + merge_theta(thetas, self.t)).signed(b)


# ---------------------------------------------------------------------------
# protocol

def run_plugged_rsp(theta: Angle, N: int, rsp: ResourceModel, receiver: PluggedReceiver,
                    rng: np.random.Generator) -> PluggedRun:
    """Sender side of the merge driven against `receiver`.

    Draw order on rng: theta_1..theta_N, then the N resource calls, then b.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    theta = Angle(theta)
    thetas = [sample_uniform_angle(rng) for _ in range(N)]
    qubits, leaks, valid = [], {}, 1
    view: list = []
    for j, th in enumerate(thetas):
        state, leak, ok = rsp_invoke(rsp, th, receiver.wants_leak, rng)
        qubits.append(state)
        valid &= ok
        if leak is not None:
            leaks[j] = leak
            view.append(("leak", j, leak.k))
    t = receiver.receive(qubits, leaks)
    if len(t) != N - 1 or any(x not in (0, 1) for x in t):
        raise ValueError(f"receiver must return {N - 1} outcome bits, got {t!r}")
    view.append(("t", tuple(int(x) for x in t)))
    theta_prime = merge_theta(thetas, t)
    b = int(rng.integers(2))
    corr = correction_angle(theta, theta_prime, b)
    view.append(("correction", b, corr.k))
    receiver.correct(b, corr)
    return PluggedRun(N, thetas, [int(x) for x in t], b, theta_prime, corr,
                      frozenset(leaks), receiver.final_state(), valid, view)


def run_noisy_tradeoff(theta: Angle, kappa: int, p_noise: float, p_leak: float, trials: int,
                       rng: np.random.Generator) -> dict:
    """Valid-output and merged-leak rates of the merge over NoisyLeaky resources."""
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    rsp = ResourceModel.noisy_leaky(p_noise, p_leak)
    valid = leaked = 0
    for _ in range(trials):
        run = run_plugged_rsp(theta, kappa, rsp, LeakReconstructingReceiver(rng), rng)
        valid += run.valid
        leaked += run.merged_leak
    return {
        "valid_rate": valid / trials,
        "merged_leak_rate": leaked / trials,
        "trials": trials,
        "expected_valid_rate": (1 - p_noise) ** kappa,
        "expected_merged_leak_rate": p_leak ** kappa,
    }


def tradeoff_bounds(p_noise: float, p_leak: float, c: float) -> dict:
    """Largest kappa keeping validity above c, and the leak floor it implies.

    kappa < log(c) / log(1 - p_noise); at that kappa the merged leak
    probability p_leak^kappa equals c^{1 / log_{p_leak}(1 - p_noise)}.
    """
    for name, v in (("p_noise", p_noise), ("p_leak", p_leak)):
        if not 0 < v < 0.5:
            raise ValueError(f"{name} must lie in the open interval (0, 1/2), got {v}")
    if not 0 < c < 1:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    kappa_max = math.log(c) / math.log(1 - p_noise)
    exponent = math.log(p_leak) / math.log(1 - p_noise)
    return {"kappa_max": kappa_max, "exponent": exponent, "eps_sec_lower": c ** exponent}


# ---------------------------------------------------------------------------
# ideal-world view used by the security sanity check

def ideal_world_plugged(theta: Angle, N: int, p_leak: float, receiver: PluggedReceiver,
                        rng: np.random.Generator) -> PluggedRun:
    """Receiver's view when the merge is replaced by one resource leaking with
    probability p_leak^N, plus a simulated sender.

    Without the merged leak the simulated sender never learns theta: it hides
    the genuine |+_theta> at a non-leaked index s as Z(theta_s) X^{b_s}|+_theta>
    and answers with (t_s xor b_s, -theta') computed with t_N = 0.
    """
    theta = Angle(theta)
    want = receiver.wants_leak
    merged = want and rng.random() < p_leak ** N
    if merged:
        return run_plugged_rsp(theta, N, ResourceModel.leaky(1.0), receiver, rng)
    while True:
        coins = [bool(want and rng.random() < p_leak) for _ in range(N)]
        if not all(coins) or not want:
            break
    free = [j for j in range(N) if not coins[j]]
    s = free[int(rng.integers(len(free)))]
    thetas = [sample_uniform_angle(rng) for _ in range(N)]
    b_s = int(rng.integers(2))
    qubits, leaks, view = [], {}, []
    for j in range(N):
        if j == s:
            q = plus_state(theta)
            if b_s:
                q = PAULI["X"] @ q
            qubits.append(zrot_matrix(thetas[j]) @ q)
        else:
            qubits.append(plus_state(thetas[j]))
        if coins[j]:
            leaks[j] = thetas[j]
            view.append(("leak", j, thetas[j].k))
    t = receiver.receive(qubits, leaks)
    if len(t) != N - 1:
        raise ValueError(f"receiver must return {N - 1} outcome bits")
    view.append(("t", tuple(int(x) for x in t)))
    t_ext = list(t) + [0]
    theta_prime = angle_sum(th.signed(tj) for th, tj in zip(thetas, t_ext))
    b = t_ext[s] ^ b_s
    corr = -theta_prime
    view.append(("correction", b, corr.k))
    receiver.correct(b, corr)
    return PluggedRun(N, thetas, [int(x) for x in t], b, theta_prime, corr,
                      frozenset(leaks), receiver.final_state(), 1, view)
