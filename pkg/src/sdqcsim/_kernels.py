"""Hot inner loops: statevector gate kernels and the exRec classifier.

Two implementations live side by side. The numba versions are explicit loops
compiled with @njit; the numpy versions use reshaped views. The active set is
chosen once at import from SDQCSIM_BACKEND ("numba" or "numpy"); numba is the
default when it imports cleanly.

Qubit q of an n-qubit register is bit (n - 1 - q) of the amplitude index, so
qubit 0 is the leftmost tensor factor.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# numpy implementations

def _view(psi, n, q):
    # axes: (high bits, qubit q, low bits)
    return psi.reshape(1 << q, 2, 1 << (n - 1 - q))


def np_apply_1q(psi, n, q, m):
    v = _view(psi, n, q)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = m[0, 0] * a0 + m[0, 1] * a1
    v[:, 1, :] = m[1, 0] * a0 + m[1, 1] * a1


def np_apply_diag(psi, n, q, d0, d1):
    v = _view(psi, n, q)
    if d0 != 1:
        v[:, 0, :] *= d0
    v[:, 1, :] *= d1


def _pair_view(psi, n, a, b):
    lo, hi = (a, b) if a < b else (b, a)
    v = psi.reshape(1 << lo, 2, 1 << (hi - lo - 1), 2, 1 << (n - 1 - hi))
    return v, a < b


def np_apply_cz(psi, n, a, b):
    v, _ = _pair_view(psi, n, a, b)
    v[:, 1, :, 1, :] *= -1


def np_apply_cnot(psi, n, c, t):
    v, c_first = _pair_view(psi, n, c, t)
    if c_first:
        tmp = v[:, 1, :, 0, :].copy()
        v[:, 1, :, 0, :] = v[:, 1, :, 1, :]
        v[:, 1, :, 1, :] = tmp
    else:
        tmp = v[:, 0, :, 1, :].copy()
        v[:, 0, :, 1, :] = v[:, 1, :, 1, :]
        v[:, 1, :, 1, :] = tmp


def np_prob_one(psi, n, q):
    v = _view(psi, n, q)[:, 1, :]
    return float(np.vdot(v, v).real)


def np_project_out(psi, n, q, bit, norm):
    """Amplitudes of the other n-1 qubits given qubit q = bit, rescaled by 1/norm."""
    v = _view(psi, n, q)[:, bit, :]
    return (v / norm).reshape(-1)


def np_pauli_x_mask(psi, mask):
    idx = np.arange(psi.shape[0]) ^ mask
    return psi[idx]


def np_parity_signs(n, mask):
    idx = np.arange(1 << n, dtype=np.int64) & mask
    par = np.zeros_like(idx)
    while mask:
        par ^= idx & 1
        idx >>= 1
        mask >>= 1
    return 1 - 2 * par


# ---------------------------------------------------------------------------
# exRec classification (shared source, compiled or interpreted)
#
# Leaves are laid out as one contiguous chain of level-1 locations. A level-m
# exRec ending at leaf offset `end` is the chain of `nchild` consecutive
# level-(m-1) SafeRec blocks of `block[m-1]` leaves each (at level 1: the
# `nchild` leaves before `end`). Its first child reaches further left into the
# preceding block, so the whole exRec spans `reach[m]` leaves. The EC a block
# shares with its successor is its last `tail` sub-blocks (leaves at level 1).

def _make_exrec_bad(jit):
    def count(pos, lo, hi):
        return np.searchsorted(pos, hi) - np.searchsorted(pos, lo)

    if jit is not None:
        count = jit(count)

    def exrec_bad(pos, m, end, drop_tail, nchild, tail, block, reach):
        if m == 1:
            hi = end - tail if drop_tail else end
            return count(pos, end - nchild, hi) >= 2
        if count(pos, end - reach[m], end) < 2:
            return False
        size = block[m - 1]
        start = end - nchild * size
        last = nchild - tail if drop_tail else nchild
        first = -1
        for c in range(last):
            child_end = start + (c + 1) * size
            # a child touching fewer than two compromised leaves is good
            if count(pos, child_end - reach[m - 1], child_end) < 2:
                continue
            if not exrec_bad(pos, m - 1, child_end, False, nchild, tail, block, reach):
                continue
            if first < 0:
                first = c
            elif c > first + 1:
                return True
            elif exrec_bad(pos, m - 1, start + (first + 1) * size, True,
                           nchild, tail, block, reach):
                # adjacent pair sharing one EC: independent because the
                # earlier child stays bad with the shared EC removed
                return True
        return False

    if jit is not None:
        exrec_bad = jit(exrec_bad)
    return exrec_bad


_exrec_bad_py = _make_exrec_bad(None)


# ---------------------------------------------------------------------------
# numba implementations

if HAVE_NUMBA:

    @njit(cache=True)
    def nb_apply_1q(psi, n, q, m):
        shift = n - 1 - q
        stride = 1 << shift
        m00, m01, m10, m11 = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
        size = psi.shape[0]
        for base in range(0, size, 2 * stride):
            for off in range(stride):
                i0 = base + off
                i1 = i0 + stride
                a0 = psi[i0]
                a1 = psi[i1]
                psi[i0] = m00 * a0 + m01 * a1
                psi[i1] = m10 * a0 + m11 * a1

    @njit(cache=True)
    def nb_apply_diag(psi, n, q, d0, d1):
        bit = 1 << (n - 1 - q)
        for i in range(psi.shape[0]):
            if i & bit:
                psi[i] *= d1
            else:
                psi[i] *= d0

    @njit(cache=True)
    def nb_apply_cz(psi, n, a, b):
        mask = (1 << (n - 1 - a)) | (1 << (n - 1 - b))
        for i in range(psi.shape[0]):
            if i & mask == mask:
                psi[i] = -psi[i]

    @njit(cache=True)
    def nb_apply_cnot(psi, n, c, t):
        cbit = 1 << (n - 1 - c)
        tbit = 1 << (n - 1 - t)
        for i in range(psi.shape[0]):
            if (i & cbit) and not (i & tbit):
                j = i | tbit
                tmp = psi[i]
                psi[i] = psi[j]
                psi[j] = tmp

    @njit(cache=True)
    def nb_prob_one(psi, n, q):
        bit = 1 << (n - 1 - q)
        acc = 0.0
        for i in range(psi.shape[0]):
            if i & bit:
                acc += psi[i].real ** 2 + psi[i].imag ** 2
        return acc

    @njit(cache=True)
    def nb_project_out(psi, n, q, bit, norm):
        shift = n - 1 - q
        low = 1 << shift
        out = np.empty(psi.shape[0] // 2, dtype=psi.dtype)
        k = 0
        for hi in range(1 << q):
            base = (hi << (shift + 1)) | (bit << shift)
            for lo in range(low):
                out[k] = psi[base + lo] / norm
                k += 1
        return out

    @njit(cache=True)
    def nb_pauli_x_mask(psi, mask):
        out = np.empty_like(psi)
        for i in range(psi.shape[0]):
            out[i] = psi[i ^ mask]
        return out

    @njit(cache=True)
    def nb_parity_signs(n, mask):
        out = np.empty(1 << n, dtype=np.int64)
        for i in range(1 << n):
            x = i & mask
            p = 0
            while x:
                p ^= 1
                x &= x - 1
            out[i] = 1 - 2 * p
        return out

    nb_exrec_bad = _make_exrec_bad(njit)


def _exrec_bad_numpy(*args):
    return bool(_exrec_bad_py(*args))


numpy_kernels = SimpleNamespace(
    name="numpy",
    apply_1q=np_apply_1q,
    apply_diag=np_apply_diag,
    apply_cz=np_apply_cz,
    apply_cnot=np_apply_cnot,
    prob_one=np_prob_one,
    project_out=np_project_out,
    pauli_x_mask=np_pauli_x_mask,
    parity_signs=np_parity_signs,
    exrec_bad=_exrec_bad_numpy,
)

if HAVE_NUMBA:
    numba_kernels = SimpleNamespace(
        name="numba",
        apply_1q=nb_apply_1q,
        apply_diag=nb_apply_diag,
        apply_cz=nb_apply_cz,
        apply_cnot=nb_apply_cnot,
        prob_one=nb_prob_one,
        project_out=nb_project_out,
        pauli_x_mask=nb_pauli_x_mask,
        parity_signs=nb_parity_signs,
        exrec_bad=lambda *a: bool(nb_exrec_bad(*a)),
    )
else:  # pragma: no cover
    numba_kernels = None


def select_backend(name: str | None = None) -> SimpleNamespace:
    name = (name or os.environ.get("SDQCSIM_BACKEND", "numba")).strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    if name == "numba" and numba_kernels is not None:
        return numba_kernels
    return numpy_kernels


K = select_backend()
BACKEND = K.name
