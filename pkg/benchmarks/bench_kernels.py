"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--qubits 15 18 20] [--trials 20000]

Times single-qubit gates, CZ and projective measurement on large registers,
and the exRec classifier inside a threshold Monte Carlo. Both backends are
run on identical inputs and their results are checked for agreement.
"""

import argparse
import time

import numpy as np

from sdqcsim import _kernels
from sdqcsim.ftanalysis import SMALL_SHAPE, DEFAULT_SHAPE, exrec_bad_sparse, sample_positions


def best_of(fn, repeat=3):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def bench_gates(kern, n, reps):
    rng = np.random.default_rng(0)
    psi0 = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    psi0 /= np.linalg.norm(psi0)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

    def run():
        psi = psi0.copy()
        for i in range(reps):
            kern.apply_1q(psi, n, i % n, h)
            kern.apply_cz(psi, n, i % n, (i + 1) % n)
        p = kern.prob_one(psi, n, 0)
        return psi, p

    return best_of(run)


def bench_exrec(kern, shape, k, p_c, trials):
    rng = np.random.default_rng(1)
    samples = [sample_positions(shape, k, p_c, rng) for _ in range(trials)]

    def run():
        return sum(s.shape[0] >= 2 and exrec_bad_sparse(shape, k, s, kern) for s in samples)

    return best_of(run)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, nargs="+", default=[15, 18, 20])
    ap.add_argument("--reps", type=int, default=40)
    ap.add_argument("--trials", type=int, default=20000)
    args = ap.parse_args()

    backends = [_kernels.select_backend("numpy")]
    if _kernels.numba_kernels is not None:
        backends.append(_kernels.select_backend("numba"))
        # compile outside the timed region
        bench_gates(backends[1], 4, 2)
        bench_exrec(backends[1], SMALL_SHAPE, 2, 0.05, 10)

    print(f"{'benchmark':38s}" + "".join(f"{b.name:>12s}" for b in backends) + f"{'speedup':>10s}")
    for n in args.qubits:
        res = [bench_gates(b, n, args.reps) for b in backends]
        if len(res) == 2:
            assert np.allclose(res[0][1][0], res[1][1][0], atol=1e-10)
        row = f"{f'{args.reps} H+CZ pairs, {n} qubits':38s}" + "".join(f"{t:11.3f}s" for t, _ in res)
        print(row + (f"{res[0][0] / res[1][0]:9.1f}x" if len(res) == 2 else ""))
    for shape, k, label in [(SMALL_SHAPE, 3, "small"), (DEFAULT_SHAPE, 2, "default")]:
        p_c = shape.p0 / 2 if label == "default" else 0.05
        res = [bench_exrec(b, shape, k, p_c, args.trials) for b in backends]
        if len(res) == 2:
            assert res[0][1] == res[1][1]
        row = f"{f'exRec k={k} {label} shape, {args.trials} trials':38s}" + "".join(f"{t:11.3f}s" for t, _ in res)
        print(row + (f"{res[0][0] / res[1][0]:9.1f}x" if len(res) == 2 else ""))


if __name__ == "__main__":
    main()
