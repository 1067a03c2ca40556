import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdqcsim import _kernels
from sdqcsim.core import Seed
from sdqcsim.ftanalysis import (DEFAULT_SHAPE, SMALL_SHAPE, ExRecSample, GadgetShape, VacuousBound,
                                budget_rsp_error, budget_sdqc_error, classify_level1, classify_recursive,
                                exact_level1_bad, exrec_bad_sparse, ft_overhead, doubly_exp_bound,
                                mc_bad_probability, required_level, sample_exrec)


def test_shape_counts_frozen():
    assert DEFAULT_SHAPE.total == 180 and DEFAULT_SHAPE.saferec == 130
    assert DEFAULT_SHAPE.pairs == 16110
    assert SMALL_SHAPE.total == 9 and SMALL_SHAPE.pairs == 36
    assert [SMALL_SHAPE.reach(m) for m in (1, 2, 3)] == [9, 65, 457]
    with pytest.raises(ValueError):
        GadgetShape(0, 5)


def test_level1_classification():
    assert classify_level1([0, 1, 0]) == "good"
    assert classify_level1([1, 1, 0]) == "bad"


@pytest.mark.parametrize("backend", ["numpy", "numba"])
@pytest.mark.parametrize("k", [2, 3])
def test_sparse_kernel_agrees_with_tree(backend, k):
    kern = _kernels.select_backend(backend)
    rng = np.random.default_rng(k)
    p = 0.08 if k == 2 else 0.03
    for _ in range(300):
        s = sample_exrec(SMALL_SHAPE, k, p, rng)
        pos = np.flatnonzero(s.bits)
        assert exrec_bad_sparse(SMALL_SHAPE, k, pos, kern) == (classify_recursive(s) == "bad")


def test_adjacent_children_sharing_one_ec():
    # two compromised leaves in the EC shared by children 0 and 1 make both
    # children bad but not independently, so the level-2 exRec stays good
    shape = SMALL_SHAPE
    bits = np.zeros(shape.reach(2), dtype=np.uint8)
    first = ExRecSample(shape, 2, bits).children()
    span0 = shape.reach(1)
    # the shared EC is the last locations_ec leaves of child 0
    bits[span0 - 2:span0] = 1
    s = ExRecSample(shape, 2, bits)
    kids = s.children()
    assert classify_recursive(kids[0]) == "bad" and classify_recursive(kids[1]) == "bad"
    assert classify_recursive(s) == "good"
    assert len(first) == shape.total


@given(st.floats(0.001, 0.2))
def test_exact_level1_formula(p):
    n = SMALL_SHAPE.total
    direct = sum(math.comb(n, j) * p**j * (1 - p) ** (n - j) for j in range(2, n + 1))
    assert exact_level1_bad(SMALL_SHAPE, p) == pytest.approx(direct)


@pytest.mark.parametrize("p_c", [0.01, 0.05, 0.1])
def test_mc_matches_exact_at_level1(p_c):
    r = mc_bad_probability(SMALL_SHAPE, p_c, 1, 20000, Seed(1).rng())
    exact = exact_level1_bad(SMALL_SHAPE, p_c)
    assert abs(r["estimate"] - exact) <= 3 * math.sqrt(exact * (1 - exact) / 20000)


def test_monotone_in_p_c():
    # common random numbers: the same uniforms thresholded at increasing p_c
    rng = np.random.default_rng(4)
    u = rng.random((3000, SMALL_SHAPE.reach(2)))
    prev = -1
    for p in (0.01, 0.03, 0.06, 0.1):
        bad = sum(exrec_bad_sparse(SMALL_SHAPE, 2, np.flatnonzero(row < p)) for row in u)
        assert bad >= prev
        prev = bad


def test_record_collects_classifications():
    rec = []
    mc_bad_probability(SMALL_SHAPE, 0.1, 1, 50, np.random.default_rng(0), record=rec)
    assert len(rec) == 50 and {c for _, c in rec} <= {"good", "bad"}


def test_budget_closed_forms():
    assert budget_rsp_error(1, 0.001, 0.01) == pytest.approx(4 * 0.01 * 0.1**2)
    assert budget_sdqc_error(100, 9, 3, 0.001, 0.01, 1e-6) == pytest.approx(1e-6 + 900 * 4e-10)
    with pytest.raises(VacuousBound):
        budget_rsp_error(2, 0.02, 0.01)
    assert doubly_exp_bound(SMALL_SHAPE, SMALL_SHAPE.p0 / 4, 2) == pytest.approx(SMALL_SHAPE.p0 / 4**4)


@given(st.integers(1, 10**4), st.integers(1, 50), st.floats(0.01, 0.9), st.floats(1e-12, 1e-2))
def test_required_level_is_least(N, V, ratio, eta):
    p0 = 1e-3
    k = required_level(N, V, ratio * p0, p0, eta)
    assert budget_sdqc_error(N, V, k, ratio * p0, p0, eta) <= 2 * eta
    if k > 1:
        assert N * V * budget_rsp_error(k - 1, ratio * p0, p0) > eta


def test_ft_overhead_worked_example():
    r = ft_overhead(1e3, 10, 2, 2, 1e-2, 1e-3, 1e-6)
    assert r["k_min"] == 3
    assert r["two_pow_k_needed"] == pytest.approx(7.30103, abs=1e-5)
    assert r["L_star"] == pytest.approx(1e3 * math.log(1e3))
    # tighter delta needs more levels
    assert ft_overhead(1e3, 10, 2, 2, 1e-2, 1e-3, 1e-30)["k_min"] > 3
    with pytest.raises(ValueError):
        ft_overhead(10, 1, 2, 2, 1e-3, 1e-2, 1e-6)
