import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdqcsim.core import ALL_ANGLES, Angle, Seed
from sdqcsim.plugged_rsp import (HonestReceiver, LeakReconstructingReceiver, correction_angle,
                                 ideal_world_plugged, merge_theta, run_noisy_tradeoff, run_plugged_rsp,
                                 tradeoff_bounds)
from sdqcsim.resources import ResourceModel


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_every_branch_has_fidelity_one(N):
    for theta in ALL_ANGLES:
        for t in itertools.product((0, 1), repeat=N - 1):
            for seed in range(3):
                run = run_plugged_rsp(theta, N, ResourceModel.ideal(), HonestReceiver(forced_t=t),
                                      np.random.default_rng(seed))
                assert run.t == list(t)
                assert run.fidelity_with(theta) >= 1 - 1e-10


@given(st.lists(st.integers(0, 7), min_size=1, max_size=6), st.data())
def test_merge_closed(ks, data):
    t = data.draw(st.lists(st.integers(0, 1), min_size=len(ks) - 1, max_size=len(ks) - 1))
    th = merge_theta([Angle(k) for k in ks], t)
    assert th.k == (ks[-1] + sum((-1) ** tj * k for tj, k in zip(t, ks))) % 8
    assert 0 <= correction_angle(Angle(3), th, 1).k < 8


def test_merge_argument_checks():
    with pytest.raises(ValueError):
        merge_theta([Angle(1), Angle(2)], [])
    with pytest.raises(ValueError):
        run_plugged_rsp(Angle(0), 0, ResourceModel.ideal(), HonestReceiver(), np.random.default_rng(0))


def test_theta_visible_only_on_merged_leak():
    rsp = ResourceModel.leaky(0.6)
    for i in range(3000):
        rng = Seed(8).child(i).rng()
        rec = LeakReconstructingReceiver(rng)
        run = run_plugged_rsp(Angle(5), 3, rsp, rec, rng)
        assert run.merged_leak == (run.leaked_indices == frozenset(range(3)))
        if run.merged_leak:
            assert rec.reconstructed == Angle(5)
        else:
            assert rec.reconstructed is None


def test_noisy_valid_rate():
    r = run_noisy_tradeoff(Angle(1), 5, 0.1, 0.2, 4000, np.random.default_rng(2))
    ev = 0.9**5
    assert abs(r["valid_rate"] - ev) < 5 * np.sqrt(ev * (1 - ev) / 4000)


def test_tradeoff_bounds_closed_form():
    b = tradeoff_bounds(0.1, 0.1, 0.5)
    assert b["kappa_max"] == pytest.approx(np.log(0.5) / np.log(0.9))
    assert b["eps_sec_lower"] == pytest.approx(0.1 ** b["kappa_max"])
    with pytest.raises(ValueError):
        tradeoff_bounds(0.6, 0.1, 0.5)


def _view(run, rec):
    return (tuple(run.t), run.b, run.correction.k, rec.reconstructed is not None)


def test_real_and_simulated_views_match():
    # observable tuples of the real merge and of the simulated one
    n, N, p = 20000, 2, 0.5
    real, ideal = Counter(), Counter()
    for i in range(n):
        rng = Seed(21).child(i).rng()
        rec = LeakReconstructingReceiver(rng)
        real[_view(run_plugged_rsp(Angle(3), N, ResourceModel.leaky(p), rec, rng), rec)] += 1
        rng = Seed(22).child(i).rng()
        rec = LeakReconstructingReceiver(rng)
        ideal[_view(ideal_world_plugged(Angle(3), N, p, rec, rng), rec)] += 1
    keys = set(real) | set(ideal)
    chi2 = sum((real[k] - ideal[k]) ** 2 / (real[k] + ideal[k]) for k in keys)
    dof = len(keys) - 1
    assert chi2 < dof + 5 * np.sqrt(2 * dof)
