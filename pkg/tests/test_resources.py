import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdqcsim.core import Angle, Seed
from sdqcsim.mbqc import HonestProver, run_ubqc
from sdqcsim.resources import (AdversaryError, CompromisedOpModel, FunctionAdversary, LeakOnlyAdversary,
                               LeakRecord, PauliAdversary, ResourceModel, compromise_coins,
                               compromised_apply, rsp_invoke, stochastic_to_ideal_error)
from sdqcsim.sv import StateVector, fidelity, plus_state
from conftest import pattern


def test_model_validation():
    with pytest.raises(ValueError):
        ResourceModel.leaky(1.5)
    with pytest.raises(ValueError):
        ResourceModel("Ideal", p_leak=0.1)
    with pytest.raises(ValueError):
        CompromisedOpModel(-0.1)
    with pytest.raises(NotImplementedError):
        rsp_invoke(ResourceModel.level_k(2, 0.01), Angle(0), False, np.random.default_rng(0))


@given(st.integers(0, 7), st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_leaky_emits_exact_state(k, seed, p):
    state, leak, valid = rsp_invoke(ResourceModel.leaky(p), Angle(k), True, np.random.default_rng(seed))
    assert fidelity(state, plus_state(Angle(k))) == pytest.approx(1.0, abs=1e-12)
    assert valid == 1
    assert leak is None or leak == Angle(k)


def test_unasked_leaky_is_byte_identical_to_ideal():
    pat = pattern("c4.edges", "id.angles")
    s = Seed(4)
    runs = []
    for rsp in (ResourceModel.ideal(), ResourceModel.leaky(0.9)):
        _, tr = run_ubqc(pat, rsp, HonestProver(s.child(2).rng()), s.child(0).rng(), s.child(1).rng())
        runs.append(tr.dumps())
    assert runs[0] == runs[1]


def test_leak_rate():
    rng = np.random.default_rng(1)
    n = 20000
    hits = sum(rsp_invoke(ResourceModel.leaky(0.3), Angle(1), True, rng)[1] is not None for _ in range(n))
    assert abs(hits / n - 0.3) < 5 * np.sqrt(0.21 / n)


def test_compromise_independent_across_locations():
    model = CompromisedOpModel(0.3, locations=2)
    rng = np.random.default_rng(5)
    n = 100_000
    coins = np.array([compromise_coins(model, ["a", "b"], PauliAdversary("X"), rng) for _ in range(n)], float)
    corr = np.corrcoef(coins[:, 0], coins[:, 1])[0, 1]
    assert abs(corr) < 5 / np.sqrt(n)
    assert abs(coins.mean() - 0.3) < 5 * np.sqrt(0.21 / (2 * n))


def test_compromised_apply_records_and_replaces():
    rec = LeakRecord()
    sv = StateVector.zeros(2)
    compromised_apply(CompromisedOpModel(1.0, 2), "zrot", Angle(2), sv, [0, 1], PauliAdversary("X", {("zrot", 1)}),
                      np.random.default_rng(0), rec)
    assert [(loc, lam) for _, loc, lam in rec] == [(("zrot", 1), Angle(2))]
    assert abs(sv.amplitudes[0b01]) == pytest.approx(1.0)


def test_leak_only_leaves_state():
    rec = LeakRecord()
    sv = StateVector.zeros(1).apply("H", 0)
    before = sv.amplitudes.copy()
    compromised_apply(CompromisedOpModel(1.0), "prep", Angle(5), sv, [0], LeakOnlyAdversary(),
                      np.random.default_rng(0), rec)
    assert np.allclose(before, sv.amplitudes) and rec.values_at(("prep", 0)) == [Angle(5)]


def test_non_unitary_replacement_rejected():
    adv = FunctionAdversary(lambda loc: True, lambda lam, loc, kind: np.ones((2, 2)))
    with pytest.raises(AdversaryError):
        compromised_apply(CompromisedOpModel(1.0), "idle", None, StateVector.zeros(1), [0], adv,
                          np.random.default_rng(0))


def test_no_leak_when_adversary_does_not_cheat():
    rec = LeakRecord()
    compromised_apply(CompromisedOpModel(1.0), "zrot", Angle(1), StateVector.zeros(1), [0],
                      PauliAdversary("X", locations=[]), np.random.default_rng(0), rec)
    assert len(rec) == 0


def test_stochastic_error():
    assert stochastic_to_ideal_error(0.5, 8) == pytest.approx(0.4375)
