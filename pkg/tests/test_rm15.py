import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdqcsim import rm15
from sdqcsim.core import ALL_ANGLES, Angle, Seed
from sdqcsim.resources import CompromisedOpModel, LeakOnlyAdversary, LeakRecord, PauliAdversary
from sdqcsim.sv import PAULI, StateVector, fidelity, plus_state

angles = st.integers(0, 7).map(Angle)


def overlap(rho, vec):
    return float(np.real(np.vdot(vec, rho @ vec)))


def test_generators():
    c = rm15.code()
    assert len(c.x_generators) == 4 and len(c.z_generators) == 10
    assert rm15.gf2_rank(list(c.x_generators)) == 4 and rm15.gf2_rank(list(c.z_generators)) == 10
    for x in c.x_generators:
        for z in c.z_generators:
            assert bin(x & z).count("1") % 2 == 0
    assert bin(c.logical_x & c.logical_z).count("1") % 2 == 1
    assert c.distance == 3
    table = c.to_table().splitlines()
    assert len(table) == 14 and all(len(row) == 15 and set(row) <= set("IXZ") for row in table)


def test_transversal_sign_frozen():
    assert rm15.transversal_sign() == -1


def test_codewords_have_trivial_syndrome():
    sv = rm15.encode_logical_plus(Angle(3))
    assert np.allclose(rm15.stabilizer_expectations(sv), 1, atol=1e-10)
    assert rm15.syndrome_distribution(sv) == pytest.approx({"0" * 14: 1.0})
    assert sv.expectation("X" * 15) == pytest.approx(np.cos(3 * np.pi / 4), abs=1e-10)


@given(angles, angles)
def test_transversal_rotation_preserves_codespace(a, b):
    sv = rm15.encode_logical_plus(a)
    rm15.transversal_zrot(sv, b)
    assert np.allclose(rm15.stabilizer_expectations(sv), 1, atol=1e-10)
    assert overlap(rm15.logical_state(sv), plus_state(a + b)) == pytest.approx(1, abs=1e-10)
    # raw physical Z(b) on every qubit acts as Z_L(-b)
    raw = rm15.encode_logical_plus(a)
    for q in range(15):
        raw.zrot(q, b)
    assert overlap(rm15.logical_state(raw), plus_state(a - b)) == pytest.approx(1, abs=1e-10)


def test_decoder_roundtrip():
    rng = np.random.default_rng(0)
    for _ in range(3):
        logical = rng.normal(size=2) + 1j * rng.normal(size=2)
        logical /= np.linalg.norm(logical)
        s = rm15.Syndrome.from_index(int(rng.integers(1 << 14)))
        sv = rm15.encode(logical, s)
        dec = rm15.decode(sv)
        assert dec.shape == (2, 1 << 14)
        assert np.allclose(dec[:, s.index], logical, atol=1e-12)
        assert np.abs(dec).sum() == pytest.approx(np.abs(logical).sum())


def test_single_x_syndrome_frozen():
    sv = rm15.encode_logical_plus()
    sv.apply("X", 0)
    assert rm15.syndrome_distribution(sv) == pytest.approx({"00001000000000": 1.0})
    rm15.transversal_zrot(sv, Angle(2))
    dist = rm15.syndrome_distribution(sv)
    assert dist == pytest.approx(rm15.syndrome_distribution_projective(sv))
    assert "10001000000000" in dist


@pytest.mark.parametrize("q", [0, 6, 14])
@pytest.mark.parametrize("pauli", ["X", "Y", "Z"])
def test_single_error_corrected(q, pauli):
    sv = rm15.encode_logical_plus(Angle(1))
    ref = sv.amplitudes.copy()
    sv.apply(pauli, q)
    fixed = rm15.correct_single_error(sv, np.random.default_rng(0))
    assert abs(np.vdot(ref, fixed.amplitudes)) == pytest.approx(1, abs=1e-10)


def test_projector_idempotent_on_codewords():
    sv = rm15.encode_logical_plus(Angle(5))
    out = rm15.correct_single_error(sv.copy(), np.random.default_rng(0))
    assert np.allclose(out.amplitudes, sv.amplitudes, atol=1e-12)


def test_syndrome_measurement_order_independent():
    sv = rm15.encode_logical_plus()
    sv.apply("X", 2)
    rm15.transversal_zrot(sv, Angle(1))
    base = rm15.syndrome_distribution_projective(sv)
    rng = np.random.default_rng(3)
    for _ in range(3):
        order = list(rng.permutation(14))
        other = rm15.syndrome_distribution_projective(sv, order)
        assert set(base) == set(other)
        for k in base:
            assert other[k] == pytest.approx(base[k], abs=1e-12)


def test_syndrome_bits_roundtrip():
    for i in (0, 1, 1023, 1024, 16383):
        s = rm15.Syndrome.from_index(i)
        assert rm15.Syndrome.from_bits(s.bits) == s and s.index == i
    assert rm15.Syndrome(0, 0).is_trivial()


@given(angles, st.integers(0, 2**32 - 1))
def test_safe_split_sums_to_theta(theta, seed):
    plan = rm15.SafeRotationPlan.sample(theta, np.random.default_rng(seed))
    assert len(plan.alphas) == 15
    assert all(a + b == theta for a, b in zip(plan.alphas, plan.betas))


def test_single_location_leak_is_uniform():
    # each split parameter alone is uniform whatever theta is
    rng = np.random.default_rng(9)
    for theta in (Angle(0), Angle(3)):
        counts = np.zeros((2, 8))
        for _ in range(4000):
            plan = rm15.SafeRotationPlan.sample(theta, rng)
            counts[0, plan.alphas[4].k] += 1
            counts[1, plan.betas[4].k] += 1
        chi2 = ((counts - 500) ** 2 / 500).sum(axis=1)
        assert (chi2 < 7 + 5 * np.sqrt(14)).all()


def test_safe_zrot_is_accurate():
    sv = rm15.encode_logical_plus()
    rec = LeakRecord()
    sv, rec, plan = rm15.safe_zrot(sv, Angle(3), CompromisedOpModel(0.0), LeakOnlyAdversary(),
                                   np.random.default_rng(0), rec)
    assert len(rec) == 0
    assert overlap(rm15.logical_state(sv), plus_state(Angle(3))) == pytest.approx(1, abs=1e-10)


def test_unsafe_attack_demo():
    demo = rm15.attack_demo_theta_leak(0)
    assert demo["tvd_table"][0, 2] == pytest.approx(1.0)
    assert demo["ml_accuracy"] == pytest.approx(0.25)


def test_safe_attack_hides_theta():
    exp = rm15.safe_attack_experiment(0, "prep")
    assert exp["tvd_table"].max() <= 1e-8
    assert exp["ml_accuracy"] == pytest.approx(1 / 8)


def test_single_compromise_accurate_and_private():
    res = rm15.accuracy_and_privacy([("alpha", 3)], PauliAdversary("Y"), thetas=ALL_ANGLES[:3])
    assert res["accuracy_ok"] and res["privacy_ok"]
    assert res["privacy_distance"] <= 1e-8


def test_two_locations_break_privacy():
    res = rm15.accuracy_and_privacy([("alpha", 3), ("beta", 3)], LeakOnlyAdversary(), thetas=ALL_ANGLES[:3])
    assert not res["privacy_ok"]


def test_level1_run_good_and_bad():
    run = rm15.level1_safe_rsp(Angle(2), 0.0, PauliAdversary("X"), Seed(1).rng(), check=True)
    assert run.good and run.accuracy_ok and run.privacy_ok and run.compromised == []
    run = rm15.level1_safe_rsp(Angle(2), 0.0, LeakOnlyAdversary(), Seed(1).rng(),
                               forced=[("alpha", 0), ("beta", 0)])
    assert not run.good and run.reconstructed_theta() == Angle(2)


def test_unsafe_guessing_succeeds():
    g = rm15.guessing_trials(40, np.random.default_rng(2), safe=False, location="rot")
    assert g["accuracy"] == 1.0
