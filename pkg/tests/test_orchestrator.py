from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import pattern
from sdqcsim.core import Seed
from sdqcsim.mbqc import HonestProver, Pattern, Transcript, line_graph, run_blinded_round
from sdqcsim.orchestrator import (ConstantZProver, FunctionProver, LeakAdaptiveProver, RandomZProver,
                                  RunPlan, check_admissibility, decide, majority, make_prover,
                                  per_round_rejection, reference_output, rejection_probability_constant_z,
                                  run_dummyless_sdqc, run_ft_sdqc_level1, run_leak_tolerant_sdqc)
from sdqcsim.resources import ResourceModel
from sdqcsim.traps import enumerate_tests, run_test_round


def test_decide_exhaustive():
    for w in range(12):
        for x in range(12):
            assert decide(x, w) == (1 if x < w else 0)


def test_majority_ties_to_zero():
    assert majority([(1, 0), (1, 1), (0, 1)]) == (1, 1)
    assert majority([(1, 0), (0, 1)]) == (0, 0)
    assert majority([], 3) == (0, 0, 0)


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=9))
def test_majority_bitwise(outs):
    m = majority(outs)
    for j in range(2):
        ones = sum(o[j] for o in outs)
        assert m[j] == int(2 * ones > len(outs))


def test_plan_validation_and_default():
    assert RunPlan.default() == RunPlan(100, 50, 5)
    with pytest.raises(ValueError):
        RunPlan(10, 11, 1)
    with pytest.raises(ValueError):
        RunPlan(10, 2, 1, C=(0, 0))
    assert RunPlan(10, 2, 1, C=(3, 7)).computation_rounds(np.random.default_rng(0)) == {3, 7}


def test_admissibility_verbatim_sign():
    adm = check_admissibility(RunPlan(100, 50, 5), 0.25)
    assert adm.coefficient == pytest.approx(-0.5)
    assert adm.bound == pytest.approx(-18.75)
    assert adm.negative_coefficient and not adm.ok
    assert check_admissibility(RunPlan(100, 50, 5), 0.25, c=0.25).ok


@pytest.mark.parametrize("files", [("c4.edges", "id.angles"), ("line3.edges", "quarter.angles")])
def test_honest_accepts_with_reference_output(files):
    pat = pattern(*files)
    tests = enumerate_tests(pat.graph)
    ref = reference_output(pat)
    for i in range(3):
        s = Seed(30).child(i)
        out = run_dummyless_sdqc(pat, RunPlan(30, 15, 2), tests, ResourceModel.ideal(),
                                 HonestProver(s.child(2).rng()), s.child(0).rng(), s.child(1).rng())
        assert out.accepted == 1 and out.failed_tests == 0 and out.output == ref


def test_random_z_at_rate_zero_is_honest():
    pat = pattern("c4.edges", "id.angles")
    tests = enumerate_tests(pat.graph)
    s = Seed(4)
    runs = []
    for prover in (HonestProver(s.child(2).rng()), RandomZProver(s.child(2).rng(), 0.0)):
        out = run_dummyless_sdqc(pat, RunPlan(10, 5, 2), tests, ResourceModel.ideal(), prover,
                                 s.child(0).rng(), s.child(1).rng())
        runs.append(out.transcript.dumps())
    assert runs[0] == runs[1]


def test_constant_z_rejection_matches_binomial():
    pat = pattern("c4.edges", "id.angles")
    tests = enumerate_tests(pat.graph)
    plan = RunPlan(12, 6, 2)
    support = (1,)
    q = per_round_rejection(tests, support)
    assert q == pytest.approx(5 / 7)  # vertex 1 lies in five of the seven C4 tests
    expect = rejection_probability_constant_z(plan, tests, support)
    n = 150
    rej = 0
    for i in range(n):
        s = Seed(77).child(i)
        out = run_dummyless_sdqc(pat, plan, tests, ResourceModel.ideal(),
                                 ConstantZProver(s.child(2).rng(), support), s.child(0).rng())
        rej += 1 - out.accepted
    assert abs(rej / n - expect) < 5 * np.sqrt(expect * (1 - expect) / n) + 1e-9


def test_violation_counts_as_failed_round():
    pat = pattern("line2.edges")
    tests = enumerate_tests(pat.graph)
    liar = FunctionProver(np.random.default_rng(0), lambda p, v, d: 2)
    out = run_dummyless_sdqc(pat, RunPlan(6, 3, 10), tests, ResourceModel.ideal(), liar,
                             np.random.default_rng(1))
    assert out.failed_tests == 6 and out.accepted == 1 and out.computation_outputs == []


def test_round_type_hiding():
    # a test round and a computation round at the test's angles look the same to the prover
    g = line_graph(3)
    tests = enumerate_tests(g)
    test = max(tests.tests, key=lambda t: len(t.W))
    assert test.W == frozenset(g.vertices)
    pat = Pattern.build(g, {v: test.effective_angle(v) for v in g.vertices})
    n = 12000
    sup_rng = np.random.default_rng(0)
    from sdqcsim.mbqc import direct_supplier
    seen = [Counter(), Counter()]
    for i in range(n):
        for kind in (0, 1):
            rng = Seed(40 + kind).child(i).rng()
            tr = Transcript()
            prover = HonestProver(rng)
            supply = direct_supplier(ResourceModel.ideal(), sup_rng)
            if kind == 0:
                run_test_round(g, test, None, prover, rng, transcript=tr, order=pat.order, supply=supply)
            else:
                run_blinded_round(g, pat.order, pat.corrected_angle, supply, prover, rng, tr)
            seen[kind][tuple(m.payload for m in tr.of_kind("delta"))] += 1
    keys = set(seen[0]) | set(seen[1])
    chi2 = sum((seen[0][k] - seen[1][k]) ** 2 / (seen[0][k] + seen[1][k]) for k in keys)
    dof = len(keys) - 1
    assert chi2 < dof + 5 * np.sqrt(2 * dof)


def test_leak_adaptive_breaks_unplugged_protocol():
    pat = pattern("line3.edges", "quarter.angles")
    tests = enumerate_tests(pat.graph)
    ref = reference_output(pat)
    for i in range(5):
        s = Seed(50).child(i)
        out = run_leak_tolerant_sdqc(pat, RunPlan(20, 10, 3), tests, 1, 1.0,
                                     LeakAdaptiveProver(s.child(2).rng()), s.child(0).rng(), s.child(1).rng())
        assert out.accepted == 1 and out.wrong(ref)


def test_plugged_honest_and_ft_level1_accept():
    pat = pattern("line3.edges", "quarter.angles")
    tests = enumerate_tests(pat.graph)
    ref = reference_output(pat)
    s = Seed(60)
    out = run_leak_tolerant_sdqc(pat, RunPlan(6, 3, 1), tests, 4, 0.5, HonestProver(s.child(2).rng()),
                                 s.child(0).rng(), s.child(1).rng())
    assert out.accepted and out.output == ref
    out = run_ft_sdqc_level1(pat, RunPlan(2, 1, 1), tests, 0.0, HonestProver(s.child(2).rng()),
                             s.child(0).rng(), s.child(1).rng())
    assert out.accepted and out.output == ref


def test_make_prover_tags():
    rng = np.random.default_rng(0)
    assert isinstance(make_prover("LeakAdaptive", rng), LeakAdaptiveProver)
    with pytest.raises(ValueError):
        make_prover("sneaky", rng)
