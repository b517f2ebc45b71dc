from fractions import Fraction as F

import pytest

from qif.collateral import channel_of
from qif.dsl import compile_source, demos
from qif.errors import DomainError
from qif.hmm import denote, identity_hmm, pure_channel
from qif.measures import GainFunction, gid, hyper_vulnerability
from qif.prob import Dist, Hyper, StochMatrix, hyper_of, project_hyper
from qif.refine import (
    BARYCENTER_MISMATCH,
    FAILS_GAIN,
    HOLDS,
    NO_WITNESS,
    bayes_refutation,
    check_witness,
    counterexample_gain,
    dalenius_correlation,
    dalenius_normalizer,
    hmm_hyper,
    refine_hmm,
    refine_hyper,
    refine_structural,
    separates,
    transfer_identity_holds,
)

XS = ("A", "B", "C")
half, third = F(1, 2), F(1, 3)
OTHER = StochMatrix(XS, XS, [[0, half, half], [half, 0, half], [half, half, 0]])
LAX = compile_source(demos.LAX)
STRICT = compile_source(demos.STRICT)


def test_strict_is_refined_by_lax_on_the_initial_state():
    v = refine_hmm(STRICT.to_hmm(), LAX.to_hmm(), view="initial")
    assert v.holds and v.reason == HOLDS
    d1 = hmm_hyper(STRICT.to_hmm(), Dist.uniform(XS), "initial")
    d2 = hmm_hyper(LAX.to_hmm(), Dist.uniform(XS), "initial")
    assert check_witness(d1, d2, v.witness)
    # the point hyper takes every inner of the skewed one, in proportion
    assert all(len(row) == 1 for row in v.witness)


def test_lax_is_not_refined_by_strict():
    v = refine_hmm(LAX.to_hmm(), STRICT.to_hmm(), view="initial")
    assert not v.holds and v.reason == FAILS_GAIN
    d1 = hmm_hyper(LAX.to_hmm(), Dist.uniform(XS), "initial")
    d2 = hmm_hyper(STRICT.to_hmm(), Dist.uniform(XS), "initial")
    assert separates(v.counterexample, d1, d2)
    assert v.counterexample.nonnegative
    assert v.vulnerabilities == (hyper_vulnerability(v.counterexample, d1), hyper_vulnerability(v.counterexample, d2))


def test_joint_view_sees_different_final_states():
    v = refine_hmm(STRICT.to_hmm(), LAX.to_hmm(), view="joint")
    assert v.reason == BARYCENTER_MISMATCH
    assert "average" in v.note
    with pytest.raises(ValueError):
        refine_hmm(STRICT.to_hmm(), LAX.to_hmm(), view="sideways")


def test_self_refinement():
    d = hyper_of(Dist.uniform(XS), OTHER)
    v = refine_hyper(d, d)
    assert v.holds and check_witness(d, d, v.witness)
    with pytest.raises(ValueError):
        counterexample_gain(d, d)


def test_witness_checker_rejects_bad_splits():
    d = hyper_of(Dist.uniform(XS), OTHER)
    point = Hyper.point(Dist.uniform(XS))
    assert check_witness(d, point, [[third], [third], [third]])
    assert not check_witness(d, point, [[half], [third], [F(1, 6)]])
    assert not check_witness(d, point, [[third, 0], [third], [third]])


def test_different_domains_are_rejected():
    with pytest.raises(DomainError):
        refine_hyper(Hyper.point(Dist.uniform(XS)), Hyper.point(Dist.uniform(("A",))))


def test_structural_refinement():
    h = pure_channel(OTHER)
    v = refine_structural(h, identity_hmm(XS))
    assert v.holds and v.witness == ((1,), (1,), (1,))
    fails = refine_structural(identity_hmm(XS), h)
    assert not fails.holds and fails.reason == FAILS_GAIN
    # Strict and Lax differ in their final states, which no relabelling of observations fixes
    undecided = refine_structural(STRICT.to_hmm(), LAX.to_hmm())
    assert not undecided.holds and undecided.reason in (BARYCENTER_MISMATCH, NO_WITNESS)


def test_dalenius_correlation():
    g = GainFunction(["w0", "w1"], XS, [[2, 0, 0], [1, 1, 0]])
    prior = Dist.uniform(XS)
    assert dalenius_normalizer(g, prior) == F(4, 3)
    corr = dalenius_correlation(g, prior)
    assert corr.z_domain == ("w0", "w1")
    assert corr.joint.entry("w0", "A") == half
    assert corr.joint.entry("w1", "B") == F(1, 4)
    assert transfer_identity_holds(g, prior, OTHER)


def collateral_bayes(joint, chan):
    """Direct sum over observations of the best joint mass for a guess of Z."""
    d, c = joint.dense(), chan.dense()
    total = F(0)
    for y in range(len(chan.cols)):
        total += max(sum(d[z][x] * c[x][y] for x in range(len(chan.rows))) for z in range(len(joint.rows)))
    return total


def test_bayes_refutation_of_password_programs():
    r = bayes_refutation(LAX, STRICT)
    assert r.refuted
    assert r.bayes_first < r.bayes_second
    assert r.bayes_first == collateral_bayes(r.correlation.joint, channel_of(LAX))
    assert r.bayes_second == collateral_bayes(r.correlation.joint, channel_of(STRICT))
    payload = r.to_jsonable()
    assert payload["refuted"] and "correlation" in payload and "gain" in payload
    assert not bayes_refutation(STRICT, LAX).refuted
    assert not bayes_refutation(STRICT, STRICT).refuted


def test_initial_projection_order_on_passwords():
    u = Dist.uniform(XS)
    strict = project_hyper(denote(STRICT.to_hmm(), u), "initial")
    assert hyper_vulnerability(gid(XS), strict) == half
