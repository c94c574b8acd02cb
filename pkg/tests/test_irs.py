from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from freeirs.actions import cyclic_family, family_weights, trivial_action
from freeirs.glue import BoundaryError, GluedPoint, GluedTruncation
from freeirs.irs import (
    ClopenSet,
    EmpiricalIRS,
    StageError,
    check_invariance,
    claim3_chain,
    claim3_statistic,
    conjugate_clopen,
    invariance_sweep,
    membership_A,
    theta,
)
from freeirs.schedule import Schedule, build_schedule
from freeirs.words import IDENTITY, Word, ball, conjugate, explicit, make_s_sets, navigation_product

from oracles import stage_theta

W = Word.parse
FAM3 = cyclic_family(3)


@pytest.fixture(scope="module")
def desk():
    s = build_schedule(family_weights(FAM3), 3, 1188)
    return GluedTruncation(FAM3, s, 6)


@pytest.fixture(scope="module")
def e3(desk):
    return EmpiricalIRS(desk, 3)


def Q_for(b, t, n):
    sizes = {i: a.size for i, a in b.family.items()}
    return navigation_product(make_s_sets(t, n, b.schedule.K[n], sizes))


def test_trivial_clopen_values(e3):
    assert theta(e3, ClopenSet()) == 1
    assert theta(e3, ClopenSet.of(["1"])) == 1
    assert theta(e3, ClopenSet.of([], ["1"])) == 0
    assert ClopenSet.of([], ["1"]).contradictory
    assert theta(e3, ClopenSet.of(["g2"], ["g2"])) == 0


def test_support_sizes(desk):
    assert [EmpiricalIRS(desk, m).size for m in range(4)] == [3, 3, 6, 18]
    with pytest.raises(Exception):
        EmpiricalIRS(desk, 4)


def test_conjugate_clopen():
    C = ClopenSet.of(["g1"], ["g0 g2"])
    g = W("g0 g3^-1")
    assert conjugate_clopen(C, IDENTITY) == C
    assert conjugate_clopen(ClopenSet.of(["g1"]), g) == ClopenSet.of([conjugate(W("g1"), g)])
    assert conjugate_clopen(conjugate_clopen(C, g), g.inverse()) == C


def test_invariance_examples(e3):
    C = ClopenSet.of(["g0^2"], ["g2"])
    assert check_invariance(e3, C, IDENTITY).equal
    assert check_invariance(e3, C, W("g0")).equal
    with pytest.raises(StageError):
        check_invariance(e3, C, W("g4"))
    with pytest.raises(StageError):
        check_invariance(e3, ClopenSet.of(["g5"]), IDENTITY)


def test_theta_against_oracle(e3, desk):
    rng = random.Random(3)
    pool = list(ball([0, 1, 2, 3], 2))
    for _ in range(200):
        ins = rng.sample(pool, rng.randint(0, 2))
        outs = rng.sample(pool, rng.randint(0, 2))
        assert theta(e3, ClopenSet.of(ins, outs)) == stage_theta(desk, e3.size, ins, outs)


def test_sweep_passes(e3):
    r = invariance_sweep(e3, list(ball([0, 1, 2, 3], 2)), list(ball([0, 1, 2, 3], 1)))
    assert r["passed"] and r["failures"] == [] and r["words"] == 65


def test_sweep_detects_non_invariant_support(desk):
    e = EmpiricalIRS(desk, 3)
    e.size = 1  # W0.0 alone is not an invariant set
    e._masks.clear()
    r = invariance_sweep(e, [W("g2")], [W("g0")])
    assert not r["passed"] and r["failures"] == ["g0"]


words2 = st.lists(st.tuples(st.integers(0, 3), st.sampled_from([1, -1])), max_size=3).map(Word.from_units)


@settings(max_examples=60, deadline=None)
@given(st.lists(words2, max_size=2), st.lists(words2, max_size=2), words2)
def test_invariance_property(ins, outs, g):
    s = build_schedule(family_weights(FAM3), 3, 1188)
    b = GluedTruncation(FAM3, s, 6)
    e = EmpiricalIRS(b, 3)
    C = ClopenSet.of(ins, outs)
    r = check_invariance(e, C, g)
    assert r.equal
    conj_in = [conjugate(w, g) for w in ins]
    conj_out = [conjugate(w, g) for w in outs]
    assert r.lhs == stage_theta(b, e.size, conj_in, conj_out)


def test_membership_examples(desk, e3):
    one = explicit([IDENTITY], "one")
    assert not membership_A(e3, GluedPoint.W(0, 0), 1, one)
    assert membership_A(e3, GluedPoint.W(0, 0), 1, Q_for(desk, 2, 1))
    with pytest.raises(StageError):
        membership_A(e3, GluedPoint.W(0, 0), 7, one)


def test_membership_boundary_is_indeterminate(desk, e3):
    last = desk.M - 1
    Q = explicit([IDENTITY, Word.gen(desk.l[last])], "edge")
    with pytest.raises(BoundaryError):
        membership_A(e3, GluedPoint.W(last, 0), 1, Q)


def test_trivial_alpha_statistic_is_one():
    fam = {1: trivial_action(1), 2: cyclic_family(2)[2]}
    s = build_schedule(family_weights(fam), 2, 60)
    b = GluedTruncation(fam, s, 24)
    # the first block with f = 2 lies beyond the stage-3 support
    assert 2 not in s.values[:6]
    e = EmpiricalIRS(b, 3)
    assert claim3_statistic(e, 1, explicit([IDENTITY], "one")) == 1


def test_claim3_desk(desk, e3):
    c = claim3_chain(e3, 1, 2, Q_for(desk, 2, 1))
    assert c.statistic == 1 and c.lower_bound_holds and c.identity_holds
    assert c.exceeds(Fraction(1, 2))
    assert c.to_json(Fraction(1, 2))["passed"]


def test_claim3_strict_lower_bound():
    # a block with f = 3 beyond t = 2 inside the stage-3 support
    values = [1, 1, 3, 1] + [1, 2] * 10
    s = Schedule(len(values), tuple(values), family_weights(FAM3), {1: 2})
    b = GluedTruncation(FAM3, s, 12)
    e = EmpiricalIRS(b, 3)
    c = claim3_chain(e, 1, 2, Q_for(b, 2, 1))
    assert c.eligible_fraction == Fraction(16, 21) == c.weighted_fraction
    assert c.statistic > c.eligible_fraction
    assert c.statistic == 1
