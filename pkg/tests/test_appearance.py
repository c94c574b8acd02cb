from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from freeirs.actions import (
    FiniteAction,
    cycle_action,
    cyclic_family,
    family_weights,
    from_cycles,
    random_transitive,
    trivial_action,
)
from freeirs.appearance import (
    Claim1Failure,
    CylinderSpec,
    all_cylinders,
    appears_in,
    check_truncation_agreement,
    claim1_region,
    cylinder_agreement,
    eligible_points,
    neighborhood_checklist,
    shift_cylinder_measure,
    target_block,
    truncated_action,
    truncated_family,
    verify_claim1,
    verify_embedding,
)
from freeirs.glue import GluedPoint, GluedTruncation
from freeirs.schedule import build_schedule
from freeirs.words import IDENTITY, Word, make_s_sets

from oracles import brute_force_appears, brute_force_cylinder, staged_region

W = Word.parse
P = GluedPoint.parse
FAM = cyclic_family(3)


@pytest.fixture(scope="module")
def desk():
    s = build_schedule(family_weights(FAM), 3, 1188)
    return GluedTruncation(FAM, s, 6)


@pytest.fixture(scope="module")
def big():
    fam = cyclic_family(4)
    s = build_schedule(family_weights(fam), 4, 71280)
    return GluedTruncation(fam, s, 40)


# -- appears_in ----------------------------------------------------------


def test_trivial_alpha_needs_a_fixed_point(desk):
    emb = appears_in(trivial_action(1), 1, desk, [P("W0.0"), P("U0")])
    assert emb is not None and len(emb.image) == 1 and emb.phi == (P("U0"),)
    # w_0 is moved by g0 inside its block
    assert appears_in(trivial_action(1), 1, desk, [P("W0.0")]) is None


def test_block_action_appears_on_its_block(big):
    for l in range(big.M):
        n = big.f[l]
        region = [big.point(p) for p in big.block_points(l)] + [P(f"U{l}")]
        emb = appears_in(big.alphas[n], n, big, region)
        assert emb is not None
        assert emb.image == {big.point(p) for p in big.block_points(l)}


def test_absent_when_generator_is_trivial():
    two = from_cycles(2, {0: [(0, 1)]})
    assert appears_in(two, 1, trivial_action(6), range(6)) is None


def test_embedding_json_and_verification(desk):
    emb = appears_in(FAM[1], 1, desk, [P("W0.0"), P("W0.1")])
    assert emb.to_json() == {"phi": ["W0.0", "W0.1"], "base": [0, "W0.0"]}
    assert verify_embedding(FAM[1], 1, desk, emb)


def test_appears_rejects_bad_input():
    with pytest.raises(ValueError):
        appears_in(trivial_action(2), 1, trivial_action(3), [0])
    with pytest.raises(ValueError):
        appears_in(cycle_action(2), 1, trivial_action(3), [5])
    with pytest.raises(ValueError):
        appears_in(from_cycles(2, {4: [(0, 1)]}), 1, trivial_action(3), [0, 1])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_appears_matches_brute_force(seed):
    rng = random.Random(seed)
    alpha = random_transitive(rng.randint(1, 4), 2, rng)
    target = FiniteAction(8, {g: tuple(rng.sample(range(8), 8))
                              for g in range(3) if rng.random() < 0.8})
    region = rng.sample(range(8), rng.randint(1, 8))
    emb = appears_in(alpha, 2, target, region)
    assert (emb is not None) == brute_force_appears(alpha, 2, target, region)
    if emb is not None:
        assert emb.image <= set(region)


# -- navigation chains -------------------------------------------------


def test_claim1_start_at_marked_point(desk):
    w = verify_claim1(desk, desk.schedule, P("W0.0"), 1, 2)
    assert w.gamma == IDENTITY and w.link == Word.gen(2)
    assert w.l == 0 and w.gamma_prime == IDENTITY  # f(0) = 1 already


def test_claim1_from_u_point(desk):
    w = verify_claim1(desk, desk.schedule, P("U1"), 1, 2)
    assert w.gamma == IDENTITY and w.link == IDENTITY
    assert w.l == target_block(desk.schedule, 1, 1) == 0


def test_claim1_all_eligible_points_with_oracle(desk):
    s = desk.schedule
    sizes = {i: a.size for i, a in desk.family.items()}
    S = make_s_sets(2, 1, s.K[1], sizes)
    stages = [list(S[0]), list(S[1]), list(S[2]), list(S[3]), list(S[4])]
    for v in eligible_points(desk, 2)[:4]:
        w = verify_claim1(desk, s, v, 1, 2)
        block = {desk.point(p) for p in desk.block_points(w.l)}
        assert {desk.apply(word, v) for _, word in w.full_words()} == block
        assert block <= claim1_region(desk, s, v, 1, 2)
        assert block <= staged_region(desk, v, stages)
        assert claim1_region(desk, s, v, 1, 2) == staged_region(desk, v, stages)


def test_claim1_crosses_blocks(big):
    s = big.schedule
    assert s.members(2)[0] == 13
    for v in [P("W0.0"), P("W5.1"), P("U12"), P("W13.2"), P("W35.1")]:
        if big.f[v.block] > 2:
            continue
        w = verify_claim1(big, s, v, 2, 2)
        assert big.f[w.l] == 2 and w.l // s.K[2] == v.block // s.K[2]
        assert w.gamma_prime in make_s_sets(2, 2, s.K[2], {1: 2, 2: 3, 3: 4, 4: 5})[2]
        for x, word in w.full_words():
            assert big.apply(word, v) == x


def test_claim1_json(desk):
    doc = verify_claim1(desk, desk.schedule, P("W2.1"), 1, 2).to_json()
    assert set(doc) >= {"S1", "S2", "S3", "S4", "S5", "words", "start", "l"}
    assert doc["words"]


def test_claim1_failures(desk):
    # the block with f = 2 sits at index 13 >= M
    with pytest.raises(Claim1Failure) as info:
        verify_claim1(desk, desk.schedule, P("W0.0"), 2, 2)
    assert info.value.stage == 3
    with pytest.raises(ValueError):
        verify_claim1(desk, desk.schedule, P("W0.0"), 3, 2)


# -- cylinders -----------------------------------------------------------


def test_cylinder_trivial_examples():
    a = cycle_action(4)
    rho = CylinderSpec({0: 1, 2: 0})
    assert shift_cylinder_measure(a, IDENTITY, rho, rho) == Fraction(1, 4)
    assert shift_cylinder_measure(a, IDENTITY, rho, CylinderSpec({0: 0})) == 0
    # g0 moves rho's point 0 to 1
    assert shift_cylinder_measure(a, W("g0"), CylinderSpec({0: 1}), CylinderSpec({1: 0})) == 0
    assert shift_cylinder_measure(a, W("g0"), CylinderSpec({0: 1}), CylinderSpec({1: 1})) == Fraction(1, 2)
    with pytest.raises(ValueError):
        CylinderSpec({0: 2})


def test_cylinder_normalization():
    a = from_cycles(5, {0: [(0, 1, 2)], 1: [(2, 3, 4)]})
    T = [0, 2, 4]
    for g in [IDENTITY, W("g0"), W("g1 g0^-1")]:
        for rho in all_cylinders(T):
            total = sum(shift_cylinder_measure(a, g, rho, sigma) for sigma in all_cylinders(T))
            assert total == Fraction(1, 8)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_cylinder_matches_brute_force(seed):
    rng = random.Random(seed)
    a = random_transitive(8, 2, rng)
    g = Word.from_units([(rng.randint(0, 2), rng.choice((1, -1))) for _ in range(rng.randint(0, 4))])
    rho = CylinderSpec({v: rng.randint(0, 1) for v in rng.sample(range(8), rng.randint(0, 4))})
    sigma = CylinderSpec({v: rng.randint(0, 1) for v in rng.sample(range(8), rng.randint(0, 4))})
    assert shift_cylinder_measure(a, g, rho, sigma) == \
        brute_force_cylinder(dict(a.perms), 8, g, rho.values, sigma.values)


def test_truncation_agreement_examples():
    a = from_cycles(6, {0: [(0, 1), (2, 3, 4)], 1: [(1, 2)]})
    same = from_cycles(6, {0: [(0, 1), (2, 3, 4)], 1: [(1, 2)], 2: [(4, 5)]})
    assert check_truncation_agreement(a, same, 2, range(6))
    altered = from_cycles(6, {0: [(0, 1), (2, 4, 3)], 1: [(1, 2)]})
    assert not check_truncation_agreement(a, altered, 2, [2])
    assert check_truncation_agreement(a, altered, 2, [0, 1])


def test_truncated_action_properties():
    rng = random.Random(11)
    for _ in range(20):
        size = rng.randint(3, 9)
        alpha = random_transitive(size, 3, rng)
        for n in range(1, 5):
            hat, V = truncated_action(alpha, n)
            T = list(range(min(n, size)))
            assert check_truncation_agreement(alpha, hat, n, T)  # (I)
            assert hat.max_generator() <= n  # (II)
            Vs = set(V)
            assert set(T) <= Vs
            for k in range(n + 1):  # (III)
                for v in range(size):
                    if v not in Vs:
                        assert hat.step(k, v) == v
                    else:
                        assert hat.step(k, v) in Vs
            assert hat.restrict_to_invariant(V).is_transitive()
            if len(T) <= 3:
                assert cylinder_agreement(alpha, hat, n, T)


def test_cylinder_corollary_three_points():
    alpha = from_cycles(7, {0: [(0, 1, 2, 3, 4, 5, 6)], 1: [(0, 3)], 2: [(1, 5)]})
    hat, _ = truncated_action(alpha, 3, [0, 1, 2])
    assert cylinder_agreement(alpha, hat, 3, [0, 1, 2])


def test_truncated_family_is_usable():
    alpha = from_cycles(6, {0: [(0, 1, 2)], 1: [(2, 3)], 2: [(3, 4, 5)]})
    fam = truncated_family(alpha, 3)
    for n, a in fam.items():
        assert a.is_transitive() and a.max_generator() <= n
    s = build_schedule(family_weights(fam), 3, 10**4)
    GluedTruncation(fam, s, 30)


def test_neighborhood_checklist():
    alpha = from_cycles(6, {0: [(0, 1, 2)], 1: [(2, 3)], 2: [(3, 4, 5)]})
    hat, _ = truncated_action(alpha, 2)
    U = neighborhood_checklist(alpha, 2, Fraction(1, 64), [0, 1])
    assert len(U.rows) == 2 * 4 * 4
    assert U.contains(alpha) and U.contains(hat)
    assert not U.contains(trivial_action(6))
