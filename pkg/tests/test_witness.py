"""Canonical witnesses, redistribution, and lifting against simulate audits."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvaskit.cvas import Cvas, member, simulate
from cvaskit.decide import DecisionCapExceeded, is_perfect
from cvaskit.rational import rat
from cvaskit.schemes import (
    Gathering,
    PathScheme,
    bubble_scheme,
    center,
    is_subword,
    matches_gathering,
    word_scheme,
)
from cvaskit.witness import (
    CanonicalWitness,
    LiftedWitness,
    NoWitnessError,
    WitnessError,
    audit_canonical_witness,
    canonical_gathering_witness,
    lift_run_witness,
    redistribute,
)


def example_system() -> Cvas:
    return Cvas.of(3, [("a", (1, 0, 0)), ("b", (-1, 1, 0)), ("c", (0, -1, 1))])


EX = example_system()
X0 = (0, 0, 0)
Y0 = (0, rat(1, 4), rat(1, 4))
G_FULL = Gathering.of(("a", "b", "c"), ("a", "b", "c"))


def published_witness() -> CanonicalWitness:
    """The displayed head, center, and tail runs for w = abc bac abc."""
    head = simulate(EX, X0, [(rat(1, 4), "a"), (rat(1, 8), "b"), (rat(1, 16), "c")])
    mid = simulate(
        EX, head.end, [(rat(1, 16), "b"), (rat(1, 8), "a"), (rat(1, 16), "c")]
    )
    tail = simulate(
        EX, mid.end, [(rat(1, 8), "a"), (rat(5, 16), "b"), (rat(1, 8), "c")]
    )
    return CanonicalWitness.of(G_FULL, head, mid, tail)


class TestCanonicalWitnessAudit:
    def test_published_witness_is_clean(self):
        w = published_witness()
        assert audit_canonical_witness(w) == ()
        assert w.word == tuple("abcbacabc")
        assert w.mid_start == (rat(1, 8), rat(1, 16), rat(1, 16))
        assert w.mid_end == (rat(3, 16), rat(1, 16), rat(1, 8))

    def test_p1_violation_is_flagged(self):
        # counter 0 rises to 1/4 and then returns to zero inside the head;
        # each run fires, but no redistribution could shave the first a
        head = simulate(EX, X0, [(rat(1, 4), "a"), (rat(1, 4), "b"), (rat(1, 8), "c")])
        mid = simulate(
            EX, head.end, [(rat(1, 8), "a"), (rat(1, 16), "b"), (rat(1, 16), "c")]
        )
        tail = simulate(
            EX, mid.end, [(rat(1, 16), "a"), (rat(1, 8), "b"), (rat(1, 16), "c")]
        )
        with pytest.raises(WitnessError, match="P1"):
            CanonicalWitness.of(G_FULL, head, mid, tail)

    def test_wrong_head_word_is_flagged(self):
        w = published_witness()
        with pytest.raises(WitnessError, match="first-appearance"):
            CanonicalWitness.of(G_FULL, w.middle, w.middle, w.tail)


class TestCanonicalGatheringWitness:
    def test_example_witness_is_audited_and_bounded(self):
        w = canonical_gathering_witness(G_FULL, X0, Y0, EX)
        assert audit_canonical_witness(w) == ()
        assert w.start == tuple(map(rat, X0))
        assert w.end == (0, rat(1, 4), rat(1, 4))
        assert set(w.middle.word) == {"a", "b", "c"}
        assert matches_gathering(w.word, G_FULL)

    def test_zero_effect_gathering(self):
        sys = Cvas.of(1, [("a", (0,))])
        g = Gathering.of(("a",), ("a",))
        w = canonical_gathering_witness(g, (0,), (0,), sys)
        assert w.word == ("a", "a", "a")

    def test_empty_intersection_raises_no_witness(self):
        with pytest.raises(NoWitnessError):
            canonical_gathering_witness(G_FULL, X0, (1, 0, 0), EX)

    def test_center_cap_exhaustion_is_a_hard_error(self):
        with pytest.raises(DecisionCapExceeded):
            canonical_gathering_witness(G_FULL, X0, Y0, EX, max_center_len=2)

    def test_two_letter_gathering(self):
        sys = Cvas.of(1, [("a", (1,)), ("b", (-1,))])
        g = Gathering.of(("a", "b"), ("b", "a"))
        w = canonical_gathering_witness(g, (0,), (rat(1, 2),), sys)
        assert audit_canonical_witness(w) == ()
        assert member(sys, w.word, (0,), (rat(1, 2),))


class TestRedistribute:
    def test_published_superword_reproduces_displayed_runs(self):
        w = published_witness()
        run = redistribute(w, "abacbbacacbc")
        assert run.word == tuple("abacbbacacbc")
        assert run.start == tuple(map(rat, X0))
        assert run.end == (0, rat(1, 4), rat(1, 4))
        # the split points hit the witness boundary configurations exactly
        assert run.configs[4] == (rat(1, 8), rat(1, 16), rat(1, 16))
        assert run.configs[8] == (rat(3, 16), rat(1, 16), rat(1, 8))
        # the deterministic epsilons reproduce the displayed fractions
        assert tuple(s.fraction for s in run.steps) == (
            rat(3, 16), rat(1, 8), rat(1, 16), rat(1, 16),
            rat(1, 32), rat(1, 32), rat(1, 8), rat(1, 16),
            rat(1, 8), rat(1, 32), rat(5, 16), rat(3, 32),
        )

    def test_witness_word_itself_returns_its_own_runs(self):
        w = published_witness()
        run = redistribute(w, w.word)
        assert run.steps == w.head.steps + w.middle.steps + w.tail.steps

    def test_word_outside_gathering_language_raises(self):
        w = published_witness()
        with pytest.raises(WitnessError):
            redistribute(w, "bacbacabc")

    def test_center_not_extending_witness_center_raises(self):
        w = published_witness()
        # abc|abc|abc is in the language but its center abc omits the
        # witness center bac as a subword
        assert matches_gathering(tuple("abcabcabc"), G_FULL)
        with pytest.raises(WitnessError):
            redistribute(w, "abcabcabc")

    def test_hundred_sampled_superwords_validate(self):
        w = published_witness()
        rng = random.Random(3)
        produced = 0
        while produced < 100:
            sup = list(w.word)
            for _ in range(rng.randint(1, 3)):
                for _ in range(50):
                    pos = rng.randint(1, len(sup))
                    letter = rng.choice("abc")
                    cand = sup[:pos] + [letter] + sup[pos:]
                    if matches_gathering(tuple(cand), G_FULL) and is_subword(
                        w.middle.word, center(tuple(cand), G_FULL)
                    ):
                        sup = cand
                        break
            run = redistribute(w, tuple(sup))
            assert run.word == tuple(sup)
            assert run.start == tuple(map(rat, X0))
            assert run.end == (0, rat(1, 4), rat(1, 4))
            produced += 1

    def test_superwords_of_generated_witness_validate(self):
        w = canonical_gathering_witness(G_FULL, X0, Y0, EX)
        rng = random.Random(5)
        for _ in range(40):
            sup = list(w.word)
            for _ in range(50):
                pos = rng.randint(1, len(sup))
                letter = rng.choice("abc")
                cand = sup[:pos] + [letter] + sup[pos:]
                if matches_gathering(tuple(cand), G_FULL) and is_subword(
                    w.middle.word, center(tuple(cand), G_FULL)
                ):
                    sup = cand
                    break
            run = redistribute(w, tuple(sup))
            assert run.end == (0, rat(1, 4), rat(1, 4))


class TestLiftRunWitness:
    def test_single_gathering_lift(self):
        scheme = bubble_scheme(G_FULL)
        lifted = lift_run_witness(scheme, X0, Y0, EX)
        assert isinstance(lifted, LiftedWitness)
        assert len(lifted.factor.parts) == 1
        assert lifted.run.start == tuple(map(rat, X0))
        assert lifted.run.end == (0, rat(1, 4), rat(1, 4))
        assert member(EX, lifted.word, X0, Y0)

    def test_boundaries_satisfy_the_chain_conditions(self):
        scheme = bubble_scheme(G_FULL)
        lifted = lift_run_witness(scheme, X0, Y0, EX)
        entry, exit_ = lifted.boundaries
        assert member(EX, lifted.factor.parts[0], entry, exit_)
        assert is_perfect(bubble_scheme(G_FULL), entry, exit_, EX)
        # fixed words around the bubble are empty here, so the boundary
        # configurations are the endpoints themselves
        assert entry == tuple(map(rat, X0))
        assert exit_ == (0, rat(1, 4), rat(1, 4))

    def test_word_only_scheme_gives_empty_factor(self):
        scheme = word_scheme(("a", "b", "b", "c"))
        lifted = lift_run_witness(scheme, X0, Y0, EX)
        assert lifted.factor.parts == ()
        assert lifted.word == ("a", "b", "b", "c")
        assert lifted.boundaries == ()

    def test_imperfect_scheme_raises(self):
        with pytest.raises(NoWitnessError):
            lift_run_witness(word_scheme(("b", "b", "c")), X0, Y0, EX)

    def test_factor_upward_closure_members_sampled(self):
        scheme = bubble_scheme(G_FULL)
        lifted = lift_run_witness(scheme, X0, Y0, EX)
        factor_word = lifted.factor.parts[0]
        entry, exit_ = lifted.boundaries
        witness = canonical_gathering_witness(G_FULL, entry, exit_, EX)
        rng = random.Random(9)
        produced = 0
        while produced < 200:
            sup = list(factor_word)
            for _ in range(rng.randint(1, 3)):
                for _ in range(50):
                    pos = rng.randint(1, len(sup))
                    letter = rng.choice("abc")
                    cand = sup[:pos] + [letter] + sup[pos:]
                    if matches_gathering(tuple(cand), G_FULL) and is_subword(
                        witness.middle.word, center(tuple(cand), G_FULL)
                    ):
                        sup = cand
                        break
            assert member(EX, tuple(sup), entry, exit_)
            produced += 1


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_random_insertions_into_published_witness_redistribute(data):
    w = published_witness()
    sup = list(w.word)
    insertions = data.draw(st.integers(1, 5))
    for _ in range(insertions):
        spots = []
        for pos in range(1, len(sup) + 1):
            for letter in "abc":
                cand = sup[:pos] + [letter] + sup[pos:]
                if matches_gathering(tuple(cand), G_FULL) and is_subword(
                    w.middle.word, center(tuple(cand), G_FULL)
                ):
                    spots.append((pos, letter))
        if not spots:
            break
        pos, letter = data.draw(st.sampled_from(spots))
        sup = sup[:pos] + [letter] + sup[pos:]
    run = redistribute(w, tuple(sup))
    assert run.word == tuple(sup)
    assert run.end == (0, rat(1, 4), rat(1, 4))
