"""Reachability decider pinned against the independent bounded word search."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvaskit.cvas import Cvas, member, simulate, witness_fractions
from cvaskit.decide import (
    Chain,
    DecideError,
    DecisionCapExceeded,
    bounded_witness_search,
    chain_feasible,
    chain_of_scheme,
    cvass_product,
    is_perfect,
    regular_intersect_nonempty,
)
from cvaskit.linsolve import SolverBudget, SolverBudgetExceeded
from cvaskit.nfa import Nfa, empty_nfa, from_word, star_of_subalphabet
from cvaskit.rational import rat
from cvaskit.schemes import Gathering, PathScheme, Star, bubble_scheme, word_scheme


def example_system() -> Cvas:
    return Cvas.of(3, [("a", (1, 0, 0)), ("b", (-1, 1, 0)), ("c", (0, -1, 1))])


EX = example_system()
X0 = (0, 0, 0)
Y0 = (0, rat(1, 4), rat(1, 4))
ABC = ("a", "b", "c")
FULL = star_of_subalphabet(ABC, ABC)


class TestRegularIntersect:
    def test_full_language_reaches_example_endpoints(self):
        assert regular_intersect_nonempty(FULL, X0, Y0, EX) is True

    def test_single_bad_word_is_rejected(self):
        nfa = from_word(("b", "b", "c"), ABC)
        assert regular_intersect_nonempty(nfa, X0, Y0, EX) is False

    def test_empty_automaton_is_rejected(self):
        assert regular_intersect_nonempty(empty_nfa(ABC), X0, Y0, EX) is False

    def test_member_word_automaton_is_accepted(self):
        nfa = from_word(("a", "b", "b", "c"), ABC)
        assert regular_intersect_nonempty(nfa, X0, Y0, EX) is True

    def test_epsilon_when_endpoints_equal(self):
        nfa = Nfa.of(1, ABC, set(), {0}, {0})
        assert regular_intersect_nonempty(nfa, X0, X0, EX) is True
        assert regular_intersect_nonempty(nfa, X0, Y0, EX) is False

    def test_alphabet_mismatch_raises(self):
        nfa = star_of_subalphabet(("z",), ("z",))
        with pytest.raises(DecideError):
            regular_intersect_nonempty(nfa, X0, Y0, EX)

    def test_arity_mismatch_raises(self):
        with pytest.raises(DecideError):
            regular_intersect_nonempty(FULL, (0, 0), Y0, EX)

    def test_edge_cap_raises_on_general_tier(self):
        # two parallel paths defeat chain detection, forcing support search
        nfa = Nfa.of(
            2,
            ABC,
            {(0, "a", 1), (0, "b", 1), (0, "a", 0), (1, "c", 1)},
            {0},
            {1},
        )
        with pytest.raises(DecisionCapExceeded):
            regular_intersect_nonempty(nfa, X0, Y0, EX, edge_cap=1)

    def test_chain_detection_ignores_edge_cap(self):
        assert regular_intersect_nonempty(FULL, X0, Y0, EX, edge_cap=1) is True

    def test_budget_exhaustion_raises(self):
        with pytest.raises(SolverBudgetExceeded):
            regular_intersect_nonempty(FULL, X0, Y0, EX, budget=SolverBudget(2))


class TestBridgeMagnitude:
    """A bridge between loop components fires exactly once, so its demand is
    capped by what the counters hold at the crossing; repetition counts
    inside a component stay free."""

    def setup_method(self):
        self.sys = Cvas.of(3, [("a", (1, 0, 0)), ("e", (0, -1, 1)), ("g", (0, 1, 0))])
        self.nfa = Nfa.of(
            2,
            ("a", "e", "g"),
            {(0, "a", 0), (0, "e", 1), (1, "g", 1)},
            {0},
            {1},
        )
        self.x = (0, rat(3, 10), 0)

    def test_bridge_demand_above_crossing_budget_is_rejected(self):
        y = (1, 0, rat(9, 10))
        assert regular_intersect_nonempty(self.nfa, self.x, y, self.sys) is False
        assert bounded_witness_search(self.nfa, self.x, y, self.sys, 8) is None

    def test_bridge_demand_within_budget_is_accepted(self):
        y = (1, rat(1, 10), rat(1, 5))
        assert regular_intersect_nonempty(self.nfa, self.x, y, self.sys) is True
        assert bounded_witness_search(self.nfa, self.x, y, self.sys, 8) == ("a", "e")

    def test_refill_after_bridge_is_accepted(self):
        y = (1, rat(1, 2), rat(1, 5))
        assert regular_intersect_nonempty(self.nfa, self.x, y, self.sys) is True


class TestBoundedWitnessSearch:
    def test_shortest_witness_for_example(self):
        assert bounded_witness_search(FULL, X0, Y0, EX, 4) == ("a", "b", "c")

    def test_found_word_is_always_a_member(self):
        w = bounded_witness_search(FULL, X0, Y0, EX, 4)
        assert member(EX, w, X0, Y0)

    def test_unreachable_target_has_no_witness(self):
        sys = Cvas.of(1, [("a", (-1,))])
        nfa = star_of_subalphabet(("a",), ("a",))
        assert bounded_witness_search(nfa, (0,), (1,), sys, 9) is None
        assert regular_intersect_nonempty(nfa, (0,), (1,), sys) is False

    def test_epsilon_witness_when_endpoints_equal(self):
        assert bounded_witness_search(FULL, X0, X0, EX, 3) == ()

    def test_bound_zero_only_finds_epsilon(self):
        assert bounded_witness_search(FULL, X0, Y0, EX, 0) is None

    def test_declaration_order_breaks_ties(self):
        # both ab and ba are members here; declaration order must win
        sys = Cvas.of(2, [("b", (0, 1)), ("a", (1, 0))])
        nfa = star_of_subalphabet(("a", "b"), ("a", "b"))
        w = bounded_witness_search(nfa, (0, 0), (1, 1), sys, 4)
        assert w == ("b", "a")


class TestIsPerfect:
    def test_full_gathering_is_perfect_for_example(self):
        g = Gathering.of(ABC, ABC)
        assert is_perfect(bubble_scheme(g), X0, Y0, EX) is True

    def test_word_scheme_bbc_is_not_perfect(self):
        assert is_perfect(word_scheme(("b", "b", "c")), X0, Y0, EX) is False

    def test_epsilon_scheme_perfect_iff_endpoints_equal(self):
        eps = PathScheme.of([()], [])
        assert is_perfect(eps, X0, X0, EX) is True
        assert is_perfect(eps, X0, Y0, EX) is False

    def test_star_scheme_is_not_preperfect(self):
        star = PathScheme.of([(), ()], [Star.of(ABC)])
        assert is_perfect(star, X0, Y0, EX) is False

    def test_member_word_scheme_is_perfect(self):
        assert is_perfect(word_scheme(("a", "b", "b", "c")), X0, Y0, EX) is True

    def test_reordered_gathering_records(self):
        g = Gathering.of(("b", "a", "c"), ABC)
        # words must start with b from the zero configuration: impossible
        assert is_perfect(bubble_scheme(g), X0, Y0, EX) is False


class TestChainOfScheme:
    def test_gathering_expansion_shape(self):
        sys = Cvas.of(1, [("a", (1,)), ("b", (-1,))])
        g = Gathering.of(("a", "b"), ("b", "a"))
        chain = chain_of_scheme(bubble_scheme(g), sys)
        loop_sets = tuple(
            tuple(l.label for l in seg) for seg in chain.segments
        )
        assert loop_sets == ((), ("a",), ("a", "b"), ("a",), ())
        assert tuple(l.label for l in chain.links) == ("a", "b", "b", "a")

    def test_star_chain_decides_example(self):
        star = PathScheme.of([(), ()], [Star.of(ABC)])
        chain = chain_of_scheme(star, EX)
        assert chain_feasible(chain, X0, Y0) is True
        # draining counter 1 forces c, which leaves residue in counter 2
        assert chain_feasible(chain, (0, 1, 0), (0, 0, 0)) is False


def random_instance(rng):
    dim = rng.randint(1, 3)
    labels = "abc"[: rng.randint(1, 3)]
    trans = [(l, tuple(rng.randint(-1, 1) for _ in range(dim))) for l in labels]
    sys = Cvas.of(dim, trans)
    ns = rng.randint(1, 4)
    edges = set()
    for _ in range(rng.randint(1, 2 * ns)):
        edges.add((rng.randrange(ns), rng.choice(labels), rng.randrange(ns)))
    nfa = Nfa.of(ns, tuple(labels), edges, {0}, {rng.randrange(ns)})
    return sys, nfa


def sample_accepted_firable(rng, sys, nfa, maxlen=5, tries=60):
    """A random accepted word fired with random fractions, if one exists."""
    step = {}
    for p, l, q in nfa.edges:
        step.setdefault(p, []).append((l, q))
    for _ in range(tries):
        q = next(iter(nfa.initial))
        word = []
        for _ in range(rng.randint(0, maxlen)):
            outs = step.get(q)
            if not outs:
                break
            l, q = rng.choice(outs)
            word.append(l)
        if q not in nfa.accepting:
            continue
        x = tuple(rat(rng.randint(0, 2), rng.choice([1, 2])) for _ in range(sys.dim))
        steps = [(rat(rng.randint(1, 4), 4), l) for l in word]
        try:
            run = simulate(sys, x, steps)
        except Exception:
            continue
        return x, run.end, tuple(word)
    return None


class TestDifferential:
    """The structural decider versus the exhaustive bounded search.

    Disagreement on any instance is a release blocker: the search is the
    ground-truth oracle wherever witnesses fit its bound.
    """

    def test_constructed_yes_instances_agree(self):
        rng = random.Random(7)
        checked = 0
        while checked < 120:
            sys, nfa = random_instance(rng)
            got = sample_accepted_firable(rng, sys, nfa)
            if got is None:
                continue
            x, y, word = got
            assert regular_intersect_nonempty(nfa, x, y, sys) is True
            found = bounded_witness_search(nfa, x, y, sys, max(6, len(word)))
            assert found is not None
            assert member(sys, found, x, y)
            checked += 1
        assert checked == 120

    def test_random_endpoint_instances_agree(self):
        rng = random.Random(11)
        yes = no = 0
        for _ in range(250):
            sys, nfa = random_instance(rng)
            x = tuple(rat(rng.randint(0, 2), rng.choice([1, 2])) for _ in range(sys.dim))
            y = tuple(rat(rng.randint(0, 2), rng.choice([1, 2])) for _ in range(sys.dim))
            decided = regular_intersect_nonempty(nfa, x, y, sys)
            found = bounded_witness_search(nfa, x, y, sys, 7)
            assert decided == (found is not None), (sys.transitions, sorted(nfa.edges), x, y)
            if decided:
                yes += 1
            else:
                no += 1
        assert yes >= 20 and no >= 20

    def test_never_incrementable_counter_is_provably_unreachable(self):
        rng = random.Random(13)
        checked = 0
        while checked < 60:
            sys, nfa = random_instance(rng)
            dead = [
                c
                for c in range(sys.dim)
                if all(t.effect[c] <= 0 for t in sys.transitions)
            ]
            if not dead:
                continue
            c = rng.choice(dead)
            x = tuple(0 for _ in range(sys.dim))
            y = tuple(rat(1, 2) if i == c else 0 for i in range(sys.dim))
            assert regular_intersect_nonempty(nfa, x, y, sys) is False
            assert bounded_witness_search(nfa, x, y, sys, 6) is None
            checked += 1


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_fired_words_are_always_decided_positive(data):
    dim = data.draw(st.integers(1, 3))
    labels = "abc"[: data.draw(st.integers(1, 3))]
    trans = [
        (l, tuple(data.draw(st.integers(-2, 2)) for _ in range(dim))) for l in labels
    ]
    sys = Cvas.of(dim, trans)
    word = tuple(
        data.draw(st.sampled_from(labels))
        for _ in range(data.draw(st.integers(1, 4)))
    )
    x = tuple(data.draw(st.integers(0, 2)) for _ in range(dim))
    fr = [rat(data.draw(st.integers(1, 4)), 4) for _ in word]
    try:
        run = simulate(sys, x, list(zip(fr, word)))
    except Exception:
        return
    nfa = from_word(word, tuple(sorted(set(labels))))
    assert regular_intersect_nonempty(nfa, x, run.end, sys) is True
    assert witness_fractions(sys, word, x, run.end) is not None
