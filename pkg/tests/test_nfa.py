"""Automata algebra pinned against brute-force language evaluation."""

import itertools
import random

import pytest

from cvaskit.nfa import (
    AutomataError,
    Nfa,
    StateCapExceeded,
    accepts,
    canonical_dfa,
    complement,
    concat,
    determinize,
    empty_nfa,
    equivalent,
    from_word,
    gathering_nfa,
    is_empty,
    minimize,
    product,
    star_of_subalphabet,
    to_dot,
    union,
    union_all,
)


def words_up_to(alphabet, n):
    for k in range(n + 1):
        for w in itertools.product(alphabet, repeat=k):
            yield "".join(w)


def is_gathering_word(w, first, last):
    """Independent check: appearance records match and the records interleave."""
    w = tuple(w)
    if set(w) != set(first):
        return False
    first_pos = {}
    last_pos = {}
    for i, l in enumerate(w):
        first_pos.setdefault(l, i)
        last_pos[l] = i
    first_rec = tuple(sorted(first_pos, key=first_pos.get))
    last_rec = tuple(sorted(last_pos, key=last_pos.get))
    if first_rec != tuple(first) or last_rec != tuple(last):
        return False
    return max(first_pos.values()) < min(last_pos.values())


class TestConstructors:
    def test_from_word_exact(self):
        nfa = from_word("ab")
        assert [w for w in words_up_to("ab", 4) if accepts(nfa, w)] == ["ab"]

    def test_star(self):
        nfa = star_of_subalphabet("a", alphabet="ab")
        for w in words_up_to("ab", 4):
            assert accepts(nfa, w) == (set(w) <= {"a"})

    def test_union_two_words(self):
        nfa = union(from_word("a"), from_word("b"))
        assert sorted(w for w in words_up_to("ab", 3) if accepts(nfa, w)) == ["a", "b"]

    def test_concat(self):
        nfa = concat(from_word("a"), star_of_subalphabet("b"))
        for w in words_up_to("ab", 5):
            expected = any(w[:i] == "a" and set(w[i:]) <= {"b"} for i in range(len(w) + 1))
            assert accepts(nfa, w) == expected

    def test_empty(self):
        assert is_empty(empty_nfa("ab"))
        assert not accepts(empty_nfa("ab"), "")

    def test_union_all(self):
        nfa = union_all([from_word(w) for w in ("a", "bb", "ab")])
        got = [w for w in words_up_to("ab", 3) if accepts(nfa, w)]
        assert sorted(got) == ["a", "ab", "bb"]

    def test_multichar_labels(self):
        nfa = from_word(("t_1", "r_2"))
        assert accepts(nfa, ("t_1", "r_2"))
        assert not accepts(nfa, ("t_1",))
        assert not accepts(nfa, ("r_2", "t_1"))

    def test_edge_validation(self):
        with pytest.raises(AutomataError):
            Nfa.of(1, "a", [(0, "a", 1)], [0], [0])
        with pytest.raises(AutomataError):
            Nfa.of(1, "a", [(0, "b", 0)], [0], [0])


class TestGathering:
    def test_two_letter_example(self):
        nfa = gathering_nfa("ab", "ba")
        assert accepts(nfa, "abba")
        assert not accepts(nfa, "aba")
        assert not accepts(nfa, "abab")

    def test_three_letter_example(self):
        nfa = gathering_nfa("abc", "abc")
        assert accepts(nfa, "abcabc")
        assert accepts(nfa, "abcbcaabc")
        assert not accepts(nfa, "abcacb")
        assert not accepts(nfa, "ababc")

    def test_single_letter(self):
        nfa = gathering_nfa("a", "a")
        for w in words_up_to("a", 4):
            assert accepts(nfa, w) == (len(w) >= 2)

    def test_against_record_oracle(self):
        cases = [("ab", "ab"), ("ab", "ba"), ("abc", "abc"), ("abc", "cba"), ("bac", "cab")]
        for first, last in cases:
            nfa = gathering_nfa(first, last)
            for w in words_up_to(sorted(set(first)), 6):
                assert accepts(nfa, w) == is_gathering_word(w, first, last), (first, last, w)

    def test_validation(self):
        with pytest.raises(AutomataError):
            gathering_nfa("", "")
        with pytest.raises(AutomataError):
            gathering_nfa("ab", "aa")
        with pytest.raises(AutomataError):
            gathering_nfa("ab", "ac")


class TestDecision:
    def test_product_emptiness(self):
        assert is_empty(product(from_word("a"), from_word("b")))
        assert not is_empty(product(from_word("ab"), star_of_subalphabet("ab")))

    def test_product_language(self):
        a = gathering_nfa("ab", "ba")
        b = star_of_subalphabet("ab")
        p = product(a, b)
        for w in words_up_to("ab", 5):
            assert accepts(p, w) == accepts(a, w)

    def test_equivalent_star_identity(self):
        lhs = star_of_subalphabet("a")
        rhs = union(from_word(""), concat(from_word("a"), star_of_subalphabet("a")))
        assert equivalent(lhs, rhs)
        assert not equivalent(lhs, concat(from_word("a"), star_of_subalphabet("a")))

    def test_determinize_cap(self):
        # second letter from the end is 'a': needs 4 DFA states
        nfa = Nfa.of(
            3, "ab",
            [(0, "a", 0), (0, "b", 0), (0, "a", 1), (1, "a", 2), (1, "b", 2)],
            [0], [2],
        )
        with pytest.raises(StateCapExceeded):
            determinize(nfa, cap=3)
        assert canonical_dfa(nfa).num_states == 4

    def test_minimize_needs_dfa(self):
        with pytest.raises(AutomataError):
            minimize(union(from_word("a"), from_word("b")))

    def test_canonical_dfa_idempotent(self):
        samples = [
            gathering_nfa("abc", "bca"),
            union(from_word("ab"), concat(from_word("a"), star_of_subalphabet("ab"))),
            star_of_subalphabet("ab", alphabet="abc"),
        ]
        for nfa in samples:
            once = canonical_dfa(nfa)
            assert canonical_dfa(once) == once

    def test_complement(self):
        dfa = determinize(from_word("ab"))
        comp = complement(dfa)
        for w in words_up_to("ab", 4):
            assert accepts(comp, w) == (w != "ab")


def random_expression(rng, alphabet, depth):
    ops = ["word", "star"] if depth == 0 else ["word", "star", "union", "concat", "gather"]
    op = rng.choice(ops)
    if op == "word":
        w = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 3)))
        return ("word", w)
    if op == "star":
        sub = [l for l in alphabet if rng.random() < 0.6]
        return ("star", "".join(sub))
    if op == "gather":
        k = rng.randrange(1, len(alphabet) + 1)
        letters = rng.sample(alphabet, k)
        first = letters[:]
        last = letters[:]
        rng.shuffle(first)
        rng.shuffle(last)
        return ("gather", "".join(first), "".join(last))
    return (op, random_expression(rng, alphabet, depth - 1), random_expression(rng, alphabet, depth - 1))


def build(expr, alphabet):
    kind = expr[0]
    if kind == "word":
        return from_word(expr[1], alphabet)
    if kind == "star":
        return star_of_subalphabet(expr[1], alphabet)
    if kind == "gather":
        return gathering_nfa(expr[1], expr[2], alphabet)
    a = build(expr[1], alphabet)
    b = build(expr[2], alphabet)
    return union(a, b) if kind == "union" else concat(a, b)


def evaluate(expr, w):
    kind = expr[0]
    if kind == "word":
        return w == expr[1]
    if kind == "star":
        return set(w) <= set(expr[1])
    if kind == "gather":
        return is_gathering_word(w, expr[1], expr[2])
    if kind == "union":
        return evaluate(expr[1], w) or evaluate(expr[2], w)
    return any(evaluate(expr[1], w[:i]) and evaluate(expr[2], w[i:]) for i in range(len(w) + 1))


def test_constructors_against_language_oracle():
    rng = random.Random(20260815)
    alphabet = "ab"
    for trial in range(40):
        expr = random_expression(rng, alphabet, 2)
        nfa = build(expr, alphabet)
        for w in words_up_to(alphabet, 5):
            assert accepts(nfa, w) == evaluate(expr, w), (trial, expr, w)


def test_equivalent_matches_oracle_on_random_pairs():
    rng = random.Random(99)
    alphabet = "ab"
    for _ in range(25):
        ea = random_expression(rng, alphabet, 1)
        eb = random_expression(rng, alphabet, 1)
        na, nb = build(ea, alphabet), build(eb, alphabet)
        same_short = all(evaluate(ea, w) == evaluate(eb, w) for w in words_up_to(alphabet, 7))
        if equivalent(na, nb):
            assert same_short
        elif same_short:
            # languages agree on short words; find the promised longer separator
            dfa = product(determinize(na, alphabet), complement(determinize(nb, alphabet)))
            flipped = product(determinize(nb, alphabet), complement(determinize(na, alphabet)))
            assert not (is_empty(dfa) and is_empty(flipped))


def test_dot_output_golden():
    nfa = union(from_word("a"), from_word("b"))
    expected = (
        "digraph nfa {\n"
        "  rankdir=LR;\n"
        "  node [shape=circle];\n"
        "  q0 [shape=circle];\n"
        "  q1 [shape=doublecircle];\n"
        "  q2 [shape=circle];\n"
        "  q3 [shape=doublecircle];\n"
        "  __start0 [shape=point];\n"
        "  __start0 -> q0;\n"
        "  __start1 [shape=point];\n"
        "  __start1 -> q2;\n"
        '  q0 -> q1 [label="a"];\n'
        '  q2 -> q3 [label="b"];\n'
        "}\n"
    )
    assert to_dot(nfa) == expected
