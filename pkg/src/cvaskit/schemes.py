"""Path-scheme calculus: stars, gatherings, weights, decompositions.

A path scheme interleaves fixed words with bubbles (sub-alphabet stars or
gatherings).  This module provides the combinatorial operations the
regularity engine is built from: star decomposition into gathering-only
schemes, flattening of gatherings, substitution, upward-closure schemes and
their complements, factorization, and the weight order that drives
termination.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .nfa import Nfa, concat, from_word, gathering_nfa, letters_of, star_of_subalphabet


class SchemeError(ValueError):
    pass


class SchemeLimitExceeded(RuntimeError):
    """A decomposition would materialize more schemes than the given limit."""


Label = str
Word = "tuple[Label, ...]"


@dataclass(frozen=True)
class Star:
    letters: frozenset

    @staticmethod
    def of(letters) -> "Star":
        return Star(frozenset(letters_of(letters)))

    def sorted_letters(self) -> tuple:
        return tuple(sorted(self.letters))


@dataclass(frozen=True)
class Gathering:
    first: tuple
    last: tuple

    @staticmethod
    def of(first, last) -> "Gathering":
        first = letters_of(first)
        last = letters_of(last)
        if not first or len(set(first)) != len(first) or len(set(last)) != len(last):
            raise SchemeError("gathering records must be non-empty and duplicate-free")
        if set(first) != set(last):
            raise SchemeError("gathering records must be permutations of the same set")
        return Gathering(first, last)

    @property
    def letters(self) -> frozenset:
        return frozenset(self.first)


Bubble = Union[Star, Gathering]


def bubble_letters(bubble: Bubble) -> frozenset:
    return bubble.letters


@dataclass(frozen=True)
class PathScheme:
    """u_0 X_1 u_1 ... X_n u_n with len(words) == len(bubbles) + 1."""

    words: tuple
    bubbles: tuple

    @staticmethod
    def of(words, bubbles) -> "PathScheme":
        words = tuple(letters_of(w) for w in words)
        bubbles = tuple(bubbles)
        if len(words) != len(bubbles) + 1:
            raise SchemeError("need one more word than bubbles")
        for b in bubbles:
            if not isinstance(b, (Star, Gathering)):
                raise SchemeError(f"not a bubble: {b!r}")
        return PathScheme(words, bubbles)

    @property
    def alphabet(self) -> frozenset:
        letters = set()
        for w in self.words:
            letters |= set(w)
        for b in self.bubbles:
            letters |= bubble_letters(b)
        return frozenset(letters)


@dataclass(frozen=True)
class RhoFactor:
    """One word per bubble of the scheme it factors."""

    parts: tuple


def word_scheme(word) -> PathScheme:
    return PathScheme.of([letters_of(word)], [])


def bubble_scheme(bubble: Bubble) -> PathScheme:
    return PathScheme.of([(), ()], [bubble])


def scheme_concat(a: PathScheme, b: PathScheme) -> PathScheme:
    words = a.words[:-1] + (a.words[-1] + b.words[0],) + b.words[1:]
    return PathScheme.of(words, a.bubbles + b.bubbles)


# -- gathering combinatorics ------------------------------------------------


def appearance_records(w) -> tuple:
    w = letters_of(w)
    first_pos: dict = {}
    last_pos: dict = {}
    for i, l in enumerate(w):
        first_pos.setdefault(l, i)
        last_pos[l] = i
    first = tuple(sorted(first_pos, key=first_pos.get))
    last = tuple(sorted(last_pos, key=last_pos.get))
    return first, last


def matches_gathering(w, g: Gathering) -> bool:
    """True iff w factors as a_1 w_1 .. a_n w_n b_1 v_1 .. b_n v_n.

    Equivalent record form: the first/last appearance records equal the
    gathering's, and every first occurrence precedes every last occurrence.
    """
    w = letters_of(w)
    if set(w) != set(g.first):
        return False
    first_pos: dict = {}
    last_pos: dict = {}
    for i, l in enumerate(w):
        first_pos.setdefault(l, i)
        last_pos[l] = i
    first = tuple(sorted(first_pos, key=first_pos.get))
    last = tuple(sorted(last_pos, key=last_pos.get))
    if first != g.first or last != g.last:
        return False
    return max(first_pos.values()) < min(last_pos.values())


def center(w, g: Gathering) -> tuple:
    """The segment between the first occurrence of a_n and the last of b_1."""
    w = letters_of(w)
    if not matches_gathering(w, g):
        raise SchemeError(f"word does not match the gathering: {w!r}")
    start = w.index(g.first[-1])
    end = len(w) - 1 - tuple(reversed(w)).index(g.last[0])
    return w[start + 1 : end]


def bubble_contains(bubble: Bubble, w) -> bool:
    w = letters_of(w)
    if isinstance(bubble, Star):
        return set(w) <= bubble.letters
    return matches_gathering(w, bubble)


# -- weights ----------------------------------------------------------------


def weight(scheme: PathScheme, size: Optional[int] = None) -> tuple:
    """Component i-1 counts bubbles with exactly i distinct letters.

    Empty-star bubbles denote {eps} and carry no weight.
    """
    sizes = [len(bubble_letters(b)) for b in scheme.bubbles]
    if size is None:
        size = max(sizes, default=0)
    counts = [0] * size
    for s in sizes:
        if s == 0:
            continue
        if s > size:
            raise SchemeError(f"bubble over {s} letters does not fit weight length {size}")
        counts[s - 1] += 1
    return tuple(counts)


def lex_less(v1: Sequence[int], v2: Sequence[int]) -> bool:
    """Strict order comparing the highest component first."""
    if len(v1) != len(v2):
        raise SchemeError("weight vectors must have equal length")
    for a, b in zip(reversed(v1), reversed(v2)):
        if a != b:
            return a < b
    return False


def lex_leq(v1: Sequence[int], v2: Sequence[int]) -> bool:
    return tuple(v1) == tuple(v2) or lex_less(v1, v2)


# -- scheme language --------------------------------------------------------


def scheme_to_nfa(scheme: PathScheme, alphabet: Iterable[Label] = ()) -> Nfa:
    out = from_word(scheme.words[0], alphabet)
    for bubble, word in zip(scheme.bubbles, scheme.words[1:]):
        if isinstance(bubble, Star):
            piece = star_of_subalphabet(bubble.sorted_letters())
        else:
            piece = gathering_nfa(bubble.first, bubble.last)
        out = concat(out, piece)
        out = concat(out, from_word(word))
    return out


def scheme_contains(scheme: PathScheme, w) -> bool:
    """Direct membership without building an automaton."""
    w = letters_of(w)
    positions = {0}
    for k, u in enumerate(scheme.words):
        positions = {p + len(u) for p in positions if w[p : p + len(u)] == u}
        if not positions:
            return False
        if k < len(scheme.bubbles):
            bubble = scheme.bubbles[k]
            positions = {
                end
                for p in positions
                for end in range(p, len(w) + 1)
                if bubble_contains(bubble, w[p:end])
            }
    return len(w) in positions


def factorize(w, scheme: PathScheme) -> list:
    """All ways to split w as u_0 w_1 u_1 ... w_n u_n with w_i in its bubble."""
    w = letters_of(w)
    results = []

    def rec(pos, k, acc):
        u = scheme.words[k]
        if w[pos : pos + len(u)] != u:
            return
        pos += len(u)
        if k == len(scheme.bubbles):
            if pos == len(w):
                results.append(RhoFactor(tuple(acc)))
            return
        for end in range(pos, len(w) + 1):
            part = w[pos:end]
            if bubble_contains(scheme.bubbles[k], part):
                rec(end, k + 1, acc + [part])

    rec(0, 0, [])
    return results


def is_factor_of(factor: RhoFactor, w, scheme: PathScheme) -> bool:
    if len(factor.parts) != len(scheme.bubbles):
        return False
    glued = list(scheme.words[0])
    for part, word in zip(factor.parts, scheme.words[1:]):
        glued.extend(part)
        glued.extend(word)
    if tuple(glued) != letters_of(w):
        return False
    return all(bubble_contains(b, part) for b, part in zip(scheme.bubbles, factor.parts))


def is_preperfect(scheme: PathScheme) -> bool:
    return all(isinstance(b, Gathering) for b in scheme.bubbles)


# -- star decomposition -----------------------------------------------------

_DECOMP_MEMO: dict = {}
_DECOMP_LOCK = threading.Lock()


def _subsets(letters: tuple, proper: bool) -> list:
    top = len(letters) - 1 if proper else len(letters)
    out = []
    for k in range(top + 1):
        out.extend(itertools.combinations(letters, k))
    return out


def star_decompose(letters, limit: Optional[int] = None) -> list:
    """Gathering-only schemes whose languages union to the full star.

    Recursive: all gatherings over A, plus decompositions of B*C* for proper
    B,C, plus decompositions of B* a C* with a excluded from B and C.
    Outputs are deduplicated; raises SchemeLimitExceeded past the limit.
    """
    key = frozenset(letters_of(letters))
    with _DECOMP_LOCK:
        cached = _DECOMP_MEMO.get(key)
    if cached is None:
        cached = _compute_decomposition(key, limit)
        with _DECOMP_LOCK:
            _DECOMP_MEMO.setdefault(key, cached)
    if limit is not None and len(cached) > limit:
        raise SchemeLimitExceeded(f"decomposition of {sorted(key)} has {len(cached)} schemes")
    return list(cached)


def _compute_decomposition(key: frozenset, limit: Optional[int]) -> tuple:
    out: list = []
    seen: set = set()

    def emit(scheme):
        if scheme not in seen:
            seen.add(scheme)
            out.append(scheme)
            if limit is not None and len(out) > limit:
                raise SchemeLimitExceeded(
                    f"decomposition of {sorted(key)} exceeds {limit} schemes"
                )

    if not key:
        emit(word_scheme(()))
        return tuple(out)
    ordered = tuple(sorted(key))
    for first in itertools.permutations(ordered):
        for last in itertools.permutations(ordered):
            emit(bubble_scheme(Gathering.of(first, last)))
    proper = _subsets(ordered, proper=True)
    for b_set in proper:
        for c_set in proper:
            for left in star_decompose(b_set, limit):
                for right in star_decompose(c_set, limit):
                    emit(scheme_concat(left, right))
    for a in ordered:
        rest = tuple(l for l in ordered if l != a)
        parts = _subsets(rest, proper=False)
        for b_set in parts:
            for c_set in parts:
                for left in star_decompose(b_set, limit):
                    for right in star_decompose(c_set, limit):
                        emit(scheme_concat(scheme_concat(left, word_scheme((a,))), right))
    return tuple(out)


def substitute(scheme: PathScheme, inner: PathScheme, j: int) -> PathScheme:
    """Replace the j-th bubble (1-indexed) by the inner scheme."""
    if not 1 <= j <= len(scheme.bubbles):
        raise SchemeError(f"bubble index {j} out of range")
    left = PathScheme.of(scheme.words[:j], scheme.bubbles[: j - 1])
    right = PathScheme.of(scheme.words[j:], scheme.bubbles[j:])
    return scheme_concat(scheme_concat(left, inner), right)


def decompose_to_preperfect(scheme: PathScheme, limit: Optional[int] = None) -> list:
    """Replace every star bubble by each member of its decomposition."""
    star_positions = [i + 1 for i, b in enumerate(scheme.bubbles) if isinstance(b, Star)]
    if not star_positions:
        return [scheme]
    choices = [star_decompose(scheme.bubbles[j - 1].letters, limit) for j in star_positions]
    out: list = []
    seen: set = set()
    for combo in itertools.product(*choices):
        result = scheme
        # replace right-to-left so earlier indices stay valid
        for j, inner in sorted(zip(star_positions, combo), reverse=True):
            result = substitute(result, inner, j)
        if result not in seen:
            seen.add(result)
            out.append(result)
            if limit is not None and len(out) > limit:
                raise SchemeLimitExceeded(f"pre-perfect expansion exceeds {limit} schemes")
    return out


# -- flattening, upward closures, complements --------------------------------


def flatten(g: Gathering) -> PathScheme:
    """a_1 X_{a_1} a_2 X_{a_1 a_2} ... a_n X_A b_1 X_{A-b_1} ... b_n.

    The n-th bubble (the full star) is the central bubble.
    """
    n = len(g.first)
    words = [(g.first[0],)]
    bubbles: list = []
    for i in range(1, n):
        bubbles.append(Star(frozenset(g.first[: i])))
        words.append((g.first[i],))
    bubbles.append(Star(g.letters))
    words.append((g.last[0],))
    removed = {g.last[0]}
    for j in range(1, n):
        bubbles.append(Star(g.letters - removed))
        words.append((g.last[j],))
        removed.add(g.last[j])
    return PathScheme.of(words, bubbles)


def central_index(g: Gathering) -> int:
    return len(g.first)


def upward_closure_scheme(g: Gathering, w) -> PathScheme:
    """Scheme for the words of L(g) whose center dominates center(w)."""
    c = center(w, g)
    full = Star(g.letters)
    words = [()] + [(l,) for l in c] + [()]
    xi = PathScheme.of(words, (full,) * (len(c) + 1))
    return substitute(flatten(g), xi, central_index(g))


def complement_schemes(g: Gathering, w) -> list:
    """Schemes whose union is L(g) minus the upward closure of w."""
    c = center(w, g)
    out = []
    for i in range(1, len(c) + 1):
        bubbles = tuple(Star(g.letters - {c[j]}) for j in range(i))
        words = [()] + [(c[j],) for j in range(i - 1)] + [()]
        sigma = PathScheme.of(words, bubbles)
        out.append(substitute(flatten(g), sigma, central_index(g)))
    return out


def scheme_upward_closure(scheme: PathScheme, factor: RhoFactor) -> PathScheme:
    """Bubble-wise upward closure of a pre-perfect scheme at a factor."""
    _check_factor(scheme, factor)
    out = word_scheme(scheme.words[0])
    for bubble, part, word in zip(scheme.bubbles, factor.parts, scheme.words[1:]):
        out = scheme_concat(out, upward_closure_scheme(bubble, part))
        out = scheme_concat(out, word_scheme(word))
    return out


def scheme_complement(scheme: PathScheme, factor: RhoFactor) -> list:
    """All single-bubble complement substitutions; union covers L minus closure."""
    _check_factor(scheme, factor)
    out = []
    for i, (bubble, part) in enumerate(zip(scheme.bubbles, factor.parts), start=1):
        for sigma in complement_schemes(bubble, part):
            out.append(substitute(scheme, sigma, i))
    return out


def _check_factor(scheme: PathScheme, factor: RhoFactor) -> None:
    if len(factor.parts) != len(scheme.bubbles):
        raise SchemeError("factor length does not match bubble count")
    for bubble, part in zip(scheme.bubbles, factor.parts):
        if not isinstance(bubble, Gathering):
            raise SchemeError("closure operations need a pre-perfect scheme")
        if not matches_gathering(part, bubble):
            raise SchemeError(f"factor part {part!r} is not in its bubble")


def is_subword(u, w) -> bool:
    u = letters_of(u)
    w = letters_of(w)
    it = iter(w)
    return all(l in it for l in u)


# -- decomposition sizing ------------------------------------------------------

_CATALOG_SIZES = {0: 1, 1: 3, 2: 33, 3: 7891}
_CATALOG_COUNT_MEMO: dict = {}


def star_catalog_size(n: int) -> int:
    """|star_decompose| for an n-letter alphabet, without materializing it.

    Exact for n <= 3; for larger alphabets an upper bound that ignores
    deduplication, which is only ever used to call a product too big.
    """
    if n in _CATALOG_SIZES:
        return _CATALOG_SIZES[n]
    cached = _CATALOG_COUNT_MEMO.get(n)
    if cached is not None:
        return cached
    total = math.factorial(n) ** 2
    sub = [star_catalog_size(k) for k in range(n)]
    pick = [math.comb(n, k) * sub[k] for k in range(n)]
    total += sum(pick) ** 2
    pick_rest = [math.comb(n - 1, k) * sub[k] for k in range(n)]
    total += n * sum(pick_rest) ** 2
    _CATALOG_COUNT_MEMO[n] = total
    return total


def product_size(scheme: PathScheme) -> int:
    """How many pre-perfect schemes the full star expansion would emit."""
    total = 1
    for b in scheme.bubbles:
        if isinstance(b, Star):
            total *= star_catalog_size(len(b.letters))
    return total


# -- text notation ----------------------------------------------------------


def _letters_text(letters: Iterable[Label]) -> str:
    letters = tuple(letters)
    if all(len(l) == 1 for l in letters):
        return "".join(letters)
    # trailing comma disambiguates a lone multi-char label from a char run
    return ",".join(letters) + ("," if len(letters) == 1 else "")


def _word_text(word: tuple) -> str:
    if not word:
        return ""
    if all(len(l) == 1 for l in word):
        return "".join(word)
    return f"[W:{_letters_text(word)}]"


def scheme_to_text(scheme: PathScheme) -> str:
    parts = [_word_text(scheme.words[0])]
    for bubble, word in zip(scheme.bubbles, scheme.words[1:]):
        if isinstance(bubble, Star):
            parts.append(f"[A:{_letters_text(bubble.sorted_letters())}]")
        else:
            parts.append(f"[G:{_letters_text(bubble.first)}/{_letters_text(bubble.last)}]")
        parts.append(_word_text(word))
    return "".join(parts)


def _parse_letters(text: str) -> tuple:
    if not text:
        return ()
    if "," in text:
        return tuple(part for part in text.split(",") if part)
    return tuple(text)


def parse_scheme(text: str) -> PathScheme:
    words = []
    bubbles = []
    current: list = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "]":
            raise SchemeError(f"unbalanced ']' at position {i}")
        if ch != "[":
            current.append(ch)
            i += 1
            continue
        end = text.find("]", i)
        if end < 0:
            raise SchemeError(f"unclosed '[' at position {i}")
        body = text[i + 1 : end]
        if body.startswith("W:"):
            current.extend(_parse_letters(body[2:]))
        else:
            words.append(tuple(current))
            current = []
            if body.startswith("A:"):
                bubbles.append(Star(frozenset(_parse_letters(body[2:]))))
            elif body.startswith("G:"):
                halves = body[2:].split("/")
                if len(halves) != 2:
                    raise SchemeError(f"gathering needs exactly one '/': {body!r}")
                bubbles.append(Gathering.of(_parse_letters(halves[0]), _parse_letters(halves[1])))
            else:
                raise SchemeError(f"unknown bracket form {body!r}")
        i = end + 1
    words.append(tuple(current))
    return PathScheme.of(words, bubbles)
