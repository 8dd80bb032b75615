"""Finite automata over transition labels.

Construction algebra (words, unions, concatenations, sub-alphabet stars,
gathering chains), language tests, products, and desk-scale DFA tooling.
All automata are epsilon-free with integer states numbered deterministically
in construction order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence


class AutomataError(ValueError):
    pass


class StateCapExceeded(RuntimeError):
    """Subset construction or equivalence check would exceed the state cap."""


DEFAULT_STATE_CAP = 10_000

Label = str
Edge = "tuple[int, Label, int]"


@dataclass(frozen=True)
class Nfa:
    """States are 0..num_states-1; initial/accepting are state sets."""

    num_states: int
    alphabet: tuple[Label, ...]
    edges: frozenset
    initial: frozenset
    accepting: frozenset

    @staticmethod
    def of(num_states: int, alphabet: Iterable[Label], edges, initial, accepting) -> "Nfa":
        letters = tuple(sorted(set(alphabet)))
        edge_set = frozenset((p, l, q) for p, l, q in edges)
        ini = frozenset(initial)
        acc = frozenset(accepting)
        for p, l, q in edge_set:
            if not (0 <= p < num_states and 0 <= q < num_states):
                raise AutomataError(f"edge ({p}, {l!r}, {q}) references a state out of range")
            if l not in letters:
                raise AutomataError(f"edge label {l!r} not in alphabet {letters}")
        for q in ini | acc:
            if not 0 <= q < num_states:
                raise AutomataError(f"state {q} out of range")
        return Nfa(num_states, letters, edge_set, ini, acc)

    @property
    def states(self) -> range:
        return range(self.num_states)

    def sorted_edges(self) -> list:
        return sorted(self.edges)


def letters_of(word) -> tuple:
    """A str is a sequence of single-char labels; other sequences are taken as-is."""
    return tuple(word)


def empty_nfa(alphabet: Iterable[Label] = ()) -> Nfa:
    return Nfa.of(0, alphabet, [], [], [])


def from_word(word, alphabet: Iterable[Label] = ()) -> Nfa:
    w = letters_of(word)
    edges = [(i, l, i + 1) for i, l in enumerate(w)]
    return Nfa.of(len(w) + 1, set(w) | set(alphabet), edges, [0], [len(w)])


def star_of_subalphabet(sub: Iterable[Label], alphabet: Iterable[Label] = ()) -> Nfa:
    sub = set(letters_of(sub))
    edges = [(0, l, 0) for l in sub]
    return Nfa.of(1, sub | set(alphabet), edges, [0], [0])


def union(a: Nfa, b: Nfa) -> Nfa:
    off = a.num_states
    edges = set(a.edges) | {(p + off, l, q + off) for p, l, q in b.edges}
    return Nfa.of(
        a.num_states + b.num_states,
        set(a.alphabet) | set(b.alphabet),
        edges,
        set(a.initial) | {q + off for q in b.initial},
        set(a.accepting) | {q + off for q in b.accepting},
    )


def union_all(automata: Sequence[Nfa], alphabet: Iterable[Label] = ()) -> Nfa:
    out = empty_nfa(alphabet)
    for a in automata:
        out = union(out, a)
    return out


def concat(a: Nfa, b: Nfa) -> Nfa:
    off = a.num_states
    edges = set(a.edges) | {(p + off, l, q + off) for p, l, q in b.edges}
    # glue: any edge entering an accepting state of a may instead enter b
    edges |= {
        (p, l, i + off)
        for p, l, q in a.edges
        if q in a.accepting
        for i in b.initial
    }
    initial = set(a.initial)
    if a.initial & a.accepting:
        initial |= {i + off for i in b.initial}
    accepting = {q + off for q in b.accepting}
    if b.initial & b.accepting:
        accepting |= set(a.accepting)
    return Nfa.of(a.num_states + b.num_states, set(a.alphabet) | set(b.alphabet), edges, initial, accepting)


def gathering_nfa(first, last, alphabet: Iterable[Label] = ()) -> Nfa:
    """Chain automaton for the two-permutation pattern.

    Accepts a_1 w_1 ... a_n w_n b_1 v_1 ... b_n v_n where w_i uses only
    {a_1..a_i} and v_j uses only A minus {b_1..b_j}.
    """
    first = letters_of(first)
    last = letters_of(last)
    if not first or len(set(first)) != len(first) or len(set(last)) != len(last):
        raise AutomataError("permutation sequences must be non-empty and duplicate-free")
    if set(first) != set(last):
        raise AutomataError("sequences must be permutations of the same set")
    n = len(first)
    letters = set(first)
    edges = []
    seen = set()
    for i, a in enumerate(first):
        edges.append((i, a, i + 1))
        seen.add(a)
        for l in sorted(seen):
            edges.append((i + 1, l, i + 1))
    remaining = set(letters)
    for j, b in enumerate(last):
        edges.append((n + j, b, n + j + 1))
        remaining.discard(b)
        for l in sorted(remaining):
            edges.append((n + j + 1, l, n + j + 1))
    # state n gets loops from both phases; the edge set dedupes them
    return Nfa.of(2 * n + 1, letters | set(alphabet), edges, [0], [2 * n])


def _step_map(nfa: Nfa) -> dict:
    out: dict = {}
    for p, l, q in nfa.edges:
        out.setdefault((p, l), set()).add(q)
    return out


def accepts(nfa: Nfa, word) -> bool:
    step = _step_map(nfa)
    current = set(nfa.initial)
    for l in letters_of(word):
        current = set().union(*(step.get((p, l), set()) for p in current)) if current else set()
        if not current:
            return False
    return bool(current & nfa.accepting)


def product(a: Nfa, b: Nfa) -> Nfa:
    """Automaton for the intersection of the two languages."""
    step_a = _step_map(a)
    step_b = _step_map(b)
    labels = sorted(set(a.alphabet) & set(b.alphabet))
    start = sorted((p, q) for p in a.initial for q in b.initial)
    index = {}
    order = []
    for s in start:
        index[s] = len(order)
        order.append(s)
    queue = deque(start)
    edges = []
    while queue:
        p, q = pair = queue.popleft()
        for l in labels:
            for tp in sorted(step_a.get((p, l), ())):
                for tq in sorted(step_b.get((q, l), ())):
                    target = (tp, tq)
                    if target not in index:
                        index[target] = len(order)
                        order.append(target)
                        queue.append(target)
                    edges.append((index[pair], l, index[target]))
    accepting = [i for i, (p, q) in enumerate(order) if p in a.accepting and q in b.accepting]
    return Nfa.of(len(order), set(a.alphabet) | set(b.alphabet), edges, range(len(start)), accepting)


def is_empty(nfa: Nfa) -> bool:
    step = _step_map(nfa)
    seen = set(nfa.initial)
    queue = deque(sorted(seen))
    while queue:
        p = queue.popleft()
        if p in nfa.accepting:
            return False
        for (src, _), targets in step.items():
            if src != p:
                continue
            for q in targets:
                if q not in seen:
                    seen.add(q)
                    queue.append(q)
    return not (seen & nfa.accepting)


def determinize(nfa: Nfa, alphabet: Iterable[Label] = (), cap: int = DEFAULT_STATE_CAP) -> Nfa:
    """Complete subset-construction DFA over the union of the given alphabets."""
    letters = tuple(sorted(set(nfa.alphabet) | set(alphabet)))
    step = _step_map(nfa)
    start = frozenset(nfa.initial)
    index = {start: 0}
    order = [start]
    queue = deque([start])
    edges = []
    while queue:
        subset = queue.popleft()
        for l in letters:
            target = frozenset().union(*(step.get((p, l), set()) for p in subset)) if subset else frozenset()
            if target not in index:
                if len(order) >= cap:
                    raise StateCapExceeded(f"determinization needs more than {cap} states")
                index[target] = len(order)
                order.append(target)
                queue.append(target)
            edges.append((index[subset], l, index[target]))
    accepting = [i for i, s in enumerate(order) if s & nfa.accepting]
    return Nfa.of(len(order), letters, edges, [0], accepting)


def _as_complete_dfa(dfa: Nfa) -> dict:
    if len(dfa.initial) != 1:
        raise AutomataError("minimization needs a determinized automaton (single initial state)")
    delta = {}
    for p, l, q in dfa.edges:
        if (p, l) in delta and delta[(p, l)] != q:
            raise AutomataError("minimization needs a deterministic automaton")
        delta[(p, l)] = q
    for p in dfa.states:
        for l in dfa.alphabet:
            if (p, l) not in delta:
                raise AutomataError("minimization needs a complete automaton; determinize first")
    return delta


def minimize(dfa: Nfa) -> Nfa:
    """Hopcroft minimization of a complete DFA, renumbered canonically.

    Canonical numbering is breadth-first from the initial state with letters
    in sorted order, so two minimized automata are isomorphic iff equal.
    """
    delta = _as_complete_dfa(dfa)
    inverse: dict = {}
    for (p, l), q in delta.items():
        inverse.setdefault((q, l), set()).add(p)
    accepting = set(dfa.accepting)
    rest = set(dfa.states) - accepting
    partition = [s for s in (accepting, rest) if s]
    work = [s.copy() for s in partition]
    while work:
        splitter = work.pop()
        for l in dfa.alphabet:
            preimage = set()
            for q in splitter:
                preimage |= inverse.get((q, l), set())
            refined = []
            for block in partition:
                inside = block & preimage
                outside = block - preimage
                if inside and outside:
                    refined.extend((inside, outside))
                    if block in work:
                        work.remove(block)
                        work.extend((inside, outside))
                    else:
                        work.append(min(inside, outside, key=len))
                else:
                    refined.append(block)
            partition = refined
    block_of = {}
    for i, block in enumerate(partition):
        for q in block:
            block_of[q] = i
    # breadth-first renumber from the initial block
    (init,) = dfa.initial
    rename = {block_of[init]: 0}
    queue = deque([block_of[init]])
    reps = {block_of[init]: init}
    edges = []
    while queue:
        b = queue.popleft()
        p = reps[b]
        for l in dfa.alphabet:
            tb = block_of[delta[(p, l)]]
            if tb not in rename:
                rename[tb] = len(rename)
                reps[tb] = delta[(p, l)]
                queue.append(tb)
            edges.append((rename[b], l, rename[tb]))
    new_accepting = {rename[block_of[q]] for q in accepting if block_of[q] in rename}
    return Nfa.of(len(rename), dfa.alphabet, edges, [0], new_accepting)


def canonical_dfa(nfa: Nfa, alphabet: Iterable[Label] = (), cap: int = DEFAULT_STATE_CAP) -> Nfa:
    """Minimal complete DFA in canonical numbering; equal iff same language."""
    return minimize(determinize(nfa, alphabet, cap))


def complement(dfa: Nfa) -> Nfa:
    _as_complete_dfa(dfa)
    return Nfa.of(
        dfa.num_states,
        dfa.alphabet,
        dfa.edges,
        dfa.initial,
        set(dfa.states) - set(dfa.accepting),
    )


def equivalent(a: Nfa, b: Nfa, cap: int = DEFAULT_STATE_CAP) -> bool:
    universe = set(a.alphabet) | set(b.alphabet)
    da = determinize(a, universe, cap)
    db = determinize(b, universe, cap)
    if not is_empty(product(da, complement(db))):
        return False
    return is_empty(product(db, complement(da)))


def to_dot(nfa: Nfa, name: str = "nfa") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  node [shape=circle];']
    for q in nfa.states:
        shape = "doublecircle" if q in nfa.accepting else "circle"
        lines.append(f'  q{q} [shape={shape}];')
    for i, q in enumerate(sorted(nfa.initial)):
        lines.append(f"  __start{i} [shape=point];")
        lines.append(f"  __start{i} -> q{q};")
    grouped: dict = {}
    for p, l, q in nfa.edges:
        grouped.setdefault((p, q), []).append(l)
    for (p, q), labels in sorted(grouped.items()):
        text = ",".join(sorted(labels))
        lines.append(f'  q{p} -> q{q} [label="{text}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
