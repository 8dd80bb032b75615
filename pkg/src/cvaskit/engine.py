"""Decomposition-tree engine for the recognizing automaton.

For fixed rational endpoints the set of transition words firable between
them is regular.  The automaton is produced by an alternating refinement
tree over path schemes: even levels split a scheme into perfect
refinements, odd levels carve a witnessed upward closure out of a perfect
scheme and recurse on the complement.  The tree invariants are

  C0  every node's scheme language meets the firable language, and every
      odd-level node is perfect,
  C1  children attached at odd levels weigh no more than their parent,
  C2  unmarked children attached at even levels weigh strictly less than
      their parent,
  C3  marked nodes are leaves whose whole scheme language is firable,
  C4  at every stage the leaf languages jointly cover the firable language.

C2 across two levels gives a strict lexicographic descent between a node
and its even-level grandchildren, so expansion halts.  The union of the
marked leaf automata is the result: a finished unmarked leaf either
misses the firable language entirely, repeats a scheme another branch
already accounts for, or carries only words some marked leaf already
accepts, so all three kinds drop out of the union.

Marked leaves accumulate into a covered language, kept as a minimal DFA
and refreshed only between tree levels.  A refinement or complement
whose whole language is covered is never attached: its firable words are
accepted already, so the automaton stays exact while the tree stays
small.  Even-level refinement explores catalog substitutions star slot
by star slot and abandons a branch as soon as a sweep rules its chain
infeasible or the covered language absorbs it, which keeps full catalog
products from ever being enumerated.

Expansion order is breadth-first, leftmost leaf first, and every
enumeration below is deterministic, so identical inputs rebuild an
identical tree.  An optional thread pool expands whole frontiers
concurrently; children are merged in frontier order and the covered
language only changes between levels, keeping the tree bit-identical to
the sequential run.
"""

from __future__ import annotations

import itertools
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .cvas import Cvas, config, member
from .decide import (
    DecisionCapExceeded,
    chain_feasible,
    chain_of_scheme,
    chain_plausible,
    narrow_scheme,
)
from .linsolve import SolverBudget, SolverBudgetExceeded
from .nfa import (
    Nfa,
    StateCapExceeded,
    accepts,
    canonical_dfa,
    empty_nfa,
    union_all,
)
from .schemes import (
    PathScheme,
    SchemeLimitExceeded,
    Star,
    bubble_scheme,
    is_preperfect,
    lex_leq,
    lex_less,
    scheme_complement,
    scheme_to_nfa,
    scheme_to_text,
    scheme_upward_closure,
    star_decompose,
    substitute,
    weight,
)
from .witness import NoWitnessError, lift_run_witness

__all__ = [
    "EngineError",
    "EngineCapExceeded",
    "TreeNode",
    "BuildResult",
    "build_nfa",
    "expand_even_leaf",
    "expand_odd_leaf",
    "audit_tree",
    "dump_tree",
    "tree_nodes",
]

DEFAULT_NODE_CAP = 20000
DEFAULT_EXPANSION_CAP = 200_000

_UNSET = object()


class EngineError(RuntimeError):
    """Internal inconsistency while growing the tree."""


class EngineCapExceeded(EngineError):
    """A resource cap fired; carries the partial tree built so far."""

    def __init__(self, message: str, tree: Optional["TreeNode"] = None, metrics: Optional[dict] = None):
        super().__init__(message)
        self.tree = tree
        self.metrics = metrics or {}


@dataclass(eq=False)
class TreeNode:
    """One refinement step; ``marked`` nodes certify a firable sublanguage."""

    scheme: PathScheme
    level: int
    marked: bool
    provenance: str
    children: list = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class BuildResult:
    nfa: Nfa
    tree: Optional[TreeNode]
    metrics: dict


def tree_nodes(tree: Optional[TreeNode]) -> Iterator[tuple]:
    """Depth-first (node, parent) pairs, children in attachment order."""
    if tree is None:
        return
    stack = [(tree, None)]
    while stack:
        node, parent = stack.pop()
        yield node, parent
        for child in reversed(node.children):
            stack.append((child, node))


class _Gate:
    """Memoized emptiness tests for scheme languages against fixed endpoints.

    Every scheme here is a chain (self-loop segments joined by single
    letters), so one boundary feasibility check per distinct scheme
    settles each question exactly.
    """

    def __init__(self, system: Cvas, x, y, budget: Optional[SolverBudget]):
        self.system = system
        self.x = x
        self.y = y
        self.budget = budget
        self._memo: dict = {}
        self._quick: dict = {}
        self._narrow_memo: dict = {}
        self._lock = threading.Lock()
        self.checks = 0

    def feasible(self, scheme: PathScheme) -> bool:
        hit = self._memo.get(scheme)
        if hit is None:
            chain = chain_of_scheme(scheme, self.system)
            hit = chain_feasible(chain, self.x, self.y, self.budget)
            with self._lock:
                self.checks += 1
            self._memo[scheme] = hit
        return hit

    def plausible(self, scheme: PathScheme) -> bool:
        """Sweep-only filter; False is definitive, True is inconclusive."""
        hit = self._memo.get(scheme)
        if hit is not None:
            return hit
        hit = self._quick.get(scheme)
        if hit is None:
            hit = chain_plausible(chain_of_scheme(scheme, self.system), self.x, self.y)
            self._quick[scheme] = hit
        return hit

    def narrowed(self, scheme: PathScheme) -> Optional[PathScheme]:
        hit = self._narrow_memo.get(scheme, _UNSET)
        if hit is _UNSET:
            hit = narrow_scheme(scheme, self.system, self.x, self.y, self.budget)
            with self._lock:
                self.checks += 1
            self._narrow_memo[scheme] = hit
            # narrowing settles feasibility as a byproduct and is idempotent
            self._memo.setdefault(scheme, hit is not None)
            if hit is not None:
                self._memo.setdefault(hit, True)
                self._narrow_memo.setdefault(hit, hit)
        return hit


def _root_scheme(system: Cvas) -> PathScheme:
    return bubble_scheme(Star.of(system.labels))


def _weight_size(system: Cvas) -> int:
    return max(1, len(system.labels))


def _absorbed(nfa: Nfa, cover: Nfa) -> bool:
    """True when every word of the automaton's language is in the cover.

    cover must be a complete DFA over the same alphabet; the product walk
    looks for a word the automaton accepts and the cover rejects and bails
    out as soon as one is reachable.
    """
    delta = {(p, l): q for p, l, q in cover.edges}
    (start,) = cover.initial
    rejecting = set(cover.states) - set(cover.accepting)
    step: dict = {}
    for p, l, q in nfa.edges:
        step.setdefault((p, l), []).append(q)
    seen = {(p, start) for p in nfa.initial}
    queue = deque(sorted(seen))
    while queue:
        p, q = queue.popleft()
        if p in nfa.accepting and q in rejecting:
            return False
        for l in cover.alphabet:
            tq = delta[(q, l)]
            for tp in step.get((p, l), ()):
                pair = (tp, tq)
                if pair not in seen:
                    seen.add(pair)
                    queue.append(pair)
    return True


def _cover_test(cover: Optional[Nfa], labels, counter: Optional[list] = None):
    """Memoized predicate telling whether a scheme's language is covered.

    Returns None when there is no cover yet.  Positive answers bump
    counter[0]; each call site consults the predicate exactly once per
    pruning decision, so the counter counts pruned branches.
    """
    if cover is None:
        return None
    lock = threading.Lock()
    memo: dict = {}

    def covered(scheme: PathScheme) -> bool:
        hit = memo.get(scheme)
        if hit is None:
            hit = _absorbed(scheme_to_nfa(scheme, labels), cover)
            memo[scheme] = hit
        if hit and counter is not None:
            with lock:
                counter[0] += 1
        return hit

    return covered


def _perfect_cover(
    scheme: PathScheme,
    gate: _Gate,
    covered: Optional[Callable[[PathScheme], bool]],
    expansion_cap: Optional[int],
) -> list:
    """Perfect refinements of ``scheme`` that still carry uncovered words.

    The scheme is narrowed first: each star bubble keeps only the loops
    some admissible run between the endpoints can still use, which leaves
    the scheme's share of the language intact and never adds weight.  Star
    slots are then substituted by catalog schemes one slot at a time,
    leftmost first; a partial substitution is dropped as soon as a sweep
    rules its chain infeasible or the covered language absorbs it.  Every
    further substitution only shrinks the language, so nothing feasible
    and uncovered is ever lost.  Fully substituted schemes are kept when
    an exact feasibility check passes.  Returns [] when the scheme misses
    the firable language or the cover absorbs it whole.
    """
    slim = gate.narrowed(scheme)
    if slim is None:
        return []
    if covered is not None and covered(slim):
        return []
    out: list = []
    emitted: set = set()
    stack = [slim]
    explored = 0
    while stack:
        cur = stack.pop()
        explored += 1
        if expansion_cap is not None and explored > expansion_cap:
            raise EngineCapExceeded(
                f"refinement of {scheme_to_text(scheme)} explored more than"
                f" {expansion_cap} partial substitutions"
            )
        slot = next((i for i, b in enumerate(cur.bubbles) if isinstance(b, Star)), None)
        if slot is None:
            if cur in emitted:
                continue
            emitted.add(cur)
            if gate.feasible(cur):
                out.append(cur)
            continue
        # push in reverse so the stack pops catalog entries in order
        for inner in reversed(star_decompose(cur.bubbles[slot].letters)):
            nxt = substitute(cur, inner, slot + 1)
            if not gate.plausible(nxt):
                continue
            if covered is not None and covered(nxt):
                continue
            stack.append(nxt)
    return out


def expand_even_leaf(
    node: TreeNode,
    system: Cvas,
    x,
    y,
    *,
    gate: Optional[_Gate] = None,
    budget: Optional[SolverBudget] = None,
    covered: Optional[Callable[[PathScheme], bool]] = None,
    expansion_cap: Optional[int] = DEFAULT_EXPANSION_CAP,
) -> list:
    """Children of an unmarked even-level leaf: its perfect refinements.

    A leaf whose scheme no longer meets the firable language gets no
    children and simply finishes, as does one whose whole language the
    covered predicate absorbs.  Without a covered predicate, a feasible
    leaf must produce at least one refinement because the catalog
    substitutions cover its language.
    """
    if node.marked or node.level % 2 != 0 or not node.is_leaf:
        raise EngineError("even expansion applies to unmarked even-level leaves")
    x = config(x)
    y = config(y)
    if gate is None:
        gate = _Gate(system, x, y, budget)
    size = _weight_size(system)
    bound = weight(node.scheme, size)
    refinements = _perfect_cover(node.scheme, gate, covered, expansion_cap)
    if not refinements and covered is None and gate.narrowed(node.scheme) is not None:
        raise EngineError("no perfect refinement for a leaf meeting the language")
    children = []
    for refined in refinements:
        if not lex_leq(weight(refined, size), bound):
            raise EngineError("refinement weight exceeds its parent")
        children.append(TreeNode(refined, node.level + 1, False, "decomposition"))
    return children


def expand_odd_leaf(
    node: TreeNode,
    system: Cvas,
    x,
    y,
    *,
    gate: Optional[_Gate] = None,
    budget: Optional[SolverBudget] = None,
    max_center_len: int = 12,
    covered: Optional[Callable[[PathScheme], bool]] = None,
) -> list:
    """Children of an unmarked odd-level leaf.

    A lifted run witness yields a factor of the scheme; its upward closure
    inside the scheme is entirely firable and becomes a marked leaf.  The
    complement schemes pin down where a word leaves that closure; each one
    is narrowed to the loops admissible runs can still use, dropped when
    that proves it empty or the covered language absorbs it, and attached
    unmarked otherwise, strictly lighter than the parent.
    """
    if node.marked or node.level % 2 != 1 or not node.is_leaf:
        raise EngineError("odd expansion applies to unmarked odd-level leaves")
    x = config(x)
    y = config(y)
    if gate is None:
        gate = _Gate(system, x, y, budget)
    lifted = lift_run_witness(
        node.scheme, x, y, system, max_center_len=max_center_len, budget=budget
    )
    size = _weight_size(system)
    bound = weight(node.scheme, size)
    closure = scheme_upward_closure(node.scheme, lifted.factor)
    children = [TreeNode(closure, node.level + 1, True, "upward-closure")]
    for rest in scheme_complement(node.scheme, lifted.factor):
        if covered is not None and covered(rest):
            continue
        slim = gate.narrowed(rest)
        if slim is None:
            continue
        if slim != rest and covered is not None and covered(slim):
            continue
        if not lex_less(weight(slim, size), bound):
            raise EngineError("complement weight does not drop")
        children.append(TreeNode(slim, node.level + 1, False, "complement"))
    return children


def _expand(
    node: TreeNode,
    system: Cvas,
    x,
    y,
    gate: _Gate,
    budget: Optional[SolverBudget],
    covered,
    expansion_cap: Optional[int],
    max_center_len: int,
) -> list:
    if node.level % 2 == 0:
        return expand_even_leaf(
            node,
            system,
            x,
            y,
            gate=gate,
            budget=budget,
            covered=covered,
            expansion_cap=expansion_cap,
        )
    return expand_odd_leaf(
        node,
        system,
        x,
        y,
        gate=gate,
        budget=budget,
        max_center_len=max_center_len,
        covered=covered,
    )


def build_nfa(
    system: Cvas,
    x,
    y,
    *,
    max_nodes: int = DEFAULT_NODE_CAP,
    budget: Optional[SolverBudget] = None,
    expansion_cap: Optional[int] = DEFAULT_EXPANSION_CAP,
    max_center_len: int = 12,
    parallel: int = 0,
    step_hook: Optional[Callable[[TreeNode], None]] = None,
) -> BuildResult:
    """Automaton recognizing exactly the words firable from x to y.

    Returns the union automaton of the finished tree's marked leaf schemes
    plus the tree itself and build metrics.  An empty firable language
    yields an automaton with no accepting run and no tree.  Caps raise
    EngineCapExceeded carrying the partial tree.

    A child whose scheme already appeared elsewhere in the tree is not
    attached again: the first copy's subtree accounts for its whole share
    of the language.  The one exception is a child repeating its own
    parent's scheme, which records the parity step of a scheme that is
    already pre-perfect.  A child whose whole language the marked leaves
    already accept is likewise skipped; the covered language is refreshed
    between levels, so a frontier only prunes against marks from earlier
    levels and the tree does not depend on expansion interleaving.
    """
    x = config(x)
    y = config(y)
    if len(x) != system.dim or len(y) != system.dim:
        raise EngineError("endpoint arity does not match the system")
    gate = _Gate(system, x, y, budget)
    root_scheme = _root_scheme(system)
    metrics = {
        "nodes": 0,
        "expansions": 0,
        "decisions": 0,
        "marked_leaves": 0,
        "duplicates_skipped": 0,
        "covered_skips": 0,
    }
    if not gate.feasible(root_scheme):
        metrics["decisions"] = gate.checks
        metrics["nfa_states"] = 0
        metrics["max_weight"] = weight(root_scheme, _weight_size(system))
        return BuildResult(empty_nfa(system.labels), None, metrics)

    root = TreeNode(root_scheme, 0, False, "root")
    metrics["nodes"] = 1
    attached = {root_scheme}
    cover: Optional[Nfa] = None
    pending_marked: list = []
    skips = [0]

    def cap_state() -> dict:
        metrics["decisions"] = gate.checks
        metrics["covered_skips"] = skips[0]
        return dict(metrics)

    def fold_cover() -> None:
        nonlocal cover
        for leaf in pending_marked:
            leaf_nfa = scheme_to_nfa(leaf.scheme, system.labels)
            if cover is not None and _absorbed(leaf_nfa, cover):
                continue
            joined = (
                leaf_nfa if cover is None else union_all([cover, leaf_nfa], system.labels)
            )
            cover = canonical_dfa(joined, system.labels)
        pending_marked.clear()

    def expand_one(node: TreeNode, covered) -> list:
        try:
            return _expand(
                node, system, x, y, gate, budget, covered, expansion_cap, max_center_len
            )
        except EngineCapExceeded as exc:
            raise EngineCapExceeded(str(exc), tree=root, metrics=cap_state()) from exc
        except (
            SolverBudgetExceeded,
            DecisionCapExceeded,
            SchemeLimitExceeded,
            StateCapExceeded,
        ) as exc:
            raise EngineCapExceeded(str(exc), tree=root, metrics=cap_state()) from exc
        except NoWitnessError as exc:
            raise EngineError(f"odd-level leaf lost the language: {exc}") from exc

    pool = ThreadPoolExecutor(max_workers=parallel) if parallel > 0 else None
    try:
        frontier = [root]
        while frontier:
            try:
                fold_cover()
            except StateCapExceeded as exc:
                raise EngineCapExceeded(str(exc), tree=root, metrics=cap_state()) from exc
            covered = _cover_test(cover, system.labels, skips)
            if pool is not None:
                expansions = list(pool.map(lambda n: expand_one(n, covered), frontier))
            else:
                expansions = [expand_one(node, covered) for node in frontier]
            next_frontier: list = []
            for node, children in zip(frontier, expansions):
                for child in children:
                    if child.scheme in attached and child.scheme != node.scheme:
                        metrics["duplicates_skipped"] += 1
                        continue
                    attached.add(child.scheme)
                    node.children.append(child)
                    metrics["nodes"] += 1
                    if metrics["nodes"] > max_nodes:
                        raise EngineCapExceeded(
                            f"tree exceeds {max_nodes} nodes",
                            tree=root,
                            metrics=cap_state(),
                        )
                    if child.marked:
                        pending_marked.append(child)
                    else:
                        next_frontier.append(child)
                metrics["expansions"] += 1
                if step_hook is not None:
                    step_hook(root)
            frontier = next_frontier
    finally:
        if pool is not None:
            pool.shutdown(wait=False)

    marked = [leaf for leaf in _leaves_in_order(root) if leaf.marked]
    nfa = union_all(
        [scheme_to_nfa(leaf.scheme, system.labels) for leaf in marked], system.labels
    )
    metrics["decisions"] = gate.checks
    metrics["covered_skips"] = skips[0]
    metrics["marked_leaves"] = len(marked)
    metrics["nfa_states"] = nfa.num_states
    size = _weight_size(system)
    metrics["max_weight"] = max(
        (weight(node.scheme, size) for node, _ in tree_nodes(root)),
        key=lambda w: tuple(reversed(w)),
    )
    return BuildResult(nfa, root, metrics)


def _leaves_in_order(tree: TreeNode) -> list:
    out = []

    def visit(node: TreeNode) -> None:
        if node.is_leaf:
            out.append(node)
        for child in node.children:
            visit(child)

    visit(tree)
    return out


def _all_words(labels, cap: int) -> list:
    out = [()]
    for n in range(1, cap + 1):
        out.extend(itertools.product(labels, repeat=n))
    return out


def _accepted_words(nfa: Nfa, cap: int) -> list:
    """Words of length at most cap accepted by the automaton."""
    step: dict = {}
    for p, l, q in nfa.edges:
        step.setdefault((p, l), set()).add(q)
    out = []

    def advance(states, letter):
        nxt: set = set()
        for p in states:
            nxt |= step.get((p, letter), set())
        return frozenset(nxt)

    def visit(word, states):
        if states & set(nfa.accepting):
            out.append(word)
        if len(word) == cap:
            return
        for letter in nfa.alphabet:
            nxt = advance(states, letter)
            if nxt:
                visit(word + (letter,), nxt)

    visit((), frozenset(nfa.initial))
    return out


def audit_tree(
    tree: Optional[TreeNode],
    system: Cvas,
    x,
    y,
    word_len_cap: int = 6,
    budget: Optional[SolverBudget] = None,
) -> tuple:
    """Check C0 through C4 on a (possibly partial) tree.

    C0 through C3 are checked exactly per node; C4 and the marked-leaf
    subset relation are checked over every word up to word_len_cap.
    Returns a tuple of violation strings, empty when the tree is sound.
    """
    x = config(x)
    y = config(y)
    gate = _Gate(system, x, y, budget)
    size = _weight_size(system)
    problems = []

    leaf_nfas = []
    for node, parent in tree_nodes(tree):
        tag = scheme_to_text(node.scheme)
        if parent is not None and node.level != parent.level + 1:
            problems.append(f"level skip at {tag}")
        if node.marked and node.children:
            problems.append(f"C3: marked node {tag} is not a leaf")
        if not gate.feasible(node.scheme):
            problems.append(f"C0: {tag} misses the firable language")
        if node.level % 2 == 1 and not is_preperfect(node.scheme):
            problems.append(f"C0: odd-level {tag} is not pre-perfect")
        if parent is not None:
            w_node = weight(node.scheme, size)
            w_parent = weight(parent.scheme, size)
            if node.level % 2 == 1 and not lex_leq(w_node, w_parent):
                problems.append(f"C1: {tag} outweighs its parent")
            if node.level % 2 == 0 and not node.marked and not lex_less(w_node, w_parent):
                problems.append(f"C2: {tag} does not drop below its parent")
        if node.is_leaf:
            leaf_nfa = scheme_to_nfa(node.scheme, system.labels)
            leaf_nfas.append(leaf_nfa)
            if node.marked:
                for word in _accepted_words(leaf_nfa, word_len_cap):
                    if not member(system, word, x, y, budget):
                        problems.append(
                            f"C3: marked {tag} accepts unfirable {'.'.join(word) or 'empty word'}"
                        )
                        break

    for word in _all_words(system.labels, word_len_cap):
        if member(system, word, x, y, budget):
            if not any(accepts(a, word) for a in leaf_nfas):
                problems.append(
                    f"C4: firable {'.'.join(word) or 'empty word'} escapes every leaf"
                )
    return tuple(problems)


def dump_tree(tree: Optional[TreeNode], size: Optional[int] = None) -> str:
    """Stable one-node-per-line rendering with level, mark, scheme, weight."""
    if tree is None:
        return "<empty>"
    if size is None:
        size = max(
            [1] + [len(w) for node, _ in tree_nodes(tree) for w in [weight(node.scheme)]]
        )
    lines = []

    def visit(node: TreeNode, depth: int) -> None:
        mark = "*" if node.marked else "-"
        lines.append(
            f"{'  ' * depth}[{node.level}]{mark} {scheme_to_text(node.scheme)}"
            f" w={weight(node.scheme, size)}"
        )
        for child in node.children:
            visit(child, depth + 1)

    visit(tree, 0)
    return "\n".join(lines)
