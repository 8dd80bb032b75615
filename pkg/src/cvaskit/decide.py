"""Reachability decisions for automaton-constrained continuous runs.

The question: given a finite automaton over transition labels and two
configurations, does some accepted word fire from the first configuration
to exactly the second? Any firable word walks the automaton through a
sequence of strongly connected segments joined by one-shot bridge edges,
and within a segment the edge repetition counts are free. Feasibility
therefore splits into

  * an exact linear program: one mass variable per segment edge (strictly
    positive, unbounded above), one fraction per bridge (in (0,1], since a
    bridge fires exactly once), with nonnegativity of every segment
    boundary configuration and equality at the end; and
  * per-segment activation orders: a token starting at the segment entry
    unlocks edges one at a time, walking only unlocked edges, where an
    edge may unlock only once every counter it decreases is positive at
    the entry or is increased by an already unlocked edge. The mirror
    condition runs backwards from the segment exit.

Sufficiency: unlock edges with cascading tiny fractions (each later step
far smaller than the previous), carry the bulk masses in many small
rounds of covering cycles inside the segment, and close with the reversed
cascade; intermediate configurations stay on a convex path between the
boundary configurations, which the linear program keeps nonnegative.
Necessity: read the masses, boundary configurations, and first/last
occurrence orders off an actual run.

Chain automata (a line of states with self-loops, the shape of path
scheme languages) get a fast path with no support enumeration: admissible
loop sets over a chain are closed under union because two runs interleave
at half the fractions, so a pruning fixpoint over the full loop set is
exact. General automata enumerate edge supports outright, which is exact
but only sized for small products.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .cvas import Cvas, config, prefix_feasible, witness_fractions
from .linsolve import (
    EQ,
    GE,
    GT,
    LE,
    LinearSystem,
    SolverBudget,
    con,
    maximize,
    solve_feasibility,
)
from .nfa import Nfa
from .rational import ONE, ZERO, rat
from .schemes import Gathering, PathScheme, Star, is_preperfect


class DecideError(ValueError):
    """Malformed decision query: alphabet or arity mismatch, bad scheme."""


class DecisionCapExceeded(RuntimeError):
    """The instance exceeds a hard resource cap; never a silent wrong answer."""


DEFAULT_EDGE_CAP = 14


# -- products ----------------------------------------------------------------


@dataclass(frozen=True)
class ProductEdge:
    src: int
    label: str
    effect: tuple
    tgt: int


@dataclass(frozen=True)
class CvassProduct:
    """An automaton whose edges carry the counter effects of their labels."""

    num_states: int
    edges: tuple
    initial: frozenset
    accepting: frozenset
    start: tuple
    end: tuple


def cvass_product(nfa: Nfa, system: Cvas, x, y) -> CvassProduct:
    x = config(x)
    y = config(y)
    if len(x) != system.dim or len(y) != system.dim:
        raise DecideError("configuration arity does not match the system")
    labels = set(system.labels)
    missing = sorted(l for l in nfa.alphabet if l not in labels)
    if missing:
        raise DecideError(f"automaton labels missing from the system: {missing}")
    edges = tuple(ProductEdge(p, l, system.effect(l), q) for p, l, q in nfa.sorted_edges())
    return CvassProduct(nfa.num_states, edges, nfa.initial, nfa.accepting, x, y)


def _dec(effect) -> frozenset:
    return frozenset(c for c, v in enumerate(effect) if v < 0)


def _inc(effect) -> frozenset:
    return frozenset(c for c, v in enumerate(effect) if v > 0)


def _pos(cfg) -> frozenset:
    return frozenset(c for c, v in enumerate(cfg) if v > 0)


def _productive(nfa: Nfa):
    """States and edges on some initial-to-accepting walk, or None if none."""
    fwd = {}
    bwd = {}
    for p, l, q in nfa.edges:
        fwd.setdefault(p, set()).add(q)
        bwd.setdefault(q, set()).add(p)

    def closure(seeds, adj):
        seen = set(seeds)
        stack = list(seeds)
        while stack:
            s = stack.pop()
            for t in adj.get(s, ()):
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return seen

    reach = closure(nfa.initial, fwd)
    coreach = closure(nfa.accepting, bwd)
    alive = reach & coreach
    if not alive:
        return None
    edges = [(p, l, q) for p, l, q in nfa.sorted_edges() if p in alive and q in alive]
    return alive, edges, nfa.initial & alive, nfa.accepting & alive


# -- chain automata ----------------------------------------------------------


@dataclass(frozen=True)
class _Loop:
    label: str
    effect: tuple


@dataclass(frozen=True)
class Chain:
    """Segments of self-loops joined by links.

    links[s] sits between segments s and s+1: a letter edge, or None for a
    silent junction where two loop segments abut without consuming a letter
    (the configurations on both sides agree exactly).
    """

    segments: tuple
    links: tuple


def chain_of_scheme(scheme: PathScheme, system: Cvas) -> Chain:
    """The chain automaton of a path scheme, bubbles expanded in place."""
    return _scheme_chain(scheme, system)[0]


def chain_of_scheme_with_stars(scheme: PathScheme, system: Cvas):
    """The chain plus, per star bubble position (1-indexed), its segment."""
    chain, star_seg, _ = _scheme_chain(scheme, system)
    return chain, star_seg


def chain_of_scheme_with_spans(scheme: PathScheme, system: Cvas):
    """The chain plus, per bubble, its segment footprint.

    Span entries align with scheme.bubbles: ("star", s) for a star living
    entirely in segment s (entry = entry of s, exit = exit of s), and
    ("gath", p, q) for a gathering whose entry is the exit of segment p
    (just before its first mandatory letter) and whose exit is the entry
    of segment q (just after its last mandatory letter).
    """
    chain, _, spans = _scheme_chain(scheme, system)
    return chain, spans


def _scheme_chain(scheme: PathScheme, system: Cvas):
    labels = set(system.labels)
    bad = sorted(l for l in scheme.alphabet if l not in labels)
    if bad:
        raise DecideError(f"scheme labels missing from the system: {bad}")
    segments = []
    links = []
    star_seg: dict = {}
    spans = []
    current: list = []
    dirty = False

    def advance(label):
        nonlocal current, dirty
        segments.append(tuple(current))
        links.append(_Loop(label, system.effect(label)))
        current = []
        dirty = False

    def junction():
        nonlocal current, dirty
        segments.append(tuple(current))
        links.append(None)
        current = []
        dirty = False

    for i, word in enumerate(scheme.words):
        for l in word:
            advance(l)
        if i < len(scheme.bubbles):
            bubble = scheme.bubbles[i]
            if isinstance(bubble, Star):
                if dirty:
                    junction()
                star_seg[i + 1] = len(segments)
                spans.append(("star", len(segments)))
                current = [_Loop(l, system.effect(l)) for l in sorted(bubble.letters)]
                dirty = True
            else:
                entry_seg = len(segments)
                for j, a in enumerate(bubble.first):
                    advance(a)
                    allowed = sorted(bubble.first[: j + 1])
                    current = [_Loop(l, system.effect(l)) for l in allowed]
                    dirty = True
                banned = set()
                for b in bubble.last:
                    advance(b)
                    banned.add(b)
                    rest = sorted(bubble.letters - banned)
                    current = [_Loop(l, system.effect(l)) for l in rest]
                dirty = False
                spans.append(("gath", entry_seg, len(segments)))
    segments.append(tuple(current))
    return Chain(tuple(segments), tuple(links)), star_seg, tuple(spans)


def _chain_of_subgraph(states, edges, initial, accepting, system: Cvas) -> Optional[Chain]:
    """Recognize a trimmed subgraph as a chain with self-loops, else None."""
    if len(initial) != 1 or len(accepting) != 1:
        return None
    (start,) = initial
    (end,) = accepting
    loops: dict = {q: set() for q in states}
    advances: dict = {}
    for p, l, q in edges:
        if p == q:
            loops[p].add(l)
        else:
            advances.setdefault(p, []).append((l, q))
    order = [start]
    seen = {start}
    cur = start
    while cur != end:
        outs = advances.get(cur, [])
        if len(outs) != 1:
            return None
        label, nxt = outs[0]
        if nxt in seen:
            return None
        order.append(nxt)
        seen.add(nxt)
        cur = nxt
    if advances.get(end):
        return None
    if seen != set(states):
        return None
    segments = tuple(
        tuple(_Loop(l, system.effect(l)) for l in sorted(loops[q])) for q in order
    )
    links = tuple(
        _Loop(advances[q][0][0], system.effect(advances[q][0][0])) for q in order[:-1]
    )
    return Chain(segments, links)


def _saturate_loops(loop_items, fireable, unlock, P):
    """Fixpoint firing within one segment; returns the fired keys."""
    fired = set()
    changed = True
    while changed:
        changed = False
        for key, loop in loop_items:
            if key in fired:
                continue
            if fireable(loop.effect) <= P:
                fired.add(key)
                P |= unlock(loop.effect)
                changed = True
    return fired


def _chain_sweep(chain: Chain, active, start_cfg, forward: bool):
    """Mass-blind saturation across the whole chain.

    Returns the set of loops that can ever fire, or None when a mandatory
    link can never fire (the query is then immediately negative).
    """
    P = set(_pos(start_cfg))
    fired = set()
    r = len(chain.segments)
    seg_order = range(r) if forward else range(r - 1, -1, -1)
    need = _dec if forward else _inc
    gain = _inc if forward else _dec
    for s in seg_order:
        items = [
            ((s, i), loop)
            for i, loop in enumerate(chain.segments[s])
            if (s, i) in active
        ]
        fired |= _saturate_loops(items, need, gain, P)
        link_idx = s if forward else s - 1
        if 0 <= link_idx < len(chain.links):
            link = chain.links[link_idx]
            if link is not None:
                if not need(link.effect) <= P:
                    return None
                P |= gain(link.effect)
    return fired


# -- boundary configurations as linear expressions ---------------------------


class _FlowExprs:
    """Configurations as affine expressions over mass variables."""

    def __init__(self, x, num_vars):
        self.num_vars = num_vars
        self._const = tuple(x)
        self._coeffs = [[ZERO] * num_vars for _ in x]

    def apply(self, var, effect):
        for c, v in enumerate(effect):
            if v:
                self._coeffs[c][var] += rat(v)

    def snapshot(self) -> tuple:
        return tuple(
            (self._const[c], tuple(row)) for c, row in enumerate(self._coeffs)
        )


def _nonneg_rows(cfg):
    return [con(row, GE, -k) for k, row in cfg]


def _equal_rows(cfg, y):
    return [con(row, EQ, y[c] - k) for c, (k, row) in enumerate(cfg)]


def _eval_cfg(cfg, point) -> tuple:
    out = []
    for k, row in cfg:
        v = k
        for a, p in zip(row, point):
            if a:
                v = v + a * p
        out.append(v)
    return tuple(out)


def _unit(num_vars, var):
    return tuple(ONE if i == var else ZERO for i in range(num_vars))


def _generic_point(num_vars, strict_rows, cfgs, base, budget):
    """A solution with maximal positivity pattern over the listed expressions.

    Solution sets are convex, so averaging the base point with one witness
    per achievable strict positivity keeps every strict row satisfied and
    makes every component positive that any solution can make positive.
    """
    points = [tuple(base)]
    seen = set()
    for cfg in cfgs:
        for k, row in cfg:
            if (k, row) in seen:
                continue
            seen.add((k, row))
            if not any(row):
                continue
            val = k
            for a, p in zip(row, points[0]):
                if a:
                    val = val + a * p
            if val > 0:
                continue
            probe = LinearSystem.of(num_vars, list(strict_rows) + [con(row, GT, -k)])
            p = solve_feasibility(probe, budget)
            if p is not None:
                points.append(tuple(p))
    n = rat(len(points))
    avg = []
    for v in range(num_vars):
        total = ZERO
        for p in points:
            total = total + p[v]
        avg.append(total / n)
    return tuple(avg)


# -- chain decision ----------------------------------------------------------


class _ChainLp:
    def __init__(self, chain: Chain, active, x, y):
        self.loop_list = sorted(active)
        self.link_list = [s for s, l in enumerate(chain.links) if l is not None]
        self.num_vars = len(self.loop_list) + len(self.link_list)
        self.loop_var = {key: i for i, key in enumerate(self.loop_list)}
        self.link_var = {s: len(self.loop_list) + j for j, s in enumerate(self.link_list)}
        flow = _FlowExprs(x, self.num_vars)
        self.entries = []
        self.exits = []
        r = len(chain.segments)
        for s in range(r):
            self.entries.append(flow.snapshot())
            for i, loop in enumerate(chain.segments[s]):
                if (s, i) in self.loop_var:
                    flow.apply(self.loop_var[(s, i)], loop.effect)
            self.exits.append(flow.snapshot())
            if s < r - 1 and chain.links[s] is not None:
                flow.apply(self.link_var[s], chain.links[s].effect)
        rows = []
        for s in range(r):
            if s > 0 and chain.links[s - 1] is not None:
                rows += _nonneg_rows(self.entries[s])
            if s < r - 1:
                rows += _nonneg_rows(self.exits[s])
        rows += _equal_rows(self.exits[r - 1], y)
        self.shape_rows = rows

    def _mass_rows(self, strict: bool):
        rows = []
        rel = GT if strict else GE
        for v in self.loop_var.values():
            rows.append(con(_unit(self.num_vars, v), rel, ZERO))
        for v in self.link_var.values():
            rows.append(con(_unit(self.num_vars, v), rel, ZERO))
            rows.append(con(_unit(self.num_vars, v), LE, ONE))
        return rows

    def strict_rows(self):
        return self.shape_rows + self._mass_rows(strict=True)

    def strict_system(self) -> LinearSystem:
        return LinearSystem.of(self.num_vars, self.strict_rows())

    def relaxed_system(self) -> LinearSystem:
        return LinearSystem.of(self.num_vars, self.shape_rows + self._mass_rows(strict=False))

    def prune_zero_mass(self, budget) -> Optional[set]:
        """Loops whose mass is zero in every relaxed solution; None if insoluble."""
        system = self.relaxed_system()
        pruned = set()
        for key in self.loop_list:
            res = maximize(system, _unit(self.num_vars, self.loop_var[key]), budget)
            if res.status == "infeasible":
                return None
            if res.status == "optimal" and res.value == 0:
                pruned.add(key)
        return pruned

    def boundary_values(self, point):
        return [
            (_eval_cfg(e, point), _eval_cfg(x, point))
            for e, x in zip(self.entries, self.exits)
        ]


def _chain_local_failures(chain: Chain, active, bounds) -> set:
    """Loops that cannot enter any firing order against actual boundary values."""
    bad = set()
    for s in range(len(chain.segments)):
        items = [
            ((s, i), loop)
            for i, loop in enumerate(chain.segments[s])
            if (s, i) in active
        ]
        if not items:
            continue
        entry_vals, exit_vals = bounds[s]
        fired_f = _saturate_loops(items, _dec, _inc, set(_pos(entry_vals)))
        fired_b = _saturate_loops(items, _inc, _dec, set(_pos(exit_vals)))
        for key, _ in items:
            if key not in fired_f or key not in fired_b:
                bad.add(key)
    return bad


def chain_plausible(chain: Chain, x, y) -> bool:
    """Necessary condition without solving: the sweep fixpoint is consistent.

    False proves no word of the chain fires from x to y.  True leaves the
    question open; chain_feasible settles it with boundary feasibility.
    """
    x = config(x)
    y = config(y)
    active = {
        (s, i) for s, seg in enumerate(chain.segments) for i in range(len(seg))
    }
    while True:
        fwd = _chain_sweep(chain, active, x, forward=True)
        if fwd is None:
            return False
        bwd = _chain_sweep(chain, active, y, forward=False)
        if bwd is None:
            return False
        keep = fwd & bwd
        if keep == active:
            break
        active = keep
    if not active and all(l is None for l in chain.links):
        return x == y
    return True


def chain_feasible(chain: Chain, x, y, budget: Optional[SolverBudget] = None) -> bool:
    """Does some word of the chain language fire from x to exactly y?"""
    return chain_active(chain, x, y, budget) is not None


def chain_active(chain: Chain, x, y, budget: Optional[SolverBudget] = None):
    """Feasibility along with the loops any successful word could use.

    Returns None when no word of the chain fires from x to y.  Otherwise
    returns a frozenset of (segment, loop) pairs: every pruning step below
    removes only loops that fire in no admissible word at all (sweeps are
    mass-blind overapproximations, zero-mass pruning holds in every relaxed
    solution, and saturation failures at the maximally positive boundary
    point persist at every achievable boundary), so the complement of the
    result is dead in the whole chain language restricted to x -> y.
    """
    res = _chain_resolve(chain, config(x), config(y), budget)
    return None if res is None else res[0]


@dataclass(frozen=True, eq=False)
class ChainProfile:
    """One admissible solution of a chain query.

    entry_values/exit_values hold the boundary configuration of every
    segment at the solution; loop_mass the total mass per active loop;
    link_fraction the firing fraction per letter link.  Every requested
    boundary coordinate (see chain_profile's positive argument) is
    strictly positive here unless it is zero in every admissible
    solution over the active loops.
    """

    active: frozenset
    entry_values: tuple
    exit_values: tuple
    loop_mass: dict
    link_fraction: dict


def chain_profile(
    chain: Chain,
    x,
    y,
    budget: Optional[SolverBudget] = None,
    positive: tuple = (),
):
    """A ChainProfile for the query, or None when no word fires x -> y.

    positive lists (segment, "entry"|"exit", coordinate) requests.  Each
    requested value that some admissible solution makes positive is made
    positive in the returned profile (solutions average convexly); one
    that stays zero is zero in every solution.  Requests cost one
    feasibility check each, and only when the base solution misses them.
    """
    x = config(x)
    y = config(y)
    res = _chain_resolve(chain, x, y, budget)
    if res is None:
        return None
    active, lp, base = res
    if lp is None:
        vals = tuple(x for _ in chain.segments)
        return ChainProfile(active, vals, vals, {}, {})
    point = base
    extras = []
    for s, which, c in positive:
        k, row = (lp.entries[s] if which == "entry" else lp.exits[s])[c]
        val = k
        for a, p in zip(row, point):
            if a:
                val = val + a * p
        if val > 0:
            continue
        probe = LinearSystem.of(
            lp.num_vars, lp.strict_rows() + [con(row, GT, -k)]
        )
        sol = solve_feasibility(probe, budget)
        if sol is not None:
            extras.append(tuple(sol))
    if extras:
        n = rat(len(extras) + 1)
        point = tuple(
            sum((p[v] for p in extras), base[v]) / n for v in range(lp.num_vars)
        )
    bounds = lp.boundary_values(point)
    return ChainProfile(
        active,
        tuple(b[0] for b in bounds),
        tuple(b[1] for b in bounds),
        {key: point[v] for key, v in lp.loop_var.items()},
        {s: point[v] for s, v in lp.link_var.items()},
    )


def _chain_resolve(chain: Chain, x, y, budget):
    """Shared pruning fixpoint: (active, lp, strict point) or None."""
    active = {
        (s, i) for s, seg in enumerate(chain.segments) for i in range(len(seg))
    }
    while True:
        while True:
            fwd = _chain_sweep(chain, active, x, forward=True)
            if fwd is None:
                return None
            bwd = _chain_sweep(chain, active, y, forward=False)
            if bwd is None:
                return None
            keep = fwd & bwd
            if keep == active:
                break
            active = keep
        lp = _ChainLp(chain, active, x, y)
        if lp.num_vars == 0:
            return (frozenset(), None, None) if x == y else None
        base = solve_feasibility(lp.strict_system(), budget)
        if base is None:
            pruned = lp.prune_zero_mass(budget)
            if not pruned:
                # every loop can carry mass yet no joint strict solution:
                # averaging per-loop witnesses with any run would give one,
                # so no run exists
                return None
            active = active - pruned
            continue
        bounds = lp.boundary_values(base)
        bad = _chain_local_failures(chain, active, bounds)
        if not bad:
            return frozenset(active), lp, base
        generic = _generic_point(
            lp.num_vars,
            lp.strict_rows(),
            lp.entries + lp.exits,
            base,
            budget,
        )
        bounds = lp.boundary_values(generic)
        bad = _chain_local_failures(chain, active, bounds)
        if not bad:
            return frozenset(active), lp, base
        active = active - bad


def narrow_scheme(scheme: PathScheme, system: Cvas, x, y, budget=None):
    """Shrink every star bubble to the letters some admissible word uses.

    Letters pruned by chain_active fire in no word of the scheme that goes
    from x to y, so the narrowed scheme keeps the exact same intersection
    with the firable language while never gaining weight.  Stars that lose
    every letter disappear.  Returns None when the intersection is empty.
    """
    chain, star_seg = chain_of_scheme_with_stars(scheme, system)
    active = chain_active(chain, x, y, budget)
    if active is None:
        return None
    words = list(scheme.words)
    bubbles = list(scheme.bubbles)
    for j in sorted(star_seg, reverse=True):
        letters = sorted(scheme.bubbles[j - 1].letters)
        seg = star_seg[j]
        keep = frozenset(letters[i] for (s, i) in active if s == seg)
        if keep == scheme.bubbles[j - 1].letters:
            continue
        if keep:
            bubbles[j - 1] = Star.of(keep)
        else:
            bubbles.pop(j - 1)
            words[j - 1] = words[j - 1] + words.pop(j)
    return PathScheme.of(words, bubbles)


# -- general automata: support enumeration -----------------------------------


def _scc_ids(states, edges) -> dict:
    """Component ids per state, numbered in topological order."""
    adj = {s: [] for s in states}
    radj = {s: [] for s in states}
    for e in edges:
        adj[e.src].append(e.tgt)
        radj[e.tgt].append(e.src)
    order = []
    seen = set()
    for root in states:
        if root in seen:
            continue
        stack = [(root, iter(adj[root]))]
        seen.add(root)
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append((nxt, iter(adj[nxt])))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
                stack.pop()
    comp = {}
    next_id = 0
    for root in reversed(order):
        if root in comp:
            continue
        stack = [root]
        comp[root] = next_id
        while stack:
            node = stack.pop()
            for nxt in radj[node]:
                if nxt not in comp:
                    comp[nxt] = next_id
                    stack.append(nxt)
        next_id += 1
    return comp


def _support_structure(S):
    """SCC chain decomposition of a support, or None if it cannot carry a run.

    A run visits strongly connected components in a one-way order, so the
    bridge edges of a usable support must form a single path through the
    condensation and every component holding edges must lie on that path.
    """
    states = sorted({e.src for e in S} | {e.tgt for e in S})
    comp = _scc_ids(states, S)
    intra = [e for e in S if comp[e.src] == comp[e.tgt]]
    bridges = sorted(
        (e for e in S if comp[e.src] != comp[e.tgt]),
        key=lambda e: (comp[e.src], e.label, e.src, e.tgt),
    )
    if bridges:
        srcs = [comp[e.src] for e in bridges]
        tgts = [comp[e.tgt] for e in bridges]
        if len(set(srcs)) != len(srcs) or len(set(tgts)) != len(tgts):
            return None
        for i in range(len(bridges) - 1):
            if tgts[i] != srcs[i + 1]:
                return None
        chain_comps = [srcs[0]] + tgts
    else:
        chain_comps = sorted(set(comp.values()))
        if len(chain_comps) != 1:
            return None
    allowed = set(chain_comps)
    if any(comp[e.src] not in allowed for e in intra):
        return None
    intra_by_comp = {}
    for e in intra:
        intra_by_comp.setdefault(comp[e.src], []).append(e)
    for group in intra_by_comp.values():
        group.sort(key=lambda e: (e.src, e.label, e.tgt))
    return chain_comps, comp, intra_by_comp, bridges


def _walk_unlocks_all(edges, start, positives) -> bool:
    """Token walk over one segment unlocking every edge, counter-guarded."""
    if not edges:
        return True
    total = len(edges)
    start_key = (frozenset(), start)
    seen = {start_key}
    queue = deque([start_key])
    while queue:
        unlocked, at = queue.popleft()
        if len(unlocked) == total:
            return True
        reach = {at}
        stack = [at]
        while stack:
            s = stack.pop()
            for i in unlocked:
                e = edges[i]
                if e.src == s and e.tgt not in reach:
                    reach.add(e.tgt)
                    stack.append(e.tgt)
        avail = set(positives)
        for i in unlocked:
            avail |= _inc(edges[i].effect)
        for i in range(total):
            if i in unlocked:
                continue
            e = edges[i]
            if e.src in reach and _dec(e.effect) <= avail:
                key = (unlocked | {i}, e.tgt)
                if key not in seen:
                    seen.add(key)
                    queue.append(key)
    return False


def _reverse_edges(edges):
    return [
        ProductEdge(e.tgt, e.label, tuple(-v for v in e.effect), e.src) for e in edges
    ]


class _SupportLp:
    def __init__(self, chain_comps, intra_by_comp, bridges, x, y):
        self.intra_vars = []
        for cid in chain_comps:
            for e in intra_by_comp.get(cid, []):
                self.intra_vars.append(e)
        self.num_vars = len(self.intra_vars) + len(bridges)
        flow = _FlowExprs(x, self.num_vars)
        self.entries = []
        self.exits = []
        var = 0
        rows = []
        for idx, cid in enumerate(chain_comps):
            self.entries.append(flow.snapshot())
            for _ in intra_by_comp.get(cid, []):
                flow.apply(var, self.intra_vars[var].effect)
                var += 1
            self.exits.append(flow.snapshot())
            if idx < len(bridges):
                flow.apply(len(self.intra_vars) + idx, bridges[idx].effect)
        for idx in range(len(chain_comps)):
            if idx > 0:
                rows += _nonneg_rows(self.entries[idx])
            if idx < len(chain_comps) - 1:
                rows += _nonneg_rows(self.exits[idx])
        rows += _equal_rows(self.exits[-1], y)
        for v in range(len(self.intra_vars)):
            rows.append(con(_unit(self.num_vars, v), GT, ZERO))
        for j in range(len(bridges)):
            v = len(self.intra_vars) + j
            rows.append(con(_unit(self.num_vars, v), GT, ZERO))
            rows.append(con(_unit(self.num_vars, v), LE, ONE))
        self.rows = rows

    def system(self) -> LinearSystem:
        return LinearSystem.of(self.num_vars, self.rows)

    def boundary_values(self, point):
        return [
            (_eval_cfg(e, point), _eval_cfg(x, point))
            for e, x in zip(self.entries, self.exits)
        ]


def _segments_pass(chain_comps, intra_by_comp, bridges, q0, qf, bounds) -> bool:
    for idx, cid in enumerate(chain_comps):
        edges = intra_by_comp.get(cid, [])
        entry = q0 if idx == 0 else bridges[idx - 1].tgt
        exit_ = qf if idx == len(chain_comps) - 1 else bridges[idx].src
        if not edges:
            if entry != exit_:
                return False
            continue
        entry_vals, exit_vals = bounds[idx]
        if not _walk_unlocks_all(edges, entry, _pos(entry_vals)):
            return False
        if not _walk_unlocks_all(_reverse_edges(edges), exit_, _pos(exit_vals)):
            return False
    return True


def _support_feasible(S, product: CvassProduct, budget) -> bool:
    structure = _support_structure(S)
    if structure is None:
        return False
    chain_comps, comp, intra_by_comp, bridges = structure
    starts = [
        q for q in sorted(product.initial) if comp.get(q) == chain_comps[0]
    ]
    ends = [
        q for q in sorted(product.accepting) if comp.get(q) == chain_comps[-1]
    ]
    if not starts or not ends:
        return False
    lp = _SupportLp(chain_comps, intra_by_comp, bridges, product.start, product.end)
    base = solve_feasibility(lp.system(), budget)
    if base is None:
        return False
    bounds = lp.boundary_values(base)
    generic_bounds = None
    for q0 in starts:
        for qf in ends:
            if _segments_pass(chain_comps, intra_by_comp, bridges, q0, qf, bounds):
                return True
            if generic_bounds is None:
                generic = _generic_point(
                    lp.num_vars, lp.rows, lp.entries + lp.exits, base, budget
                )
                generic_bounds = lp.boundary_values(generic)
            if _segments_pass(
                chain_comps, intra_by_comp, bridges, q0, qf, generic_bounds
            ):
                return True
    return False


def _general_feasible(product: CvassProduct, budget, edge_cap: int) -> bool:
    if len(product.edges) > edge_cap:
        raise DecisionCapExceeded(
            f"{len(product.edges)} product edges exceed the support cap {edge_cap}"
        )
    if product.start == product.end and product.initial & product.accepting:
        return True
    edges = list(product.edges)
    for size in range(1, len(edges) + 1):
        for S in itertools.combinations(edges, size):
            if budget is not None:
                budget.spend(1)
            if _support_feasible(S, product, budget):
                return True
    return False


# -- public deciders ----------------------------------------------------------


def regular_intersect_nonempty(
    nfa: Nfa,
    x,
    y,
    system: Cvas,
    budget: Optional[SolverBudget] = None,
    edge_cap: int = DEFAULT_EDGE_CAP,
) -> bool:
    """Is some word accepted by the automaton firable from x to exactly y?"""
    x = config(x)
    y = config(y)
    if len(x) != system.dim or len(y) != system.dim:
        raise DecideError("configuration arity does not match the system")
    labels = set(system.labels)
    missing = sorted(l for l in nfa.alphabet if l not in labels)
    if missing:
        raise DecideError(f"automaton labels missing from the system: {missing}")
    live = _productive(nfa)
    if live is None:
        return False
    states, edges, initial, accepting = live
    chain = _chain_of_subgraph(states, edges, initial, accepting, system)
    if chain is not None:
        return chain_feasible(chain, x, y, budget)
    trimmed = Nfa.of(nfa.num_states, nfa.alphabet, edges, initial, accepting)
    product = cvass_product(trimmed, system, x, y)
    return _general_feasible(product, budget, edge_cap)


def is_perfect(
    scheme: PathScheme, x, y, system: Cvas, budget: Optional[SolverBudget] = None
) -> bool:
    """Pre-perfect with a nonempty intersection against the run language."""
    if not is_preperfect(scheme):
        return False
    chain = chain_of_scheme(scheme, system)
    return chain_feasible(chain, config(x), config(y), budget)


def bounded_witness_search(
    nfa: Nfa,
    x,
    y,
    system: Cvas,
    max_len: int,
    budget: Optional[SolverBudget] = None,
) -> Optional[tuple]:
    """The shortest accepted member word up to max_len, or None.

    Ties break lexicographically by the label order declared in the system,
    so results are reproducible. This search is the independent oracle for
    the structural decider: the two must agree wherever witnesses fit the
    bound.
    """
    x = config(x)
    y = config(y)
    if len(x) != system.dim or len(y) != system.dim:
        raise DecideError("configuration arity does not match the system")
    labels = set(system.labels)
    missing = sorted(l for l in nfa.alphabet if l not in labels)
    if missing:
        raise DecideError(f"automaton labels missing from the system: {missing}")
    live = _productive(nfa)
    if live is None:
        return None
    states, edges, initial, accepting = live
    letters = [l for l in system.labels if l in set(nfa.alphabet)]
    step = {}
    for p, l, q in edges:
        step.setdefault((p, l), set()).add(q)
    dist = {q: 0 for q in accepting}
    frontier = deque(accepting)
    back = {}
    for p, l, q in edges:
        back.setdefault(q, set()).add(p)
    while frontier:
        q = frontier.popleft()
        for p in back.get(q, ()):
            if p not in dist:
                dist[p] = dist[q] + 1
                frontier.append(p)
    prefix_ok: dict = {(): True}

    def feasible(prefix) -> bool:
        cached = prefix_ok.get(prefix)
        if cached is None:
            cached = prefix_feasible(system, prefix, x, budget)
            prefix_ok[prefix] = cached
        return cached

    def search(prefix, here, remaining):
        if budget is not None:
            budget.spend(1)
        if remaining == 0:
            if here & accepting and witness_fractions(system, prefix, x, y, budget) is not None:
                return prefix
            return None
        if min((dist.get(q, max_len + 1) for q in here), default=max_len + 1) > remaining:
            return None
        for l in letters:
            nxt = set()
            for q in here:
                nxt |= step.get((q, l), set())
            if not nxt:
                continue
            extended = prefix + (l,)
            if not feasible(extended):
                continue
            found = search(extended, frozenset(nxt), remaining - 1)
            if found is not None:
                return found
        return None

    start = frozenset(initial)
    for target in range(max_len + 1):
        found = search((), start, target)
        if found is not None:
            return found
    return None
