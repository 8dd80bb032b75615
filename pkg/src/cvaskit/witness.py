"""Canonical gathering witnesses and fraction redistribution.

A gathering bubble fixes the first and last appearance records of its
words, so every member splits as u . center . v: the minimal head spelling
the first record, a center over the full bubble alphabet, and the minimal
tail spelling the last record. A canonical witness carries concrete runs
for such a split with three structural properties:

  P1  in the head run, a counter that becomes non-zero stays non-zero;
  P2  in the tail run, a counter that reaches zero stays zero;
  P3  a counter that is non-zero anywhere in the head or tail run stays
      non-zero at every configuration of the center run.

Such a witness certifies more than membership of its own word: every word
of the bubble language whose center contains the witness center as a
subword inherits a valid run between the same endpoints. The
redistribution constructor makes that run explicit: head repetitions are
paid for by shaving the first occurrence of each letter (P1 leaves room),
tail repetitions reuse the head construction on the reversed word with
negated effects (P2 reversed is P1), and extra center letters borrow from
a donor occurrence of the same letter (P3 keeps every affected counter
strictly positive).
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .cvas import Cvas, Run, config, simulate
from .decide import (
    DecisionCapExceeded,
    chain_feasible,
    chain_of_scheme,
    chain_of_scheme_with_spans,
    chain_profile,
)
from .linsolve import EQ, GT, LE, LinearSystem, SolverBudget, con, solve_feasibility
from .rational import ONE, ZERO, rat
from .schemes import (
    Gathering,
    PathScheme,
    RhoFactor,
    appearance_records,
    bubble_scheme,
    center,
    is_factor_of,
    is_preperfect,
    is_subword,
    letters_of,
    matches_gathering,
)


class WitnessError(ValueError):
    """Malformed witness data or a word outside the certified closure."""


class NoWitnessError(WitnessError):
    """The requested witness does not exist (empty intersection)."""


@dataclass(frozen=True)
class CanonicalWitness:
    """Head, center, and tail runs of one gathering member, P1-P3 certified."""

    gathering: Gathering
    head: Run
    middle: Run
    tail: Run

    @classmethod
    def of(cls, gathering: Gathering, head: Run, middle: Run, tail: Run):
        witness = cls(gathering, head, middle, tail)
        problems = audit_canonical_witness(witness)
        if problems:
            raise WitnessError("; ".join(problems))
        return witness

    @property
    def word(self) -> tuple:
        return self.head.word + self.middle.word + self.tail.word

    @property
    def start(self) -> tuple:
        return self.head.start

    @property
    def end(self) -> tuple:
        return self.tail.end

    @property
    def mid_start(self) -> tuple:
        return self.middle.start

    @property
    def mid_end(self) -> tuple:
        return self.middle.end

    @property
    def run(self) -> Run:
        steps = self.head.steps + self.middle.steps + self.tail.steps
        return simulate(self.head.system, self.head.start, steps)


def audit_canonical_witness(witness: CanonicalWitness) -> tuple:
    """Independent stepwise check of the shape and of P1, P2, P3."""
    g = witness.gathering
    head, middle, tail = witness.head, witness.middle, witness.tail
    problems = []
    if head.word != g.first:
        problems.append("head word is not the first-appearance record")
    if tail.word != g.last:
        problems.append("tail word is not the last-appearance record")
    if set(middle.word) != g.letters:
        problems.append("center alphabet is not exactly the bubble alphabet")
    if head.end != middle.start or middle.end != tail.start:
        problems.append("runs do not chain")
    if not (head.system is middle.system is tail.system):
        problems.append("runs use different systems")
    if not matches_gathering(witness.word, g):
        problems.append("glued word does not match the gathering")
    dim = head.system.dim
    for c in range(dim):
        seen = False
        for cfg in head.configs:
            if cfg[c] != 0:
                seen = True
            elif seen:
                problems.append(f"P1 fails for counter {c} in the head run")
                break
    for c in range(dim):
        dead = False
        for cfg in tail.configs:
            if cfg[c] == 0:
                dead = True
            elif dead:
                problems.append(f"P2 fails for counter {c} in the tail run")
                break
    for c in range(dim):
        outer = any(cfg[c] != 0 for cfg in head.configs) or any(
            cfg[c] != 0 for cfg in tail.configs
        )
        if outer and any(cfg[c] == 0 for cfg in middle.configs):
            problems.append(f"P3 fails for counter {c} in the center run")
    return tuple(problems)


def _skeleton_system(
    g: Gathering, middle_word, x, y, system: Cvas
) -> Optional[LinearSystem]:
    """Feasibility of fractions for u.middle.v with the P1-P3 zero patterns.

    The patterns are forced: a head counter is zero exactly until its first
    touch (so that touch must increment), a dying tail counter is positive
    exactly until its last touch (so that touch must decrement), and the
    center keeps every endpoint-positive or touched counter positive.
    Returns None when a forced pattern is structurally impossible.
    """
    u = g.first
    v = g.last
    word = u + tuple(middle_word) + v
    n = len(u)
    m = len(middle_word)
    total = len(word)
    d = system.dim
    effs = [system.effect(l) for l in word]
    touched = {
        c for c in range(d) if any(system.effect(l)[c] for l in g.letters)
    }
    rows = []
    for j in range(total):
        unit = tuple(ONE if i == j else ZERO for i in range(total))
        rows.append(con(unit, GT, ZERO))
        rows.append(con(unit, LE, ONE))

    def strict_after(t, c):
        # config after t steps must stay strictly positive on counter c
        coeffs = tuple(rat(effs[j][c]) if j < t else ZERO for j in range(total))
        rows.append(con(coeffs, GT, -x[c]))

    for c in range(d):
        k1 = next((j for j in range(n) if effs[j][c]), None)
        if x[c] > 0:
            lo = 1
        elif k1 is not None:
            if effs[k1][c] < 0:
                return None
            lo = k1 + 1
        else:
            lo = None
        if lo is not None:
            for t in range(lo, n + 1):
                strict_after(t, c)
    kept = {c for c in range(d) if x[c] > 0 or y[c] > 0 or c in touched}
    for c in kept:
        for t in range(n + 1, n + m + 1):
            strict_after(t, c)
    for c in range(d):
        if y[c] > 0:
            for t in range(n + m + 1, total):
                strict_after(t, c)
        elif c in touched:
            k3 = max(j for j in range(n) if effs[n + m + j][c])
            if effs[n + m + k3][c] > 0:
                return None
            for t in range(n + m + 1, n + m + k3 + 1):
                strict_after(t, c)
    for c in range(d):
        coeffs = tuple(rat(effs[j][c]) for j in range(total))
        rows.append(con(coeffs, EQ, y[c] - x[c]))
    return LinearSystem.of(total, rows)


def canonical_gathering_witness(
    g: Gathering,
    x,
    y,
    system: Cvas,
    max_center_len: int = 12,
    budget: Optional[SolverBudget] = None,
) -> CanonicalWitness:
    """A P1-P3 witness for the gathering between the endpoints.

    Center skeletons are tried in length order with ties broken by the
    label order declared in the system, one exact feasibility system per
    skeleton; the first solvable skeleton yields the witness. Exhausting
    the center cap is a hard error, never a silent fallback.
    """
    x = config(x)
    y = config(y)
    if len(x) != system.dim or len(y) != system.dim:
        raise WitnessError("configuration arity does not match the system")
    labels = set(system.labels)
    missing = sorted(l for l in g.letters if l not in labels)
    if missing:
        raise WitnessError(f"gathering letters missing from the system: {missing}")
    if not chain_feasible(chain_of_scheme(bubble_scheme(g), system), x, y, budget):
        raise NoWitnessError(
            "the gathering language contains no word firable between the endpoints"
        )
    order = [l for l in system.labels if l in g.letters]
    n = len(g.first)
    for m in range(len(order), max_center_len + 1):
        for middle_word in itertools.product(order, repeat=m):
            if set(middle_word) != g.letters:
                continue
            if budget is not None:
                budget.spend(1)
            lp = _skeleton_system(g, middle_word, x, y, system)
            if lp is None:
                continue
            point = solve_feasibility(lp, budget)
            if point is None:
                continue
            head = simulate(system, x, list(zip(point[:n], g.first)))
            middle = simulate(system, head.end, list(zip(point[n : n + m], middle_word)))
            tail = simulate(system, middle.end, list(zip(point[n + m :], g.last)))
            assert tail.end == y
            return CanonicalWitness.of(g, head, middle, tail)
    raise DecisionCapExceeded(
        f"no canonical witness with center length at most {max_center_len}"
    )


# -- redistribution -----------------------------------------------------------


def _stretch_first_occurrences(run: Run, part) -> Run:
    """Spread the run over a word with the same first-occurrence skeleton.

    The first occurrence of each letter keeps its fraction minus epsilon
    per repetition; every repetition fires at epsilon. P1 guarantees a
    positive margin at every configuration a repetition can disturb.
    """
    part = letters_of(part)
    if appearance_records(part)[0] != run.word:
        raise WitnessError("word does not extend the run's occurrence skeleton")
    if part == run.word:
        return run
    base = {s.label: s.fraction for s in run.steps}
    counts = Counter(part)
    extras = {l: counts[l] - 1 for l in run.word}
    d = run.system.dim
    dev = [ZERO] * d
    for l, k in extras.items():
        if k:
            eff = run.system.effect(l)
            for c in range(d):
                if eff[c]:
                    dev[c] += rat(k * abs(eff[c]))
    bounds = [base[l] / extras[l] for l in run.word if extras[l]]
    for cfg in run.configs:
        for c in range(d):
            if dev[c] and cfg[c] > 0:
                bounds.append(cfg[c] / dev[c])
    eps = min(bounds) / 2
    seen = set()
    steps = []
    for l in part:
        if l not in seen:
            seen.add(l)
            steps.append((base[l] - eps * extras[l], l))
        else:
            steps.append((eps, l))
    out = simulate(run.system, run.start, steps)
    assert out.end == run.end
    return out


def _reversed_run(run: Run) -> Run:
    flipped = Cvas.of(
        run.system.dim,
        [(t.label, tuple(-v for v in t.effect)) for t in run.system.transitions],
    )
    steps = [(s.fraction, s.label) for s in reversed(run.steps)]
    return simulate(flipped, run.end, steps)


def _stretch_last_occurrences(run: Run, part) -> Run:
    """The tail counterpart: stretch the reversed word under negated effects."""
    part = letters_of(part)
    stretched = _stretch_first_occurrences(_reversed_run(run), tuple(reversed(part)))
    steps = [(s.fraction, s.label) for s in reversed(stretched.steps)]
    out = simulate(run.system, run.start, steps)
    assert out.end == run.end
    return out


def _insert_letter(run: Run, at: int, label: str) -> Run:
    """One extra letter, paid for by the nearest occurrence of the same label."""
    word = run.word
    eff = run.system.effect(label)
    before = [i for i in range(at) if word[i] == label]
    if before:
        donor = before[-1]
        window = range(donor + 1, at + 1)
        shrink = [c for c in range(len(eff)) if eff[c] > 0]
    else:
        after = [i for i in range(at, len(word)) if word[i] == label]
        if not after:
            raise WitnessError(f"no donor occurrence of {label!r}")
        donor = after[0]
        window = range(at, donor + 1)
        shrink = [c for c in range(len(eff)) if eff[c] < 0]
    bounds = [run.steps[donor].fraction]
    for t in window:
        cfg = run.configs[t]
        for c in shrink:
            bounds.append(cfg[c] / abs(eff[c]))
    eps = min(bounds) / 2
    steps = [(s.fraction, s.label) for s in run.steps]
    steps[donor] = (steps[donor][0] - eps, label)
    steps.insert(at, (eps, label))
    out = simulate(run.system, run.start, steps)
    assert out.end == run.end
    return out


def _grow_center(run: Run, target) -> Run:
    """Insert the missing letters of a superword one at a time, left to right."""
    target = letters_of(target)
    matched = []
    pos = 0
    for l in run.word:
        while target[pos] != l:
            pos += 1
        matched.append(pos)
        pos += 1
    kept = set(matched)
    placed = sorted(matched)
    out = run
    for p in range(len(target)):
        if p in kept:
            continue
        at = sum(1 for q in placed if q < p)
        out = _insert_letter(out, at, target[p])
        placed.append(p)
        placed.sort()
    assert out.word == target
    return out


def redistribute(witness: CanonicalWitness, word) -> Run:
    """A concrete valid run over a superword certified by the witness.

    The word must belong to the witness gathering's language and its center
    must contain the witness center as a subword.
    """
    g = witness.gathering
    w = letters_of(word)
    if not matches_gathering(w, g):
        raise WitnessError("word is not in the gathering language")
    mid = center(w, g)
    if not is_subword(witness.middle.word, mid):
        raise WitnessError("word center does not extend the witness center")
    cut = w.index(g.first[-1]) + 1
    recut = len(w) - tuple(reversed(w)).index(g.last[0]) - 1
    head = _stretch_first_occurrences(witness.head, w[:cut])
    middle = _grow_center(witness.middle, mid)
    tail = _stretch_last_occurrences(witness.tail, w[recut:])
    out = simulate(
        witness.head.system, witness.start, head.steps + middle.steps + tail.steps
    )
    assert out.end == witness.end
    return out


# -- lifting -------------------------------------------------------------------


@dataclass(frozen=True)
class LiftedWitness:
    """A scheme member with canonical bubble factors and boundary configs.

    boundaries holds, for each of the n bubbles in order, the configuration
    entering it and the configuration leaving it (2n entries): the fixed
    words and the factors chain through them from start to end.
    """

    scheme: PathScheme
    word: tuple
    factor: RhoFactor
    boundaries: tuple
    run: Run


def lift_run_witness(
    scheme: PathScheme,
    x,
    y,
    system: Cvas,
    max_center_len: int = 12,
    budget: Optional[SolverBudget] = None,
) -> LiftedWitness:
    """A member word whose bubble factors are canonical witnesses.

    Bubble boundary configurations are read off one admissible solution
    of the scheme's chain, and the canonical witnesses are searched
    between those boundaries.  Replacing each bubble factor by a canonical
    witness between the same boundaries certifies the whole upward closure
    of the factor within the scheme.
    """
    x = config(x)
    y = config(y)
    if not is_preperfect(scheme):
        raise WitnessError("lifting needs a pre-perfect scheme")
    chain, spans = chain_of_scheme_with_spans(scheme, system)
    prof = chain_profile(chain, x, y, budget)
    if prof is None:
        raise NoWitnessError("the scheme is not perfect between the endpoints")
    out_steps: list = []
    boundaries = []
    parts = []
    link_at = 0

    def word_steps(word):
        nonlocal link_at
        for l in word:
            while chain.links[link_at] is None:
                link_at += 1
            assert chain.links[link_at].label == l
            out_steps.append((prof.link_fraction[link_at], l))
            link_at += 1

    for i, (bubble, span) in enumerate(zip(scheme.bubbles, spans)):
        word_steps(scheme.words[i])
        entry = prof.exit_values[span[1]]
        exit_ = prof.entry_values[span[2]]
        boundaries.extend((entry, exit_))
        cw = canonical_gathering_witness(
            bubble, entry, exit_, system, max_center_len, budget
        )
        parts.append(cw.word)
        out_steps.extend(cw.head.steps + cw.middle.steps + cw.tail.steps)
        link_at = span[2]
    word_steps(scheme.words[-1])
    lifted_run = simulate(system, x, out_steps)
    assert lifted_run.end == y
    lifted_factor = RhoFactor(tuple(parts))
    assert is_factor_of(lifted_factor, lifted_run.word, scheme)
    return LiftedWitness(
        scheme, lifted_run.word, lifted_factor, tuple(boundaries), lifted_run
    )


