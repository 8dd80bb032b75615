"""Instance family with non-elementary blow-up of the recognizing automaton.

Each instance has h stages over 5h counters: per stage i a sextet word w_i,
a reset letter r_i, and a shared drain suffix u.  Between the canonical
endpoints (precision counters at 1/n versus step counters at 4) the only
runs of the bounded shape w_1^{l_1} r_1 ... w_h^{l_h} r_h u are forced to
iterate each stage to the maximum, squaring-and-doubling the precision
denominator per stage, so the shortest such run has tower length.  Small
automata would admit pumped variants of that word, which is what drives
the size bound.

Counters per stage come in pairs with complements, plus a step counter:

  layout: x_1..x_h, y_1..y_h, xbar_1..xbar_h, ybar_1..ybar_h, step_1..step_h

Every stage letter moves mass between a counter and its complement, so the
pair sums are invariant during a stage; the step counter accumulates the
moved mass, which is what forces maximal fractions in short runs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .cvas import Cvas, Run, config, member, simulate
from .rational import ONE, ZERO, rat

__all__ = [
    "LowerBoundInstance",
    "generate",
    "configs",
    "maxed_out_run",
    "exponential_run",
    "brute_force_short_runs",
    "exp_h",
    "maxed_exponents",
]

BRUTE_MAX_H = 2
BRUTE_MAX_N = 3


def exp_h(h: int, n: int) -> int:
    """Tower function: exp_0(n) = n and exp_{h+1}(n) = 2^{exp_h(n)}."""
    if h < 0 or n < 0:
        raise ValueError("tower function needs nonnegative arguments")
    out = n
    for _ in range(h):
        out = 2**out
    return out


@dataclass(frozen=True)
class LowerBoundInstance:
    """The h-stage system plus its structured words.

    words[i-1] is the stage-i sextet, resets[i-1] its reset letter, and
    drain the final f_1 g_1 ... f_h g_h suffix emptying the precision
    counters.
    """

    h: int
    sys: Cvas
    words: tuple
    resets: tuple
    drain: tuple

    def x_index(self, i: int) -> int:
        return i - 1

    def y_index(self, i: int) -> int:
        return self.h + i - 1

    def xbar_index(self, i: int) -> int:
        return 2 * self.h + i - 1

    def ybar_index(self, i: int) -> int:
        return 3 * self.h + i - 1

    def step_index(self, i: int) -> int:
        return 4 * self.h + i - 1

    def stage_word(self, i: int) -> tuple:
        return self.words[i - 1]

    def reset_letter(self, i: int) -> str:
        return self.resets[i - 1]

    def shaped_word(self, exponents) -> tuple:
        """w_1^{l_1} r_1 ... w_h^{l_h} r_h u for the given exponents."""
        if len(exponents) != self.h:
            raise ValueError("need one exponent per stage")
        out: list = []
        for i, l in enumerate(exponents, start=1):
            out.extend(self.stage_word(i) * l)
            out.append(self.reset_letter(i))
        out.extend(self.drain)
        return tuple(out)


def generate(h: int) -> LowerBoundInstance:
    """The h-stage instance; 5h counters and 6h + h + 2h transitions."""
    if h < 1:
        raise ValueError("need at least one stage")
    dim = 5 * h

    def unit(idx: int, sign: int = 1):
        return tuple(sign if c == idx else 0 for c in range(dim))

    def add(*vecs):
        return tuple(sum(col) for col in zip(*vecs))

    def x_hat(i, sign=1):
        # paired move: the counter and its complement change oppositely
        return add(unit(i - 1, sign), unit(2 * h + i - 1, -sign))

    def y_hat(i, sign=1):
        return add(unit(h + i - 1, sign), unit(3 * h + i - 1, -sign))

    def scale(vec, m):
        return tuple(m * v for v in vec)

    transitions = []
    words = []
    resets = []
    for i in range(1, h + 1):
        step = unit(4 * h + i - 1)
        tail = [add(x_hat(j), y_hat(j)) for j in range(i + 1, h + 1)]
        t1 = add(scale(x_hat(i), -2), y_hat(i, -1), *(scale(v, -2) for v in tail))
        t2 = add(x_hat(i), step)
        t3 = add(x_hat(i, -1), step)
        t4 = add(x_hat(i), y_hat(i), *tail)
        t5 = add(y_hat(i, -1), step)
        t6 = add(y_hat(i), step)
        labels = tuple(f"t_{i}_{m}" for m in range(1, 7))
        for label, vec in zip(labels, (t1, t2, t3, t4, t5, t6)):
            transitions.append((label, vec))
        words.append(labels)
        reset = add(
            unit(2 * h + i - 1, -1),
            *(add(unit(2 * h + j - 1, -1), unit(3 * h + j - 1, -1)) for j in range(i + 1, h + 1)),
        )
        transitions.append((f"r_{i}", reset))
        resets.append(f"r_{i}")
    drain = []
    for j in range(1, h + 1):
        transitions.append((f"f_{j}", unit(j - 1, -1)))
        transitions.append((f"g_{j}", unit(h + j - 1, -1)))
        drain.extend((f"f_{j}", f"g_{j}"))
    return LowerBoundInstance(
        h, Cvas.of(dim, transitions), tuple(words), tuple(resets), tuple(drain)
    )


def configs(h: int, n: int) -> tuple:
    """Endpoints: precision counters at 1/n versus step counters at 4."""
    if n < 1:
        raise ValueError("precision denominator must be positive")
    if h < 1:
        raise ValueError("need at least one stage")
    dim = 5 * h
    x = [ZERO] * dim
    y = [ZERO] * dim
    for i in range(1, h + 1):
        x[i - 1] = rat(1, n)
        x[h + i - 1] = rat(1, n)
        y[4 * h + i - 1] = rat(4)
    return config(x), config(y)


def maxed_exponents(h: int, n: int) -> tuple:
    """M_1 = n and M_{i+1} = M_i * 2^{M_i}."""
    out = []
    m = n
    for _ in range(h):
        out.append(m)
        m = m * 2**m
    return tuple(out)


def maxed_out_run(h: int, n: int) -> Run:
    """The unique short-shaped run between the endpoints, fully validated.

    Stage i runs its sextet M_i times; iteration j of a stage at precision
    1/k fires the halving letters at 1/(2^j k) and the step letters at the
    full 1/k, then the reset letter clears the complements.  The final
    drain empties what is left of the precision counters.
    """
    inst = generate(h)
    x, y = configs(h, n)
    full = rat(1)
    steps: list = []
    k_values = maxed_exponents(h, n)
    for i, k in enumerate(k_values, start=1):
        w = inst.stage_word(i)
        for j in range(1, k + 1):
            small = rat(1, (2**j) * k)
            per = (small, rat(1, k), rat(1, k), small, rat(1, k), rat(1, k))
            steps.extend(zip(per, w))
        steps.append((rat(1, k) - rat(1, (2**k) * k), inst.reset_letter(i)))
    m_next = k_values[-1] * 2 ** k_values[-1]
    bounds = tuple(k_values) + (m_next,)
    for j in range(1, h + 1):
        steps.append((rat(1, bounds[j]), f"f_{j}"))
        steps.append((rat(1, bounds[j - 1]), f"g_{j}"))
    for frac, _ in steps:
        assert ZERO < frac <= full
    run = simulate(inst.sys, x, steps)
    assert run.end == y
    return run


def exponential_run(h: int, n: int) -> Run:
    """A valid run of only exponential length between the same endpoints.

    Stage i runs its sextet 2^i n times, merely halving the precision
    counters: the halving letters fire at a tiny constant fraction and the
    surplus step mass is made to land exactly on 4 by the damping factor
    2k/(2k+1) on the step letters.
    """
    inst = generate(h)
    x, y = configs(h, n)
    steps: list = []
    k = n
    for i in range(1, h + 1):
        w = inst.stage_word(i)
        gamma = rat(2 * k, 2 * k + 1)
        small = rat(1, 2 * k * k)
        per = (
            small / 2,
            gamma * small,
            gamma * small,
            small / 2,
            gamma * rat(1, k),
            gamma * rat(1, k),
        )
        for _ in range(2 * k):
            steps.extend(zip(per, w))
        steps.append((rat(1, 2 * k), inst.reset_letter(i)))
        k = 2 * k
    for j in range(1, h + 1):
        steps.append((rat(1, (2**j) * n), f"f_{j}"))
        steps.append((rat(1, (2 ** (j - 1)) * n), f"g_{j}"))
    run = simulate(inst.sys, x, steps)
    assert run.end == y
    return run


def brute_force_short_runs(h: int, n: int, sys: Cvas = None) -> list:
    """All short-shaped exponent tuples whose word is firable; tiny scale only.

    Enumerates l_1 <= n and l_{i+1} <= l_i * 2^{l_i} and keeps the tuples
    whose shaped word is a member between the endpoints.
    """
    if h > BRUTE_MAX_H or n > BRUTE_MAX_N:
        raise ValueError(
            f"brute force capped at h <= {BRUTE_MAX_H}, n <= {BRUTE_MAX_N}"
        )
    inst = generate(h)
    if sys is None:
        sys = inst.sys
    x, y = configs(h, n)
    out = []

    def rec(prefix: tuple, bound: int) -> None:
        if len(prefix) == h:
            if member(sys, inst.shaped_word(prefix), x, y):
                out.append(prefix)
            return
        for l in range(bound + 1):
            rec(prefix + (l,), l * 2**l)

    rec((), n)
    return out
