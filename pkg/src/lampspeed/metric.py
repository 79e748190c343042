"""Word length in the switch-walk-switch metric.

A switch-walk-switch (sws) generator is a word u1 T^eta u2 with each u_j one
of the switch words ``a^e1 b^e2`` or ``b^e1 a^e2``.  Reading a word of n sws
generators as a base path S_0, ..., S_n, the instant j lets the walker switch
the lamp at S_j with ``a`` and the lamp at S_j + k with ``b``.  All bounds
below are statements about such paths.

Exact lengths come from a bidirectional breadth-first search.  For larger
elements the module gives a certified pair of bounds:

* the lower bound counts how often each edge of Z must be crossed: a lamp
  whose value has norm r needs r - 1 round trips between its a-cursor and its
  b-cursor, on top of the covering path from 0 to the final position;
* the upper bound is the length of an explicit word built by
  :func:`construct_word`, so it is always attained.
"""
from __future__ import annotations

import itertools
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels as K
from .groups import (
    INF,
    DiagonalSpec,
    FreeWord,
    GroupSpec,
    WreathElem,
    dihedral_norm_code,
    dihedral_word,
    evaluate,
)


class ResourceError(RuntimeError):
    """A search exceeded its node budget; no answer is given."""


class UnsupportedSpecError(ValueError):
    pass


DEFAULT_NODE_CAP = 10**7


# ---------------------------------------------------------------------------
# sws generators

SWITCHES = ("", "a", "b", "ab", "ba")


def switch_word(e1: int, e2: int, order: int) -> str:
    """u = a^e1 b^e2 when order == 0, b^e1 a^e2 otherwise."""
    first, second = ("a", "b") if order == 0 else ("b", "a")
    return first * e1 + second * e2


def sws_words(level: int = 1) -> list[str]:
    """All order-resolved sws words of a level-1 group, as strings.

    Bits are (e1, e2, o1, eta, e1', e2', o2); 2**7 = 128 words in total.
    """
    if level != 1:
        raise ValueError("explicit word lists exist only for level 1")
    out = []
    for e1, e2, o1, eta, f1, f2, o2 in itertools.product((0, 1), repeat=7):
        u1 = switch_word(e1, e2, o1)
        u2 = switch_word(f1, f2, o2)
        out.append(u1 + ("T" if eta else "t") + u2)
    return out


@dataclass(frozen=True)
class SwsGenerators:
    elements: tuple
    multiplicity: tuple
    n_words: int

    def __len__(self):
        return len(self.elements)

    def measure(self) -> dict:
        return {g: c / self.n_words for g, c in zip(self.elements, self.multiplicity)}


_SWS_CACHE: dict = {}


def sws_generators(spec: GroupSpec | DiagonalSpec) -> SwsGenerators:
    """Distinct values of the sws words with their word multiplicities.

    Level-2 generators are u1 T^eta u2 where each u_j is either trivial or a
    level-1 sws generator placed at position 0.
    """
    cached = _SWS_CACHE.get(spec)
    if cached is not None:
        return cached
    level = spec.level
    counts: "OrderedDict" = OrderedDict()
    if level == 1:
        for word in sws_words(1):
            g = evaluate(spec, word)
            counts[g] = counts.get(g, 0) + 1
        n_words = 128
    elif level == 2:
        inner = sws_words(1)
        lifted = [""] + [_lift_word(w) for w in inner]
        weights = [len(inner)] + [1] * len(inner)
        n_words = 0
        switch_values = OrderedDict()
        for w, c in zip(lifted, weights):
            value = evaluate(spec, w)
            switch_values[value] = switch_values.get(value, 0) + c
        T = evaluate(spec, "T")
        t = evaluate(spec, "t")
        for (u1, c1), move, (u2, c2) in itertools.product(switch_values.items(), (T, t), switch_values.items()):
            g = spec.mul(spec.mul(u1, move), u2)
            counts[g] = counts.get(g, 0) + c1 * c2
            n_words += c1 * c2
    else:
        raise ValueError("sws generators are enumerated for levels 1 and 2")
    result = SwsGenerators(tuple(counts), tuple(counts.values()), n_words)
    _SWS_CACHE[spec] = result
    return result


def _lift_word(word: str) -> str:
    """Rename a level-1 word so it acts as a lamp at position 0 of level 2."""
    return "".join({"T": "T1", "t": "t1"}.get(ch, ch) for ch in word)


# ---------------------------------------------------------------------------
# exact lengths

class _Ball:
    """Breadth-first ball around the identity, grown on demand."""

    def __init__(self, identity, gens, mul):
        self.dist = {identity: 0}
        self.frontier = [identity]
        self.radius = 0
        self.gens = gens
        self.mul = mul

    def grow(self):
        new = []
        dist = self.dist
        r = self.radius + 1
        for x in self.frontier:
            for s in self.gens:
                y = self.mul(x, s)
                if y not in dist:
                    dist[y] = r
                    new.append(y)
        self.frontier = new
        self.radius = r
        return new


_BALLS: "OrderedDict" = OrderedDict()
_MAX_BALLS = 8


def _ball_for(key, identity, gens, mul) -> _Ball:
    ball = _BALLS.get(key)
    if ball is None:
        ball = _Ball(identity, gens, mul)
        _BALLS[key] = ball
        while len(_BALLS) > _MAX_BALLS:
            _BALLS.popitem(last=False)
    else:
        _BALLS.move_to_end(key)
    return ball


def clear_caches():
    _BALLS.clear()
    _SWS_CACHE.clear()


def word_distance(target, identity, gens: Sequence, mul: Callable, cap: int,
                  node_cap: int = DEFAULT_NODE_CAP, cache_key: Hashable = None,
                  ball_budget: Optional[int] = None) -> Optional[int]:
    """Distance from identity to ``target`` in the Cayley graph of ``gens``.

    ``gens`` must be closed under inverses.  The identity side of the search
    is cached under ``cache_key``; the target side is expanded per query.
    Returns None when the distance exceeds ``cap``.
    """
    if ball_budget is None:
        ball_budget = node_cap // 2
    key = cache_key if cache_key is not None else ("anon", id(gens))
    ball = _ball_for(key, identity, gens, mul)
    d = ball.dist.get(target)
    if d is not None:
        return d if d <= cap else None
    seen = {target: 0}
    frontier = [target]
    r_target = 0
    branching = max(len(gens), 2)
    while True:
        if ball.radius + r_target >= cap:
            return None
        if len(ball.dist) + len(seen) > node_cap:
            raise ResourceError(f"search exceeded {node_cap} nodes")
        grow_ball = (len(ball.frontier) * branching + len(ball.dist) <= ball_budget
                     and len(ball.frontier) <= max(len(frontier), 1) * branching)
        if grow_ball and ball.frontier:
            for y in ball.grow():
                if y in seen:
                    return ball.radius + seen[y]
            continue
        if not frontier:
            return None
        new = []
        r_target += 1
        for x in frontier:
            for s in gens:
                y = mul(x, s)
                if y in seen:
                    continue
                seen[y] = r_target
                hit = ball.dist.get(y)
                if hit is not None:
                    return r_target + hit
                new.append(y)
            if len(seen) + len(ball.dist) > node_cap:
                raise ResourceError(f"search exceeded {node_cap} nodes")
        frontier = new


def exact_length_bfs(g, spec: GroupSpec | DiagonalSpec, cap: int = 12,
                     node_cap: int = DEFAULT_NODE_CAP) -> Optional[int]:
    """Exact sws length of ``g``, or None if it exceeds ``cap``."""
    gens = sws_generators(spec).elements
    return word_distance(g, spec.identity(), gens, spec.mul, cap, node_cap,
                         cache_key=("sws", spec))


MARKED = ("T", "t", "a", "b")


def marked_length(g, spec, cap: int = 12, node_cap: int = DEFAULT_NODE_CAP) -> Optional[int]:
    """Exact length with respect to the marked generators T, t, a, b."""
    gens = tuple(spec.gen(x) for x in MARKED)
    return word_distance(g, spec.identity(), gens, spec.mul, cap, node_cap,
                         cache_key=("marked", spec))


# ---------------------------------------------------------------------------
# range, L-function, local time

@dataclass(frozen=True)
class RangeInfo:
    sites: frozenset
    extent: int


def _require_line(spec: GroupSpec):
    if spec.level != 1:
        raise UnsupportedSpecError("only level-1 groups have a range and L-function")
    if spec.m is not INF:
        raise UnsupportedSpecError("ranges are defined on Z; use m = inf")


def range_of(g: WreathElem, spec: GroupSpec | None = None) -> RangeInfo:
    spec = spec or g.spec
    _require_line(spec)
    l = spec.l
    a_code = dihedral_word_code("a", l)
    b_code = dihedral_word_code("b", l)
    sites = {0, g.position}
    for x, c in g.lamps:
        if c != b_code:
            sites.add(x)
        if c != a_code:
            sites.add(x - spec.k)
    return RangeInfo(frozenset(sites), max(sites) - min(sites))


def dihedral_word_code(letter: str, l) -> int:
    c = 1 if letter == "a" else -1
    return c if l is INF else c % (2 * l)


class WordShape(NamedTuple):
    core: int
    e1: int
    e2: int


def ell_function(g: WreathElem) -> dict:
    """x -> WordShape(L(x), e1(x), e2(x)) for every nontrivial lamp."""
    spec = g.spec
    if spec.level != 1:
        raise UnsupportedSpecError("the L-function is defined for level 1")
    L = 0 if spec.l is INF else spec.l
    out = {}
    for x, c in g.lamps:
        e1, core, e2, _, _ = K.decompose(c, L)
        out[x] = WordShape(int(core), int(e1), int(e2))
    return out


def local_time(increments: Sequence[int], k: int, include_start: bool = False) -> dict:
    """Alternation counts t_x of the visit words of a base path.

    The visit word of x lists, in time order, ``a`` when the path is at x and
    ``b`` when it is at x - k; t_x is its length once runs of equal letters
    are collapsed.  For k = 0 the two cursors coincide and t_x counts the
    visits.  Positions S_1..S_n are read; ``include_start`` adds S_0.
    """
    pos = 0
    path = [0] if include_start else []
    for step in increments:
        if step not in (1, -1):
            raise ValueError("increments must be +1 or -1")
        pos += step
        path.append(pos)
    last: dict = {}
    out: dict = {}
    for p in path:
        if k == 0:
            out[p] = out.get(p, 0) + 1
            continue
        for x, letter in ((p, "a"), (p + k, "b")):
            if last.get(x) != letter:
                out[x] = out.get(x, 0) + 1
                last[x] = letter
    return out


# ---------------------------------------------------------------------------
# bounds

@dataclass(frozen=True)
class LengthBounds:
    lower: int
    upper: int
    exact: Optional[int] = None
    window_sum: Optional[int] = None
    formula_upper: Optional[int] = None
    heuristic: bool = False

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"inconsistent bounds {self.lower} > {self.upper}")
        if self.exact is not None and not self.lower <= self.exact <= self.upper:
            raise ValueError(f"exact length {self.exact} outside [{self.lower}, {self.upper}]")


def element_arrays(g: WreathElem, pad: int = 0):
    """(lo, codes, position) for a level-1 element on Z."""
    sites = [x for x, _ in g.lamps]
    lo = min(sites + [0, g.position]) - pad
    hi = max(sites + [0, g.position]) + pad
    f = np.zeros(hi - lo + 1, dtype=np.int64)
    for x, c in g.lamps:
        f[x - lo] = c
    return lo, f, g.position


def _l_int(spec: GroupSpec) -> int:
    return 0 if spec.l is INF else spec.l


def window_sum_term(g: WreathElem) -> int:
    """The sum of 2 max L(y) over windows (y - k, y], reported for comparison."""
    k = g.spec.k
    if k == 0:
        return 0
    ell = ell_function(g)
    total = 0
    if not ell:
        return 0
    lo = min(ell) - k
    hi = max(ell)
    for x in range(lo, hi + 1):
        best = max((ell[y].core for y in range(x + 1, x + k + 1) if y in ell), default=0)
        total += 2 * best
    return total


def lemma_max_bounds(g: WreathElem, spec: GroupSpec | None = None,
                     exact: Optional[int] = None) -> LengthBounds:
    """Certified lower and constructive upper bounds on the sws length."""
    spec = spec or g.spec
    _require_line(spec)
    lo, f, pos = element_arrays(g)
    lower, upper = K.bounds(lo, f, pos, spec.k, _l_int(spec))
    s = window_sum_term(g)
    extent = range_of(g, spec).extent
    return LengthBounds(int(lower), int(upper), exact, s, s + 5 * extent)


def diagonal_bounds(g: Sequence[WreathElem], spec: DiagonalSpec, walk_span: int | None = None) -> LengthBounds:
    """Bounds for an element of a diagonal product.

    Each factor is a marked quotient of the diagonal product, so the largest
    factor lower bound is a lower bound.  The upper bound is taken from a
    factor whose word also evaluates correctly in every other factor (see
    :func:`lift_upper`); otherwise it is unavailable and reported as -1.
    """
    lowers = []
    for elem, factor in zip(g, spec.factors):
        if factor.m is INF and factor.level == 1:
            lo, f, pos = element_arrays(elem)
            lowers.append(int(K.bounds(lo, f, pos, factor.k, _l_int(factor))[0]))
    lower = max(lowers, default=0)
    upper = lift_upper(g, spec)
    if upper is None:
        return LengthBounds(lower, max(lower, 10**18), heuristic=True)
    return LengthBounds(lower, max(upper, lower))


def lift_main_factor(spec: DiagonalSpec) -> Optional[int]:
    """Index of a factor whose Z-lift maps onto every other factor.

    Factor j is covered by the lift Gamma(k, l, inf) of the main factor when
    it is Gamma(k', 1 or 2, m') (any k', since Gamma(k', 2, inf) is marked
    isomorphic to Gamma(0, 2, inf)) with l even or infinite, or when it has
    the same k and l' divides l.
    """
    factors = spec.factors
    for i, main in enumerate(factors):
        if main.level != 1:
            return None
        if all(_covers(main, other) for other in factors):
            return i
    return None


def _covers(main: GroupSpec, other: GroupSpec) -> bool:
    if other.l == 1:
        return True
    l = main.l
    if other.l == 2 and (l is INF or l % 2 == 0):
        return True
    if other.k != main.k:
        return False
    if l is INF:
        return True
    return other.l is not INF and l % other.l == 0


def lift_upper(g: Sequence[WreathElem], spec: DiagonalSpec) -> Optional[int]:
    """Upper bound through the main factor, valid without wrap-around.

    Finite-m factors are handled only when every lamp and base point of the
    main factor fits in a window shorter than m, so that reading the lift
    modulo m is injective.  Factors with abelian lamps (l <= 2) need no window
    since reduction mod m is then a homomorphism.
    """
    i = lift_main_factor(spec)
    if i is None:
        return None
    main = spec.factors[i]
    elem = g[i]
    if main.m is not INF:
        return None
    lo, f, pos = element_arrays(elem)
    mn, mx = K.letter_hull(lo, f, pos, main.k)
    for other in spec.factors:
        if other.m is not INF and other.l not in (1, 2) and (mx - mn) + max(other.k, main.k) + 1 >= other.m:
            return None
    return int(K.upper_one(lo, f, pos, main.k, _l_int(main)))


# ---------------------------------------------------------------------------
# explicit words

@dataclass
class _Plan:
    path: list = field(default_factory=lambda: [0])
    marks: list = field(default_factory=lambda: [""])

    def move_to(self, target: int, on_arrive=None):
        while self.path[-1] != target:
            self.path.append(self.path[-1] + (1 if target > self.path[-1] else -1))
            self.marks.append("")
            if on_arrive is not None:
                on_arrive(self)

    @property
    def here(self) -> int:
        return self.path[-1]

    def put(self, letter: str):
        if letter in self.marks[-1]:
            raise AssertionError("two identical switches at one instant")
        self.marks[-1] += letter


def _windows(sites: Iterable[int], k: int) -> list[tuple[int, int]]:
    """Merge the windows [x - k, x] of the given sites into disjoint intervals."""
    comps: list[list[int]] = []
    for x in sorted(sites):
        if comps and x - k <= comps[-1][1]:
            comps[-1][1] = max(comps[-1][1], x)
        else:
            comps.append([x - k, x])
    return [tuple(c) for c in comps]


def _plan_k(lo, f, pos, k, L, orient: int) -> _Plan:
    """Skeleton with a zigzag sweep, then greedy letter placement.

    orient 0 runs 0 -> mx, sweeps leftwards to mn and ends with mn -> pos;
    orient 1 is the mirror image.  A lamp needing m rounds sits inside a
    window that the sweep crosses back and forth m extra times.
    """
    mn, mx = (int(v) for v in K.word_hull(lo, f, pos, k, L))
    rounds = K.lamp_rounds(lo, f, pos, k, L, orient, mn, mx)
    need = {lo + j: int(rounds[j]) for j in range(len(f)) if f[j]}
    plan = _Plan()
    step = -1 if orient == 0 else 1

    def sweep(start: int, end: int, r: int):
        comps = [c for c in _windows([x for x, m in need.items() if m >= r], k)
                 if min(start, end) <= c[0] and c[1] <= max(start, end)]
        turn = {(c[0] if step < 0 else c[1]): c for c in comps}
        while True:
            c = turn.pop(plan.here, None)
            if c is not None:
                back, forth = (c[1], c[0]) if step < 0 else (c[0], c[1])
                plan.move_to(back)
                sweep(back, forth, r + 1)
            if plan.here == end:
                break
            plan.move_to(plan.here + step)

    if orient == 0:
        plan.move_to(mx)
        sweep(mx, mn, 1)
    else:
        plan.move_to(mn)
        sweep(mn, mx, 1)
    plan.move_to(pos)
    if len(plan.path) == 1 and need:
        plan.move_to(1)
        plan.move_to(0)
    _place_letters(plan, lo, f, k, L)
    return plan


def _place_letters(plan: _Plan, lo, f, k, L):
    visits: dict = {}
    for j, p in enumerate(plan.path):
        visits.setdefault(p, []).append(j)
    for idx in range(len(f)):
        c = int(f[idx])
        if not c:
            continue
        x = lo + idx
        events = sorted([(j, 0) for j in visits.get(x, [])] + [(j, 1) for j in visits.get(x - k, [])])
        start, alt, r = (int(v) for v in K.word_start(c, L))
        chosen = None
        for s0 in (start, alt):
            if s0 < 0:
                continue
            picked, want = [], s0
            for j, letter in events:
                if letter == want and len(picked) < r:
                    picked.append((j, letter))
                    want = 1 - want
            if len(picked) == r:
                chosen = picked
                break
        if chosen is None:
            raise AssertionError(f"lamp at {x} cannot be written along the planned path")
        for j, letter in chosen:
            plan.marks[j] += "a" if letter == 0 else "b"


def _plan_k0(lo, f, pos, L) -> _Plan:
    """Euler trail for the optimal crossing counts, words cut into chunks."""
    mn, c = K.k0_crossings(lo, f, pos, L)
    mn = int(mn)
    words = {}
    for j, code in enumerate(f):
        if code:
            words[lo + j] = dihedral_word(int(code), INF if L == 0 else L)
    plan = _Plan()
    if len(c) == 1 and not any(x != mn for x in words) and pos == 0 and mn == 0:
        for _ in range(int(c[0]) // 2):
            plan.move_to(1)
            plan.move_to(0)
    else:
        mx = mn + len(c)
        lo_b, hi_b = min(0, pos), max(0, pos)
        extra = {mn + i: int(v) - (1 if lo_b <= mn + i < hi_b else 2) for i, v in enumerate(c)}
        seen = set()

        def arrive(p: _Plan):
            y = p.here
            if y in seen:
                return
            seen.add(y)
            for _ in range(extra.get(y, 0) // 2):
                p.path += [y + 1, y]
                p.marks += ["", ""]

        arrive(plan)
        for target in ((mn, mx, pos) if pos >= 0 else (mx, mn, pos)):
            plan.move_to(target, arrive)
    n = len(plan.path) - 1
    remaining = dict(words)
    for j, p in enumerate(plan.path):
        w = remaining.get(p)
        if w:
            size = 2 if j in (0, n) else 4
            plan.marks[j] = w[:size]
            remaining[p] = w[size:]
    if any(remaining.values()):
        raise AssertionError("crossing counts leave a lamp unwritten")
    return plan


def _plan_to_steps(plan: _Plan, k: int) -> list[str]:
    path, marks = plan.path, plan.marks
    n = len(path) - 1
    if n == 0:
        return []
    u1 = [""] * (n + 1)
    u2 = [""] * (n + 1)
    for j, m in enumerate(marks):
        if k >= 1:
            m = "".join(sorted(m))
            if j < n:
                u1[j + 1] = m
            else:
                u2[n] = m
        elif j == 0:
            u1[1] = m
        elif j == n:
            u2[n] = m
        else:
            u2[j], u1[j + 1] = m[:2], m[2:]
    steps = []
    for j in range(1, n + 1):
        move = "T" if path[j] > path[j - 1] else "t"
        steps.append(u1[j] + move + u2[j])
    return steps


def invert_steps(steps: Sequence[str]) -> list[str]:
    return [FreeWord.parse(s).inverse().text for s in reversed(steps)]


def construct_word(g: WreathElem) -> list[str]:
    """An explicit sws word for ``g`` whose length equals the upper bound.

    Returned as the list of its sws generators, each a string u1 T^eta u2.
    """
    spec = g.spec
    _require_line(spec)
    L = _l_int(spec)
    lo, f, pos = element_arrays(g)
    lo2, f2, pos2 = K.invert(lo, f, pos, L)
    candidates = []
    for (a, b, c), inverted in (((lo, f, pos), False), ((int(lo2), f2, int(pos2)), True)):
        if spec.k >= 1:
            for orient in (0, 1):
                candidates.append((_plan_k(a, b, c, spec.k, L, orient), inverted))
        else:
            candidates.append((_plan_k0(a, b, c, L), inverted))
    best = min(candidates, key=lambda c: len(c[0].path))
    steps = _plan_to_steps(best[0], spec.k)
    return invert_steps(steps) if best[1] else steps


def is_sws_step(step: str) -> bool:
    for i, ch in enumerate(step):
        if ch in "Tt":
            return step[:i] in SWITCHES and step[i + 1:] in SWITCHES
    return False
