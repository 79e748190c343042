"""Marked Cayley balls, ball coincidence and the finite-factor constants.

Every group here is marked by the letters T, t, a, b.  Two marked groups have
the same ball of radius R when a word of length <= 2R is trivial in one iff
it is trivial in the other.  That holds exactly when the words of length <= R
induce a bijection between the two balls, which a breadth-first search over
pairs of elements decides and, on failure, turns into a witness word.
"""
from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .groups import INF, DiagonalSpec, FreeWord, GroupSpec, WreathElem, evaluate, is_identity
from .metric import MARKED, ResourceError, UnsupportedSpecError

DEFAULT_STATE_CAP = 2_000_000
CLOSURE_CAP = 10**6


def canonical(x) -> str:
    if isinstance(x, WreathElem):
        return x.canonical()
    return "(" + ";".join(canonical(c) for c in x) + ")"


class MarkedProduct:
    """Diagonal product of marked groups given as objects with gen/mul."""

    def __init__(self, *groups):
        self.groups = tuple(groups)
        self.level = groups[0].level if groups else 1

    def identity(self):
        return tuple(g.identity() for g in self.groups)

    def gen(self, letter):
        return tuple(g.gen(letter) for g in self.groups)

    def mul(self, x, y):
        return tuple(g.mul(p, q) for g, p, q in zip(self.groups, x, y))

    def inv(self, x):
        return tuple(g.inv(p) for g, p in zip(self.groups, x))

    def __repr__(self):
        return " × ".join(str(g) for g in self.groups) or "{e}"


def as_group(spec):
    """GroupSpec and DiagonalSpec already act as marked groups."""
    return spec


def spec_text(spec) -> str:
    if isinstance(spec, (GroupSpec, DiagonalSpec)):
        return spec.to_text()
    return repr(spec)


# ---------------------------------------------------------------------------
# balls

@dataclass
class MarkedBall:
    root: int
    vertices: list
    edges: dict
    radius: int
    depth: list = field(default_factory=list)

    def __len__(self):
        return len(self.vertices)

    def keys(self) -> list[str]:
        return [canonical(v) for v in self.vertices]


def marked_ball(spec, R: int, state_cap: int = DEFAULT_STATE_CAP,
                alphabet: Sequence[str] = MARKED) -> MarkedBall:
    if R < 0:
        raise ValueError("radius must be >= 0")
    group = as_group(spec)
    gens = [group.gen(x) for x in alphabet]
    e = group.identity()
    index = {e: 0}
    vertices = [e]
    depth = [0]
    edges = {}
    frontier = [0]
    for d in range(R):
        new = []
        for v in frontier:
            x = vertices[v]
            for letter, s in zip(alphabet, gens):
                y = group.mul(x, s)
                w = index.get(y)
                if w is None:
                    w = len(vertices)
                    index[y] = w
                    vertices.append(y)
                    depth.append(d + 1)
                    new.append(w)
                    if len(vertices) > state_cap:
                        raise ResourceError(f"ball exceeded {state_cap} vertices")
                edges[(v, letter)] = w
        frontier = new
    return MarkedBall(0, vertices, edges, R, depth)


@dataclass(frozen=True)
class Coincidence:
    coincide: bool
    radius: int
    witness: Optional[str] = None

    def to_json(self, A, B) -> dict:
        return {
            "specA": spec_text(A),
            "specB": spec_text(B),
            "radius": self.radius,
            "coincide": self.coincide,
            "witness": self.witness,
        }


def balls_coincide(A, B, R: int, state_cap: int = DEFAULT_STATE_CAP,
                   alphabet: Sequence[str] = MARKED) -> Coincidence:
    """Decide equality of marked balls of radius R by a product search."""
    if R < 0:
        raise ValueError("radius must be >= 0")
    ga, gb = as_group(A), as_group(B)
    gens_a = [ga.gen(x) for x in alphabet]
    gens_b = [gb.gen(x) for x in alphabet]
    ea, eb = ga.identity(), gb.identity()
    a2b = {ea: eb}
    b2a = {eb: ea}
    word_of = {ea: ""}
    frontier = [(ea, eb)]
    for _ in range(R):
        new = []
        for xa, xb in frontier:
            w = word_of[xa]
            for letter, sa, sb in zip(alphabet, gens_a, gens_b):
                ya = ga.mul(xa, sa)
                yb = gb.mul(xb, sb)
                seen_b = a2b.get(ya)
                seen_a = b2a.get(yb)
                if seen_b is None and seen_a is None:
                    a2b[ya] = yb
                    b2a[yb] = ya
                    word_of[ya] = w + letter
                    new.append((ya, yb))
                    if len(a2b) > state_cap:
                        raise ResourceError(f"product search exceeded {state_cap} states")
                    continue
                if seen_b == yb and seen_a == ya:
                    continue
                earlier = word_of[ya] if seen_b is not None else word_of[seen_a]
                witness = FreeWord.parse(w + letter) + FreeWord.parse(earlier).inverse()
                return Coincidence(False, R, witness.text)
        frontier = new
    return Coincidence(True, R)


def first_difference(A, B, max_radius: int = 8, **kw) -> Coincidence:
    """Smallest radius at which the balls differ, with its witness."""
    for R in range(max_radius + 1):
        res = balls_coincide(A, B, R, **kw)
        if not res.coincide:
            return res
    return Coincidence(True, max_radius)


def check_witness(A, B, word: str) -> bool:
    """True when ``word`` is trivial in exactly one of the two groups."""
    return is_identity(evaluate(A, word)) != is_identity(evaluate(B, word))


# ---------------------------------------------------------------------------
# quotients

@dataclass(frozen=True)
class QuotientReport:
    holds: bool
    words_checked: int
    exhaustive_len: int
    witness: Optional[str] = None


def quotient_check(A, B, samples: int = 1000, max_len: int = 6, seed: int = 0,
                   relator_radius: int = 4, alphabet: Sequence[str] = MARKED) -> QuotientReport:
    """Check that relators of A are relators of B.

    All words up to ``max_len`` are tried, then ``samples`` random conjugates
    of the relators of A met while growing its ball to ``relator_radius``.
    """
    ga, gb = as_group(A), as_group(B)
    checked = 0

    def violates(word: str) -> bool:
        return is_identity(evaluate(ga, word)) and not is_identity(evaluate(gb, word))

    for n in range(max_len + 1):
        for letters in itertools.product(alphabet, repeat=n):
            checked += 1
            word = "".join(letters)
            if violates(word):
                return QuotientReport(False, checked, max_len, word)
    relators = short_relators(ga, relator_radius, alphabet=alphabet)
    rng = random.Random(seed)
    for i in range(samples if relators else 0):
        r = relators[i % len(relators)]
        u = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 6)))
        word = u + r + FreeWord.parse(u).inverse().text
        checked += 1
        if violates(word):
            return QuotientReport(False, checked, max_len, word)
    return QuotientReport(True, checked, max_len)


def short_relators(group, radius: int, limit: int = 5000,
                   alphabet: Sequence[str] = MARKED) -> list[str]:
    """Relators w1 w2^-1 from pairs of words of length <= radius meeting in the ball."""
    gens = [group.gen(x) for x in alphabet]
    e = group.identity()
    word_of = {e: ""}
    frontier = [e]
    out = []
    for _ in range(radius):
        new = []
        for x in frontier:
            for letter, s in zip(alphabet, gens):
                y = group.mul(x, s)
                w = word_of[x] + letter
                if y in word_of:
                    r = (FreeWord.parse(w) + FreeWord.parse(word_of[y]).inverse()).reduced()
                    if r.letters and len(out) < limit:
                        out.append(r.text)
                    continue
                word_of[y] = w
                new.append(y)
        frontier = new
    return sorted(set(out), key=lambda r: (len(r), r))


# ---------------------------------------------------------------------------
# constants for a finite factor

@dataclass(frozen=True)
class DgenConstants:
    C1: int
    C2: int
    R: int
    transversal_size: int
    order_F: int
    diam_F: int
    kernel_order: int
    relator_radius: int

    def to_json(self) -> dict:
        return {
            "C1": self.C1,
            "C2": self.C2,
            "R": self.R,
            "transversal_size": self.transversal_size,
            "order_F": self.order_F,
            "diam_F": self.diam_F,
            "kernel_order": self.kernel_order,
            "relator_radius": self.relator_radius,
        }


def is_finite_spec(spec) -> bool:
    if isinstance(spec, GroupSpec):
        return spec.l is not INF and spec.m is not INF
    if isinstance(spec, DiagonalSpec):
        return all(is_finite_spec(f) for f in spec.factors)
    return False


def _closure(group, alphabet, cap):
    """BFS over a finite marked group; returns (elements in BFS order, eccentricity)."""
    gens = [group.gen(x) for x in alphabet]
    e = group.identity()
    dist = {e: 0}
    order = [e]
    queue = deque([e])
    while queue:
        x = queue.popleft()
        for s in gens:
            y = group.mul(x, s)
            if y not in dist:
                dist[y] = dist[x] + 1
                order.append(y)
                queue.append(y)
                if len(order) > cap:
                    raise ResourceError(f"finite group exceeds {cap} elements")
    return order, max(dist.values()), dist


def _subgroup_closure(group, generators, cap):
    e = group.identity()
    elems = {e}
    queue = deque([e])
    gens = [g for g in generators if g != e]
    while queue:
        x = queue.popleft()
        for s in gens:
            y = group.mul(x, s)
            if y not in elems:
                elems.add(y)
                queue.append(y)
                if len(elems) > cap:
                    raise ResourceError("subgroup closure too large")
    return elems


def dgen_constants(F, G, relator_radius: int = 4, state_cap: int = DEFAULT_STATE_CAP,
                   closure_cap: int = CLOSURE_CAP, alphabet: Sequence[str] = MARKED) -> DgenConstants:
    """Constants with |w^G| <= |w^D| <= C1 |w^G| + C2 for D the diagonal of G and F.

    Norms are word lengths in the marked letters.  K = {w^F : w^G = e} is
    generated, as a normal subgroup, by the images of relators of G of length
    at most 2 * relator_radius.  The transversal takes the least canonical key
    of each coset, with the identity representing K itself.
    """
    if not is_finite_spec(F):
        raise UnsupportedSpecError("F must be finite (l and m finite in every factor)")
    gF, gG = as_group(F), as_group(G)
    elems_F, diam_F, _ = _closure(gF, alphabet, closure_cap)
    eF = gF.identity()
    inv_F = {x: gF.inv(x) for x in elems_F}

    # images in F of short relators of G
    D = MarkedProduct(gG, gF)
    gens_D = [D.gen(x) for x in alphabet]
    seen_with = {gG.identity(): eF}
    relator_images = set()
    frontier = [D.identity()]
    visited = {D.identity()}
    for _ in range(relator_radius):
        new = []
        for x in frontier:
            for s in gens_D:
                y = D.mul(x, s)
                if y in visited:
                    continue
                visited.add(y)
                new.append(y)
                g, f = y
                ref = seen_with.setdefault(g, f)
                if ref != f:
                    relator_images.add(gF.mul(f, inv_F[ref]))
                if len(visited) > state_cap:
                    raise ResourceError("relator search exceeded the state cap")
        frontier = new
    conj = set()
    for r in relator_images:
        for x in elems_F:
            conj.add(gF.mul(gF.mul(x, r), inv_F[x]))
    kernel = _subgroup_closure(gF, conj, closure_cap)

    # right cosets K f, least canonical key first, identity for K
    rep_of = {}
    reps = []
    keyed = sorted(elems_F, key=lambda x: (x != eF, canonical(x)))
    for f in keyed:
        if f in rep_of:
            continue
        reps.append(f)
        for k in kernel:
            rep_of[gF.mul(k, f)] = f

    targets = set()
    for f_i in reps:
        for letter in alphabet:
            gamma = gG.gen(letter)
            phi = gF.gen(letter)
            # s = (gamma, e): partner coset of phi^-1 f_i
            f_j = rep_of[gF.mul(inv_F[phi], f_i)]
            targets.add((gamma, gF.mul(f_i, inv_F[f_j])))
            # s = (e, phi)
            f_j = rep_of[gF.mul(f_i, phi)]
            targets.add((gG.identity(), gF.mul(gF.mul(f_i, phi), inv_F[f_j])))
    for k in kernel:
        targets.add((gG.identity(), k))

    lengths = _diagonal_lengths(D, gens_D, targets, state_cap)
    C1 = max(1, max(lengths.values()))
    witness = max(lengths.values())
    return DgenConstants(C1, C1 * diam_F, witness, len(reps), len(elems_F), diam_F,
                         len(kernel), relator_radius)


def _diagonal_lengths(D, gens, targets, state_cap):
    e = D.identity()
    remaining = set(targets)
    found = {}
    dist = {e: 0}
    if e in remaining:
        found[e] = 0
        remaining.discard(e)
    frontier = [e]
    d = 0
    while remaining:
        if not frontier:
            raise ResourceError("diagonal search ended before reaching every generator")
        d += 1
        new = []
        for x in frontier:
            for s in gens:
                y = D.mul(x, s)
                if y in dist:
                    continue
                dist[y] = d
                new.append(y)
                if y in remaining:
                    found[y] = d
                    remaining.discard(y)
        if len(dist) > state_cap:
            raise ResourceError("diagonal search exceeded the state cap")
        frontier = new
    return found


def ball_distances(spec, R: int, state_cap: int = DEFAULT_STATE_CAP,
                   alphabet: Sequence[str] = MARKED) -> dict:
    """Marked word length of every element of the ball of radius R."""
    ball = marked_ball(spec, R, state_cap, alphabet)
    return {v: d for v, d in zip(ball.vertices, ball.depth)}
