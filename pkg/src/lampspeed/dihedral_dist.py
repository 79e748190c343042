"""Exact law of the random alternating product Y_t = a^e1 b^e2 a^e3 ...

``dihedral_dist(t, l)`` gives p_t(x) = P(d(Y_t, {e, a}) = x) in D_l, where the
Cayley graph of D_l is a cycle of length 2l and x runs over 0..l-1.

Multiplying by a^e pairs the cycle positions {2j, 2j+1}; seen from the edge
{e, a} this averages the distances (2x+1, 2x+2) and leaves distance 0 alone.
Multiplying by b^e pairs {2j-1, 2j}, i.e. averages distances (2x, 2x+1).
An index left without a partner at the far end of the vector is fixed.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .groups import dihedral_mul_code


@dataclass(frozen=True)
class DihedralDist:
    t: int
    l: int
    p: tuple

    def __post_init__(self):
        if any(v < 0 for v in self.p) or sum(self.p) != 1:
            raise ValueError("not a probability vector")

    def is_monotone(self) -> bool:
        return all(a >= b for a, b in zip(self.p, self.p[1:]))


def _check(t: int, l: int):
    if not isinstance(l, int) or l < 2:
        raise ValueError(f"l must be a finite integer >= 2, got {l}")
    if t < 0:
        raise ValueError("t must be >= 0")


def _average_pairs(p: list, start: int) -> list:
    out = list(p)
    for i in range(start, len(p) - 1, 2):
        mean = (p[i] + p[i + 1]) / 2
        out[i] = out[i + 1] = mean
    return out


def dihedral_dist(t: int, l: int) -> DihedralDist:
    _check(t, l)
    p = [Fraction(0)] * l
    p[0] = Fraction(1)
    for step in range(1, t + 1):
        # odd steps multiply by a power of a, even steps by a power of b
        p = _average_pairs(p, 1 if step % 2 else 0)
    return DihedralDist(t, l, tuple(p))


def edge_distance(code: int, l: int) -> int:
    c = code % (2 * l)
    return min(c, 2 * l - c, abs(c - 1), 2 * l + 1 - c)


def enumerate_dist(t: int, l: int) -> DihedralDist:
    """Brute force over all 2**t exponent vectors."""
    _check(t, l)
    counts = [0] * l
    for bits in itertools.product((0, 1), repeat=t):
        code = 0
        for j, e in enumerate(bits):
            if e:
                code = dihedral_mul_code(code, 1 if j % 2 == 0 else -1, l)
        counts[edge_distance(code, l)] += 1
    return DihedralDist(t, l, tuple(Fraction(c, 2**t) for c in counts))


def norm_dist(t: int, l: int) -> tuple:
    """Exact law of |Y_t| in D_l as a vector indexed by 0..l."""
    _check(t, l)
    mod = 2 * l
    q = [Fraction(0)] * mod
    q[0] = Fraction(1)
    for step in range(1, t + 1):
        letter = 1 if step % 2 else -1
        new = [Fraction(0)] * mod
        for c, w in enumerate(q):
            if w:
                new[c] += w / 2
                new[dihedral_mul_code(c, letter, l)] += w / 2
        q = new
    out = [Fraction(0)] * (l + 1)
    for c, w in enumerate(q):
        out[min(c, mod - c)] += w
    return tuple(out)


@dataclass(frozen=True)
class Ineq32:
    t: int
    l: int
    left_closed: Fraction
    right_closed: Fraction
    left_strict: Fraction
    right_strict: Fraction

    @property
    def holds(self) -> bool:
        return self.left_closed <= self.right_closed and self.left_strict <= self.right_strict

    @property
    def equality(self) -> bool:
        return self.left_closed == self.right_closed or self.left_strict == self.right_strict


def check_ineq_32(t: int, l: int) -> Ineq32:
    """P(|Y_t| in [3l/2, 2l]) <= P(|Y_t| in [l/2, 3l/2]) in D_{2l}.

    Both intervals are read as closed, and again with the shared endpoint
    3l/2 given to the left-hand side only.
    """
    if l < 4:
        raise ValueError("the inequality is stated for l >= 4")
    dist = norm_dist(t, 2 * l)
    half = Fraction(l, 2)
    three_half = Fraction(3 * l, 2)
    left_c = sum((w for r, w in enumerate(dist) if three_half <= r <= 2 * l), Fraction(0))
    right_c = sum((w for r, w in enumerate(dist) if half <= r <= three_half), Fraction(0))
    left_s = left_c
    right_s = sum((w for r, w in enumerate(dist) if half <= r < three_half), Fraction(0))
    return Ineq32(t, l, left_c, right_c, left_s, right_s)
