"""Compiled walk engine for level-1 groups and their diagonal products.

Each factor is simulated on Z (finite m is handled through its Z-lift and a
wrap flag).  One uint64 of a Philox stream keyed by (seed, walker) drives one
step; bit j of the draw is, in order, e1, e2, o1, eta, e1', e2', o2.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from . import _kernels as K
from .groups import INF, DiagonalSpec, GroupSpec

# columns of the per-factor checkpoint record
LOWER, UPPER, HULL_MN, HULL_MX, MAX_NORM, SPAN_MN, SPAN_MX, POS = range(8)
N_FIELDS = 8

STEP_BITS = 7


def walker_stream(seed: int, walker: int, n: int, words_per_step: int = 1) -> np.ndarray:
    bg = np.random.Philox(key=np.array([seed, walker], dtype=np.uint64))
    return bg.random_raw(n * words_per_step)


@njit(cache=True)
def _switch(f, W, p, k, e_first, e_second, order, L):
    # u = a^e1 b^e2 (order 0) or b^e1 a^e2 (order 1); a acts at p, b at p + k
    bc = -1 if L == 0 else 2 * L - 1
    for slot in range(2):
        e = e_first if slot == 0 else e_second
        if e == 0:
            continue
        is_a = (slot == 0) == (order == 0)
        if is_a:
            f[p + W] = K.mul_code(f[p + W], 1, L)
        else:
            f[p + k + W] = K.mul_code(f[p + k + W], bc, L)


@njit(cache=True)
def run_walker(raw, ks, Ls, checkpoints, W):
    """Simulate one walker; returns (n_checkpoints, n_factors, N_FIELDS)."""
    nf = len(ks)
    ncp = len(checkpoints)
    out = np.zeros((ncp, nf, 8), dtype=np.int64)
    f = np.zeros((nf, 2 * W + 1), dtype=np.int64)
    p = 0
    pmin = 0
    pmax = 0
    kmax = 0
    for j in range(nf):
        kmax = max(kmax, ks[j])
    c = 0
    n = 0
    while c < ncp:
        if checkpoints[c] == n:
            for j in range(nf):
                k = ks[j]
                lo = pmin
                hi = pmax + k
                seg = f[j, lo + W: hi + W + 1]
                lower, upper = K.bounds(lo, seg, p, k, Ls[j])
                mn, mx = K.letter_hull(lo, seg, p, k)
                mxn = 0
                for q in range(len(seg)):
                    if seg[q] != 0:
                        mxn = max(mxn, K.norm_code(seg[q], Ls[j]))
                rec = out[c, j]
                rec[0] = lower
                rec[1] = upper
                rec[2] = mn
                rec[3] = mx
                rec[4] = mxn
                rec[5] = pmin
                rec[6] = pmax
                rec[7] = p
            c += 1
            continue
        r = raw[n]
        e1 = r & 1
        e2 = (r >> 1) & 1
        o1 = (r >> 2) & 1
        eta = 1 if (r >> 3) & 1 else -1
        g1 = (r >> 4) & 1
        g2 = (r >> 5) & 1
        o2 = (r >> 6) & 1
        for j in range(nf):
            _switch(f[j], W, p, ks[j], e1, e2, o1, Ls[j])
        p += eta
        if p < pmin:
            pmin = p
        if p > pmax:
            pmax = p
        for j in range(nf):
            _switch(f[j], W, p, ks[j], g1, g2, o2, Ls[j])
        n += 1
    return out


def factor_arrays(spec: GroupSpec | DiagonalSpec):
    factors = spec.factors if isinstance(spec, DiagonalSpec) else (spec,)
    if not factors:
        raise ValueError("empty diagonal product has no walk")
    if any(f.level != 1 for f in factors):
        raise ValueError("the compiled engine handles level-1 factors only")
    ks = np.array([f.k for f in factors], dtype=np.int64)
    Ls = np.array([0 if f.l is INF else f.l for f in factors], dtype=np.int64)
    ms = np.array([0 if f.m is INF else f.m for f in factors], dtype=np.int64)
    return factors, ks, Ls, ms


def simulate_records(spec, checkpoints, walkers: range, seed: int) -> np.ndarray:
    """Raw records for a block of walkers: (walkers, checkpoints, factors, fields)."""
    factors, ks, Ls, _ = factor_arrays(spec)
    cps = np.asarray(sorted(checkpoints), dtype=np.int64)
    n_max = int(cps[-1]) if len(cps) else 0
    W = n_max + int(ks.max()) + 2
    out = np.empty((len(walkers), len(cps), len(factors), N_FIELDS), dtype=np.int64)
    for i, w in enumerate(walkers):
        raw = walker_stream(seed, w, n_max)
        out[i] = run_walker(raw, ks, Ls, cps, W)
    return out


def combine(spec, records: np.ndarray, main: int | None):
    """Diagonal lower and upper bounds from per-factor records.

    Returns (lower, upper, heuristic) arrays over (walkers, checkpoints).
    Finite-m factors contribute min(lift lower, m - hull width - k) while the
    walk has not wrapped, and nothing once it has.  The upper bound is the
    main factor's constructive bound when its word also evaluates correctly
    in every factor (always for abelian lamps, else only without wrap-around); otherwise the sum of the factor bounds is returned and
    flagged heuristic.
    """
    _, ks, Ls, ms = factor_arrays(spec)
    lower_f = records[..., LOWER].copy()
    width = records[..., HULL_MX] - records[..., HULL_MN]
    span = records[..., SPAN_MX] - records[..., SPAN_MN] + ks
    finite = ms > 0
    wrapped = finite & (span >= np.where(finite, ms, 1))
    capped = np.maximum(np.where(finite, ms, 0) - width - ks, 0)
    lower_f = np.where(finite, np.minimum(lower_f, capped), lower_f)
    lower_f = np.where(wrapped, 0, lower_f)
    lower = lower_f.max(axis=-1)
    upper_sum = records[..., UPPER].sum(axis=-1)
    if main is None:
        heur = np.ones(lower.shape, dtype=bool)
        return lower, np.maximum(upper_sum, lower), heur
    main_width = width[..., main] + 1
    window_ok = np.ones(lower.shape, dtype=bool)
    for j in range(len(ks)):
        # reduction mod m is a homomorphism when the lamp group is abelian
        if finite[j] and not 1 <= Ls[j] <= 2:
            window_ok &= (main_width + max(ks[j], ks[main]) < ms[j]) & ~wrapped[..., j]
    upper = np.where(window_ok, records[..., main, UPPER], upper_sum)
    return lower, np.maximum(upper, lower), ~window_ok
