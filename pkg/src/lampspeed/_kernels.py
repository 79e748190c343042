"""Compiled kernels for level-1 elements stored as flat arrays.

An element of Gamma(k, l, inf) is passed as ``(lo, f, pos)``: ``f[j]`` is the
dihedral code of the lamp at site ``lo + j`` and ``pos`` the base position.
``L`` is the dihedral parameter with 0 standing for l = inf inside kernels.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def norm_code(c, L):
    if L == 0:
        return abs(c)
    c %= 2 * L
    return min(c, 2 * L - c)


@njit(cache=True)
def inv_code(c, L):
    if c % 2 != 0:
        return c
    if L == 0:
        return -c
    return (-c) % (2 * L)


@njit(cache=True)
def mul_code(c1, c2, L):
    if c1 % 2 == 0:
        c = c1 + c2
    else:
        c = c1 - c2
    if L == 0:
        return c
    return c % (2 * L)


@njit(cache=True)
def decompose(c, L):
    """Minimal word b^e1 (ab)^core a^e2 for code c.

    Returns (e1, core, e2, uses_a, uses_b).  At norm l the representative with
    the smaller core wins, then the one starting with a.
    """
    if L == 0:
        if c >= 0:
            start_a = True
            s = c
        else:
            start_a = False
            s = -c
    else:
        c %= 2 * L
        if c == 0:
            start_a = True
            s = 0
        elif c < L:
            start_a = True
            s = c
        elif c > L:
            start_a = False
            s = 2 * L - c
        else:
            start_a = L % 2 == 1
            s = L
    if s == 0:
        return 0, 0, 0, False, False
    if start_a:
        return 0, s // 2, s % 2, True, s >= 2
    return 1, (s - 1) // 2, (s - 1) % 2, s >= 2, True


@njit(cache=True)
def _b_code(L):
    if L == 0:
        return -1
    return 2 * L - 1


@njit(cache=True)
def sliding_max(vals, lo, y0, y1, k):
    """out[y - y0] = max(vals[x - lo] for x in (y, y + k]) with 0 off-array."""
    n_out = y1 - y0 + 1
    out = np.zeros(max(n_out, 0), dtype=np.int64)
    if n_out <= 0 or k <= 0:
        return out
    size = len(vals)
    dq = np.empty(n_out + k + 1, dtype=np.int64)
    head = 0
    tail = 0
    for x in range(y0 + 1, y1 + k + 1):
        j = x - lo
        v = vals[j] if 0 <= j < size else 0
        while tail > head:
            jj = dq[tail - 1] - lo
            vv = vals[jj] if 0 <= jj < size else 0
            if vv <= v:
                tail -= 1
            else:
                break
        dq[tail] = x
        tail += 1
        y = x - k
        if y >= y0:
            while dq[head] <= y:
                head += 1
            jj = dq[head] - lo
            out[y - y0] = vals[jj] if 0 <= jj < size else 0
    return out


@njit(cache=True)
def necessary_hull(lo, f, pos, k, L):
    """Hull of the sites every representative word has to visit."""
    mn = min(0, pos)
    mx = max(0, pos)
    bc = _b_code(L)
    for j in range(len(f)):
        c = f[j]
        if c == 0:
            continue
        x = lo + j
        if c != bc:
            mn = min(mn, x)
            mx = max(mx, x)
        if c != 1:
            mn = min(mn, x - k)
            mx = max(mx, x - k)
    return mn, mx


@njit(cache=True)
def word_hull(lo, f, pos, k, L):
    """Hull of the sites used by the chosen minimal word of every lamp."""
    mn = min(0, pos)
    mx = max(0, pos)
    for j in range(len(f)):
        if f[j] == 0:
            continue
        x = lo + j
        e1, core, e2, ua, ub = decompose(f[j], L)
        if ua:
            mn = min(mn, x)
            mx = max(mx, x)
        if ub:
            mn = min(mn, x - k)
            mx = max(mx, x - k)
    return mn, mx


@njit(cache=True)
def _is_trivial(f, pos):
    if pos != 0:
        return False
    for j in range(len(f)):
        if f[j] != 0:
            return False
    return True


@njit(cache=True)
def lower_one(lo, f, pos, k, L):
    mn, mx = necessary_hull(lo, f, pos, k, L)
    size = len(f)
    total_norm = 0
    norms = np.zeros(size, dtype=np.int64)
    for j in range(size):
        if f[j] != 0:
            norms[j] = norm_code(f[j], L)
            total_norm += norms[j]
    between_lo = min(0, pos)
    between_hi = max(0, pos)
    if k >= 1:
        need = np.zeros(size, dtype=np.int64)
        for j in range(size):
            if norms[j] > 1:
                need[j] = norms[j] - 1
        req = sliding_max(need, lo, mn, mx - 1, k)
        crossing = 0
        for y in range(mn, mx):
            between = between_lo <= y < between_hi
            c = req[y - mn]
            base = 1 if between else 2
            if c < base:
                c = base
            if between and c % 2 == 0:
                c += 1
            if (not between) and c % 2 == 1:
                c += 1
            crossing += c
        capacity = (total_norm + 1) // 2 - 1
        lower = max(crossing, capacity)
    else:
        lower = k0_length(lo, f, pos, L)
    if (lower - pos) % 2 != 0:
        lower += 1
    if lower == 0 and not _is_trivial(f, pos):
        lower = 2
    return lower


@njit(cache=True)
def word_start(c, L):
    """(start, alt_start, norm) of the minimal words of code c; 0 is a, 1 is b.

    alt_start is -1 unless both starting letters give a minimal word.
    """
    n = norm_code(c, L)
    if n == 0:
        return -1, -1, 0
    e1, core, e2, ua, ub = decompose(c, L)
    start = 1 if e1 == 1 else 0
    alt = -1
    if L != 0 and n == L:
        alt = 1 - start
    return start, alt, n


@njit(cache=True)
def _matches(start, r, seq, n):
    need = start
    got = 0
    for i in range(n):
        if seq[i] == need:
            got += 1
            if got == r:
                return True
            need = 1 - need
    return got >= r


@njit(cache=True)
def _visit_letters(x, k, mn, mx, pos, orient, m, buf):
    """Letters lamp x can receive along the skeleton with m zigzag rounds.

    orient 0: 0 -> mx, sweep leftwards to mn, then mn -> pos.
    orient 1: 0 -> mn, sweep rightwards to mx, then mx -> pos.
    """
    n = 0
    xb = x - k
    in_a = mn <= x <= mx
    in_b = mn <= xb <= mx
    if orient == 0:
        if 0 <= xb <= mx:
            buf[n] = 1
            n += 1
        if 0 <= x <= mx:
            buf[n] = 0
            n += 1
    else:
        if mn <= x <= 0:
            buf[n] = 0
            n += 1
        if mn <= xb <= 0:
            buf[n] = 1
            n += 1
    for rep in range(2 * m + 1):
        leftward = (rep % 2 == 0) == (orient == 0)
        if leftward:
            if in_a:
                buf[n] = 0
                n += 1
            if in_b:
                buf[n] = 1
                n += 1
        else:
            if in_b:
                buf[n] = 1
                n += 1
            if in_a:
                buf[n] = 0
                n += 1
    if orient == 0:
        if mn <= xb <= pos:
            buf[n] = 1
            n += 1
        if mn <= x <= pos:
            buf[n] = 0
            n += 1
    else:
        if pos <= x <= mx:
            buf[n] = 0
            n += 1
        if pos <= xb <= mx:
            buf[n] = 1
            n += 1
    return n


@njit(cache=True)
def lamp_rounds(lo, f, pos, k, L, orient, mn, mx):
    """Zigzag rounds each lamp needs in the given orientation (index as f)."""
    size = len(f)
    rounds = np.zeros(size, dtype=np.int64)
    for j in range(size):
        c = f[j]
        if c == 0:
            continue
        start, alt, r = word_start(c, L)
        buf = np.empty(4 * r + 16, dtype=np.int64)
        best = -1
        for m in range(r + 2):
            n = _visit_letters(lo + j, k, mn, mx, pos, orient, m, buf)
            if _matches(start, r, buf, n) or (alt >= 0 and _matches(alt, r, buf, n)):
                best = m
                break
        rounds[j] = best
    return rounds


@njit(cache=True)
def _upper_k_orient(lo, f, pos, k, L, orient):
    mn, mx = word_hull(lo, f, pos, k, L)
    rounds = lamp_rounds(lo, f, pos, k, L, orient, mn, mx)
    M = sliding_max(rounds, lo, mn, mx - 1, k)
    middle = 0
    for y in range(mn, mx):
        middle += 1 + 2 * M[y - mn]
    if orient == 0:
        total = mx + middle + (pos - mn)
    else:
        total = -mn + middle + (mx - pos)
    if total == 0 and not _is_trivial(f, pos):
        total = 2
    return total


@njit(cache=True)
def _upper_k_pos(lo, f, pos, k, L):
    return min(_upper_k_orient(lo, f, pos, k, L, 0), _upper_k_orient(lo, f, pos, k, L, 1))


@njit(cache=True)
def k0_crossings(lo, f, pos, L):
    """Optimal edge crossing counts for k = 0.

    With c_y crossings of the edge (y, y + 1), site x offers 2 (c_{x-1} + c_x)
    switch letters: four per visit, two at the first and last instants, and
    the endpoint terms cancel.  Any counts with the right parities are
    realized by an Euler trail, so the minimum of sum c_y under
    2 (c_{x-1} + c_x) >= |f(x)| is the exact length.  Returns (mn, c).
    """
    size = len(f)
    mn = min(0, pos)
    mx = max(0, pos)
    for j in range(size):
        if f[j] != 0:
            mn = min(mn, lo + j)
            mx = max(mx, lo + j)
    if mn == mx:
        j = mn - lo
        r = norm_code(f[j], L) if 0 <= j < size else 0
        c = np.zeros(1, dtype=np.int64)
        c[0] = 2 * ((r + 3) // 4)
        return mn, c
    width = mx - mn
    need = np.zeros(width + 1, dtype=np.int64)
    cmax = 2
    for x in range(mn, mx + 1):
        j = x - lo
        r = norm_code(f[j], L) if 0 <= j < size else 0
        need[x - mn] = (r + 1) // 2
        cmax = max(cmax, need[x - mn] + 2)
    inf = 1 << 60
    between_lo = min(0, pos)
    between_hi = max(0, pos)
    dp = np.full((width, cmax + 1), inf, dtype=np.int64)
    arg = np.zeros((width, cmax + 1), dtype=np.int64)
    for y in range(mn, mx):
        i = y - mn
        odd = between_lo <= y < between_hi
        for c in range(1, cmax + 1):
            if (c % 2 == 1) != odd:
                continue
            if i == 0:
                if c >= need[0]:
                    dp[0, c] = c
                continue
            # site y couples edges y - 1 and y
            best = inf
            bi = 0
            for cp in range(1, cmax + 1):
                if dp[i - 1, cp] < best and cp + c >= need[i]:
                    best = dp[i - 1, cp]
                    bi = cp
            if best < inf:
                dp[i, c] = best + c
                arg[i, c] = bi
    last = width - 1
    best = inf
    bc = 0
    for c in range(1, cmax + 1):
        if c >= need[width] and dp[last, c] < best:
            best = dp[last, c]
            bc = c
    out = np.zeros(width, dtype=np.int64)
    c = bc
    for i in range(last, -1, -1):
        out[i] = c
        c = arg[i, c]
    return mn, out


@njit(cache=True)
def k0_length(lo, f, pos, L):
    mn, c = k0_crossings(lo, f, pos, L)
    total = 0
    for v in c:
        total += v
    return total


@njit(cache=True)
def _upper_k0_pos(lo, f, pos, L):
    return k0_length(lo, f, pos, L)


@njit(cache=True)
def invert(lo, f, pos, L):
    g = np.empty_like(f)
    for j in range(len(f)):
        g[j] = inv_code(f[j], L)
    return lo - pos, g, -pos


@njit(cache=True)
def upper_one(lo, f, pos, k, L):
    lo2, f2, pos2 = invert(lo, f, pos, L)
    if k >= 1:
        return min(_upper_k_pos(lo, f, pos, k, L), _upper_k_pos(lo2, f2, pos2, k, L))
    return min(_upper_k0_pos(lo, f, pos, L), _upper_k0_pos(lo2, f2, pos2, L))


@njit(cache=True)
def bounds(lo, f, pos, k, L):
    lo2, f2, pos2 = invert(lo, f, pos, L)
    lower = max(lower_one(lo, f, pos, k, L), lower_one(lo2, f2, pos2, k, L))
    return lower, upper_one(lo, f, pos, k, L)


@njit(cache=True)
def letter_hull(lo, f, pos, k):
    """Smallest interval holding the base points and all nontrivial lamps."""
    mn = min(0, pos)
    mx = max(0, pos)
    for j in range(len(f)):
        if f[j] != 0:
            mn = min(mn, lo + j - k)
            mx = max(mx, lo + j)
    return mn, mx
