"""Switch-walk-switch random walks: sampling, speed curves and exponent fits."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from . import engine
from .groups import INF, DiagonalSpec, FreeWord, GroupSpec, WreathElem, evaluate, parse_spec
from .metric import (
    LengthBounds,
    UnsupportedSpecError,
    diagonal_bounds,
    lemma_max_bounds,
    lift_main_factor,
    sws_words,
    switch_word,
    _lift_word,
)

CSV_COLUMNS = ("n", "mean_lower", "stderr_lower", "mean_upper", "stderr_upper", "walkers", "seed")
DEFAULT_TIMES = tuple(2**j for j in range(5, 14))


# ---------------------------------------------------------------------------
# steps

@dataclass(frozen=True)
class StepSample:
    e1: int
    e2: int
    o1: int
    eta: int
    f1: int
    f2: int
    o2: int

    @classmethod
    def from_bits(cls, r: int) -> "StepSample":
        b = [(int(r) >> j) & 1 for j in range(engine.STEP_BITS)]
        return cls(b[0], b[1], b[2], 1 if b[3] else -1, b[4], b[5], b[6])

    def word(self) -> FreeWord:
        """u1 T^eta u2; order bit 0 puts the a-switch first."""
        text = switch_word(self.e1, self.e2, self.o1)
        text += "T" if self.eta == 1 else "t"
        text += switch_word(self.f1, self.f2, self.o2)
        return FreeWord.parse(text)


def sample_step(rng: np.random.Generator) -> tuple[StepSample, FreeWord]:
    r = int(rng.integers(0, 2**engine.STEP_BITS))
    step = StepSample.from_bits(r)
    return step, step.word()


_LEVEL1_WORDS = sws_words(1)


def level2_step_word(r: int) -> str:
    """17 bits: lazy switch flag, 7-bit inner word, eta, lazy flag, inner word."""
    r = int(r)
    parts = []
    for shift in (0, 9):
        if (r >> shift) & 1:
            parts.append(_lift_word(_LEVEL1_WORDS[(r >> (shift + 1)) & 0x7F]))
        else:
            parts.append("")
    move = "T" if (r >> 8) & 1 else "t"
    return parts[0] + move + parts[1]


# ---------------------------------------------------------------------------
# object-level walks

def _spec_level(spec) -> int:
    return spec.level


def element_bounds(g, spec) -> LengthBounds:
    """Length bounds for a walk state of any supported spec."""
    if isinstance(spec, DiagonalSpec):
        if spec.level != 1:
            return level2_bounds_diag(g, spec)
        return diagonal_bounds(g, spec)
    if spec.level == 1:
        if spec.m is INF:
            return lemma_max_bounds(g, spec)
        return diagonal_bounds((g,), DiagonalSpec((spec,)))
    return level2_bounds(g, spec)


def level2_bounds(g: WreathElem, spec: GroupSpec) -> LengthBounds:
    """Heuristic envelope for level-2 elements.

    The lower bound is the base travel needed to visit every nontrivial lamp
    and end at the final position.  The upper bound adds the level-1 upper
    bound of each lamp to that travel.
    """
    sites = [x for x, _ in g.lamps] + [0, g.position]
    travel = 2 * (max(sites) - min(sites)) - abs(g.position)
    lamp_cost = 0
    for _, lamp in g.lamps:
        if lamp.spec.level == 1:
            # finite-m lamps are read through their representative in [0, m)
            lift = lamp.spec.with_(m=INF)
            lamp = WreathElem.from_lamps(lamp.position, lamp.lamp_dict(), lift)
            lamp_cost += lemma_max_bounds(lamp, lift).upper
        else:
            lamp_cost += element_bounds(lamp, lamp.spec).upper
    return LengthBounds(travel, travel + lamp_cost, heuristic=True)


def level2_bounds_diag(g, spec: DiagonalSpec) -> LengthBounds:
    parts = [level2_bounds(x, f) for x, f in zip(g, spec.factors)]
    return LengthBounds(max(p.lower for p in parts), sum(p.upper for p in parts), heuristic=True)


def simulate_walk(spec, n_max: int, seed: int = 0, walker: int = 0,
                  checkpoints: Optional[Sequence[int]] = None) -> Iterator[tuple[int, object, LengthBounds]]:
    """Object-level walk, yielding (n, state, bounds) at each checkpoint.

    The step stream is the one used by the compiled engine, so both paths
    produce the same walk for the same (seed, walker).
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    cps = sorted(set(checkpoints if checkpoints is not None else range(n_max + 1)))
    level = spec.level
    raw = engine.walker_stream(seed, walker, n_max)
    state = spec.identity()
    cache: dict = {}
    n = 0
    for target in cps:
        if target > n_max:
            break
        while n < target:
            r = int(raw[n])
            word = (StepSample.from_bits(r & 0x7F).word().text if level == 1
                    else level2_step_word(r & 0x1FFFF))
            step = cache.get(word)
            if step is None:
                step = cache[word] = evaluate(spec, word)
            state = spec.mul(state, step)
            n += 1
        yield n, state, element_bounds(state, spec)


# ---------------------------------------------------------------------------
# speed curves

@dataclass
class SpeedCurve:
    spec_text: str
    times: tuple
    mean_lower: tuple
    stderr_lower: tuple
    mean_upper: tuple
    stderr_upper: tuple
    walkers: int
    seed: int
    heuristic: tuple = ()
    lower_samples: Optional[np.ndarray] = field(default=None, repr=False)
    upper_samples: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        for lo, up in zip(self.mean_lower, self.mean_upper):
            if lo > up:
                raise ValueError("mean lower exceeds mean upper")

    def column(self, bound: str) -> tuple:
        if bound == "lower":
            return self.mean_lower
        if bound == "upper":
            return self.mean_upper
        raise ValueError(f"bound must be 'lower' or 'upper', got {bound!r}")

    def stderr(self, bound: str) -> tuple:
        return self.stderr_lower if bound == "lower" else self.stderr_upper

    def at(self, n: int) -> dict:
        i = self.times.index(n)
        return {
            "n": n,
            "mean_lower": self.mean_lower[i],
            "stderr_lower": self.stderr_lower[i],
            "mean_upper": self.mean_upper[i],
            "stderr_upper": self.stderr_upper[i],
            "heuristic": bool(self.heuristic[i]) if self.heuristic else False,
        }

    def to_csv(self, meta: Optional[dict] = None) -> str:
        buf = io.StringIO()
        lines = {"spec": self.spec_text}
        if self.heuristic and any(self.heuristic):
            lines["heuristic_upper_at"] = " ".join(
                str(n) for n, h in zip(self.times, self.heuristic) if h)
        lines.update(meta or {})
        for key, value in lines.items():
            buf.write(f"# {key}: {value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i, n in enumerate(self.times):
            writer.writerow([n, _fmt(self.mean_lower[i]), _fmt(self.stderr_lower[i]),
                             _fmt(self.mean_upper[i]), _fmt(self.stderr_upper[i]),
                             self.walkers, self.seed])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SpeedCurve":
        meta = {}
        body = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            elif line.strip():
                body.append(line)
        rows = list(csv.DictReader(body))
        if not rows:
            raise ValueError("curve file has no rows")
        missing = set(CSV_COLUMNS) - set(rows[0])
        if missing:
            raise ValueError(f"curve file lacks columns {sorted(missing)}")
        heur_at = {int(x) for x in meta.get("heuristic_upper_at", "").split()}
        times = tuple(int(r["n"]) for r in rows)
        return cls(
            meta.get("spec", ""),
            times,
            tuple(float(r["mean_lower"]) for r in rows),
            tuple(float(r["stderr_lower"]) for r in rows),
            tuple(float(r["mean_upper"]) for r in rows),
            tuple(float(r["stderr_upper"]) for r in rows),
            int(rows[0]["walkers"]),
            int(rows[0]["seed"]),
            tuple(n in heur_at for n in times),
        )


def _fmt(x: float) -> str:
    return repr(float(x))


def _block_records(spec_text: str, times: tuple, start: int, stop: int, seed: int):
    spec = parse_spec(spec_text)
    return engine.simulate_records(spec, times, range(start, stop), seed)


def _level2_block(spec_text: str, times: tuple, start: int, stop: int, seed: int):
    spec = parse_spec(spec_text)
    lows = np.zeros((stop - start, len(times)), dtype=np.int64)
    ups = np.zeros_like(lows)
    for i, w in enumerate(range(start, stop)):
        for j, (_, _, b) in enumerate(simulate_walk(spec, times[-1], seed, w, times)):
            lows[i, j] = b.lower
            ups[i, j] = b.upper
    return lows, ups


def walker_samples(spec, times: Sequence[int], walkers: int, master_seed: int,
                   parallelism: int = 1):
    """Per-walker (lower, upper, heuristic) arrays of shape (walkers, times)."""
    times = tuple(sorted(set(int(t) for t in times)))
    if not times or times[0] < 0:
        raise ValueError("times must be nonnegative")
    text = spec.to_text()
    level = spec.level
    blocks = _blocks(walkers, max(1, parallelism))
    job = _block_records if level == 1 else _level2_block
    if parallelism > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            parts = list(pool.map(job, *zip(*[(text, times, a, b, master_seed) for a, b in blocks])))
    else:
        parts = [job(text, times, a, b, master_seed) for a, b in blocks]
    if level == 1:
        records = np.concatenate(parts, axis=0)
        main = lift_main_factor(spec) if isinstance(spec, DiagonalSpec) else 0
        lower, upper, heur = engine.combine(spec, records, main)
        return lower, upper, heur, records
    lower = np.concatenate([p[0] for p in parts], axis=0)
    upper = np.concatenate([p[1] for p in parts], axis=0)
    return lower, upper, np.ones(lower.shape, dtype=bool), None


def _blocks(walkers: int, parallelism: int) -> list[tuple[int, int]]:
    size = max(1, math.ceil(walkers / parallelism))
    return [(a, min(a + size, walkers)) for a in range(0, walkers, size)]


def estimate_speed_curve(spec, times: Sequence[int] = DEFAULT_TIMES, walkers: int = 2000,
                         master_seed: int = 0, parallelism: int = 1) -> SpeedCurve:
    """Monte Carlo means and standard errors of the length bounds.

    Walker w always uses the stream keyed by (master_seed, w) and the fold is
    in walker order, so the result does not depend on ``parallelism``.
    """
    if walkers < 2:
        raise ValueError("walkers must be >= 2 for a standard error")
    times = tuple(sorted(set(int(t) for t in times)))
    lower, upper, heur, _ = walker_samples(spec, times, walkers, master_seed, parallelism)
    return curve_from_samples(spec.to_text(), times, lower, upper, heur, master_seed)


def curve_from_samples(spec_text, times, lower, upper, heur, seed) -> SpeedCurve:
    walkers = lower.shape[0]
    lo = lower.astype(np.float64)
    up = upper.astype(np.float64)
    root = math.sqrt(walkers)
    return SpeedCurve(
        spec_text,
        tuple(times),
        tuple(float(x) for x in lo.mean(axis=0)),
        tuple(float(x) / root for x in lo.std(axis=0, ddof=1)),
        tuple(float(x) for x in up.mean(axis=0)),
        tuple(float(x) / root for x in up.std(axis=0, ddof=1)),
        walkers,
        seed,
        tuple(bool(h) for h in heur.any(axis=0)),
        lower,
        upper,
    )


# ---------------------------------------------------------------------------
# exponents

class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    ci: float
    window: tuple
    bound: str

    def to_json(self) -> dict:
        return {"slope": self.slope, "ci": self.ci, "window": list(self.window), "bound": self.bound}


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def fit_exponent(curve: SpeedCurve, window: Optional[tuple] = None, bound: str = "lower",
                 resamples: int = 200, seed: int = 0) -> ExponentFit:
    """Least squares slope of log mean against log n, with a bootstrap half-width.

    The bootstrap resamples walkers when per-walker samples are attached and
    otherwise perturbs each mean by its standard error.
    """
    means = np.asarray(curve.column(bound), dtype=np.float64)
    times = np.asarray(curve.times, dtype=np.float64)
    if window is None and len(times) == 0:
        raise FitError("curve has no sample times")
    lo, hi = window if window is not None else (times.min(), times.max())
    mask = (times >= lo) & (times <= hi) & (times > 0)
    if mask.sum() < 3:
        raise FitError(f"window [{lo}, {hi}] holds fewer than 3 sample times")
    if np.any(means[mask] <= 0):
        raise FitError("log-log fit needs positive means in the window")
    x = np.log(times[mask])
    slope, intercept = _ols(x, np.log(means[mask]))
    rng = np.random.default_rng(seed)
    samples = curve.lower_samples if bound == "lower" else curve.upper_samples
    slopes = []
    if samples is not None:
        data = samples[:, mask].astype(np.float64)
        for _ in range(resamples):
            idx = rng.integers(0, data.shape[0], data.shape[0])
            m = data[idx].mean(axis=0)
            if np.all(m > 0):
                slopes.append(_ols(x, np.log(m))[0])
    else:
        se = np.asarray(curve.stderr(bound), dtype=np.float64)[mask]
        for _ in range(resamples):
            m = means[mask] + se * rng.standard_normal(len(se))
            if np.all(m > 0):
                slopes.append(_ols(x, np.log(m))[0])
    if slopes:
        q_lo, q_hi = np.percentile(slopes, [2.5, 97.5])
        ci = float((q_hi - q_lo) / 2)
    else:
        ci = float("nan")
    return ExponentFit(slope, intercept, ci, (int(lo), int(hi)), bound)


# ---------------------------------------------------------------------------
# quotient coupling

@dataclass(frozen=True)
class CouplingRow:
    k: int
    l: int
    n: int
    samples: int
    violations: int
    ratio_lower: float
    ratio_lower_se: float
    ratio_upper: float
    unwrapped: int
    unwrapped_equal: int

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.ratio_lower + 2 * self.ratio_lower_se <= 594

    def to_json(self) -> dict:
        return {**self.__dict__, "ok": self.ok}


def coupled_2l_check(k: int, l: int, times: Sequence[int], samples: int, seed: int = 0) -> list[CouplingRow]:
    """Run Gamma(k, l, inf) and Gamma(k, 2l, inf) on the same steps.

    The D_2l walk projects onto the D_l walk, so the certified lower bound of
    the quotient never exceeds that of the cover.  Samples whose D_2l lamps
    all have norm <= l/2 must give identical bounds in both groups.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    pair = (GroupSpec(1, k, l, INF), GroupSpec(1, k, 2 * l, INF))
    times = tuple(sorted(set(times)))
    rec = _pair_records(pair, times, samples, seed)
    rows = []
    for i, n in enumerate(times):
        low_l = rec[:, i, 0, engine.LOWER].astype(np.float64)
        low_2l = rec[:, i, 1, engine.LOWER].astype(np.float64)
        up_l = rec[:, i, 0, engine.UPPER].astype(np.float64)
        up_2l = rec[:, i, 1, engine.UPPER].astype(np.float64)
        violations = int(np.sum(low_l > low_2l))
        ratio, se = _ratio_of_means(low_2l, low_l)
        ratio_up = float(up_2l.mean() / up_l.mean()) if up_l.mean() > 0 else 1.0
        small = rec[:, i, 1, engine.MAX_NORM] * 2 <= l
        same = small & (low_l == low_2l) & (up_l == up_2l)
        rows.append(CouplingRow(k, l, n, samples, violations, ratio, se, ratio_up,
                                int(small.sum()), int(same.sum())))
    return rows


def _pair_records(pair, times, samples, seed):
    ks = np.array([f.k for f in pair], dtype=np.int64)
    Ls = np.array([0 if f.l is INF else f.l for f in pair], dtype=np.int64)
    cps = np.asarray(times, dtype=np.int64)
    W = int(cps[-1]) + int(ks.max()) + 2
    out = np.empty((samples, len(cps), 2, engine.N_FIELDS), dtype=np.int64)
    for w in range(samples):
        out[w] = engine.run_walker(engine.walker_stream(seed, w, int(cps[-1])), ks, Ls, cps, W)
    return out


def _ratio_of_means(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    """Ratio of sample means with a delta-method standard error."""
    mn, md = num.mean(), den.mean()
    if md == 0:
        return (1.0, 0.0) if mn == 0 else (float("inf"), 0.0)
    r = mn / md
    n = len(num)
    var = (num.var(ddof=1) - 2 * r * np.cov(num, den)[0, 1] + r * r * den.var(ddof=1)) / (n * md * md)
    return float(r), float(math.sqrt(max(var, 0.0)))
