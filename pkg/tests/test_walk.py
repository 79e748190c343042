import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lampspeed import engine
from lampspeed.groups import INF, DiagonalSpec, GroupSpec, evaluate
from lampspeed.metric import exact_length_bfs
from lampspeed.walk import (
    FitError,
    SpeedCurve,
    StepSample,
    coupled_2l_check,
    estimate_speed_curve,
    fit_exponent,
    level2_step_word,
    sample_step,
    simulate_walk,
    walker_samples,
)

TAIL = GroupSpec(1, 0, 2, INF)


def test_step_from_bits():
    assert StepSample.from_bits(0).word().text == "t"
    assert StepSample.from_bits(1 << 3).word().text == "T"
    # e1 and f2 set: a T b
    assert StepSample.from_bits(1 | 8 | 32).word().text == "aTb"


def test_step_frequencies():
    rng = np.random.default_rng(5)
    counts = {}
    n = 12_800
    for _ in range(n):
        _, w = sample_step(rng)
        counts[w.text] = counts.get(w.text, 0) + 1
    # 2 moves times 5 switch words on each side
    assert len(counts) == 50
    u = {"": 0.25, "a": 0.25, "b": 0.25, "ab": 0.125, "ba": 0.125}
    chi2 = 0.0
    for w, c in counts.items():
        i = w.index("T") if "T" in w else w.index("t")
        p = 0.5 * u[w[:i]] * u[w[i + 1:]]
        chi2 += (c - n * p) ** 2 / (n * p)
    # 49 degrees of freedom; 99.9% quantile is about 85.4
    assert chi2 < 85.4


def test_level2_step_word():
    assert level2_step_word(0) == "t"
    assert level2_step_word(1 << 8) == "T"
    assert level2_step_word(1).endswith("t") and len(level2_step_word(1)) > 1


def test_walk_start():
    (n, g, b), = list(simulate_walk(TAIL, 0, checkpoints=[0]))
    assert n == 0 and g == TAIL.identity() and b.lower == b.upper == 0
    with pytest.raises(ValueError):
        list(simulate_walk(TAIL, -1))


def test_one_step_mean_length():
    lengths = []
    for w in range(400):
        (_, g, b), = list(simulate_walk(TAIL, 1, seed=2, walker=w, checkpoints=[1]))
        assert b.lower == b.upper == exact_length_bfs(g, TAIL, cap=4)
        lengths.append(b.lower)
    # one step is always a single generator
    assert set(lengths) == {1}


def test_base_position_law():
    n, walkers = 100, 3000
    pos = np.array([list(simulate_walk(TAIL, n, seed=4, walker=w, checkpoints=[n]))[0][1].position
                    for w in range(walkers)])
    assert np.all(pos % 2 == 0)
    assert abs(pos.mean()) < 4 * math.sqrt(n / walkers)
    assert abs(pos.var() / n - 1) < 0.1


@pytest.mark.parametrize("spec", [
    GroupSpec(1, 0, 2, INF),
    GroupSpec(1, 2, 3, INF),
    GroupSpec(1, 1, INF, INF),
    DiagonalSpec((GroupSpec(1, 3, 2, 15), GroupSpec(1, 5, 4, INF))),
])
def test_engine_matches_objects(spec):
    times = (1, 5, 20, 60)
    lower, upper, _, _ = walker_samples(spec, times, 12, 9)
    for w in range(12):
        for j, (_, _, b) in enumerate(simulate_walk(spec, times[-1], 9, w, times)):
            assert (lower[w, j], upper[w, j]) == (b.lower, b.upper)


def test_engine_step_is_generator_word():
    raw = engine.walker_stream(3, 0, 30)
    spec = GroupSpec(1, 2, 3, INF)
    g = spec.identity()
    for r in raw:
        g = spec.mul(g, evaluate(spec, StepSample.from_bits(int(r) & 0x7F).word().text))
    (_, h, _), = list(simulate_walk(spec, 30, 3, 0, [30]))
    assert g == h


def test_parallel_determinism():
    spec = GroupSpec(1, 1, 3, INF)
    a = estimate_speed_curve(spec, (8, 32, 128), 30, 11, parallelism=1)
    b = estimate_speed_curve(spec, (8, 32, 128), 30, 11, parallelism=2)
    assert a.to_csv() == b.to_csv()


def test_walkers_guard():
    with pytest.raises(ValueError):
        estimate_speed_curve(TAIL, (4, 8), walkers=1)


def _synthetic(times, fn, se=0.0):
    means = tuple(fn(t) for t in times)
    return SpeedCurve("1,0,2,inf", tuple(times), means, (se,) * len(times), means,
                      (se,) * len(times), 100, 0, (False,) * len(times))


def test_fit_power_law():
    times = tuple(2**j for j in range(4, 12))
    fit = fit_exponent(_synthetic(times, lambda t: 3 * t**0.6, 1e-9))
    assert fit.slope == pytest.approx(0.6, abs=1e-9)
    assert fit.ci < 1e-6
    assert fit_exponent(_synthetic(times, lambda t: 5.0)).slope == pytest.approx(0, abs=1e-12)


def test_fit_errors():
    c = _synthetic((4, 8), lambda t: t)
    with pytest.raises(FitError):
        fit_exponent(c)
    c = _synthetic((4, 8, 16, 32), lambda t: t)
    with pytest.raises(FitError):
        fit_exponent(c, window=(16, 32))


@given(st.lists(st.floats(0.1, 1e4), min_size=3, max_size=6))
def test_csv_round_trip(vals):
    times = tuple(2**j for j in range(len(vals)))
    c = _synthetic(times, lambda t: vals[times.index(t)], 0.25)
    back = SpeedCurve.from_csv(c.to_csv())
    assert back.times == c.times
    assert back.mean_lower == c.mean_lower and back.stderr_upper == c.stderr_upper


def test_diffusive_rough_rate():
    c = estimate_speed_curve(TAIL, (64, 256, 1024), 200, 1)
    assert fit_exponent(c).slope == pytest.approx(0.5, abs=0.1)


def test_coupling_small():
    rows = coupled_2l_check(1, 3, (16, 64), 150, seed=2)
    assert len(rows) == 2
    for r in rows:
        assert r.violations == 0 and r.ok
        assert r.unwrapped_equal == r.unwrapped
        assert r.ratio_lower >= 1.0
