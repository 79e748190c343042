import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lampspeed.groups import INF, GroupSpec
from lampspeed.scheduler import (
    DESK_EPSILON,
    STATED_COUPLING,
    EpsilonSpec,
    Profile,
    ScheduleError,
    StageParams,
    _State,
    build_schedule,
    choose_ns,
    close_stage,
    find_minimal_l,
    lambda_range,
    target_function,
)
from lampspeed.walk import SpeedCurve

TEST_PROFILE = Profile("test", tuple(2**j for j in range(2, 12)), 150, 64, 3, 2.0, 20_000)


class StubSim:
    """Closed-form curves: speed = coef * n^exponent(spec), zero error."""

    def __init__(self, exponent, coef=1.0, grid=tuple(2**j for j in range(2, 14))):
        self.profile = Profile("stub", grid, 10, 64, 2, 2.0, 1000)
        self.exponent = exponent
        self.coef = coef

    def curve(self, spec, times):
        e = self.exponent(spec)
        means = tuple(self.coef * t**e for t in times)
        zeros = (0.0,) * len(times)
        return SpeedCurve(spec.to_text(), tuple(times), means, zeros, means, zeros, 10, 0,
                          (False,) * len(times))


def test_epsilon_kinds():
    assert EpsilonSpec().kind == "loglog"
    assert EpsilonSpec()(2**16) == pytest.approx(4.0)
    assert EpsilonSpec()(4) == 2.0
    assert EpsilonSpec("log")(1024) == pytest.approx(10.0)
    assert DESK_EPSILON(2**20) == pytest.approx(8.0)
    assert EpsilonSpec("constant-ramp", 2, 0.5)(256) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        EpsilonSpec("cubic")
    with pytest.raises(ValueError):
        EpsilonSpec("power", 0.5, 0.1)


def test_epsilon_parse():
    assert EpsilonSpec.parse("power:4,0.05") == DESK_EPSILON
    assert EpsilonSpec.parse("log") == EpsilonSpec("log")
    assert EpsilonSpec.parse("power:4,0.05").to_json() == {"kind": "power", "scale": 4.0, "power": 0.05}
    with pytest.raises(ValueError):
        EpsilonSpec.parse("power:1,2,3")


@given(st.sampled_from([EpsilonSpec(), EpsilonSpec("log"), DESK_EPSILON, EpsilonSpec("constant-ramp", 1, 0.3)]),
       st.floats(1, 1e12), st.floats(1, 1e12))
def test_epsilon_nondecreasing(eps, a, b):
    a, b = sorted((a, b))
    assert eps(a) <= eps(b) + 1e-12 and eps(a) >= 1


def test_targets():
    assert lambda_range(1) == (0.5, 0.75)
    assert lambda_range(2) == (0.75, 0.875)
    assert target_function(0.6)(1024) == pytest.approx(1024**0.6)
    assert target_function(0.75)(1024) == pytest.approx(1024**0.75 / math.log(1024))


def test_choose_ns_first_diffusive_checkpoint():
    # upper = 6 sqrt(n) meets sqrt(n) * 4 n^0.05 once n >= 1.5^20 = 3325.3
    sim = StubSim(lambda spec: 0.5, coef=6.0)
    n, cps = choose_ns(_State(1), 0.65, DESK_EPSILON, sim, (1, 0, 1), 2.0)
    assert n == 4096
    assert all(c.passed for c in cps) and cps[0].n == 4096


def test_choose_ns_coupling_condition():
    sim = StubSim(lambda spec: 0.5)
    # C * C1 = 2 needs eps >= 2, true everywhere
    assert choose_ns(_State(1), 0.65, DESK_EPSILON, sim, (1, 0, 1), 2.0)[0] == 4
    # C * C1 = 20 needs 4 n^0.05 >= 20, unreachable on the grid
    with pytest.raises(ScheduleError):
        choose_ns(_State(1), 0.65, DESK_EPSILON, sim, (10, 0, 1), 2.0)
    assert 4 * (2**13) ** 0.05 < STATED_COUPLING


def _lamp_exponent(spec):
    # Gamma(k, l, inf) grows like n^(1/2 + (1 - 2/l)/4) in this stub
    f = spec.factors[-1]
    l = 10**9 if f.l is INF else f.l
    return 0.5 + 0.25 * (1 - 2 / l)


def test_find_minimal_l_closed_form():
    sim = StubSim(_lamp_exponent)
    # cover 2l = 4 has exponent 0.625 < 0.65; cover 8 has 0.6875
    l_s, N_s, cps, scan = find_minimal_l(_State(1), 9, 0.65, sim, 4)
    assert (l_s, N_s) == (4, 8)
    assert scan["floor"] == 8
    assert cps[0].passed and all(c.passed for c in cps[1:])


def test_find_minimal_l_no_crossing():
    sim = StubSim(lambda spec: 0.5)
    with pytest.raises(ScheduleError):
        find_minimal_l(_State(1), 9, 0.65, sim, 4)


def test_close_stage_small():
    stage, verified, asserted = close_stage(_State(1), 1, 2, 5, 4, 10, (1, 0, 1), 20_000)
    assert stage.m_s == 21
    assert stage.validate(0) == []
    assert all(v["passed"] for v in verified)
    assert asserted


def test_stage_validate():
    good = StageParams(1, 4, 9, 2, 256, 513, 1, 0, 1)
    assert good.validate(0) == []
    bad = StageParams(1, 4, 8, 3, 4, 8, 1, 0, 1)
    assert len(bad.validate(0)) == 4
    assert good.factor(1) == GroupSpec(1, 9, 2, 513)


def test_zero_stages():
    s = build_schedule(0.6, DESK_EPSILON, 0, "smoke")
    assert s.stages == [] and s.final.factors == (GroupSpec(1, 0, 2, INF),)
    assert s.ok


def test_lambda_range_error():
    with pytest.raises(ValueError):
        build_schedule(0.8, DESK_EPSILON, 1, "smoke")
    with pytest.raises(ValueError):
        build_schedule(0.6, DESK_EPSILON, -1, "smoke")


def test_small_profile_schedule():
    s = build_schedule(0.65, DESK_EPSILON, 1, TEST_PROFILE, seed=0)
    st1 = s.stages[0]
    assert (st1.n_s, st1.k_s, st1.l_s, st1.m_s) == (4, 9, 2, 2 * st1.N_s + 1)
    assert s.ok
    doc = s.to_json()
    assert set(doc) == {"lambda", "level", "epsilon", "stages", "final", "seed", "profile", "certificate"}
    assert set(doc["certificate"]) == {"verified", "theorem_asserted"}
    informational = [c for c in doc["certificate"]["verified"] if c["informational"]]
    assert any(str(STATED_COUPLING) in c["claim"] for c in informational)
    json.dumps(doc)


def test_small_profile_deterministic():
    a = build_schedule(0.65, DESK_EPSILON, 1, TEST_PROFILE, seed=3, parallelism=1)
    b = build_schedule(0.65, DESK_EPSILON, 1, TEST_PROFILE, seed=3, parallelism=2)
    assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)


def test_level2_smoke():
    s = build_schedule(0.8, DESK_EPSILON, 1, "smoke", level=2, seed=0)
    st1 = s.stages[0]
    assert st1.validate(0) == []
    assert st1.factor(2).level == 2
    assert s.ok


def test_monotone_in_l_recorded():
    s = build_schedule(0.65, DESK_EPSILON, 1, TEST_PROFILE, seed=0)
    mono = [c for c in s.verified if c["claim"].startswith("lower means nondecreasing")]
    assert mono and mono[0]["passed"]
