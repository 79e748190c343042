"""Stage-by-stage choice of (n_s, k_s, l_s, N_s, m_s) from simulated speeds.

Each stage adds a factor Gamma(k_s, l_s, m_s) to the finite part of the
diagonal product, whose infinite remainder is represented by Gamma(0, 2, inf).
Statements quantified over all n are checked on the sampled checkpoints, and
the certificate keeps those apart from claims that rest on theorems.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

from .ball import balls_coincide, dgen_constants
from .groups import INF, DiagonalSpec, GroupSpec
from .metric import ResourceError
from .walk import SpeedCurve, estimate_speed_curve

STATED_COUPLING = 594


class ScheduleError(RuntimeError):
    """A stage could not be completed within the simulation budget."""


# ---------------------------------------------------------------------------
# epsilon

@dataclass(frozen=True)
class EpsilonSpec:
    """n -> eps(n), nondecreasing and unbounded.

    loglog: max(2, log2 log2 n); log: max(2, log2 n);
    power: scale * n**power; constant-ramp: scale + power * log2 n.
    """
    kind: str = "loglog"
    scale: float = 4.0
    power: float = 0.05

    KINDS = ("loglog", "log", "power", "constant-ramp")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown epsilon kind {self.kind!r}; expected one of {self.KINDS}")
        if self.kind in ("power", "constant-ramp") and (self.scale < 1 or self.power <= 0):
            raise ValueError("power and constant-ramp need scale >= 1 and power > 0")

    def __call__(self, n: float) -> float:
        n = max(float(n), 1.0)
        if self.kind == "loglog":
            return max(2.0, math.log2(max(math.log2(max(n, 2.0)), 1.0)))
        if self.kind == "log":
            return max(2.0, math.log2(n))
        if self.kind == "power":
            return self.scale * n ** self.power
        return self.scale + self.power * math.log2(n)

    def to_json(self) -> dict:
        if self.kind in ("loglog", "log"):
            return {"kind": self.kind}
        return {"kind": self.kind, "scale": self.scale, "power": self.power}

    @classmethod
    def parse(cls, text: str) -> "EpsilonSpec":
        """'loglog', 'log', 'power:4,0.05' or 'constant-ramp:2,0.5'."""
        kind, _, rest = text.strip().partition(":")
        nums = [float(v) for v in rest.split(",") if v.strip()]
        if len(nums) > 2:
            raise ValueError("epsilon takes at most two parameters")
        return cls(kind.strip(), *nums)


DESK_EPSILON = EpsilonSpec("power", 4.0, 0.05)


# ---------------------------------------------------------------------------
# profiles

@dataclass(frozen=True)
class Profile:
    name: str
    grid: tuple
    walkers: int
    l_max: int
    post_window: int
    coupling: float
    ball_cap: int

    def checkpoints(self, above: int = 0, upto: Optional[int] = None) -> tuple:
        top = upto if upto is not None else self.grid[-1]
        return tuple(n for n in self.grid if above < n <= top)


def _dyadic(a: int, b: int) -> tuple:
    return tuple(2**j for j in range(a, b + 1))


PROFILES = {
    "desk": Profile("desk", _dyadic(2, 13), 1000, 64, 5, 2.0, 200_000),
    "smoke": Profile("smoke", _dyadic(2, 11), 100, 64, 3, 2.0, 20_000),
    "extended": Profile("extended", _dyadic(2, 16), 2000, 256, 6, 2.0, 1_000_000),
}


def lambda_range(level: int) -> tuple[float, float]:
    return 1 - 2.0**-level, 1 - 2.0 ** -(level + 1)


def base_rate(level: int) -> Callable[[float], float]:
    """n^(1 - 2^-level): the speed of the Gamma(0, 2, inf) tail at that level."""
    e = 1 - 2.0**-level
    return lambda n: n**e


def target_function(lam: float, level: int = 1) -> Callable[[float], float]:
    """n^lam, or n^(3/4) / log n at the top of the level-1 range."""
    if level == 1 and abs(lam - 0.75) < 1e-12:
        return lambda n: n**0.75 / math.log(max(n, 3))
    return lambda n: n**lam


# ---------------------------------------------------------------------------
# data

@dataclass
class Checkpoint:
    n: int
    group: str
    claim: str
    measured: float
    stderr: float
    threshold: float
    passed: bool
    heuristic: bool = False

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class StageParams:
    s: int
    n_s: int
    k_s: int
    l_s: int
    N_s: int
    m_s: int
    C1: Optional[int]
    C2: Optional[int]
    R: Optional[int]
    checkpoints: list = field(default_factory=list)

    def validate(self, prev_N: int) -> list[str]:
        problems = []
        R = self.R if self.R is not None else 0
        if self.k_s < max(2 * self.n_s + 1, 2 * R + 1):
            problems.append("k_s below max(2 n_s + 1, 2 R + 1)")
        if self.m_s < 2 * self.N_s + 1:
            problems.append("m_s below 2 N_s + 1")
        if self.l_s % 2:
            problems.append("l_s odd")
        if not self.N_s > self.n_s > prev_N:
            problems.append("N_s > n_s > N_(s-1) violated")
        return problems

    def factor(self, level: int) -> GroupSpec:
        return GroupSpec(level, self.k_s, self.l_s, self.m_s)

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in ("s", "n_s", "k_s", "l_s", "N_s", "m_s", "C1", "C2", "R")}
        out["checkpoints"] = [c.to_json() for c in self.checkpoints]
        return out


@dataclass
class Schedule:
    lam: float
    level: int
    epsilon: EpsilonSpec
    profile: str
    seed: int
    stages: list
    final: DiagonalSpec
    verified: list = field(default_factory=list)
    asserted: list = field(default_factory=list)
    final_curve: Optional[SpeedCurve] = None

    @property
    def ok(self) -> bool:
        return all(c["passed"] for c in self.verified if not c.get("informational"))

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "level": self.level,
            "epsilon": self.epsilon.to_json(),
            "stages": [s.to_json() for s in self.stages],
            "final": self.final.to_text(),
            "seed": self.seed,
            "profile": self.profile,
            "certificate": {"verified": self.verified, "theorem_asserted": self.asserted},
        }


# ---------------------------------------------------------------------------
# stage operations

@dataclass
class _State:
    level: int
    factors: list = field(default_factory=list)
    prev_N: int = 0

    def tail(self) -> GroupSpec:
        return GroupSpec(self.level, 0, 2, INF)

    def delta(self) -> DiagonalSpec:
        return DiagonalSpec(tuple(self.factors) + (self.tail(),), tail=True)

    def lam_times(self, extra: GroupSpec) -> DiagonalSpec:
        return DiagonalSpec(tuple(self.factors) + (extra,))

    def lam_spec(self) -> DiagonalSpec:
        return DiagonalSpec(tuple(self.factors))


class Simulator:
    """Memoized speed curves with one seed shared by every group.

    Sharing the seed couples all walks through the same step sequence.
    """

    def __init__(self, profile: Profile, seed: int, parallelism: int = 1):
        self.profile = profile
        self.seed = seed
        self.parallelism = parallelism
        self._cache: dict = {}

    def curve(self, spec, times: Sequence[int]) -> SpeedCurve:
        key = (spec.to_text(), tuple(times))
        if key not in self._cache:
            self._cache[key] = estimate_speed_curve(spec, times, self.profile.walkers,
                                                    self.seed, self.parallelism)
        return self._cache[key]


def _point(curve: SpeedCurve, n: int) -> dict:
    return curve.at(n)


def choose_ns(state: _State, lam: float, eps: EpsilonSpec, sim: Simulator,
              constants: tuple, coupling: float, target=None) -> tuple[int, list]:
    """Smallest checkpoint past N_(s-1) meeting both parts of the stage condition.

    (a) the upper speed of Lambda_s x Gamma(0,2,inf) plus two standard errors
    stays below sqrt(n) eps(n) from there to the end of the grid;
    (b) (n^lam - C2) / (C C1) >= n^lam / eps(n) with the given coupling C.
    """
    target = target or target_function(lam, state.level)
    rate = base_rate(state.level)
    C1, C2, _ = constants
    times = sim.profile.checkpoints(above=state.prev_N)
    if not times:
        raise ScheduleError("no checkpoints left beyond the previous stage")
    delta = state.delta()
    curve = sim.curve(delta, times)
    ok_a = []
    for n in times:
        p = _point(curve, n)
        ok_a.append(p["mean_upper"] + 2 * p["stderr_upper"] <= rate(n) * eps(n))
    for i, n in enumerate(times):
        cond_b = C1 is None or (target(n) - C2) / (coupling * C1) >= target(n) / eps(n)
        if cond_b and all(ok_a[i:]):
            p = _point(curve, n)
            cps = [Checkpoint(m, delta.to_text(), "upper speed <= base rate * eps(n)",
                              _point(curve, m)["mean_upper"], _point(curve, m)["stderr_upper"],
                              rate(m) * eps(m), True, _point(curve, m)["heuristic"])
                   for m in times[i:]]
            return n, cps
    raise ScheduleError(
        f"no checkpoint in {times[0]}..{times[-1]} satisfies the stage condition "
        f"(diffusive bound ok at {[n for n, a in zip(times, ok_a) if a]})")


def diffusive_floor(curve: SpeedCurve, target) -> Optional[int]:
    """First checkpoint from which the baseline stays below the target."""
    times = curve.times
    below = [curve.at(n)["mean_upper"] + 2 * curve.at(n)["stderr_upper"] <= target(n) for n in times]
    for i, n in enumerate(times):
        if all(below[i:]):
            return n
    return None


def find_minimal_l(state: _State, k_s: int, lam: float, sim: Simulator, n_s: int,
                   target=None) -> tuple[int, int, list, dict]:
    """Doubling scan for the first l whose double 2l crosses the target.

    Only checkpoints above n_s and above the diffusive floor of
    Lambda_s x Gamma(k_s, 2, inf) count.  Level 1 decides on the certified
    lower bound; higher levels only have the heuristic upper envelope.  Returns (l_s, N_s, checkpoints,
    scan) where scan maps l to the lower-bound means used.
    """
    target = target or target_function(lam, state.level)
    level = state.level
    col = "lower" if level == 1 else "upper"
    times = sim.profile.checkpoints(above=n_s)
    base = sim.curve(state.lam_times(GroupSpec(level, k_s, 2, INF)), times)
    # the heuristic envelope of higher levels sits above any target, so no floor applies
    floor = diffusive_floor(base, target) if level == 1 else times[0]
    if floor is None:
        raise ScheduleError("the diffusive baseline never falls below the target on this grid")
    window = [n for n in times if n >= floor]
    scan = {}
    l = 2
    while l <= sim.profile.l_max:
        cover = state.lam_times(GroupSpec(level, k_s, 2 * l, INF))
        curve = sim.curve(cover, times)
        scan[2 * l] = [curve.at(n)["mean_lower"] for n in times]
        for n in window:
            p = curve.at(n)
            if p["mean_" + col] - 2 * p["stderr_" + col] > target(n):
                cps = [Checkpoint(n, cover.to_text(), f"{col} speed > target (crossing witness)",
                                  p["mean_" + col], p["stderr_" + col], target(n), True, level > 1)]
                own = sim.curve(state.lam_times(GroupSpec(level, k_s, l, INF)), times)
                scan[l] = [own.at(m)["mean_lower"] for m in times]
                for m in window:
                    q = own.at(m)
                    cps.append(Checkpoint(m, state.lam_times(GroupSpec(level, k_s, l, INF)).to_text(),
                                          "upper speed <= target (minimality)",
                                          q["mean_upper"], q["stderr_upper"], target(m),
                                          q["mean_upper"] + 2 * q["stderr_upper"] <= target(m),
                                          q["heuristic"]))
                return l, n, cps, {"floor": floor, "times": list(times), "lower_means": scan}
        l *= 2
    raise ScheduleError(f"no crossing up to l = {sim.profile.l_max}; extend the horizon")


def feasible_ball_check(A, B, max_radius: int, cap: int) -> tuple[int, bool, Optional[str]]:
    """Largest radius <= max_radius checked within the state cap."""
    checked, witness = 0, None
    for R in range(1, max_radius + 1):
        try:
            res = balls_coincide(A, B, R, state_cap=cap)
        except ResourceError:
            break
        checked = R
        if not res.coincide:
            return R, False, res.witness
    return checked, True, witness


def close_stage(state: _State, s: int, n_s: int, k_s: int, l_s: int, N_s: int,
                constants: tuple, cap: int) -> tuple[StageParams, list, list]:
    # groups Gamma(k, l, m) need 2k < m
    m_s = max(2 * N_s + 1, 2 * k_s + 1)
    C1, C2, R = constants
    stage = StageParams(s, n_s, k_s, l_s, N_s, m_s, C1, C2, R)
    level = state.level
    verified, asserted = [], []
    finite = GroupSpec(level, k_s, l_s, m_s)
    radius, same, witness = feasible_ball_check(finite, GroupSpec(level, k_s, l_s, INF), N_s, cap)
    verified.append({"stage": s, "claim": f"balls of {finite} and its Z-lift coincide",
                     "radius": radius, "passed": same, "witness": witness})
    asserted.append({"stage": s, "claim": f"balls of radius {N_s} of {finite} and its Z-lift coincide",
                     "reason": "m_s > 2 N_s keeps every relator of length <= 2 N_s from wrapping"})
    if n_s <= 4:
        new_delta = DiagonalSpec(tuple(state.factors) + (finite, state.tail()), tail=True)
        try:
            res = balls_coincide(new_delta, state.tail(), n_s, state_cap=cap)
            verified.append({"stage": s, "claim": f"k_s >= 2 n_s + 1 gives coinciding balls of radius {n_s}",
                             "radius": n_s, "passed": res.coincide, "witness": res.witness})
        except ResourceError:
            asserted.append({"stage": s, "claim": f"balls of radius {n_s} coincide",
                             "reason": "k_s >= 2 n_s + 1; check exceeded the state cap"})
    else:
        asserted.append({"stage": s, "claim": f"balls of radius {n_s} coincide",
                         "reason": "k_s >= 2 n_s + 1"})
    return stage, verified, asserted


def _constants(state: _State, cap: int) -> tuple:
    F = state.lam_spec()
    try:
        c = dgen_constants(F, state.tail(), closure_cap=cap, state_cap=cap)
    except ResourceError:
        return None, None, None
    return c.C1, c.C2, c.R


def build_schedule(lam: float, eps: EpsilonSpec, stages: int, profile: str | Profile = "desk",
                   level: int = 1, seed: int = 0, parallelism: int = 1) -> Schedule:
    lo, hi = lambda_range(level)
    if not lo <= lam <= hi:
        raise ValueError(f"lambda must lie in [{lo}, {hi}] for level {level}")
    if stages < 0:
        raise ValueError("stages must be >= 0")
    prof = PROFILES[profile] if isinstance(profile, str) else profile
    sim = Simulator(prof, seed, parallelism)
    target = target_function(lam, level)
    state = _State(level)
    out, verified, asserted = [], [], []
    for s in range(1, stages + 1):
        constants = _constants(state, prof.ball_cap)
        if constants[0] is None:
            asserted.append({"stage": s, "claim": "dgen constants of the finite part exist",
                             "reason": "finite part too large to enumerate; stage condition (b) skipped"})
        n_s, cps_a = choose_ns(state, lam, eps, sim, constants, prof.coupling, target)
        cond_stated = constants[0] is not None and \
            (target(n_s) - constants[1]) / (STATED_COUPLING * constants[0]) >= target(n_s) / eps(n_s)
        verified.append({"stage": s, "claim": f"stage condition (b) with C = {STATED_COUPLING} at n_s",
                         "n": n_s, "passed": bool(cond_stated), "informational": True})
        R = constants[2] or 0
        k_s = max(2 * n_s + 1, 2 * R + 1)
        prev_k = state.factors[-1].k if state.factors else -1
        k_s = max(k_s, prev_k + 1)
        l_s, N_s, cps_l, scan = find_minimal_l(state, k_s, lam, sim, n_s, target)
        verified.append({"stage": s, "claim": "lower means nondecreasing in l at each checkpoint",
                         "passed": _monotone_in_l(scan["lower_means"]), "floor": scan["floor"]})
        minimal = [c for c in cps_l if c.claim.startswith("upper speed <= target")]
        verified.append({"stage": s, "claim": "Lambda_s x Gamma(k_s, l_s, inf) stays below the target "
                         "above the diffusive floor", "l_s": l_s, "floor": scan["floor"],
                         "passed": all(c.passed for c in minimal), "informational": level > 1})
        verified.append({"stage": s, "claim": "Lambda_s x Gamma(k_s, 2 l_s, inf) crosses the target",
                         "n": N_s, "measured": cps_l[0].measured, "stderr": cps_l[0].stderr,
                         "threshold": cps_l[0].threshold, "passed": True, "informational": level > 1})
        stage, v, a = close_stage(state, s, n_s, k_s, l_s, N_s, constants, prof.ball_cap)
        stage.checkpoints = cps_a + cps_l
        problems = stage.validate(state.prev_N)
        verified.append({"stage": s, "claim": "stage parameter invariants", "passed": not problems,
                         "problems": problems})
        verified += v
        asserted += a
        asserted.append({"stage": s, "claim": "upper speed <= sqrt(n) eps(n) for every n >= n_s",
                         "reason": "checked on the sampled grid only"})
        out.append(stage)
        state.factors.append(stage.factor(level))
        state.prev_N = N_s
    final = state.delta()
    curve = None
    if out:
        curve, checks = _final_checks(final, out, lam, eps, sim, target, level)
        verified += checks
    else:
        curve = sim.curve(final, prof.grid)
    for c in verified:
        c.setdefault("informational", False)
    schedule = Schedule(lam, level, eps, prof.name, seed, out, final,
                        [_clean(c) for c in verified], asserted, curve)
    return schedule


def _final_checks(final: DiagonalSpec, stages: list, lam, eps, sim: Simulator, target, level=1):
    """Bracketing on the final group: high at each N_s, diffusive after m_s.

    At levels above 1 both checks use the heuristic upper envelope and are
    reported as informational.
    """
    prof = sim.profile
    rate = base_rate(level)
    col = "lower" if level == 1 else "upper"
    soft = level > 1
    last = stages[-1]
    top = max(prof.grid[-1], 2 ** (math.ceil(math.log2(last.m_s)) + prof.post_window))
    grid = tuple(sorted(set(prof.grid) | {2**j for j in range(2, int(math.log2(top)) + 1)}))
    curve = sim.curve(final, grid)
    checks = []
    for st in stages:
        p = curve.at(st.N_s) if st.N_s in grid else None
        if p is None:
            continue
        thr = target(st.N_s) / eps(st.N_s)
        ok = p["mean_" + col] - 2 * p["stderr_" + col] >= thr
        checks.append({"stage": st.s, "claim": f"{col} speed >= N_s^lambda / eps(N_s) at N_s",
                       "n": st.N_s, "measured": p["mean_" + col], "stderr": p["stderr_" + col],
                       "threshold": thr, "passed": ok, "informational": soft})
        st.checkpoints.append(Checkpoint(st.N_s, final.to_text(), f"{col} speed >= target / eps at N_s",
                                         p["mean_" + col], p["stderr_" + col], thr, ok, soft))
    start = 2 ** math.ceil(math.log2(last.m_s))
    for n in grid:
        if n < start:
            continue
        p = curve.at(n)
        thr = rate(n) * eps(n)
        ok = (p["mean_upper"] + 2 * p["stderr_upper"] <= thr) and (soft or not p["heuristic"])
        checks.append({"stage": last.s, "claim": "upper speed <= base rate * eps(n) after m_s",
                       "n": n, "measured": p["mean_upper"], "stderr": p["stderr_upper"],
                       "threshold": thr, "passed": ok, "heuristic": p["heuristic"],
                       "informational": soft})
        last.checkpoints.append(Checkpoint(n, final.to_text(), "upper speed <= base rate * eps(n) after m_s",
                                           p["mean_upper"], p["stderr_upper"], thr, ok, p["heuristic"]))
    return curve, checks


def _monotone_in_l(lower_means: dict) -> bool:
    ls = sorted(lower_means)
    for a, b in zip(ls, ls[1:]):
        if any(x > y for x, y in zip(lower_means[a], lower_means[b])):
            return False
    return True


def _clean(c: dict) -> dict:
    out = {}
    for k, v in c.items():
        if isinstance(v, float) and not math.isfinite(v):
            v = None
        out[k] = v
    return out
