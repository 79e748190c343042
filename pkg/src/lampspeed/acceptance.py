"""The acceptance checks, shared by ``lampspeed verify`` and the test suite.

Each check returns a :class:`CheckResult`; ``profile="smoke"`` shrinks the
sample sizes so the whole set runs in a few minutes.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable

from .ball import (
    MarkedProduct,
    ball_distances,
    balls_coincide,
    check_witness,
    dgen_constants,
    first_difference,
)
from .dihedral_dist import check_ineq_32, dihedral_dist, enumerate_dist
from .groups import INF, GroupSpec, eval_word, evaluate
from .metric import exact_length_bfs, lemma_max_bounds, range_of
from .walk import coupled_2l_check, estimate_speed_curve, fit_exponent


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] criterion {self.criterion} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(criterion: int, name: str, fn: Callable[[], tuple]) -> CheckResult:
    t0 = time.perf_counter()
    passed, detail, data = fn()
    return CheckResult(criterion, name, bool(passed), detail, time.perf_counter() - t0, data)


DYADIC_7_13 = tuple(2**j for j in range(7, 14))


def _walkers(profile: str, desk: int) -> int:
    return desk if profile == "desk" else max(50, desk // 10)


# ---------------------------------------------------------------------------

def diffusive_slopes(profile: str = "desk", seed: int = 1, parallelism: int = 1) -> CheckResult:
    def run():
        spec = GroupSpec(1, 0, 2, INF)
        curve = estimate_speed_curve(spec, DYADIC_7_13, _walkers(profile, 2000), seed, parallelism)
        fits = {b: fit_exponent(curve, bound=b) for b in ("lower", "upper")}
        ok = all(0.44 <= f.slope <= 0.56 for f in fits.values())
        detail = ", ".join(f"{b} slope {f.slope:.3f} ± {f.ci:.3f}" for b, f in fits.items())
        return ok, detail + " (target [0.44, 0.56])", {"csv": curve.to_csv()}
    return _timed(1, "diffusive baseline", run)


def dinfty_slopes(profile: str = "desk", seed: int = 1, k: int = 4) -> CheckResult:
    def run():
        spec = GroupSpec(1, k, INF, INF)
        curve = estimate_speed_curve(spec, DYADIC_7_13, _walkers(profile, 2000), seed)
        fits = {b: fit_exponent(curve, bound=b) for b in ("lower", "upper")}
        ok = all(0.69 <= f.slope <= 0.81 for f in fits.values())
        detail = ", ".join(f"{b} slope {f.slope:.3f} ± {f.ci:.3f}" for b, f in fits.items())
        return ok, f"{spec.to_text()}: {detail} (target [0.69, 0.81])", {}
    return _timed(2, f"D_inf exponent k={k}", run)


def coupling(profile: str = "desk", seed: int = 3) -> CheckResult:
    def run():
        samples = 10_000 if profile == "desk" else 1000
        rows = [r for l in (2, 4, 8) for k in (0, 2) for r in coupled_2l_check(k, l, (64, 256), samples, seed)]
        violations = sum(r.violations for r in rows)
        worst = max(r.ratio_lower for r in rows)
        unwrapped_ok = all(r.unwrapped_equal == r.unwrapped for r in rows)
        ok = violations == 0 and all(r.ratio_lower + 3 * r.ratio_lower_se <= 594 for r in rows) and unwrapped_ok
        return ok, (f"{violations} pointwise violations over {len(rows)} cells, "
                    f"largest mean ratio {worst:.3f} (bound 594)"), {"rows": [r.to_json() for r in rows]}
    return _timed(3, "2l coupling", run)


def ball_suite(profile: str = "desk") -> CheckResult:
    def run():
        tail = GroupSpec(1, 0, 2, INF)
        failures = []
        cases = 0
        for k in range(1, 8):
            R = (k - 1) // 2
            for l in (3, 4, 5, INF):
                for m in (2 * k + 1, INF):
                    cases += 1
                    if not balls_coincide(GroupSpec(1, k, l, m), tail, R).coincide:
                        failures.append(f"Γ({k},{l},{m}) R={R}")
        for k in range(1, 6):
            for R in range(0, 5):
                cases += 1
                if not balls_coincide(GroupSpec(1, k, 2, INF), tail, R).coincide:
                    failures.append(f"Γ({k},2,inf) R={R}")
        diff = first_difference(GroupSpec(1, 1, 4, INF), tail, max_radius=6)
        found = (not diff.coincide and diff.witness is not None
                 and check_witness(GroupSpec(1, 1, 4, INF), tail, diff.witness))
        ok = not failures and found
        detail = (f"{cases - len(failures)}/{cases} coincidences; Γ(1,4,inf) first differs at "
                  f"R={diff.radius} with witness {diff.witness}")
        return ok, detail, {"failures": failures}
    return _timed(4, "ball coincidence", run)


def dist_suite(profile: str = "desk") -> CheckResult:
    def run():
        mism = [(t, l) for t in range(13) for l in range(2, 9) if dihedral_dist(t, l) != enumerate_dist(t, l)]
        nonmono = [(t, l) for t in range(21) for l in range(2, 17) if not dihedral_dist(t, l).is_monotone()]
        ineq = [(t, l) for t in range(21) for l in range(4, 17) if not check_ineq_32(t, l).holds]
        ok = not (mism or nonmono or ineq)
        detail = (f"recursion/enumeration mismatches {len(mism)}, non-monotone {len(nonmono)}, "
                  f"inequality failures {len(ineq)}")
        return ok, detail, {"mismatch": mism, "nonmonotone": nonmono, "ineq": ineq}
    return _timed(5, "dihedral distribution", run)


def sandwich(profile: str = "desk", seed: int = 6, count: int = 200) -> CheckResult:
    def run():
        rng = random.Random(seed)
        bad, done = [], 0
        while done < count:
            k = rng.randint(0, 3)
            l = rng.choice((2, 3, 4, INF))
            spec = GroupSpec(1, k, l, INF)
            w = "".join(rng.choice("Ttab") for _ in range(rng.randint(0, 8)))
            g = eval_word(w, spec)
            exact = exact_length_bfs(g, spec, cap=16)
            if exact is None:
                bad.append(f"{spec.to_text()} {w}: BFS cap")
                done += 1
                continue
            b = lemma_max_bounds(g, spec)
            if not b.lower <= exact <= b.upper or exact < range_of(g, spec).extent:
                bad.append(f"{spec.to_text()} {w}: {b.lower} <= {exact} <= {b.upper}?")
            done += 1
        return not bad, f"{count - len(bad)}/{count} elements inside [lower, upper] and >= range", {"bad": bad}
    return _timed(6, "length sandwich", run)


def dgen_suite(profile: str = "desk", seed: int = 7) -> CheckResult:
    def run():
        G = GroupSpec(1, 0, 2, INF)
        F = GroupSpec(1, 0, 2, 2)
        c = dgen_constants(F, G)
        D = MarkedProduct(G, F)
        dG, dD = ball_distances(G, 8), ball_distances(D, 8)
        rng = random.Random(seed)
        words = 10_000 if profile == "desk" else 2000
        bad = 0
        for _ in range(words):
            w = "".join(rng.choice("Ttab") for _ in range(rng.randint(0, 8)))
            g, d = evaluate(G, w), evaluate(D, w)
            if not dG[g] <= dD[d] <= c.C1 * dG[g] + c.C2:
                bad += 1
        G2 = GroupSpec(1, 9, 5, 20)
        local_ok = True
        if c.R <= 4:
            local_ok = balls_coincide(G, G2, c.R).coincide
        c2 = dgen_constants(F, G2)
        same = (c2.C1, c2.C2) == (c.C1, c.C2)
        ok = bad == 0 and local_ok and same
        detail = (f"C1={c.C1}, C2={c.C2}, R={c.R}; {bad} sandwich violations on {words} words; "
                  f"constants with Γ(9,5,20): ({c2.C1}, {c2.C2})")
        return ok, detail, {"constants": c.to_json()}
    return _timed(7, "dgen constants", run)


def schedule_suite(profile: str = "desk", seed: int = 0, parallelism: int = 1) -> CheckResult:
    from .scheduler import DESK_EPSILON, ScheduleError, build_schedule

    def run():
        try:
            sched = build_schedule(0.65, DESK_EPSILON, 1, profile, level=1, seed=seed, parallelism=parallelism)
        except ScheduleError as exc:
            return False, f"no schedule: {exc}", {"schedule": None}
        stage = sched.stages[0]
        problems = stage.validate(0)
        high = [c for c in sched.verified if c["claim"].startswith("lower speed >= N_s")]
        low = [c for c in sched.verified if c["claim"].startswith("upper speed <= base rate * eps(n) after")]
        ok = (not problems and sched.ok and len(high) == 1 and high[0]["passed"]
              and low and all(c["passed"] for c in low))
        detail = (f"n1={stage.n_s} k1={stage.k_s} l1={stage.l_s} N1={stage.N_s} m1={stage.m_s}; "
                  f"{sum(c['passed'] for c in high + low)}/{len(high) + len(low)} bracketing checkpoints pass")
        return ok, detail, {"schedule": sched}
    return _timed(8, "end-to-end schedule", run)


def determinism_suite(profile: str = "desk", seed: int = 0) -> CheckResult:
    import json

    def run():
        a = diffusive_slopes(profile, seed, parallelism=1).data["csv"]
        b = diffusive_slopes(profile, seed, parallelism=8).data["csv"]
        s1 = schedule_suite(profile, seed, parallelism=1).data["schedule"]
        s8 = schedule_suite(profile, seed, parallelism=8).data["schedule"]
        if s1 is None or s8 is None:
            return False, "schedule search failed; nothing to compare", {}
        j1 = json.dumps(s1.to_json(), sort_keys=True)
        j8 = json.dumps(s8.to_json(), sort_keys=True)
        c1, c8 = s1.final_curve.to_csv(), s8.final_curve.to_csv()
        ok = a == b and j1 == j8 and c1 == c8
        detail = (f"speed CSV identical: {a == b}; schedule JSON identical: {j1 == j8}; "
                  f"final curve CSV identical: {c1 == c8}")
        return ok, detail, {}
    return _timed(9, "determinism", run)


SUITES = {
    "exponents": (diffusive_slopes, dinfty_slopes),
    "coupling": (coupling,),
    "balls": (ball_suite,),
    "dist": (dist_suite,),
    "sandwich": (sandwich,),
    "dgen": (dgen_suite,),
    "schedule": (schedule_suite,),
    "determinism": (determinism_suite,),
}


def run_suite(name: str, profile: str = "desk") -> list[CheckResult]:
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise KeyError(name)
    out = []
    for n in names:
        for fn in SUITES[n]:
            if fn is dinfty_slopes:
                out.append(fn(profile, k=0))
                out.append(fn(profile, k=4))
            else:
                out.append(fn(profile))
    return out
