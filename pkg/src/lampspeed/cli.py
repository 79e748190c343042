"""Command line entry point: ``lampspeed <command> ...``.

Exit codes: 0 success, 2 usage or spec error, 3 resource limit,
4 verification failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .groups import parse_spec
from .metric import ResourceError

log = logging.getLogger("lampspeed")

EXIT_OK, EXIT_USAGE, EXIT_RESOURCE, EXIT_VERIFY = 0, 2, 3, 4
OUT_ENV = "LAMPSPEED_OUT"


class UsageError(Exception):
    pass


class VerificationFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# config and storage

@dataclass
class RunConfig:
    command: str
    params: dict
    seed: Optional[int] = None
    parallelism: int = 1
    out_dir: Path = field(default_factory=lambda: Path(os.environ.get(OUT_ENV, "lampspeed-out")))
    force: bool = False

    @property
    def config_hash(self) -> str:
        """Hash of everything that determines the payload (not parallelism or paths)."""
        blob = json.dumps({"command": self.command, "params": self.params, "seed": self.seed,
                           "version": __version__}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def meta(self) -> dict:
        return {"tool": "lampspeed", "version": __version__, "config_hash": self.config_hash,
                "seed": self.seed, "command": self.command}


class ResultStore:
    """curves/*.csv, schedules/*.json, balls/*.json, fixtures/*.json under one root."""

    KINDS = ("curves", "schedules", "balls", "fixtures")

    def __init__(self, root: Path, force: bool = False):
        self.root = Path(root)
        self.force = force

    def path(self, kind: str, name: str) -> Path:
        if kind not in self.KINDS:
            raise ValueError(f"unknown result kind {kind}")
        return self.root / kind / name

    def write(self, kind: str, name: str, text: str) -> Path:
        p = self.path(kind, name)
        if p.exists() and not self.force:
            raise UsageError(f"{p} exists for this configuration; pass --force to overwrite")
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        return p


def _dump(payload: dict, meta: dict) -> str:
    return json.dumps({"meta": meta, **payload}, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# argument grammar

def parse_times(text: str) -> tuple[int, ...]:
    """'2^5..2^13' (dyadic), 'a..b' over powers of two in [a, b], or '32,64,128'."""
    text = text.replace(" ", "")
    if ".." in text:
        a, b = (_int_or_pow(x) for x in text.split("..", 1))
        if a > b:
            raise ValueError(f"empty time range {text}")
        out, p = [], 1
        while p <= b:
            if p >= a:
                out.append(p)
            p *= 2
        if a == 0:
            out.insert(0, 0)
        if not out:
            raise ValueError(f"no powers of two in {text}")
        return tuple(out)
    values = sorted({_int_or_pow(x) for x in text.split(",") if x})
    if not values:
        raise ValueError("no times given")
    return tuple(values)


def _int_or_pow(x: str) -> int:
    if "^" in x:
        base, exp = x.split("^", 1)
        v = int(base) ** int(exp)
    else:
        v = int(x)
    if v < 0:
        raise ValueError("times must be nonnegative")
    return v


def load_spec(text: str):
    """Inline spec text, or '@path' to read it from a file."""
    if text.startswith("@"):
        path = Path(text[1:])
        if not path.is_file():
            raise UsageError(f"spec file {path} not found")
        text = path.read_text()
    return parse_spec(text.strip())


# ---------------------------------------------------------------------------
# commands

def cmd_simulate(args) -> int:
    from .walk import estimate_speed_curve

    spec = load_spec(args.group)
    times = parse_times(args.times)
    cfg = _config(args, "simulate", {"group": spec.to_text(), "times": list(times), "walkers": args.walkers})
    curve = estimate_speed_curve(spec, times, args.walkers, args.seed, args.parallelism)
    text = curve.to_csv(meta=_csv_meta(cfg))
    _emit(args, cfg, "curves", f"simulate-{cfg.config_hash}.csv", text)
    return EXIT_OK


def cmd_exponent(args) -> int:
    from .walk import SpeedCurve, fit_exponent

    path = Path(args.curve)
    if not path.is_file():
        raise UsageError(f"curve file {path} not found")
    curve = SpeedCurve.from_csv(path.read_text())
    window = None
    if args.window:
        ts = parse_times(args.window)
        window = (ts[0], ts[-1])
    bounds = ("lower", "upper") if args.bound == "both" else (args.bound,)
    cfg = _config(args, "exponent", {"curve": curve.to_csv(), "window": window, "bound": args.bound})
    fits = [fit_exponent(curve, window, b, seed=args.seed or 0).to_json() for b in bounds]
    payload = {"fits": fits, "spec": curve.spec_text}
    _emit(args, cfg, "fixtures", f"exponent-{cfg.config_hash}.json", _dump(payload, cfg.meta()))
    return EXIT_OK


def cmd_ball(args) -> int:
    from .ball import balls_coincide

    A, B = load_spec(args.a), load_spec(args.b)
    if args.radius < 0:
        raise UsageError("radius must be >= 0")
    cfg = _config(args, "ball", {"a": A.to_text(), "b": B.to_text(), "radius": args.radius})
    res = balls_coincide(A, B, args.radius, state_cap=args.state_cap)
    _emit(args, cfg, "balls", f"ball-{cfg.config_hash}.json", _dump(res.to_json(A, B), cfg.meta()))
    return EXIT_OK


def cmd_dgen(args) -> int:
    from .ball import dgen_constants

    F, G = load_spec(args.f), load_spec(args.g)
    cfg = _config(args, "dgen", {"F": F.to_text(), "G": G.to_text(), "relator_radius": args.relator_radius})
    c = dgen_constants(F, G, relator_radius=args.relator_radius)
    payload = {"F": F.to_text(), "G": G.to_text(), "constants": c.to_json()}
    _emit(args, cfg, "fixtures", f"dgen-{cfg.config_hash}.json", _dump(payload, cfg.meta()))
    return EXIT_OK


def cmd_dist(args) -> int:
    from .dihedral_dist import check_ineq_32, dihedral_dist

    if args.l < 2:
        raise UsageError("l must be >= 2")
    if args.t < 0:
        raise UsageError("t must be >= 0")
    d = dihedral_dist(args.t, args.l)
    payload = {"t": args.t, "l": args.l, "p": [str(x) for x in d.p], "monotone": d.is_monotone()}
    if args.l >= 4:
        ineq = check_ineq_32(args.t, args.l)
        payload["ineq_32"] = {"holds": ineq.holds, "equality": ineq.equality,
                              "left": str(ineq.left_closed), "right": str(ineq.right_closed)}
    else:
        payload["ineq_32"] = None
    cfg = _config(args, "dist", {"t": args.t, "l": args.l})
    _emit(args, cfg, "fixtures", f"dist-{cfg.config_hash}.json", _dump(payload, cfg.meta()))
    return EXIT_OK if payload["monotone"] and (payload["ineq_32"] is None or payload["ineq_32"]["holds"]) \
        else EXIT_VERIFY


def cmd_schedule(args) -> int:
    from .scheduler import DESK_EPSILON, PROFILES, EpsilonSpec, ScheduleError, build_schedule, lambda_range

    lo, hi = lambda_range(args.level)
    if not lo <= args.lam <= hi:
        raise UsageError(f"lambda {args.lam} outside [{lo}, {hi}] for level {args.level}")
    if args.profile not in PROFILES:
        raise UsageError(f"unknown profile {args.profile}")
    eps = EpsilonSpec.parse(args.epsilon) if args.epsilon else DESK_EPSILON
    cfg = _config(args, "schedule", {"lambda": args.lam, "epsilon": eps.to_json(), "stages": args.stages,
                                     "profile": args.profile, "level": args.level})
    try:
        sched = build_schedule(args.lam, eps, args.stages, args.profile, args.level, args.seed, args.parallelism)
    except ScheduleError as exc:
        raise ResourceError(f"schedule search ran out of budget: {exc}") from exc
    name = f"schedule-{cfg.config_hash}"
    _emit(args, cfg, "schedules", name + ".json", _dump(sched.to_json(), cfg.meta()))
    if sched.final_curve is not None and not args.no_store:
        store = ResultStore(cfg.out_dir, args.force)
        store.write("curves", name + ".csv", sched.final_curve.to_csv(meta=_csv_meta(cfg)))
    if not sched.ok:
        raise VerificationFailure("some certificate checks failed; see the schedule JSON")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import SUITES, run_suite

    if args.suite != "all" and args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite}; choose from all, {', '.join(SUITES)}")
    results = run_suite(args.suite, args.profile)
    for r in results:
        print(r.line(), flush=True)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------

def _config(args, command: str, params: dict) -> RunConfig:
    out = Path(args.out_dir) if getattr(args, "out_dir", None) else \
        Path(os.environ.get(OUT_ENV, "lampspeed-out"))
    return RunConfig(command, params, getattr(args, "seed", None), getattr(args, "parallelism", 1),
                     out, getattr(args, "force", False))


def _csv_meta(cfg: RunConfig) -> dict:
    return {"tool": "lampspeed", "version": __version__, "config_hash": cfg.config_hash}


def _emit(args, cfg: RunConfig, kind: str, name: str, text: str):
    if not args.no_store:
        path = ResultStore(cfg.out_dir, cfg.force).write(kind, name, text)
        log.info("wrote %s", path)
    if args.output:
        Path(args.output).write_text(text)
    sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lampspeed", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lampspeed {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True, parallel=False):
        sp.add_argument("--out-dir", help=f"result directory (default ${OUT_ENV} or ./lampspeed-out)")
        sp.add_argument("--output", "-o", help="also write the payload to this file")
        sp.add_argument("--force", action="store_true", help="overwrite stored results")
        sp.add_argument("--no-store", action="store_true", help="print only, do not store")
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if parallel:
            sp.add_argument("--parallelism", type=int, default=1)

    s = sub.add_parser("simulate", help="Monte Carlo speed curve")
    s.add_argument("--group", required=True, help="spec text or @file")
    s.add_argument("--times", default="2^5..2^13")
    s.add_argument("--walkers", type=int, default=2000)
    common(s, parallel=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("exponent", help="log-log slope of a speed curve")
    s.add_argument("curve")
    s.add_argument("--window", help="e.g. 2^7..2^13")
    s.add_argument("--bound", choices=("lower", "upper", "both"), default="both")
    common(s)
    s.set_defaults(func=cmd_exponent)

    s = sub.add_parser("ball", help="compare marked balls of two specs")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--radius", type=int, required=True)
    s.add_argument("--state-cap", type=int, default=2_000_000)
    common(s, seed=False)
    s.set_defaults(func=cmd_ball)

    s = sub.add_parser("dgen", help="diagonal-product constants for a finite factor")
    s.add_argument("--f", required=True, help="finite factor spec")
    s.add_argument("--g", required=True)
    s.add_argument("--relator-radius", type=int, default=4)
    common(s, seed=False)
    s.set_defaults(func=cmd_dgen)

    s = sub.add_parser("dist", help="exact alternating-word distribution in D_l")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--l", type=int, required=True)
    common(s, seed=False)
    s.set_defaults(func=cmd_dist)

    s = sub.add_parser("schedule", help="build a stage schedule")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--epsilon", help="loglog | log | power:SCALE,POWER | constant-ramp:SCALE,SLOPE")
    s.add_argument("--stages", type=int, default=1)
    s.add_argument("--profile", default="desk")
    s.add_argument("--level", type=int, default=1)
    common(s, parallel=True)
    s.set_defaults(func=cmd_schedule)

    s = sub.add_parser("verify", help="run acceptance suites")
    s.add_argument("--suite", default="all")
    s.add_argument("--profile", choices=("desk", "smoke"), default="desk")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, MemoryError) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
