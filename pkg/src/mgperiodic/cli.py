"""Command-line front end.

Subcommands: classify, scan, check, find-orbits, simulate, synthesize,
reproduce-example.  Exit codes form a stable contract: 0 for success (or a
satisfied check), 1 for a hypothesis/count failure, 2 for input errors.
All outputs are deterministic: reruns with the same configuration produce
byte-identical files.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dde
from .analysis import count_predicted_solutions, scan_envelopes
from .model import (Model, ModelError, Term, dump_model, load_model,
                    section4_model_path)
from .orbits import find_all_orbits, validate_orbit, write_manifest_csv, write_orbit_csv
from .theorems import check_existence, check_multiplicity, synthesize_lambdas

EXIT_OK = 0
EXIT_UNSATISFIED = 1
EXIT_INPUT = 2

#: reference levels and envelope bounds of the bundled example
SECTION4_GAMMAS = (-5.0, -0.3, 0.2, 5.0, 34.0)
SECTION4_BOUNDS = (
    ("alpha", -0.3, ">", 0.09),
    ("alpha", 5.0, ">", 0.10),
    ("beta", -5.0, "<", -0.08),
    ("beta", 0.2, "<", -0.01),
    ("beta", 34.0, "<", -0.01),
)


@dataclass(frozen=True)
class RunConfig:
    """Resolved options shared by the analysis commands."""

    model_path: Path
    gamma_range: tuple[float, float]
    gamma_step: float
    t_points: int
    harmonics: int
    margin_floor: float
    residual_tolerance: float
    amplitude_tolerance: float
    dedup_tol: float
    seeds_per_bracket: int
    max_iter: int
    damping: float
    out_dir: Path

    def validate(self) -> None:
        if self.gamma_range[1] <= self.gamma_range[0] or self.gamma_step <= 0:
            raise ValueError(f"empty gamma range {self.gamma_range} "
                             f"step {self.gamma_step}")
        if self.t_points < 2:
            raise ValueError("t grid needs at least 2 points")
        if self.harmonics < 1 or self.seeds_per_bracket < 1 or self.max_iter < 1:
            raise ValueError("harmonics, seeds and iterations must be >= 1")
        for name in ("margin_floor", "residual_tolerance",
                     "amplitude_tolerance", "dedup_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def _parse_gamma(text: str) -> tuple[tuple[float, float], float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"gamma must be lo:step:hi, got {text!r}")
    try:
        lo, step, hi = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return (lo, hi), step


def _parse_gammas(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _resolve_model_path(text: str) -> Path:
    if text == "section4":
        return section4_model_path()
    return Path(text)


def _add_common(p: argparse.ArgumentParser, gamma_default: str,
                model_optional: bool = False) -> None:
    if model_optional:
        p.add_argument("model", type=_resolve_model_path, nargs="?",
                       default=section4_model_path(),
                       help="model file (default: the bundled example)")
    else:
        p.add_argument("model", type=_resolve_model_path,
                       help="model file (or 'section4' for the bundled example)")
    p.add_argument("--gamma", type=_parse_gamma, default=_parse_gamma(gamma_default),
                   metavar="LO:STEP:HI", help=f"gamma grid (default {gamma_default})")
    p.add_argument("--t-points", type=int, default=1000)
    p.add_argument("--k-harmonics", type=int, default=16)
    p.add_argument("--margin-floor", type=float, default=1e-9)
    p.add_argument("--residual-tol", type=float, default=1e-10)
    p.add_argument("--amplitude-tol", type=float, default=1e-6)
    p.add_argument("--dedup-tol", type=float, default=1e-4)
    p.add_argument("--seeds-per-bracket", type=int, default=5)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--damping", type=float, default=1.0)
    p.add_argument("--out", type=Path, default=Path("mgp_out"))


def _config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        model_path=args.model,
        gamma_range=args.gamma[0], gamma_step=args.gamma[1],
        t_points=args.t_points, harmonics=args.k_harmonics,
        margin_floor=args.margin_floor, residual_tolerance=args.residual_tol,
        amplitude_tolerance=args.amplitude_tol, dedup_tol=args.dedup_tol,
        seeds_per_bracket=args.seeds_per_bracket, max_iter=args.max_iter,
        damping=args.damping, out_dir=args.out)
    cfg.validate()
    return cfg


def _load(cfg_path: Path) -> Model:
    return load_model(cfg_path)


# -- commands -------------------------------------------------------------------

def cmd_classify(args) -> int:
    model = _load(args.model)
    print(model.classification)
    return EXIT_OK


def cmd_scan(args) -> int:
    cfg = _config(args)
    model = _load(cfg.model_path)
    env = scan_envelopes(model, cfg.gamma_range, cfg.gamma_step, cfg.t_points)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    grid = cfg.out_dir / "envelope.csv"
    summary = cfg.out_dir / "envelope_summary.csv"
    env.write_csv(grid, summary)
    print(f"wrote {grid} and {summary} "
          f"({len(env.gammas)} gamma x {len(env.times)} t)")
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _config(args)
    model = _load(cfg.model_path)
    if args.theorem == "multiplicity":
        if not args.gammas:
            raise ModelError("--multiplicity requires --gammas")
        report = check_multiplicity(model, args.gammas,
                                    t_points=cfg.t_points,
                                    margin_floor=cfg.margin_floor)
    else:
        report = check_existence(model, cfg.gamma_range, cfg.gamma_step,
                                 t_points=cfg.t_points,
                                 margin_floor=cfg.margin_floor)
    text = report.to_text()
    print(text, end="")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.out_dir / "theorem_report.txt"
    out.write_text(text)
    print(f"wrote {out}")
    return EXIT_OK if report.verdict else EXIT_UNSATISFIED


def cmd_find_orbits(args) -> int:
    cfg = _config(args)
    model = _load(cfg.model_path)
    env = scan_envelopes(model, cfg.gamma_range, cfg.gamma_step, cfg.t_points)
    predicted = count_predicted_solutions(model, env, cfg.margin_floor)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        orbits = find_all_orbits(
            model, env, seeds_per_bracket=cfg.seeds_per_bracket,
            K=cfg.harmonics, max_iter=cfg.max_iter, damping=cfg.damping,
            residual_tolerance=cfg.residual_tolerance,
            amplitude_tolerance=cfg.amplitude_tolerance,
            dedup_tol=cfg.dedup_tol, margin_floor=cfg.margin_floor)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for i, orbit in enumerate(orbits):
        write_orbit_csv(orbit, cfg.out_dir / f"orbit_{i:03d}.csv")
    write_manifest_csv(orbits, cfg.out_dir / "manifest.csv")
    print(f"predicted >= {predicted} orbit(s); found {len(orbits)}")
    for orbit in orbits:
        print(f"  mean={orbit.mean:.6g} range=[{orbit.y_min:.6g}, "
              f"{orbit.y_max:.6g}] residual={orbit.residual_norm:.3g}")
    print(f"wrote {cfg.out_dir / 'manifest.csv'}")
    if len(orbits) < predicted:
        print(f"WARNING: expected at least {predicted} orbits, found "
              f"{len(orbits)}", file=sys.stderr)
        return EXIT_UNSATISFIED
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    model = _load(cfg.model_path)
    if args.x0 <= 0.0:
        raise ModelError(f"--x0 must be positive, got {args.x0}")
    mode = args.mode
    v0 = math.log(args.x0) if mode == "log" else args.x0
    traj = dde.integrate(model, v0, (0.0, args.periods * model.T),
                         steps_per_period=args.steps_per_period, mode=mode)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.out_dir / "trajectory.csv"
    traj.write_csv(out)
    print(f"integrated {args.periods} period(s) in {mode} space; wrote {out}")
    return EXIT_OK


def cmd_synthesize(args) -> int:
    cfg = _config(args)
    model = _load(cfg.model_path)
    try:
        lambdas, gamma2 = synthesize_lambdas(
            [t.r for t in model.terms], model.b,
            [t.m for t in model.terms], [t.n for t in model.terms],
            args.gamma1, args.epsilon, t_points=cfg.t_points)
    except ValueError as exc:
        raise ModelError(str(exc)) from exc
    print(f"gamma1 = {args.gamma1:g}")
    print(f"gamma2 = {gamma2:g}")
    for k, lam in enumerate(lambdas, start=1):
        print(f"lambda_{k} = {lam:.9g}")
    synth = Model(terms=tuple(
        Term(lam=lam, m=t.m, n=t.n, r=t.r, tau=t.tau, mu=t.mu)
        for t, lam in zip(model.terms, lambdas)), b=model.b)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.out_dir / "synthesized.model"
    dump_model(synth, out)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_reproduce_example(args) -> int:
    cfg = _config(args)
    model = _load(cfg.model_path)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    env = scan_envelopes(model, cfg.gamma_range, cfg.gamma_step, cfg.t_points)
    # plot-resolution export of the usual viewing window; chain checks below
    # still run on the full-resolution grid
    fig_lo = max(cfg.gamma_range[0], -6.0)
    fig_hi = min(cfg.gamma_range[1], 35.0)
    fig_env = scan_envelopes(model, (fig_lo, fig_hi), cfg.gamma_step, 101)
    fig_env.write_csv(cfg.out_dir / "envelope.csv",
                      cfg.out_dir / "envelope_summary.csv")

    from .analysis import alpha, beta, time_grid
    times = time_grid(model, cfg.t_points)
    lines = ["envelope inequality checks:"]
    all_pass = True
    for kind, g, sense, bound in SECTION4_BOUNDS:
        if kind == "alpha":
            achieved = float(np.min(alpha(model, g, times)))
        else:
            achieved = float(np.max(beta(model, g, times)))
        ok = achieved > bound if sense == ">" else achieved < bound
        all_pass &= ok
        agg = "min" if kind == "alpha" else "max"
        lines.append(f"  {'PASS' if ok else 'FAIL'}  {agg}_t {kind}({g:g}, t) "
                     f"= {achieved:+.6f} (required {sense} {bound:+g})")

    report = check_multiplicity(model, (-5.0, -0.3, 0.2),
                                t_points=cfg.t_points,
                                margin_floor=cfg.margin_floor)
    lines.append(f"multiplicity check: case {report.case}, "
                 f"{'satisfied' if report.verdict else 'violated'}, "
                 f"predicted >= {report.predicted_solution_count}")
    all_pass &= report.verdict

    predicted = count_predicted_solutions(model, env, cfg.margin_floor)
    lines.append(f"alternation chain predicts >= {predicted} solutions")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        orbits = find_all_orbits(
            model, env, seeds_per_bracket=cfg.seeds_per_bracket,
            K=cfg.harmonics, max_iter=cfg.max_iter, damping=cfg.damping,
            residual_tolerance=cfg.residual_tolerance,
            amplitude_tolerance=cfg.amplitude_tolerance,
            dedup_tol=cfg.dedup_tol, margin_floor=cfg.margin_floor)
    for i, orbit in enumerate(orbits):
        write_orbit_csv(orbit, cfg.out_dir / f"orbit_{i:03d}.csv")
    write_manifest_csv(orbits, cfg.out_dir / "manifest.csv")
    ok_count = len(orbits) >= 6
    validations = [validate_orbit(model, o) for o in orbits]
    ok_valid = all(v.ok for v in validations)
    lines.append(f"  {'PASS' if ok_count else 'FAIL'}  found {len(orbits)} "
                 "distinct orbits (need >= 6)")
    lines.append(f"  {'PASS' if ok_valid else 'FAIL'}  all orbit validations "
                 "(amplitude bound, time-domain cross-check)")
    for orbit in orbits:
        lines.append(f"    orbit mean={orbit.mean:.6g} "
                     f"range=[{orbit.y_min:.6g}, {orbit.y_max:.6g}] "
                     f"residual={orbit.residual_norm:.3g}")
    all_pass &= ok_count and ok_valid

    lines.append("overall: " + ("PASS" if all_pass else "FAIL"))
    text = "\n".join(lines) + "\n"
    print(text, end="")
    (cfg.out_dir / "summary.txt").write_text(text)
    return EXIT_OK if all_pass else EXIT_UNSATISFIED


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgperiodic",
        description="Periodic-solution analysis for multi-delay "
                    "hematopoiesis models")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="print the term classification")
    p.add_argument("model", type=_resolve_model_path)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("scan", help="export alpha/beta/phi envelope grids")
    _add_common(p, "-6:0.05:35")
    p.set_defaults(fn=cmd_scan)

    p = sub.add_parser("check", help="check existence/multiplicity hypotheses")
    _add_common(p, "-50:0.01:50")
    p.add_argument("--theorem", choices=("existence", "multiplicity"),
                   default="existence")
    p.add_argument("--existence", dest="theorem", action="store_const",
                   const="existence")
    p.add_argument("--multiplicity", dest="theorem", action="store_const",
                   const="multiplicity")
    p.add_argument("--gammas", type=_parse_gammas, default=())
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("find-orbits", help="locate periodic orbits")
    _add_common(p, "-50:0.05:50")
    p.set_defaults(fn=cmd_find_orbits)

    p = sub.add_parser("simulate", help="integrate the delay equation")
    _add_common(p, "-50:0.05:50")
    p.add_argument("--x0", type=float, default=1.0,
                   help="constant initial history (x value)")
    p.add_argument("--periods", type=float, default=10.0)
    p.add_argument("--steps-per-period", type=int, default=512)
    p.add_argument("--mode", choices=("log", "x"), default="log")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("synthesize",
                       help="choose lambdas per the constructive lemma")
    _add_common(p, "-50:0.05:50")
    p.add_argument("--gamma1", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.set_defaults(fn=cmd_synthesize)

    p = sub.add_parser("reproduce-example",
                       help="run the bundled four-term example end to end")
    _add_common(p, "-50:0.05:50", model_optional=True)
    p.set_defaults(fn=cmd_reproduce_example)
    return parser


def _merge_negative_values(argv: list[str]) -> list[str]:
    """Join option/value pairs whose value looks like an option (-5,-0.3,...)."""
    out = []
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg in ("--gamma", "--gammas") and i + 1 < len(argv):
            out.append(f"{arg}={argv[i + 1]}")
            i += 2
        else:
            out.append(arg)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_merge_negative_values(argv))
    try:
        return args.fn(args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
