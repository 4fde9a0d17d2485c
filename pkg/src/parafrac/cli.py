"""Command-line front end: ``parafrac <command> <config.json> [flags]``.

Exit status is 0 on success, 1 when a check or computation fails and 2 when
the command line or the config cannot be parsed.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import empirical, render, thermo
from .config import SystemConfig, _number, build, load_config
from .errors import BracketError, CapacityError, ConfigError, ParafracError
from .system import CantorSystem, HyperbolicIndexError, check_summability, find_hyperbolic_index, validate

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_COMPARE_TOL = 0.05
DEFAULT_DELTAS = tuple(3.0 ** -k for k in range(3, 8))
DEFAULT_DEPTHS = (50, 100, 200, 400)
DIM_H_STEP = 0.05


def _floats(text: str) -> list[float]:
    try:
        return [float(_number(t)) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _fmt(x: float) -> str:
    return "nan" if not math.isfinite(x) else f"{x:.12g}"


@dataclass
class Context:
    """Parsed config plus the flag overrides shared by all commands."""

    cfg: SystemConfig
    system: object
    measure: object
    budget: int
    depth_cap: int
    induced: int | None
    seed: int
    threads: int

    @classmethod
    def from_args(cls, args) -> "Context":
        cfg = load_config(args.config)
        system, measure = build(cfg)
        scale = args.budget
        induced = args.induced if args.induced is not None else cfg.induced
        if induced == 0:
            induced = None
        if args.proxy is None:
            args.proxy = cfg.proxy
        return cls(cfg, system, measure,
                   budget=max(int(cfg.budgets.enumeration * scale), 1),
                   depth_cap=max(int(cfg.budgets.depth_cap * scale), 1),
                   induced=induced,
                   seed=cfg.seed if args.seed is None else args.seed,
                   threads=args.threads)

    def qs(self, args) -> list[float]:
        if args.q is not None:
            return args.q
        return list(self.cfg.q) if self.cfg.q else list(thermo.DEFAULT_Q_GRID)

    def deltas(self, args) -> list[float]:
        if args.delta is not None:
            return args.delta
        return list(self.cfg.deltas) if self.cfg.deltas else list(DEFAULT_DELTAS)

    def root(self, q: float, args, tol: float | None = None) -> thermo.RootResult:
        return thermo.solve_root(self.system, self.measure, q, n=args.level, induced=self.induced,
                                 tol=tol or self.cfg.budgets.tol, proxy=args.proxy, budget=self.budget,
                                 threads=self.threads)

    def moments(self, args, qs) -> list[empirical.GridMoments]:
        deltas = sorted(self.deltas(args), reverse=True)
        if args.estimator == "chaos":
            pts = empirical.chaos_game_sample(self.system, self.measure, args.samples, seed=self.seed)
            return [empirical.grid_moments_chaos(pts, d, qs) for d in deltas]
        return [empirical.grid_moments_pushforward(self.system, self.measure, d, qs, depth_cap=self.depth_cap,
                                                   budget=self.budget)
                for d in deltas]


# ------------------------------------------------------------------ commands


def _axis_systems(system) -> list[tuple[str, CantorSystem]]:
    if not system.is_carpet:
        return [("", system)]
    out = []
    for axis, coord, family in (("x", 0, system.columns), ("y", 1, system.rows)):
        used = sorted({cell[coord] for cell in system.grid})
        out.append((axis, CantorSystem(tuple(family[u] for u in used), name=f"{system.name}:{axis}")))
    return out


def cmd_validate(ctx: Context, args, out) -> int:
    report = validate(ctx.system)
    if report.ok:
        try:
            word = find_hyperbolic_index(ctx.system)
            label = ",".join(str(s) for s in word)
            report.add("", "hyperbolic index", True, f"i0 = {label}")
        except HyperbolicIndexError as exc:
            report.add("", "hyperbolic index", False, str(exc))
        for axis, sub in _axis_systems(ctx.system):
            name = f"summability {axis}".rstrip()
            try:
                summ = check_summability(sub, budget=ctx.budget)
            except (HyperbolicIndexError, CapacityError, ValueError) as exc:
                report.add("", name, False, str(exc))
                continue
            report.add("", name, summ.summable, f"{summ.verdict}, tail slope {summ.power_slope:.3f}")
    print(report.table(), file=out)
    for f in report.failures:
        tag = f"{f.axiom} " if f.axiom else ""
        print(f"FAIL {tag}{f.name}: {f.detail}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_spectrum(ctx: Context, args, out) -> int:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["q", "tau", "level", "mode", "gap", "label"])
    status = EXIT_OK
    for q in ctx.qs(args):
        label = "box_dimension" if q == 0 else ""
        try:
            res = ctx.root(q, args, args.tol)
        except (BracketError, CapacityError) as exc:
            print(f"q={_fmt(q)}: {exc}", file=sys.stderr)
            writer.writerow([_fmt(q), "nan", 0, thermo._mode_label(ctx.induced), "nan", label])
            status = EXIT_FAIL
            continue
        gap = float("nan")
        if args.gap and ctx.induced is not None:
            try:
                full = thermo.solve_root(ctx.system, ctx.measure, q, tol=args.tol or ctx.cfg.budgets.tol,
                                         proxy="length", budget=ctx.budget, threads=ctx.threads)
                gap = abs(full.root - res.root)
            except (BracketError, CapacityError) as exc:
                print(f"q={_fmt(q)}: no full-alphabet root ({exc})", file=sys.stderr)
        writer.writerow([_fmt(q), _fmt(res.root), res.level, res.mode, _fmt(gap), label])
    return status


def cmd_moments(ctx: Context, args, out) -> int:
    qs = ctx.qs(args)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["delta", "q", "D", "estimator", "truncated_mass"])
    for m in ctx.moments(args, qs):
        for q, d in zip(m.q, m.D):
            writer.writerow([_fmt(m.delta), _fmt(float(q)), _fmt(float(d)), m.estimator, _fmt(m.truncated_mass)])
    return EXIT_OK


def cmd_compare(ctx: Context, args, out) -> int:
    qs = ctx.qs(args)
    tol = args.tol if args.tol is not None else (ctx.cfg.compare_tol or DEFAULT_COMPARE_TOL)
    moments = ctx.moments(args, qs)
    status = EXIT_OK
    print(f"{'q':>6} {'root':>12} {'slope':>12} {'|diff|':>10}  result (tol {tol:g})", file=out)
    for q in qs:
        try:
            root = ctx.root(q, args).root
            slope = empirical.empirical_tau(moments, q).slope
        except (BracketError, CapacityError, ValueError) as exc:
            print(f"{q:>6g} {'-':>12} {'-':>12} {'-':>10}  FAIL ({exc})", file=out)
            status = EXIT_FAIL
            continue
        diff = abs(root - slope)
        ok = diff <= tol
        status = status if ok else EXIT_FAIL
        print(f"{q:>6g} {root:>12.6f} {slope:>12.6f} {diff:>10.2e}  {'pass' if ok else 'FAIL'}", file=out)
    if any(np.isclose(q, 1.0) for q in qs):
        try:
            lo = ctx.root(1.0 - DIM_H_STEP, args).root
            hi = ctx.root(1.0 + DIM_H_STEP, args).root
            print(f"info: -tau'(1) ~ {-(hi - lo) / (2 * DIM_H_STEP):.6f} (finite difference, not checked)", file=out)
        except (BracketError, CapacityError) as exc:
            print(f"info: -tau'(1) unavailable ({exc})", file=out)
    return status


def cmd_render(ctx: Context, args, out) -> int:
    if args.out is None:
        raise ConfigError("render needs --out")
    spec = render.RenderSpec(args.width, args.height, args.mode, args.level or 4, args.samples,
                             seed=ctx.seed)
    if spec.mode == "cylinders":
        img = render.render_cylinders(ctx.system, spec, budget=ctx.budget)
    else:
        img = render.render_density(ctx.system, ctx.measure, spec)
    render.write_pnm(args.out, img)
    print(f"wrote {args.out} ({spec.width}x{spec.height}, {int(np.count_nonzero(img))} lit pixels)",
          file=sys.stderr)
    return EXIT_OK


def cmd_diagnose(ctx: Context, args, out) -> int:
    if ctx.system.is_carpet:
        raise ConfigError("diagnose-parabolic needs a Cantor config")
    parabolic = ctx.system.parabolic_symbols
    if not parabolic:
        raise ConfigError("no map declares a parabolic point")
    symbol = parabolic[0] if args.symbol is None else args.symbol
    if symbol not in parabolic:
        raise ConfigError(f"symbol {symbol} is not parabolic")
    trace = empirical.local_exponent_trace(ctx.system, ctx.measure, symbol, args.depths or DEFAULT_DEPTHS)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["n", "radius", "exponent"])
    for n, r, e in zip(trace.depths, trace.radii, trace.exponents):
        writer.writerow([int(n), _fmt(float(r)), _fmt(float(e))])
    print(f"symbol {symbol}: max exponent {trace.exponents.max():.4f} at n={int(trace.depths[-1])}",
          file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "spectrum": cmd_spectrum,
    "moments": cmd_moments,
    "compare": cmd_compare,
    "render": cmd_render,
    "diagnose-parabolic": cmd_diagnose,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="parafrac", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("config", help="path to a JSON system config")
    p.add_argument("--q", type=_floats, help="comma-separated q values")
    p.add_argument("--delta", type=_floats, help="comma-separated mesh sizes, e.g. 3^-4,3^-5")
    p.add_argument("--level", type=int, help="symbolic level for pressure sums (cylinder level when rendering)")
    p.add_argument("--induced", type=int, help="induced-alphabet cutoff N; 0 forces the full alphabet")
    p.add_argument("--tol", type=float, help="root tolerance (spectrum) or comparison tolerance (compare)")
    p.add_argument("--estimator", choices=("pushforward", "chaos"), default="pushforward")
    p.add_argument("--proxy", choices=("sup", "inf", "length"), help="singular-value proxy (config default)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--budget", type=float, default=1.0, help="multiplier applied to every enumeration cap")
    p.add_argument("--out", help="output file (stdout for CSV commands when omitted)")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--mode", choices=("cylinders", "density"), default="cylinders")
    p.add_argument("--depths", type=_ints)
    p.add_argument("--symbol", type=int)
    p.add_argument("--gap", action="store_true", help="also report |full root - induced root|; the full root uses the length proxy")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for flag in ("budget", "threads", "samples"):
        if getattr(args, flag) <= 0:
            print(f"error: --{flag} must be positive", file=sys.stderr)
            return EXIT_USAGE
    try:
        ctx = Context.from_args(args)
        if args.command != "render" and args.out:
            with open(args.out, "w", newline="") as fh:
                return COMMANDS[args.command](ctx, args, fh)
        return COMMANDS[args.command](ctx, args, sys.stdout)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParafracError, TypeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
