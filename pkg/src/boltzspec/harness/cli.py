"""Command line entry point: ``boltzspec {solve,sweep,basis-study,plot}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from ..model import PRESETS, ScenarioConfig
from . import io, plots
from .runner import Method, basis_study, run_scenario

log = logging.getLogger("boltzspec")


def parse_modes(text: str) -> list[int]:
    """``"4"`` or an inclusive range ``"2..10"``."""
    lo, sep, hi = text.partition("..")
    try:
        a = int(lo)
        b = int(hi) if sep else a
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad mode range {text!r}; use N or a..b") from None
    if a < 1 or b < a:
        raise argparse.ArgumentTypeError(f"bad mode range {text!r}")
    return list(range(a, b + 1))


def parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _scenario(args) -> ScenarioConfig:
    cfg = io.load_scenario(args.scenario)
    tol = cfg.tolerances
    if args.rel_tol is not None:
        tol = dataclasses.replace(tol, ode_rel=args.rel_tol)
    if args.abs_tol is not None:
        tol = dataclasses.replace(tol, ode_abs=args.abs_tol)
    return cfg.replace(tolerances=tol)


def _run(args, methods: list[Method], modes: list[int]) -> int:
    cfg = _scenario(args)
    out = Path(args.out)
    results = []
    for method in methods:
        for n in modes:
            if method is Method.NON_EQ and n < 2:
                log.info("skipping noneq N=%d (needs at least 2 modes)", n)
                continue
            res = run_scenario(cfg, method, n, switch_threshold=args.switch_threshold)
            rep = res.report
            status = "FAILED " + rep.diagnostic if rep.failed else (
                f"n_err={rep.max_rel_n_err:.3e} rho_err={rep.max_rel_rho_err:.3e} "
                f"L1_max={rep.max_L1_err:.3e} L1_final={rep.final_L1_err:.3e}")
            print(f"{rep.run_id}: {status}")
            results.append(res)
    io.write_results(out, results, cfg)
    if args.plots == "on":
        plots.render_all(out)
    return 1 if any(r.report.failed for r in results) else 0


def cmd_solve(args) -> int:
    modes = args.modes or [io.load_scenario(args.scenario).n_modes]
    if len(modes) != 1:
        raise SystemExit("solve takes a single mode count; use sweep for ranges")
    return _run(args, [Method(args.method or "noneq")], modes)


def cmd_sweep(args) -> int:
    methods = [Method(args.method)] if args.method else [Method.CHEM_EQ, Method.NON_EQ]
    return _run(args, methods, args.modes or list(range(2, 11)))


def cmd_basis_study(args) -> int:
    out = Path(args.out)
    rows = basis_study(args.upsilon, args.R, n_max=args.n_max)
    io.write_basis_study(out, rows)
    for r in rows:
        flag = " divergent-norm" if r.diverges else ""
        print(f"Y={r.upsilon:g} R={r.R:g} {r.basis}: error_N(N={r.n_modes[-1]})={r.error[-1]:.3e}{flag}")
    if args.plots == "on":
        plots.render_all(out)
    return 0


def cmd_plot(args) -> int:
    for p in plots.render_all(Path(args.out)):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="results", help="output directory (default: results)")
    common.add_argument("--plots", choices=["on", "off"], default="on")
    common.add_argument("-v", "--verbose", action="store_true")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--scenario", default="reheating-R1.1",
                     help=f"preset ({', '.join(PRESETS)}) or JSON config file")
    run.add_argument("--method", choices=[m.value for m in Method])
    run.add_argument("--modes", type=parse_modes, help="mode count N or inclusive range a..b")
    run.add_argument("--rel-tol", type=float, help="ODE relative tolerance override")
    run.add_argument("--abs-tol", type=float, help="ODE absolute tolerance override")
    run.add_argument("--switch-threshold", type=float, default=1e-8,
                     help="relative collision size that switches noneq runs to the eps form (0 disables)")

    p = argparse.ArgumentParser(prog="boltzspec", description="Spectral Boltzmann solvers and error studies.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", parents=[common, run], help="single run")
    s.set_defaults(func=cmd_solve)
    s = sub.add_parser("sweep", parents=[common, run], help="runs over a range of mode counts")
    s.set_defaults(func=cmd_sweep)
    s = sub.add_parser("basis-study", parents=[common], help="expansion errors of Fermi-Dirac targets")
    s.add_argument("--upsilon", type=parse_floats, default=[0.5, 0.9, 1.0, 1.5])
    s.add_argument("--R", type=parse_floats, default=[1.0, 1.1, 1.4, 2.0])
    s.add_argument("--n-max", type=int, default=10)
    s.set_defaults(func=cmd_basis_study)
    s = sub.add_parser("plot", parents=[common], help="re-render SVGs from CSVs in --out")
    s.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except io.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
