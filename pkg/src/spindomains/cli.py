"""Command-line interface.

Subcommands: ``simulate`` (trajectory run), ``steady-state`` (long-time
relaxation endpoint), ``analytic`` (closed-form tables), ``sweep``
(parameter families).  Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .analytic import (
    clebsch_gordan,
    mf_transfer_bound,
    steady_inversion_single_absorber,
    two_spin_dark_fraction,
)
from .config import ConfigError, parse_config, parse_sweep_config
from .integrate import StepSizeUnderflow
from .lindblad import ConvergenceError
from .meanfield import MeanFieldOverflow
from .runner import run, run_steady, sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_config(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise ConfigError("$", f"config file not found: {path}")
    return p.read_text(encoding="utf-8")


def _apply_overrides(text: str, backend, tol):
    """Apply CLI overrides to the raw document, then validate as usual.

    Editing before validation keeps default resolution consistent: a backend
    override picks up that backend's default tolerances unless --tol is given.
    """
    if backend is None and tol is None:
        return parse_config(text)
    import json

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("$", "expected an object")
    if "spec" in doc:
        doc = doc["spec"]
        if not isinstance(doc, dict):
            raise ConfigError("$.spec", "expected an object")
    if backend is not None:
        doc["backend"] = backend
    if tol is not None:
        tols = doc.setdefault("tolerances", {})
        if not isinstance(tols, dict):
            raise ConfigError("$.tolerances", "expected an object")
        tols["rtol"] = tol
        tols["atol"] = tol * 1e-2
    return parse_config(json.dumps(doc))


def _cmd_simulate(args) -> int:
    spec = _apply_overrides(_load_config(args.config), args.backend, args.tol)
    result = run(spec, args.out_dir)
    final = result.trajectory.jz_norm[-1]
    cols = " ".join(f"jz_norm_{i + 1}={v:+.6f}" for i, v in enumerate(final))
    print(f"wrote {result.csv_path} ({result.trajectory.times.size} samples); final {cols}")
    return EXIT_OK


def _cmd_steady(args) -> int:
    spec = _apply_overrides(_load_config(args.config), None, args.tol)
    summary = run_steady(spec, args.out_dir, eps=args.eps, t_max=args.t_max)
    cols = " ".join(f"jz_norm_{i + 1}={v:+.6f}" for i, v in enumerate(summary["jz_norm"]))
    print(f"steady state: {cols}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    sweep_spec = parse_sweep_config(_load_config(args.config))
    result = sweep(sweep_spec, args.out_dir, workers=args.workers)
    print(f"wrote {result.csv_path} ({len(result.rows)} rows)")
    if result.failures:
        for idx, value, message in result.failures:
            print(f"member {idx} (value {value:g}) failed: {message}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _write_table(lines, out):
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)


def _cmd_analytic(args) -> int:
    if args.table == "steady-inversion":
        lines = ["n1,jz1_0,predicted_jz2"]
        for n1 in range(args.n1_min, args.n1_max + 1):
            for twice_m in range(-n1, n1 + 1, 2):
                m = twice_m / 2
                lines.append(f"{n1},{m!r},{steady_inversion_single_absorber(n1, m)!r}")
        _write_table(lines, args.out)
    elif args.table == "cg":
        j1, j2 = args.j1, args.j2
        lines = ["j1,m1,j2,m2,j,m,coefficient"]
        tj1, tj2 = int(round(2 * j1)), int(round(2 * j2))
        for tj in range(abs(tj1 - tj2), tj1 + tj2 + 1, 2):
            for tm in range(-tj, tj + 1, 2):
                for tm1 in range(-tj1, tj1 + 1, 2):
                    tm2 = tm - tm1
                    if abs(tm2) > tj2:
                        continue
                    c = clebsch_gordan(j1, tm1 / 2, j2, tm2 / 2, tj / 2, tm / 2)
                    lines.append(
                        f"{j1!r},{tm1 / 2!r},{j2!r},{tm2 / 2!r},{tj / 2!r},{tm / 2!r},{c!r}"
                    )
        _write_table(lines, args.out)
    elif args.table == "dark-fraction":
        d = two_spin_dark_fraction()
        print(
            f"population={d.population} triplet_weight={d.triplet_weight} "
            f"dark_weight={d.dark_weight}"
        )
    else:  # transfer-bound
        b = mf_transfer_bound(args.x1)
        print(f"final_relative_inversion={b.final_relative_inversion} (valid for {b.validity})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spindomains",
        description="Dissipative dynamics of collectively coupled spin domains",
    )
    parser.add_argument("--version", action="version", version=f"spindomains {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate a trajectory and write CSV/SVG")
    p_sim.add_argument("--config", required=True, help="path to the run JSON")
    p_sim.add_argument("--out-dir", default=".", help="output directory")
    p_sim.add_argument("--backend", choices=["exact", "meanfield"], default=None,
                       help="override the configured backend")
    p_sim.add_argument("--tol", type=float, default=None,
                       help="override the relative tolerance (atol follows at 1e-2 rtol)")
    p_sim.set_defaults(func=_cmd_simulate)

    p_ss = sub.add_parser("steady-state", help="relax to the steady state (exact backend)")
    p_ss.add_argument("--config", required=True)
    p_ss.add_argument("--out-dir", default=".")
    p_ss.add_argument("--eps", type=float, default=1e-9,
                      help="residual threshold on |drho/dt|_1 / |rho|_1")
    p_ss.add_argument("--t-max", type=float, default=None,
                      help="give up (exit 3) if not stationary by this time")
    p_ss.add_argument("--tol", type=float, default=None)
    p_ss.set_defaults(func=_cmd_steady)

    p_an = sub.add_parser("analytic", help="closed-form oracle tables")
    an_sub = p_an.add_subparsers(dest="table", required=True)
    t1 = an_sub.add_parser("steady-inversion",
                           help="single-absorber steady inversion over N1 and initial m")
    t1.add_argument("--n1-min", type=int, default=1)
    t1.add_argument("--n1-max", type=int, default=10)
    t1.add_argument("--out", default=None)
    t2 = an_sub.add_parser("cg", help="Clebsch-Gordan table for j1 x j2")
    t2.add_argument("--j1", type=float, required=True)
    t2.add_argument("--j2", type=float, required=True)
    t2.add_argument("--out", default=None)
    an_sub.add_parser("dark-fraction", help="two-spin dark-state population split")
    t4 = an_sub.add_parser("transfer-bound", help="mean-field transfer bound")
    t4.add_argument("--x1", type=float, required=True)
    p_an.set_defaults(func=_cmd_analytic)

    p_sw = sub.add_parser("sweep", help="run a parameter family and merge a table")
    p_sw.add_argument("--config", required=True, help="path to the sweep JSON")
    p_sw.add_argument("--out-dir", default=".")
    p_sw.add_argument("--workers", type=int, default=1, help="concurrent member cap")
    p_sw.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, StepSizeUnderflow, MeanFieldOverflow) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
