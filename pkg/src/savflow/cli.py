"""Command-line interface.

Subcommands
-----------
run <config>        single simulation: timeseries CSV + snapshots
converge <config>   resolution ladder against a fine reference: CSV of errors
coarsen <config>    adaptive vs fixed-step comparison: per-variant outputs
gamma --sigma s     print the zero-stability ratio threshold
selfcheck           run the built-in invariant battery

Exit codes: 0 success, 1 usage/config errors, 2 numerical aborts or
failed checks.  Output directories are deterministic (no timestamps):
``--out-dir`` wins, else ``$SAVFLOW_OUT``, else ``./savflow_out``, with
one subdirectory per (subcommand, config stem) pair so concurrent runs
do not collide.  Configs are validated before anything is written.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_config, write_resolved_config
from .errors import (
    ConfigError,
    EnergyShiftTooSmall,
    NewtonSingularError,
    NonFiniteFieldError,
    SingularScalarDenominator,
    StepRatioError,
)
from .harness import COARSEN_VARIANTS, coarsening_experiment, convergence_study, run_simulation
from .integrator import gamma_star_star
from .output import (
    write_convergence_csv,
    write_dt_csv,
    write_records_csv,
    write_snapshot,
    write_snapshot_pgm,
)

NUMERICAL_ERRORS = (EnergyShiftTooSmall, NonFiniteFieldError,
                    NewtonSingularError, SingularScalarDenominator,
                    StepRatioError)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 is reserved for
    # numerical aborts here, so route usage problems to exit 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(sub):
    sub.add_argument("config", help="path to a JSON run configuration")
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--out-dir", default=None,
                     help="output root (default: $SAVFLOW_OUT or ./savflow_out)")
    sub.add_argument("--newton-iters", type=int, default=None,
                     help="override the per-step Newton iteration count")
    sub.add_argument("--ratio-policy", choices=("warn", "error"), default=None,
                     help="step-ratio violations: warn and continue, or abort")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="savflow", description=__doc__.split("\n", 1)[0])
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="run one simulation")
    _add_common(p_run)

    p_conv = subs.add_parser("converge", help="temporal convergence study")
    _add_common(p_conv)
    p_conv.add_argument("--mesh", choices=("uniform", "perturbed"), default="uniform")
    p_conv.add_argument("--Ns", default="20,40,80,160,320",
                        help="comma-separated step counts (increasing)")
    p_conv.add_argument("--dt-ref", type=float, default=None,
                        help="reference step size (default from config)")

    p_coar = subs.add_parser("coarsen", help="coarsening comparison: adaptive vs fixed steps")
    _add_common(p_coar)
    p_coar.add_argument("--variants", default=",".join(COARSEN_VARIANTS),
                        help="comma-separated subset of " + ",".join(COARSEN_VARIANTS))
    p_coar.add_argument("--dt-large", type=float, default=1e-2)
    p_coar.add_argument("--dt-small", type=float, default=1e-4)
    p_coar.add_argument("--checkpoints", default="1,2,5",
                        help="comma-separated times for the energy comparison")

    p_gamma = subs.add_parser("gamma", help="print the ratio threshold gamma**(sigma)")
    p_gamma.add_argument("--sigma", type=float, required=True)

    subs.add_parser("selfcheck", help="run the built-in invariant battery")
    return parser


def _out_dir(args, stem: str) -> Path:
    root = args.out_dir or os.environ.get("SAVFLOW_OUT") or "savflow_out"
    return Path(root) / f"{args.command}_{stem}"


def _load_with_overrides(args):
    cfg = load_config(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.newton_iters is not None:
        over["newton_iters"] = args.newton_iters
    if args.ratio_policy is not None:
        over["ratio_policy"] = args.ratio_policy
    return replace(cfg, **over) if over else cfg


def _write_snapshots(out: Path, snapshots) -> None:
    if not snapshots:
        return
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    index = ["index,requested_t,actual_t,step,raw,pgm"]
    for i, snap in enumerate(snapshots):
        raw = snap_dir / f"snap_{i:04d}.f64"
        pgm = snap_dir / f"snap_{i:04d}.pgm"
        write_snapshot(raw, snap.field, snap.actual_t, snap.step)
        write_snapshot_pgm(pgm, snap.field)
        index.append(f"{i},{float(snap.requested_t)!r},{float(snap.actual_t)!r},"
                     f"{snap.step},{raw.name},{pgm.name}")
    (snap_dir / "index.csv").write_text("\n".join(index) + "\n")


def _parse_floats(text: str, what: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"could not parse {what} {text!r}: {exc}") from exc


def cmd_run(args) -> int:
    cfg = _load_with_overrides(args)
    result = run_simulation(cfg)          # compute everything before writing
    out = _out_dir(args, Path(args.config).stem)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved_config(out / "resolved_config.json", cfg)
    write_records_csv(out / "timeseries.csv", result.records, every=cfg.record_every)
    _write_snapshots(out, result.snapshots)
    last = result.records[-1]
    print(f"steps={result.step_count} t={last.t_np1:.6g} "
          f"energy={last.energy:.10g} modified={last.modified_energy:.10g} "
          f"max_gamma={result.max_gamma:.4g}")
    print(f"outputs in {out}")
    return 0


def cmd_converge(args) -> int:
    cfg = _load_with_overrides(args)
    if args.dt_ref is not None:
        cfg = replace(cfg, dt_ref=args.dt_ref)
    try:
        Ns = [int(x) for x in args.Ns.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"could not parse --Ns {args.Ns!r}: {exc}") from exc
    if not Ns or Ns != sorted(Ns) or Ns[0] < 2:
        raise ConfigError(f"--Ns must be an increasing list of counts >= 2, got {Ns}")
    study = convergence_study(cfg, Ns, args.mesh, seed=cfg.seed)
    out = _out_dir(args, Path(args.config).stem)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved_config(out / "resolved_config.json", cfg)
    write_convergence_csv(out / "convergence.csv", study)
    print(f"mesh={study.mesh_kind} order_linf={study.order_linf:.3f} "
          f"order_l2={study.order_l2:.3f} xi_order={study.xi_order:.3f}")
    print(f"outputs in {out}")
    return 0


def cmd_coarsen(args) -> int:
    cfg = _load_with_overrides(args)
    variants = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    checkpoints = tuple(_parse_floats(args.checkpoints, "--checkpoints"))
    report = coarsening_experiment(cfg, variants=variants,
                                   dt_large=args.dt_large, dt_small=args.dt_small,
                                   checkpoints=checkpoints)
    out = _out_dir(args, Path(args.config).stem)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved_config(out / "resolved_config.json", cfg)
    comparison = ["variant,steps,checkpoint_t,energy"]
    for v in variants:
        result = report.runs[v]
        vdir = out / f"variant_{v}"
        vdir.mkdir(parents=True, exist_ok=True)
        write_records_csv(vdir / "timeseries.csv", result.records,
                          every=cfg.record_every)
        write_dt_csv(vdir / "dt_history.csv", result.records)
        _write_snapshots(vdir, result.snapshots)
        for t, E in zip(report.checkpoints, report.checkpoint_energy[v]):
            comparison.append(f"{v},{report.step_counts[v]},{t!r},{E!r}")
    (out / "comparison.csv").write_text("\n".join(comparison) + "\n")
    for v in variants:
        print(f"{v}: steps={report.step_counts[v]}")
    if report.max_energy_deviation is not None:
        print(f"max energy deviation (adaptive vs fixed-small): "
              f"{report.max_energy_deviation:.3e}")
    print(f"outputs in {out}")
    return 0


def cmd_gamma(args) -> int:
    print(f"{gamma_star_star(args.sigma):.6g}")
    return 0


def cmd_selfcheck(args) -> int:
    from .selfcheck import run_selfcheck

    results = run_selfcheck()
    failed = 0
    for name, ok, detail in results:
        if ok:
            print(f"PASS {name}")
        else:
            failed += 1
            print(f"FAIL {name}: {detail}")
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "converge": cmd_converge, "coarsen": cmd_coarsen,
               "gamma": cmd_gamma, "selfcheck": cmd_selfcheck}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"savflow: config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"savflow: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"savflow: invalid value: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"savflow: numerical abort: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
