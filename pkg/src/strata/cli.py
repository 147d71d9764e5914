"""Command-line entry point: ``strata <command> [options]``.

Exit status is 0 on success, 1 on invalid input (bad flags, config or data)
and 2 when a run fails numerically.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from . import spectral as sp
from .boussinesq import BoussinesqConfig, run_boussinesq
from .config import load_config
from .diagnostics import energy_balance, write_diagnostics_csv, write_ledger_csv
from .errors import NumericalFailure, StrataError
from .harness import Spectrum, SweepConfig, fit_rate, generate_initial_data, run_tau_sweep, write_report
from .io import read_snapshot, write_snapshot
from .pe import PEConfig, run_pe
from .plotting import plot_csv, plot_report
from .spectral import Field, Grid

log = logging.getLogger("strata")

SNAPSHOT_NAMES = ("v1", "v2", "rho")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# direct flags and the config keys they set
FLAG_KEYS = {
    "n": "grid.n",
    "taus": "sweep.taus",
    "workers": "sweep.workers",
    "tau": "run.tau",
    "T": "time.T",
    "dt": "time.dt",
    "record_every": "time.record_every",
    "cfl_safety": "time.cfl_safety",
    "seed": "ic.seed",
    "decay": "ic.decay",
    "cutoff": "ic.cutoff",
    "amplitude": "ic.amplitude",
    "ic_dir": "ic.dir",
    "out": "out.dir",
}


def _common(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--n", help="grid points per direction")
    p.add_argument("--seed", help="initial-data seed")
    p.add_argument("--decay", help="spectral decay exponent")
    p.add_argument("--cutoff", help="largest initial-data mode index")
    p.add_argument("--amplitude", help="initial sup-norm")
    p.add_argument("--ic-dir", dest="ic_dir", help="read v1/v2/rho snapshots from this directory")
    p.add_argument("--T", dest="T", help="final time")
    p.add_argument("--dt", help="time step")
    p.add_argument("--record-every", dest="record_every", help="steps between records")
    p.add_argument("--cfl-safety", dest="cfl_safety", help="CFL safety factor")
    p.add_argument("--out", "-o", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="strata", description="Boussinesq / primitive-equation hydrostatic-limit toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-ic", help="write random admissible initial data as snapshots")
    _common(p)

    p = sub.add_parser("run-boussinesq", help="integrate the scaled Boussinesq system")
    _common(p)
    p.add_argument("--tau", help="aspect ratio")

    p = sub.add_parser("run-pe", help="integrate the primitive equations")
    _common(p)

    p = sub.add_parser("sweep", help="tau sweep against the primitive equations")
    _common(p)
    p.add_argument("--taus", help="comma-separated decreasing tau values")
    p.add_argument("--workers", help="parallel worker processes")

    p = sub.add_parser("energy-check", help="energy residual of both solvers at dt and dt/2")
    _common(p)
    p.add_argument("--tau", help="aspect ratio for the Boussinesq run")

    p = sub.add_parser("plot", help="render a report or ledger CSV to SVG")
    p.add_argument("csv", help="report.csv or an energy ledger CSV")
    p.add_argument("--output", "-o", help="SVG path (default: next to the CSV)")

    p = sub.add_parser("fit", help="fit a log-log slope to a tau/error CSV")
    p.add_argument("csv")
    p.add_argument("--column", help="error column (default: l2_sup, else the second column)")
    return parser


def _settings(args) -> dict:
    overrides = list(args.set)
    for attr, key in FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides.append(f"{key}={value}")
    return load_config(args.config, overrides)


def _initial(cfg):
    if cfg["ic.dir"]:
        d = Path(cfg["ic.dir"])
        fields = [read_snapshot(d / f"{name}.bin")[0] for name in SNAPSHOT_NAMES]
        return (fields[0], fields[1]), fields[2]
    spectrum = Spectrum(cfg["ic.decay"], cfg["ic.cutoff"], cfg["ic.amplitude"])
    return generate_initial_data(cfg["ic.seed"], spectrum, Grid.cube(cfg["grid.n"]))


def _out(cfg) -> Path:
    out = Path(cfg["out.dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _substeps(cfg, tau) -> int:
    cap = cfg["time.cfl_safety"] * 0.5 * tau
    return max(1, math.ceil(cfg["time.dt"] / cap - 1e-12))


def _boussinesq(cfg, initial, tau, dt=None, capture=None):
    m = _substeps(cfg, tau) if dt is None else 1
    config = BoussinesqConfig(
        tau=tau,
        dt=(dt or cfg["time.dt"]) / m,
        t_end=cfg["time.T"],
        record_every=cfg["time.record_every"] * m,
        cfl_safety=cfg["time.cfl_safety"],
    )
    return run_boussinesq(config, initial, on_record=capture, keep_states=False)


def _pe(cfg, initial, dt=None, capture=None):
    config = PEConfig(
        dt=dt or cfg["time.dt"],
        t_end=cfg["time.T"],
        record_every=cfg["time.record_every"],
        cfl_safety=cfg["time.cfl_safety"],
    )
    return run_pe(config, initial, on_record=capture, keep_states=False)


def cmd_gen_ic(args) -> int:
    cfg = _settings(args)
    (v1, v2), rho = _initial(cfg)
    out = _out(cfg)
    for name, f in zip(SNAPSHOT_NAMES, (v1, v2, rho)):
        write_snapshot(out / f"{name}.bin", f)
    print(f"wrote {', '.join(n + '.bin' for n in SNAPSHOT_NAMES)} to {out}")
    return 0


def _finish_run(cfg, traj, last, tau):
    out = _out(cfg)
    g = traj.grid
    ledger = energy_balance(traj)
    write_ledger_csv(ledger, out / "energy_ledger.csv")
    write_diagnostics_csv(traj, out / "diagnostics.csv")
    t, U = last
    for name, c, parity in zip(("v1", "v2", "w", "rho"), U, ("even", "even", "odd", "odd")):
        write_snapshot(out / f"final_{name}.bin", Field(g, sp.inv(g, c), parity), time=t, tau=tau)
    print(f"{traj.system}: t={t:g} records={len(traj)} E={ledger.E[-1]:.6e} "
          f"relative_residual={ledger.relative_residual:.3e}")
    return 0


def cmd_run_boussinesq(args) -> int:
    cfg = _settings(args)
    last = {}
    tau = cfg["run.tau"]
    traj = _boussinesq(cfg, _initial(cfg), tau, capture=lambda t, U: last.update(state=(t, U.copy())))
    return _finish_run(cfg, traj, last["state"], tau)


def cmd_run_pe(args) -> int:
    cfg = _settings(args)
    last = {}
    traj = _pe(cfg, _initial(cfg), capture=lambda t, U: last.update(state=(t, U.copy())))
    return _finish_run(cfg, traj, last["state"], 0.0)


def cmd_sweep(args) -> int:
    cfg = _settings(args)
    config = SweepConfig(
        taus=cfg["sweep.taus"],
        n=cfg["grid.n"],
        T=cfg["time.T"],
        dt=cfg["time.dt"],
        record_every=cfg["time.record_every"],
        seed=cfg["ic.seed"],
        decay=cfg["ic.decay"],
        cutoff=cfg["ic.cutoff"],
        amplitude=cfg["ic.amplitude"],
        cfl_safety=cfg["time.cfl_safety"],
        workers=cfg["sweep.workers"],
        out_dir=cfg["out.dir"],
    )
    report = run_tau_sweep(config)
    out = write_report(report, config.out_dir)
    plot_report(out / "report.csv", out / "report.svg")
    for r in report.results:
        status = "ok" if r.completed else f"incomplete ({r.message})"
        print(f"tau={r.tau:g} l2_sup={r.norms.l2_sup:.4e} h1_sup={r.norms.h1_sup:.4e} {status}")
    for name, fit in report.slopes.items():
        print(f"slope {name}: " + ("n/a" if fit is None else f"{fit.slope:.3f}"))
    print(f"wrote {out}")
    return 0


def cmd_energy_check(args) -> int:
    cfg = _settings(args)
    initial = _initial(cfg)
    dt = cfg["time.dt"]
    tau = cfg["run.tau"]
    summary = {}
    for system in ("boussinesq", "pe"):
        res = []
        for h in (dt, dt / 2):
            cfg_h = dict(cfg, **{"time.record_every": cfg["time.record_every"] * round(dt / h)})
            traj = _boussinesq(cfg_h, initial, tau, dt=h) if system == "boussinesq" else _pe(cfg_h, initial, dt=h)
            res.append(energy_balance(traj).relative_residual)
        ratio = res[0] / res[1] if res[1] > 0 else float("inf")
        summary[system] = {"dt": dt, "residual": res[0], "residual_half_dt": res[1], "ratio": ratio}
        print(f"{system}: residual(dt={dt:g})={res[0]:.3e} residual(dt/2)={res[1]:.3e} ratio={ratio:.2f}")
    out = _out(cfg)
    (out / "energy_check.json").write_text(json.dumps(summary, indent=2))
    return 0


def cmd_plot(args) -> int:
    src = Path(args.csv)
    if not src.exists():
        raise StrataError(f"{src} not found")
    dst = Path(args.output) if args.output else src.with_suffix(".svg")
    plot_csv(src, dst)
    print(f"wrote {dst}")
    return 0


def cmd_fit(args) -> int:
    src = Path(args.csv)
    if not src.exists():
        raise StrataError(f"{src} not found")
    with src.open() as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        fields = reader.fieldnames or []
    if "tau" not in fields:
        raise StrataError(f"{src}: no 'tau' column")
    column = args.column or ("l2_sup" if "l2_sup" in fields else next((f for f in fields if f != "tau"), None))
    if column not in fields:
        raise StrataError(f"{src}: no column {column!r}")
    if "completed" in fields:
        rows = [r for r in rows if int(r["completed"])]
    fit = fit_rate([(float(r["tau"]), float(r[column])) for r in rows])
    print(f"slope {fit.slope:.3f}")
    print(f"intercept {fit.intercept:.6g} residual {fit.residual:.3e}")
    return 0


COMMANDS = {
    "gen-ic": cmd_gen_ic,
    "run-boussinesq": cmd_run_boussinesq,
    "run-pe": cmd_run_pe,
    "sweep": cmd_sweep,
    "energy-check": cmd_energy_check,
    "plot": cmd_plot,
    "fit": cmd_fit,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (StrataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
