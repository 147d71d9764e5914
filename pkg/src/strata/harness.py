"""Initial data, the aspect-ratio sweep and log-log rate fitting."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import spectral as sp
from .boussinesq import BoussinesqConfig, run_boussinesq
from .diagnostics import LEDGER_COLUMNS, DIAGNOSTIC_COLUMNS, energy_balance
from .errors import ConfigError, NumericalFailure
from .fields import DifferenceNorms, difference_sample
from .pe import PEConfig, run_pe
from .pe import stepper_for as pe_stepper
from .spectral import Field, Grid

log = logging.getLogger(__name__)

REPORT_COLUMNS = ("tau", "l2_sup", "l2_dissip_int", "h1_sup", "h1_dissip_int", "completed")


@dataclass(frozen=True)
class Spectrum:
    """Random-phase spectrum with amplitude (1 + |k|^2)^(-decay/2) for |n_i| <= cutoff."""

    decay: float = 4.0
    cutoff: int = 8
    amplitude: float = 1.0


def generate_initial_data(seed: int, spectrum: Spectrum, grid: Grid):
    """Band-limited admissible (v0, rho0).

    v0 is even in z with zero mean and a horizontally divergence-free vertical
    mean; rho0 is odd in z. Both are scaled to sup-norm ``spectrum.amplitude``.
    """
    if 3 * spectrum.cutoff >= min(grid.shape):
        raise ValueError(
            f"cutoff {spectrum.cutoff} exceeds the dealiasing limit for grid {grid.shape}"
        )
    rng = np.random.default_rng(seed)
    g = grid
    nx = np.abs(g.nxi)[:, None, None]
    ny = np.abs(g.nyi)[None, :, None]
    nz = g.nzi[None, None, :]
    band = (nx <= spectrum.cutoff) & (ny <= spectrum.cutoff) & (nz <= spectrum.cutoff)
    envelope = band * (1.0 + g.ksq) ** (-spectrum.decay / 2.0)

    comps = []
    for parity in ("even", "even", "odd"):
        noise = rng.standard_normal(g.spectral_shape) + 1j * rng.standard_normal(g.spectral_shape)
        c = sp.fwd(g, sp.inv(g, envelope * noise))
        comps.append(sp.parity_hat(g, c, parity))
    U = np.stack(comps)
    U[0, 0, 0, 0] = 0.0
    U[1, 0, 0, 0] = 0.0
    U[:2], _ = pe_stepper(g).barotropic(U[:2])

    # symmetrizing samples in physical space makes the parities hold bit-for-bit
    vals = [sp.parity_project(Field(g, sp.inv(g, c)), p).values for c, p in zip(U, ("even", "even", "odd"))]
    vmax = max(float(np.max(np.abs(vals[0]))), float(np.max(np.abs(vals[1]))))
    rmax = float(np.max(np.abs(vals[2])))
    a = spectrum.amplitude
    v0 = (
        Field(g, vals[0] * (a / vmax if vmax > 0 else 0.0), "even"),
        Field(g, vals[1] * (a / vmax if vmax > 0 else 0.0), "even"),
    )
    rho0 = Field(g, vals[2] * (a / rmax if rmax > 0 else 0.0), "odd")
    return v0, rho0


@dataclass
class RateFit:
    slope: float
    intercept: float
    residual: float


def fit_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """Least-squares line through (log tau, log error)."""
    if len(points) < 3:
        raise ValueError(f"need at least 3 points, got {len(points)}")
    tau = np.array([p[0] for p in points], dtype=float)
    err = np.array([p[1] for p in points], dtype=float)
    if np.any(tau <= 0) or np.any(err <= 0):
        raise ValueError("tau and error values must be positive")
    if np.ptp(tau) == 0:
        raise ValueError("all tau values are equal")
    x, y = np.log(tau), np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    return RateFit(float(slope), float(intercept), residual)


# ---------------------------------------------------------------------------
# sweep


@dataclass
class SweepConfig:
    taus: tuple = (0.2, 0.1, 0.05, 0.025)
    n: int = 32
    T: float = 0.25
    dt: float = 1e-3
    record_every: int = 5
    seed: int = 0
    decay: float = 4.0
    cutoff: int = 8
    amplitude: float = 1.0
    cfl_safety: float = 0.5
    workers: int = 1
    out_dir: Optional[str] = None

    def __post_init__(self):
        self.taus = tuple(float(t) for t in self.taus)
        if not self.taus:
            raise ConfigError("sweep.taus is empty")
        if any(t <= 0 for t in self.taus):
            raise ConfigError("all tau values must be positive")
        if any(a <= b for a, b in zip(self.taus, self.taus[1:])):
            raise ConfigError("sweep.taus must be strictly decreasing")
        if self.T <= 0:
            raise ConfigError("time.T must be positive")
        if self.dt <= 0 or self.record_every < 1:
            raise ConfigError("time.dt must be positive and time.record_every >= 1")
        self.record_interval  # validates T against the record spacing

    @property
    def grid(self) -> Grid:
        return Grid.cube(self.n)

    @property
    def spectrum(self) -> Spectrum:
        return Spectrum(self.decay, self.cutoff, self.amplitude)

    @property
    def record_interval(self) -> float:
        interval = self.record_every * self.dt
        k = self.T / interval
        if abs(k - round(k)) > 1e-9:
            raise ConfigError(f"time.T={self.T} is not a multiple of the record interval {interval}")
        return interval

    def substeps(self, tau: float) -> int:
        """Substeps per base step so that dt obeys the buoyancy cap at this tau."""
        cap = self.cfl_safety * 0.5 * tau
        return max(1, math.ceil(self.dt / cap - 1e-12))


@dataclass
class TauResult:
    tau: float
    dt: float
    completed: bool
    norms: DifferenceNorms
    hydrostatic: list = field(default_factory=list)
    invariants: dict = field(default_factory=dict)
    ledger_rows: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    message: str = ""

    @property
    def hydrostatic_mean(self) -> float:
        t = self.norms.times
        h = self.hydrostatic
        if len(t) < 2:
            return float(h[0]) if h else float("nan")
        integral = float(np.sum(0.5 * np.diff(t) * (np.asarray(h[1:]) + np.asarray(h[:-1]))))
        return integral / (t[-1] - t[0])

    def row(self) -> dict:
        n = self.norms
        return {
            "tau": self.tau,
            "l2_sup": n.l2_sup,
            "l2_dissip_int": n.grad_l2_integral,
            "h1_sup": n.h1_sup,
            "h1_dissip_int": n.grad_h1_integral,
            "completed": int(self.completed),
        }


@dataclass
class ConvergenceReport:
    results: list
    slopes: dict
    metadata: dict
    pe_invariants: dict = field(default_factory=dict)
    pe_ledger_rows: list = field(default_factory=list)
    pe_diagnostics: list = field(default_factory=list)

    def completed(self) -> list:
        return [r for r in self.results if r.completed]

    @property
    def largest_completed_tau(self) -> Optional[float]:
        done = [r.tau for r in self.completed()]
        return max(done) if done else None

    def to_json(self) -> dict:
        return {
            "metadata": self.metadata,
            "slopes": {k: (asdict(v) if v is not None else None) for k, v in self.slopes.items()},
            "largest_completed_tau": self.largest_completed_tau,
            "pe_invariants": self.pe_invariants,
            "taus": [
                {
                    **r.row(),
                    "dt": r.dt,
                    "sqrt_l2_dissip_int": math.sqrt(r.norms.grad_l2_integral),
                    "sqrt_h1_dissip_int": math.sqrt(r.norms.grad_h1_integral),
                    "hydrostatic_mean": r.hydrostatic_mean,
                    "invariants": r.invariants,
                    "message": r.message,
                }
                for r in self.results
            ],
        }


SLOPE_QUANTITIES = {
    "l2_sup": lambda r: r.norms.l2_sup,
    "l2_dissip_sqrt": lambda r: math.sqrt(r.norms.grad_l2_integral),
    "h1_sup": lambda r: r.norms.h1_sup,
    "h1_dissip_sqrt": lambda r: math.sqrt(r.norms.grad_h1_integral),
    "hydrostatic_mean": lambda r: r.hydrostatic_mean,
}


def _invariant_summary(rows) -> dict:
    return {
        "div_max": max(r["div_max"] for r in rows),
        "parity_defect": max(r["parity_defect"] for r in rows),
        "v_mean": max(r["v_mean"] for r in rows),
    }


def _run_one_tau(tau, config: SweepConfig, initial, pe_records) -> TauResult:
    m = config.substeps(tau)
    dt = config.dt / m
    grid = config.grid
    norms = DifferenceNorms()
    idx = [0]

    def on_record(t, U):
        k = idx[0]
        t_pe, P = pe_records[k]
        if abs(t - t_pe) > 1e-10:
            raise RuntimeError(f"record times diverged: {t} vs {t_pe}")
        norms.extend(difference_sample(grid, tau, U, P, t))
        idx[0] += 1

    bcfg = BoussinesqConfig(
        tau=tau, dt=dt, t_end=config.T, record_every=config.record_every * m, cfl_safety=config.cfl_safety
    )
    try:
        traj = run_boussinesq(bcfg, initial, on_record=on_record, keep_states=False)
    except NumericalFailure as exc:
        log.warning("tau=%g did not complete: %s", tau, exc)
        return TauResult(tau, dt, False, norms, message=str(exc))
    ledger = energy_balance(traj)
    return TauResult(
        tau,
        dt,
        True,
        norms,
        hydrostatic=[r["hydrostatic_residual"] for r in traj.rows],
        invariants=_invariant_summary(traj.rows),
        ledger_rows=list(ledger.rows()),
        diagnostics=traj.rows,
    )


def run_tau_sweep(config: SweepConfig) -> ConvergenceReport:
    """PE once, Boussinesq per tau from the same data; difference norms at shared records."""
    grid = config.grid
    initial = generate_initial_data(config.seed, config.spectrum, grid)
    pe_records = []
    pe_traj = run_pe(
        PEConfig(dt=config.dt, t_end=config.T, record_every=config.record_every, cfl_safety=config.cfl_safety),
        initial,
        on_record=lambda t, U: pe_records.append((t, U.copy())),
        keep_states=False,
    )
    if config.workers > 1 and len(config.taus) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_one_tau, tau, config, initial, pe_records) for tau in config.taus]
            results = [f.result() for f in futures]
    else:
        results = [_run_one_tau(tau, config, initial, pe_records) for tau in config.taus]

    done = [r for r in results if r.completed]
    slopes = {}
    for name, fn in SLOPE_QUANTITIES.items():
        if len(done) >= 3:
            slopes[name] = fit_rate([(r.tau, fn(r)) for r in done])
        else:
            slopes[name] = None
    metadata = {
        "grid": list(grid.shape),
        "T": config.T,
        "seed": config.seed,
        "decay": config.decay,
        "cutoff": config.cutoff,
        "amplitude": config.amplitude,
        "dt": {str(r.tau): r.dt for r in results},
        "record_interval": config.record_interval,
    }
    if len(done) < 3:
        metadata["fit"] = f"only {len(done)} completed tau values; no slope fitted"
    pe_ledger = energy_balance(pe_traj)
    return ConvergenceReport(
        results,
        slopes,
        metadata,
        pe_invariants=_invariant_summary(pe_traj.rows),
        pe_ledger_rows=list(pe_ledger.rows()),
        pe_diagnostics=pe_traj.rows,
    )


def _tau_tag(tau: float) -> str:
    return f"{tau:g}".replace(".", "p")


def write_report(report: ConvergenceReport, out_dir) -> Path:
    """report.csv, report.json and per-run ledgers/diagnostics in ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "report.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for r in report.results:
            writer.writerow({k: (repr(float(v)) if k != "completed" else v) for k, v in r.row().items()})
    (out / "report.json").write_text(json.dumps(report.to_json(), indent=2))
    _write_rows(out / "energy_ledger_pe.csv", report.pe_ledger_rows, LEDGER_COLUMNS)
    for r in report.results:
        if r.completed:
            tag = _tau_tag(r.tau)
            _write_rows(out / f"energy_ledger_tau{tag}.csv", r.ledger_rows, LEDGER_COLUMNS)
            _write_rows(
                out / f"diagnostics_tau{tag}.csv",
                r.diagnostics,
                DIAGNOSTIC_COLUMNS,
            )
    return out


def _write_rows(path: Path, rows, columns):
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(float(row[k])) for k in columns})


def read_report_csv(path) -> list[dict]:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        out.append({k: (int(v) if k == "completed" else float(v)) for k, v in row.items()})
    return out
