"""Integrating-factor midpoint stepping shared by both solvers.

The unknowns are kept as a stack of spectral arrays ``U`` of shape
``(ncomp, nx, ny, nz//2+1)``. Diffusion (the full Laplacian with unit
coefficients) is integrated exactly::

    U_half = e^{-k^2 dt/2} (U + dt/2 N(U))
    U_new  = e^{-k^2 dt} U + dt e^{-k^2 dt/2} N(U_half)

where ``N`` is the projected explicit tendency.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import spectral as sp
from .errors import BlowUp, CFLViolation
from .spectral import Grid

log = logging.getLogger(__name__)


@dataclass
class StepInfo:
    speeds: tuple[float, float, float]
    parity_drift: float = 0.0


class SpectralStepper:
    """Base class; subclasses provide the tendency and the constraint cleanup."""

    parities: tuple[str, ...] = ()
    energy_weights: tuple[float, ...] = ()

    def __init__(self, grid: Grid):
        self.grid = grid
        self._factor_cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    # -- to be provided by subclasses ------------------------------------

    def tendency(self, U: np.ndarray) -> tuple[np.ndarray, tuple[float, float, float]]:
        raise NotImplementedError

    def clean(self, U: np.ndarray) -> np.ndarray:
        """Re-impose the linear constraints on a state (idempotent)."""
        return U

    def max_dt(self, speeds, cfl_safety: float) -> float:
        dx, dy, dz = self.grid.spacing
        bounds = [h / s for h, s in zip((dx, dy, dz), speeds) if s > 0]
        return cfl_safety * min(bounds) if bounds else math.inf

    # -- generic pieces --------------------------------------------------

    def factors(self, dt: float):
        if dt not in self._factor_cache:
            ksq = self.grid.ksq
            self._factor_cache[dt] = (np.exp(-ksq * dt), np.exp(-ksq * (0.5 * dt)))
        return self._factor_cache[dt]

    def project_parity(self, U: np.ndarray, measure: bool = False) -> tuple[np.ndarray, float]:
        g = self.grid
        out = np.empty_like(U)
        drift = 0.0
        for i, parity in enumerate(self.parities):
            out[i] = sp.parity_hat(g, U[i], parity)
            if measure:
                drift = max(drift, float(np.max(np.abs(sp.inv(g, U[i] - out[i])))))
        return out, drift

    def step(self, U: np.ndarray, dt: float, cfl_safety: Optional[float] = None, measure: bool = False):
        E, Eh = self.factors(dt)
        N0, speeds = self.tendency(U)
        if cfl_safety is not None:
            bound = self.max_dt(speeds, cfl_safety)
            if dt > bound * (1.0 + 1e-12):
                raise CFLViolation(dt, bound)
        Uh = self.clean(Eh * (U + (0.5 * dt) * N0))
        N1, _ = self.tendency(Uh)
        Unew = self.clean(E * U + dt * (Eh * N1))
        Unew, drift = self.project_parity(Unew, measure)
        return Unew, StepInfo(speeds, drift)

    def energy(self, U: np.ndarray) -> tuple[float, float]:
        """(E, D) with E = 1/2 sum_i w_i ||U_i||^2 and D = sum_i w_i ||grad U_i||^2."""
        g = self.grid
        E = 0.5 * sum(w * sp.l2sq_hat(g, U[i]) for i, w in enumerate(self.energy_weights))
        D = sum(w * sp.grad_l2sq_hat(g, U[i]) for i, w in enumerate(self.energy_weights))
        return E, D


@dataclass
class Trajectory:
    """Recorded output of a run.

    ``cum_dissipation`` is the trapezoidal integral of D accumulated at every
    time step (not only at records), so the energy residual measures the
    integrator rather than the record spacing.
    """

    system: str
    grid: Grid
    tau: Optional[float]
    dt: float
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)
    cum_dissipation: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.times)


def step_count(t_end: float, dt: float) -> int:
    n = int(round(t_end / dt))
    if n < 0 or abs(n * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError(f"t_end={t_end} is not a multiple of dt={dt}")
    return n


def integrate(
    stepper: SpectralStepper,
    U: np.ndarray,
    *,
    dt: float,
    t_end: float,
    record_every: int,
    cfl_safety: Optional[float],
    record: Callable[[np.ndarray, float, float], None],
    t0: float = 0.0,
) -> tuple[np.ndarray, list[tuple[float, float, float, float]]]:
    """March ``U`` to ``t_end`` and call ``record(U, t, drift)`` at record steps.

    Returns the final state and the energy series ``(t, E, D, cumD)`` at records.
    """
    n_steps = step_count(t_end, dt)
    E0, D0 = stepper.energy(U)
    cum = 0.0
    ledger = [(t0, E0, D0, 0.0)]
    record(U, t0, 0.0)
    D_prev = D0
    for n in range(1, n_steps + 1):
        measure = n % record_every == 0 or n == n_steps
        U, info = stepper.step(U, dt, cfl_safety, measure)
        if not np.all(np.isfinite(U)):
            raise BlowUp(f"non-finite values at t={t0 + n * dt:.6g}")
        E1, D1 = stepper.energy(U)
        cum += 0.5 * dt * (D_prev + D1)
        D_prev = D1
        if measure:
            t = t0 + n * dt
            ledger.append((t, E1, D1, cum))
            record(U, t, info.parity_drift)
    return U, ledger


def advection_terms(grid: Grid, velocity, fields_hat) -> list[np.ndarray]:
    """Dealiased spectral coefficients of (u . grad) f for each f in ``fields_hat``.

    ``velocity`` holds the physical (u1, u2, w) samples.
    """
    u1, u2, uw = velocity
    mask = grid.dealias_mask
    out = []
    for c in fields_hat:
        a = u1 * sp.inv(grid, grid.ikx * c)
        a += u2 * sp.inv(grid, grid.iky * c)
        a += uw * sp.inv(grid, grid.ikz * c)
        out.append(mask * sp.fwd(grid, a))
    return out


def max_speeds(velocity) -> tuple[float, float, float]:
    return tuple(float(np.max(np.abs(u))) for u in velocity)
