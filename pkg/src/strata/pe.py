"""Viscous primitive equations with density stratification.

Only (v, rho) are prognostic. With w = -int_0^z div_h v and
p = p_gamma - int_0^z rho the system reads::

    d_t v - Lap v + (v . grad_h) v + w d_z v + grad_h p_gamma - int_0^z grad_h rho = 0
    d_t rho - Lap rho + v . grad_h rho + w d_z rho - w = 0

The surface pressure p_gamma is whatever keeps the vertical mean of v
horizontally divergence free; the stepper obtains it by projecting the
vertical mean of the velocity tendency.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import spectral as sp
from .boussinesq import check_initial
from .errors import BlowUp, ConfigError
from .fields import PEState, hdiv_hat, vertical_mean_defect, vint_hat
from .spectral import Field, Grid
from .stepping import SpectralStepper, Trajectory, advection_terms, integrate, max_speeds

log = logging.getLogger(__name__)

PARITY = ("even", "even", "odd")
INGEST_PARITY_WARN = 1e-8


@dataclass
class PEConfig:
    dt: float = 1e-3
    t_end: float = 0.25
    record_every: int = 10
    cfl_safety: float = 0.5

    def __post_init__(self):
        if self.dt <= 0 or self.t_end < 0:
            raise ConfigError("dt must be positive and t_end nonnegative")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if not 0 < self.cfl_safety <= 1:
            raise ConfigError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")


@dataclass
class PETendency:
    v: tuple[Field, Field]
    rho: Field
    p_gamma: Field


class PEStepper(SpectralStepper):
    parities = PARITY
    energy_weights = (1.0, 1.0, 1.0)

    def __init__(self, grid: Grid):
        super().__init__(grid)
        kx = grid.ikx[:, :, 0]
        ky = grid.iky[:, :, 0]
        self._ikx2, self._iky2 = kx, ky
        denom = np.broadcast_to((kx**2 + ky**2).real, grid.shape2)
        self._inv_lap_h = np.zeros(grid.shape2)
        nz = denom != 0
        self._inv_lap_h[nz] = 1.0 / denom[nz]

    def w_hat(self, U) -> np.ndarray:
        return -vint_hat(self.grid, hdiv_hat(self.grid, U[0], U[1]), check=False)

    def barotropic(self, V):
        """Remove grad_h q from (V1, V2) so their vertical mean is divergence free."""
        V = V.copy()
        m1, m2 = V[0, :, :, 0], V[1, :, :, 0]
        q = (self._ikx2 * m1 + self._iky2 * m2) * self._inv_lap_h
        V[0, :, :, 0] = m1 - self._ikx2 * q
        V[1, :, :, 0] = m2 - self._iky2 * q
        return V, q

    def raw_tendency(self, U):
        g = self.grid
        w = self.w_hat(U)
        velocity = (sp.inv(g, U[0]), sp.inv(g, U[1]), sp.inv(g, w))
        A = advection_terms(g, velocity, U)
        I = vint_hat(g, U[2], check=False)
        G = np.empty_like(U)
        G[0] = -A[0] + g.ikx * I
        G[1] = -A[1] + g.iky * I
        G[2] = -A[2] + w
        return G, velocity

    def tendency(self, U):
        G, velocity = self.raw_tendency(U)
        G[:2], _ = self.barotropic(G[:2])
        return G, max_speeds(velocity)

    def surface_pressure(self, U) -> np.ndarray:
        """p_gamma in the full 2D (x, y) Fourier layout."""
        G, _ = self.raw_tendency(U)
        return self.barotropic(G[:2])[1]

    def clean(self, U):
        U = U.copy()
        U[:2], _ = self.barotropic(U[:2])
        return U

    def diagnostics(self, U, pg_full):
        g = self.grid
        div_h = hdiv_hat(g, U[0], U[1])
        w = -vint_hat(g, div_h, check=False)
        div3 = float(np.max(np.abs(sp.inv(g, div_h + g.ikz * w))))
        baro = vertical_mean_defect(g, div_h)
        p = -vint_hat(g, U[2], check=False)
        p[:, :, 0] += pg_full
        hydro = float(np.sqrt(sp.l2sq_hat(g, g.ikz * p + U[2])))
        return w, p, max(div3, baro), hydro


@lru_cache(maxsize=8)
def stepper_for(grid: Grid) -> PEStepper:
    return PEStepper(grid)


def _half(grid: Grid, full2: np.ndarray) -> np.ndarray:
    return full2[:, : grid.ny // 2 + 1]


def _stack(state: PEState) -> np.ndarray:
    g = state.grid
    return np.stack([sp.fwd(g, f.values) for f in (*state.v, state.rho)])


def _state(grid: Grid, U, time: float, drift: float = 0.0) -> PEState:
    st = stepper_for(grid)
    pg = st.surface_pressure(U)
    w, p, _, _ = st.diagnostics(U, pg)
    comps = [Field(grid, sp.inv(grid, U[i]), PARITY[i]) for i in range(3)]
    return PEState(
        (comps[0], comps[1]),
        comps[2],
        time,
        w=Field(grid, sp.inv(grid, w), "odd"),
        p=Field(grid, sp.inv(grid, p), "even"),
        p_gamma=Field(grid, sp.inv(grid, _half(grid, pg))),
        parity_drift=drift,
    )


def with_diagnostics(state: PEState) -> PEState:
    """Copy of ``state`` with w, p and p_gamma (re)diagnosed."""
    return _state(state.grid, _stack(state), state.time, state.parity_drift)


def compute_rhs_pe(state: PEState) -> PETendency:
    """Explicit tendencies of (v, rho) including grad_h p_gamma; diffusion excluded."""
    g = state.grid
    st = stepper_for(g)
    G, _ = st.raw_tendency(_stack(state))
    G[:2], q = st.barotropic(G[:2])
    F = [Field(g, sp.inv(g, G[i]), PARITY[i]) for i in range(3)]
    return PETendency((F[0], F[1]), F[2], Field(g, sp.inv(g, _half(g, q))))


def solve_surface_pressure(state: PEState) -> Field:
    """p_gamma from its own elliptic problem (flux form of the advection).

    -Lap_h p_gamma = 1/2 int_{-1}^{1} div_h [div_h (v (x) v) - int_0^z grad_h rho] dz,
    with zero mean over the horizontal torus.
    """
    g = state.grid
    v = [f.values for f in state.v]
    mask = g.dealias_mask
    flux = [[mask * sp.fwd(g, v[i] * v[j]) for j in range(2)] for i in range(2)]
    I = vint_hat(g, sp.fwd(g, state.rho.values))
    F = [g.ikx * flux[i][0] + g.iky * flux[i][1] for i in range(2)]
    F[0] = F[0] - g.ikx * I
    F[1] = F[1] - g.iky * I
    rhs3 = hdiv_hat(g, F[0], F[1])
    # vertical mean = kz=0 plane; 1/2 int_{-1}^{1} dz is exactly this mean
    rhs = sp.SpectralField(g, _half(g, rhs3[:, :, 0]))
    return sp.transform(sp.solve_horizontal_poisson_zero_mean(rhs), "inverse")


def barotropic_project(v) -> tuple[Field, Field]:
    """Subtract grad_h q so that int_{-1}^{1} div_h v dz = 0."""
    g = v[0].grid
    st = stepper_for(g)
    V = np.stack([sp.fwd(g, f.values) for f in v])
    V, _ = st.barotropic(V)
    return tuple(Field(g, sp.inv(g, V[i]), f.parity) for i, f in enumerate(v))


def step_pe(state: PEState, dt: float, cfl_safety: Optional[float] = 0.5) -> PEState:
    st = stepper_for(state.grid)
    U, info = st.step(st.clean(_stack(state)), dt, cfl_safety, measure=True)
    if not np.all(np.isfinite(U)):
        raise BlowUp(f"non-finite values after step at t={state.time + dt:.6g}")
    return _state(state.grid, U, state.time + dt, info.parity_drift)


def ingest(v0, rho0: Field):
    """Project even contamination out of rho0 (warning when it is not negligible)."""
    odd = sp.parity_project(rho0, "odd")
    defect = float(np.max(np.abs(rho0.values - odd.values)))
    if defect > INGEST_PARITY_WARN * max(1.0, float(np.max(np.abs(rho0.values)))):
        log.warning("initial density had an even component of size %.3e; removed", defect)
    return tuple(v0), odd


def run_pe(
    config: PEConfig,
    initial,
    on_record: Optional[Callable[[float, np.ndarray], None]] = None,
    keep_states: bool = True,
) -> Trajectory:
    """Integrate from ``initial`` = (v0, rho0) or a PEState.

    ``on_record(t, U)`` receives the spectral stack (v1, v2, w, rho).
    """
    if isinstance(initial, PEState):
        v0, rho0 = initial.v, initial.rho
    else:
        v0, rho0 = initial
    v0, rho0 = ingest(v0, rho0)
    check_initial(v0, rho0)
    g = rho0.grid
    st = stepper_for(g)
    U0 = np.stack([sp.fwd(g, f.values) for f in (*v0, rho0)])
    traj = Trajectory("pe", g, None, config.dt)

    def record(U, t, drift):
        pg = st.surface_pressure(U)
        w, p, div, hydro = st.diagnostics(U, pg)
        traj.times.append(t)
        traj.rows.append(
            {
                "time": t,
                "div_max": div,
                "parity_defect": drift,
                "hydrostatic_residual": hydro,
                "v_mean": float(max(abs(U[0, 0, 0, 0]), abs(U[1, 0, 0, 0]))),
            }
        )
        if keep_states:
            comps = [Field(g, sp.inv(g, U[i]), PARITY[i]) for i in range(3)]
            traj.states.append(
                PEState(
                    (comps[0], comps[1]),
                    comps[2],
                    t,
                    w=Field(g, sp.inv(g, w), "odd"),
                    p=Field(g, sp.inv(g, p), "even"),
                    p_gamma=Field(g, sp.inv(g, _half(g, pg))),
                    parity_drift=drift,
                )
            )
        if on_record is not None:
            on_record(t, np.stack([U[0], U[1], w, U[2]]))

    _, ledger = integrate(
        st,
        U0,
        dt=config.dt,
        t_end=config.t_end,
        record_every=config.record_every,
        cfl_safety=config.cfl_safety,
        record=record,
    )
    for row, (t, E, D, cum) in zip(traj.rows, ledger):
        row.update(E=E, D=D, cumD=cum)
        traj.energy.append(E)
        traj.dissipation.append(D)
        traj.cum_dissipation.append(cum)
    return traj
