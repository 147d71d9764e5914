"""Scaled Boussinesq solver with anisotropic incompressibility projection.

Equations on [0, 2pi)^2 x [-1, 1), unit diffusion in all directions::

    d_t v - Lap v + (v . grad_h) v + w d_z v + grad_h p = 0
    tau^2 (d_t w - Lap w + v . grad_h w + w d_z w) + d_z p + rho = 0
    d_t rho - Lap rho + v . grad_h rho + w d_z rho - w = 0
    div_h v + d_z w = 0
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from . import spectral as sp
from .errors import BlowUp, ConfigError, ConstraintViolation
from .fields import BoussinesqState, hdiv_hat, vertical_mean_defect, vint_hat
from .spectral import Field, Grid
from .stepping import SpectralStepper, Trajectory, advection_terms, integrate, max_speeds

PARITY = ("even", "even", "odd", "odd")
INITIAL_TOL = 1e-10


@dataclass
class BoussinesqConfig:
    tau: float
    dt: float = 1e-3
    t_end: float = 0.25
    record_every: int = 10
    cfl_safety: float = 0.5
    buoyancy_cap: float = 0.5

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.dt <= 0 or self.t_end < 0:
            raise ConfigError("dt must be positive and t_end nonnegative")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if not 0 < self.cfl_safety <= 1:
            raise ConfigError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        cap = self.cfl_safety * self.buoyancy_cap * self.tau
        if self.dt > cap:
            raise ConfigError(f"dt={self.dt} exceeds the buoyancy cap {cap:.3e} for tau={self.tau}")


@dataclass
class BoussinesqTendency:
    """Explicit tendencies before projection (diffusion excluded)."""

    v: tuple[Field, Field]
    w: Field
    rho: Field


class BoussinesqStepper(SpectralStepper):
    parities = PARITY

    def __init__(self, grid: Grid, tau: float, buoyancy_cap: float = 0.5):
        if tau <= 0:
            raise ValueError(f"tau must be positive, got {tau}")
        super().__init__(grid)
        self.tau = tau
        self.buoyancy_cap = buoyancy_cap
        self.energy_weights = (1.0, 1.0, tau**2, 1.0)
        denom = grid.ikx**2 + grid.iky**2 + grid.ikz**2 / tau**2
        denom = np.broadcast_to(denom, grid.spectral_shape).real
        self._inv_denom = np.zeros(grid.spectral_shape)
        nz = denom != 0
        self._inv_denom[nz] = 1.0 / denom[nz]

    def raw_tendency(self, U):
        g = self.grid
        velocity = tuple(sp.inv(g, U[i]) for i in range(3))
        A = advection_terms(g, velocity, U)
        G = np.empty_like(U)
        G[0] = -A[0]
        G[1] = -A[1]
        G[2] = -A[2] - U[3] / self.tau**2
        G[3] = -A[3] + U[2]
        return G, velocity

    def project(self, G3):
        """Weighted Leray projection of (G1, G2, Gw); returns (projected, p_hat)."""
        g = self.grid
        div = g.ikx * G3[0] + g.iky * G3[1] + g.ikz * G3[2]
        p = div * self._inv_denom
        out = np.empty_like(G3)
        out[0] = G3[0] - g.ikx * p
        out[1] = G3[1] - g.iky * p
        out[2] = G3[2] - g.ikz * p / self.tau**2
        return out, p

    def tendency(self, U):
        G, velocity = self.raw_tendency(U)
        G[:3], _ = self.project(G[:3])
        return G, max_speeds(velocity)

    def pressure(self, U) -> np.ndarray:
        G, _ = self.raw_tendency(U)
        return self.project(G[:3])[1]

    def clean(self, U):
        U = U.copy()
        U[:3], _ = self.project(U[:3])
        return U

    def max_dt(self, speeds, cfl_safety):
        return min(super().max_dt(speeds, cfl_safety), cfl_safety * self.buoyancy_cap * self.tau)

    def divergence_max(self, U) -> float:
        g = self.grid
        return float(np.max(np.abs(sp.inv(g, g.ikx * U[0] + g.iky * U[1] + g.ikz * U[2]))))

    def hydrostatic_residual(self, U, p_hat) -> float:
        return float(np.sqrt(sp.l2sq_hat(self.grid, self.grid.ikz * p_hat + U[3])))


@lru_cache(maxsize=16)
def stepper_for(grid: Grid, tau: float, buoyancy_cap: float = 0.5) -> BoussinesqStepper:
    return BoussinesqStepper(grid, tau, buoyancy_cap)


def _stack(state: BoussinesqState) -> np.ndarray:
    g = state.grid
    return np.stack([sp.fwd(g, f.values) for f in (*state.v, state.w, state.rho)])


def _state(grid: Grid, U, tau: float, time: float, p_hat=None, drift: float = 0.0) -> BoussinesqState:
    comps = [Field(grid, sp.inv(grid, U[i]), PARITY[i]) for i in range(4)]
    p = None if p_hat is None else Field(grid, sp.inv(grid, p_hat), "even")
    return BoussinesqState(
        (comps[0], comps[1]), comps[2], comps[3], tau, time, p, None if p is None else time, drift
    )


def compute_rhs_boussinesq(state: BoussinesqState) -> BoussinesqTendency:
    """Explicit advection and buoyancy tendencies, dealiased, not yet projected."""
    g = state.grid
    G, _ = stepper_for(g, state.tau).raw_tendency(_stack(state))
    F = [Field(g, sp.inv(g, G[i]), PARITY[i]) for i in range(4)]
    return BoussinesqTendency((F[0], F[1]), F[2], F[3])


def project_incompressible(v_star, w_star: Field, tau: float, dt: float):
    """Make a tentative velocity divergence free with the tau-weighted projection.

    Solves (Lap_h + tau^-2 d_zz) p = (div_h v* + d_z w*) / dt and returns
    ``(v, w, p)`` with v = v* - dt grad_h p and w = w* - (dt / tau^2) d_z p.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    g = w_star.grid
    st = stepper_for(g, tau)
    U3 = np.stack([sp.fwd(g, f.values) for f in (*v_star, w_star)])
    out, p = st.project(U3)
    p = p / dt
    fields = [Field(g, sp.inv(g, out[i]), f.parity) for i, f in enumerate((*v_star, w_star))]
    return (fields[0], fields[1]), fields[2], Field(g, sp.inv(g, p), "even")


def step_boussinesq(state: BoussinesqState, dt: float, cfl_safety: Optional[float] = 0.5) -> BoussinesqState:
    """Advance one integrating-factor midpoint step; the returned state carries p."""
    st = stepper_for(state.grid, state.tau)
    U, info = st.step(_stack(state), dt, cfl_safety, measure=True)
    if not np.all(np.isfinite(U)):
        raise BlowUp(f"non-finite values after step at t={state.time + dt:.6g}")
    return _state(state.grid, U, state.tau, state.time + dt, st.pressure(U), info.parity_drift)


def check_initial(v0, rho0: Field, tol: float = INITIAL_TOL) -> None:
    """Raise ConstraintViolation unless (v0, rho0) satisfy the parity, mean and barotropic conditions."""
    g = rho0.grid
    scale = max(1.0, *(float(np.max(np.abs(f.values))) for f in (*v0, rho0)))
    for name, f, parity in (("v1", v0[0], "even"), ("v2", v0[1], "even"), ("rho", rho0, "odd")):
        f = Field(g, f.values, parity)
        if f.parity_defect() > tol * scale:
            raise ConstraintViolation(f"initial {name} is not {parity} in z")
        if abs(float(np.mean(f.values))) > tol * scale:
            raise ConstraintViolation(f"initial {name} has nonzero mean")
    c1, c2 = (sp.fwd(g, f.values) for f in v0)
    if vertical_mean_defect(g, g.ikx * c1 + g.iky * c2) > tol * scale:
        raise ConstraintViolation("initial v violates the barotropic constraint")


def run_boussinesq(
    config: BoussinesqConfig,
    initial,
    on_record: Optional[Callable[[float, np.ndarray], None]] = None,
    keep_states: bool = True,
) -> Trajectory:
    """Integrate from ``initial`` = (v0, rho0) or a full BoussinesqState.

    ``on_record(t, U)`` receives the spectral stack (v1, v2, w, rho) at each
    record time.
    """
    if isinstance(initial, BoussinesqState):
        v0, rho0, w0 = initial.v, initial.rho, initial.w
    else:
        (v0, rho0), w0 = initial, None
    check_initial(v0, rho0)
    g = rho0.grid
    tau = config.tau
    st = stepper_for(g, tau, config.buoyancy_cap)
    c1, c2 = (sp.fwd(g, f.values) for f in v0)
    # w0 stays spectral so it is bit-identical to the PE diagnosis of the same v0
    w_hat = -vint_hat(g, hdiv_hat(g, c1, c2)) if w0 is None else sp.fwd(g, w0.values)
    U0 = np.stack([c1, c2, w_hat, sp.fwd(g, rho0.values)])
    traj = Trajectory("boussinesq", g, tau, config.dt)

    def record(U, t, drift):
        p_hat = st.pressure(U)
        traj.times.append(t)
        traj.rows.append(
            {
                "time": t,
                "div_max": st.divergence_max(U),
                "parity_defect": drift,
                "hydrostatic_residual": st.hydrostatic_residual(U, p_hat),
                "v_mean": float(max(abs(U[0, 0, 0, 0]), abs(U[1, 0, 0, 0]))),
            }
        )
        if keep_states:
            traj.states.append(_state(g, U, tau, t, p_hat, drift))
        if on_record is not None:
            on_record(t, U)

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
