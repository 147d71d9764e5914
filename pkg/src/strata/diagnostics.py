"""Energy ledgers, hydrostatic residuals and the advection/pressure cancellation checks."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from . import spectral as sp
from .fields import BoussinesqState, PEState, hdiv_hat, vint_hat
from .stepping import Trajectory, advection_terms

LEDGER_COLUMNS = ("time", "E", "D", "cumD", "residual")
DIAGNOSTIC_COLUMNS = ("time", "E", "D", "div_max", "parity_defect", "hydrostatic_residual")


@dataclass
class EnergyLedger:
    system: str
    times: list = field(default_factory=list)
    E: list = field(default_factory=list)
    D: list = field(default_factory=list)
    cumD: list = field(default_factory=list)
    residual: list = field(default_factory=list)

    @property
    def final_residual(self) -> float:
        return self.residual[-1] if self.residual else 0.0

    @property
    def relative_residual(self) -> float:
        """|E(T) - E(0) + int_0^T D dt| / E(0)."""
        if not self.E or self.E[0] == 0:
            return 0.0
        return abs(self.final_residual) / self.E[0]

    def rows(self):
        for row in zip(self.times, self.E, self.D, self.cumD, self.residual):
            yield dict(zip(LEDGER_COLUMNS, row))


def energy_balance(trajectory: Trajectory, system: str | None = None) -> EnergyLedger:
    """Energy ledger r(t) = E(t) - E(0) + int_0^t D.

    Uses the per-step dissipation integral recorded by the solver when present,
    otherwise the trapezoidal rule over the records.
    """
    system = system or trajectory.system
    if system not in ("boussinesq", "pe"):
        raise ValueError(f"unknown system {system!r}")
    if system != trajectory.system:
        raise ValueError(f"trajectory is from the {trajectory.system} solver, not {system}")
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    t = np.asarray(trajectory.times, dtype=float)
    E = np.asarray(trajectory.energy, dtype=float)
    D = np.asarray(trajectory.dissipation, dtype=float)
    if len(trajectory.cum_dissipation) == len(t):
        cum = np.asarray(trajectory.cum_dissipation, dtype=float)
    else:
        cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (D[1:] + D[:-1]))])
    res = E - E[0] + cum
    return EnergyLedger(system, t.tolist(), E.tolist(), D.tolist(), cum.tolist(), res.tolist())


def _inner_hat(grid, a, b) -> float:
    """int_Omega a b from spectral coefficients of real fields."""
    return float(grid.volume * np.sum(grid.parseval_weights * np.real(a * np.conj(b))))


def coupling_work(state: BoussinesqState) -> tuple[float, float]:
    """Buoyancy work in the tau^2-weighted w equation and stratification work in the rho equation.

    Both are the single number int rho w with opposite signs, so they cancel
    exactly in the energy balance.
    """
    g = state.grid
    c = _inner_hat(g, sp.fwd(g, state.rho.values), sp.fwd(g, state.w.values))
    buoyancy, stratification = -c, c
    assert buoyancy + stratification == 0.0
    return buoyancy, stratification


def hydrostatic_residual(b: BoussinesqState, p_tau: sp.Field | None = None, p_time: float | None = None) -> float:
    """||d_z p_tau + rho_tau||_2, expected O(tau^2)."""
    if p_tau is None:
        p_tau, p_time = b.p, b.p_time
        if p_tau is None:
            raise ValueError("state carries no pressure")
    if p_time is not None and abs(p_time - b.time) > 1e-12 * max(1.0, abs(b.time)):
        raise ValueError(f"stale pressure: p at t={p_time}, state at t={b.time}")
    g = b.grid
    r = g.ikz * sp.fwd(g, p_tau.values) + sp.fwd(g, b.rho.values)
    return float(np.sqrt(sp.l2sq_hat(g, r)))


@dataclass
class CancellationReport:
    """Normalized integrals that vanish for admissible states.

    Each entry is |integral| / (Hoelder bound), so values lie in [0, 1].
    """

    advection_v: float
    advection_rho: float
    pressure_work: float

    @property
    def worst(self) -> float:
        return max(self.advection_v, self.advection_rho, self.pressure_work)


def _ratio(num: float, den: float) -> float:
    return abs(num) / den if den > 0 else 0.0


def cancellation_checks(state: Union[PEState, BoussinesqState]) -> CancellationReport:
    g = state.grid
    v_hat = [sp.fwd(g, f.values) for f in state.v]
    rho_hat = sp.fwd(g, state.rho.values)
    if isinstance(state, PEState):
        w_hat = -vint_hat(g, hdiv_hat(g, *v_hat))
    else:
        w_hat = sp.fwd(g, state.w.values)
    velocity = (state.v[0].values, state.v[1].values, sp.inv(g, w_hat))
    A = advection_terms(g, velocity, [*v_hat, rho_hat])
    umax = max(float(np.max(np.abs(u))) for u in velocity)

    def l2(c):
        return np.sqrt(sp.l2sq_hat(g, c))

    def gl2(c):
        return np.sqrt(sp.grad_l2sq_hat(g, c))

    adv_v = _inner_hat(g, A[0], v_hat[0]) + _inner_hat(g, A[1], v_hat[1])
    bound_v = umax * np.sqrt(gl2(v_hat[0]) ** 2 + gl2(v_hat[1]) ** 2) * np.sqrt(l2(v_hat[0]) ** 2 + l2(v_hat[1]) ** 2)
    adv_r = _inner_hat(g, A[2], rho_hat)
    bound_r = umax * gl2(rho_hat) * l2(rho_hat)

    if isinstance(state, PEState):
        from .pe import stepper_for

        st = stepper_for(g)
        pg = st.surface_pressure(np.stack([*v_hat, rho_hat]))
        gp = [g.ikx[:, :, 0] * pg, g.iky[:, :, 0] * pg]
        work = 0.0
        gp_sq = 0.0
        for i in range(2):
            plane = np.zeros(g.spectral_shape, dtype=complex)
            plane[:, :, 0] = gp[i]
            work += _inner_hat(g, plane, v_hat[i])
            gp_sq += sp.l2sq_hat(g, plane)
        bound_p = np.sqrt(gp_sq) * np.sqrt(l2(v_hat[0]) ** 2 + l2(v_hat[1]) ** 2)
    else:
        from .boussinesq import stepper_for

        st = stepper_for(g, state.tau)
        p = st.pressure(np.stack([*v_hat, w_hat, rho_hat]))
        grads = [g.ikx * p, g.iky * p, g.ikz * p]
        comps = [*v_hat, w_hat]
        work = sum(_inner_hat(g, grads[i], comps[i]) for i in range(3))
        bound_p = np.sqrt(sum(sp.l2sq_hat(g, c) for c in grads)) * np.sqrt(sum(sp.l2sq_hat(g, c) for c in comps))
    return CancellationReport(_ratio(adv_v, bound_v), _ratio(adv_r, bound_r), _ratio(work, bound_p))


# ---------------------------------------------------------------------------
# CSV output


def write_ledger_csv(ledger: EnergyLedger, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=LEDGER_COLUMNS)
        writer.writeheader()
        for row in ledger.rows():
            writer.writerow({k: repr(float(v)) for k, v in row.items()})
    return path


def write_diagnostics_csv(trajectory: Trajectory, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=DIAGNOSTIC_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in trajectory.rows:
            writer.writerow({k: repr(float(row[k])) for k in DIAGNOSTIC_COLUMNS})
    return path
