"""State containers, hydrostatic reconstructions, the thin-domain scaling map and norms."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
import scipy.fft as sfft

from . import spectral as sp
from .errors import ConstraintViolation, GridMismatch
from .spectral import Field, Grid

VERTICAL_MEAN_TOL = 1e-8


# ---------------------------------------------------------------------------
# states


@dataclass
class BoussinesqState:
    """Scaled Boussinesq unknowns (v_tau, w_tau, rho_tau) at one instant.

    ``p`` is the pressure returned by the incompressibility projection; it is
    only meaningful when ``p_time == time``.
    """

    v: tuple[Field, Field]
    w: Field
    rho: Field
    tau: float
    time: float = 0.0
    p: Optional[Field] = None
    p_time: Optional[float] = None
    parity_drift: float = 0.0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        self.v = tuple(self.v)
        grids = {f.grid for f in (*self.v, self.w, self.rho)}
        if len(grids) != 1:
            raise GridMismatch("all components must live on the same grid")

    @property
    def grid(self) -> Grid:
        return self.w.grid

    def copy(self) -> "BoussinesqState":
        return BoussinesqState(
            (self.v[0].copy(), self.v[1].copy()),
            self.w.copy(),
            self.rho.copy(),
            self.tau,
            self.time,
            None if self.p is None else self.p.copy(),
            self.p_time,
            self.parity_drift,
        )


@dataclass
class PEState:
    """Primitive-equation state: prognostic (v, rho) plus diagnosed w, p, p_gamma."""

    v: tuple[Field, Field]
    rho: Field
    time: float = 0.0
    w: Optional[Field] = None
    p: Optional[Field] = None
    p_gamma: Optional[Field] = None
    parity_drift: float = 0.0

    def __post_init__(self):
        self.v = tuple(self.v)
        if len({f.grid for f in (*self.v, self.rho)}) != 1:
            raise GridMismatch("all components must live on the same grid")

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def copy(self) -> "PEState":
        def c(f):
            return None if f is None else f.copy()

        return PEState(
            (self.v[0].copy(), self.v[1].copy()),
            self.rho.copy(),
            self.time,
            c(self.w),
            c(self.p),
            c(self.p_gamma),
            self.parity_drift,
        )


@dataclass
class PhysicalState:
    """Perturbation fields on the thin domain M x (-depth, depth).

    Samples sit at Z = depth * z_j, so the arrays share the layout of the
    scaled grid. The background state is the affine stratification
    rho_bar(Z) = 1 - N^2 Z / g in hydrostatic balance with p_bar.
    """

    v: tuple[Field, Field]
    w: Field
    p: Field
    rho: Field
    depth: float
    g: float = 1.0
    rho_b: float = 1.0
    N: Optional[float] = None
    time: float = 0.0

    def __post_init__(self):
        if self.depth <= 0:
            raise ValueError(f"depth must be positive, got {self.depth}")
        self.v = tuple(self.v)
        if self.N is None:
            self.N = 1.0 / self.depth

    @property
    def grid(self) -> Grid:
        return self.w.grid

    @property
    def Z(self) -> np.ndarray:
        return self.depth * self.grid.z

    def background_density(self, Z=None) -> np.ndarray:
        Z = self.Z if Z is None else np.asarray(Z)
        return 1.0 - self.N**2 * Z / self.g

    def background_pressure(self, Z=None) -> np.ndarray:
        """p_bar with dp_bar/dZ = -g rho_bar and p_bar(0) = 0."""
        Z = self.Z if Z is None else np.asarray(Z)
        return -self.g * Z + 0.5 * self.N**2 * Z**2

    def total_density(self) -> np.ndarray:
        return self.background_density()[None, None, :] + self.rho.values

    def total_pressure(self) -> np.ndarray:
        return self.background_pressure()[None, None, :] + self.p.values


# ---------------------------------------------------------------------------
# vertical integration and hydrostatic reconstructions


def vertical_mean_defect(grid: Grid, c: np.ndarray) -> float:
    """max over (x, y) of |vertical mean| from 3D spectral coefficients."""
    plane = c[:, :, 0]
    mean = np.real(sfft.ifft2(plane)) * (grid.nx * grid.ny)
    return float(np.max(np.abs(mean)))


def _inv_ikz(grid: Grid) -> np.ndarray:
    ikz = grid.ikz
    out = np.zeros_like(ikz)
    nz = ikz != 0
    out[nz] = 1.0 / ikz[nz]
    return out


def vint_hat(grid: Grid, c: np.ndarray, check: bool = True) -> np.ndarray:
    """Spectral coefficients of F(z) = int_0^z f dxi; f must have zero vertical mean."""
    if check:
        defect = vertical_mean_defect(grid, c)
        rms = np.sqrt(sp.l2sq_hat(grid, c) / grid.volume)
        if defect > VERTICAL_MEAN_TOL * max(1.0, rms):
            raise ConstraintViolation(
                f"vertical mean {defect:.3e} is nonzero; the antiderivative is not periodic"
            )
    F = c * _inv_ikz(grid)
    F[:, :, 0] -= sp.midplane_hat(grid, F)
    return F


def vertical_integral_from_zero(f: Field) -> Field:
    """F(x, y, z) = int_0^z f(x, y, xi) dxi, computed spectrally.

    Raises ConstraintViolation when f has a nonzero vertical mean somewhere,
    since the antiderivative would then grow linearly and break periodicity.
    The Nyquist mode in z is discarded.
    """
    if f.horizontal:
        raise GridMismatch("vertical integration needs a 3D field")
    g = f.grid
    F = vint_hat(g, sp.fwd(g, f.values))
    parity = {"even": "odd", "odd": "even", "none": "none"}[f.parity]
    return Field(g, sp.inv(g, F), parity)


def hdiv_hat(grid: Grid, c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
    return grid.ikx * c1 + grid.iky * c2


def diagnose_w(v) -> Field:
    """w = -int_0^z div_h v dxi, the vertical velocity implied by incompressibility."""
    v1, v2 = v
    g = v1.grid
    div = hdiv_hat(g, sp.fwd(g, v1.values), sp.fwd(g, v2.values))
    try:
        w = -vint_hat(g, div)
    except ConstraintViolation as exc:
        raise ConstraintViolation(f"barotropic constraint violated: {exc}") from None
    parity = "odd" if v1.parity == v2.parity == "even" else "none"
    return Field(g, sp.inv(g, w), parity)


def diagnose_pressure(rho: Field, p_gamma: Field) -> Field:
    """p = p_gamma - int_0^z rho dxi (hydrostatic balance d_z p + rho = 0)."""
    if rho.parity == "even":
        raise ConstraintViolation("density must be odd in z")
    if not p_gamma.horizontal:
        raise GridMismatch("p_gamma must be a horizontal field")
    integral = vertical_integral_from_zero(rho)
    vals = p_gamma.values[:, :, None] - integral.values
    return Field(rho.grid, vals, "even" if rho.parity == "odd" else "none")


# ---------------------------------------------------------------------------
# thin-domain scaling


def scale_map(physical: PhysicalState, tau: Optional[float] = None) -> BoussinesqState:
    """Map perturbations on M x (-tau, tau) to scaled unknowns on M x (-1, 1)."""
    tau = physical.depth if tau is None else float(tau)
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if abs(tau - physical.depth) > 1e-14 * max(1.0, tau):
        raise ValueError(f"physical state lives on depth {physical.depth}, not tau={tau}")
    v = tuple(Field(f.grid, f.values.copy(), f.parity) for f in physical.v)
    w = Field(physical.w.grid, physical.w.values / tau, physical.w.parity)
    rho = Field(physical.rho.grid, (physical.g * tau) * physical.rho.values, physical.rho.parity)
    p = Field(physical.p.grid, physical.p.values.copy(), physical.p.parity)
    return BoussinesqState(v, w, rho, tau, physical.time, p=p, p_time=physical.time)


def unscale_map(scaled: BoussinesqState, g: float = 1.0, rho_b: float = 1.0) -> PhysicalState:
    """Inverse of :func:`scale_map`; sets N = 1/tau (strong stratification)."""
    tau = scaled.tau
    grid = scaled.grid
    v = tuple(Field(grid, f.values.copy(), f.parity) for f in scaled.v)
    w = Field(grid, tau * scaled.w.values, scaled.w.parity)
    rho = Field(grid, scaled.rho.values / (g * tau), scaled.rho.parity)
    p = scaled.p.copy() if scaled.p is not None else Field(grid, np.zeros(grid.shape), "even")
    return PhysicalState(v, w, p, rho, depth=tau, g=g, rho_b=rho_b, N=1.0 / tau, time=scaled.time)


def physical_divergence(physical: PhysicalState) -> Field:
    """d_x v1 + d_y v2 + d_Z w with d_Z = (1/depth) d_z on the sampled layout."""
    g = physical.grid
    c1, c2, cw = (sp.fwd(g, f.values) for f in (*physical.v, physical.w))
    div = hdiv_hat(g, c1, c2) + g.ikz * cw / physical.depth
    return Field(g, sp.inv(g, div))


def divergence(v, w: Field) -> Field:
    g = w.grid
    c1, c2, cw = (sp.fwd(g, f.values) for f in (*v, w))
    return Field(g, sp.inv(g, hdiv_hat(g, c1, c2) + g.ikz * cw))


# ---------------------------------------------------------------------------
# norms


def lebesgue_norm(f: Field, p: int = 2) -> float:
    """L^p norm by uniform-grid quadrature."""
    if p not in (2, 4):
        raise ValueError(f"p must be 2 or 4, got {p}")
    measure = f.grid.area if f.horizontal else f.grid.volume
    return float((measure * np.mean(np.abs(f.values) ** p)) ** (1.0 / p))


def _seminorm_sq(f: Field) -> float:
    g = f.grid
    c = sp.fwd(g, f.values)
    if f.horizontal:
        k2 = g.kx2**2 + g.ky2**2
        return float(g.area * np.sum(g.parseval_weights2 * k2 * np.abs(c) ** 2))
    return sp.grad_l2sq_hat(g, c)


def h1_seminorm(f: Field) -> float:
    return float(np.sqrt(_seminorm_sq(f)))


def h1_norm(f: Field) -> float:
    return float(np.sqrt(lebesgue_norm(f, 2) ** 2 + _seminorm_sq(f)))


@dataclass
class DifferenceNorms:
    """Time series of the Boussinesq-minus-PE difference (V, tau W, Gamma).

    ``l2`` is ||(V, tau W, Gamma)||_2, ``grad_l2`` is ||grad(V, tau W, Gamma)||_2,
    ``h1`` the H^1 norm and ``grad_h1`` the H^1 norm of the gradient.
    """

    times: list = dc_field(default_factory=list)
    l2: list = dc_field(default_factory=list)
    grad_l2: list = dc_field(default_factory=list)
    h1: list = dc_field(default_factory=list)
    grad_h1: list = dc_field(default_factory=list)
    v_l2: list = dc_field(default_factory=list)
    tau_w_l2: list = dc_field(default_factory=list)
    rho_l2: list = dc_field(default_factory=list)

    def extend(self, other: "DifferenceNorms") -> None:
        for name in ("times", "l2", "grad_l2", "h1", "grad_h1", "v_l2", "tau_w_l2", "rho_l2"):
            getattr(self, name).extend(getattr(other, name))

    @property
    def l2_sup(self) -> float:
        return float(max(self.l2)) if self.l2 else 0.0

    @property
    def h1_sup(self) -> float:
        return float(max(self.h1)) if self.h1 else 0.0

    @property
    def grad_l2_integral(self) -> float:
        return _trapezoid(self.times, np.square(self.grad_l2))

    @property
    def grad_h1_integral(self) -> float:
        return _trapezoid(self.times, np.square(self.grad_h1))


def _trapezoid(t, y) -> float:
    if len(t) < 2:
        return 0.0
    return float(np.trapezoid(y, t)) if hasattr(np, "trapezoid") else float(np.trapz(y, t))


def difference_sample(grid: Grid, tau: float, b_hat, p_hat, time: float) -> DifferenceNorms:
    """Difference norms from spectral component stacks (v1, v2, w, rho)."""
    d = [bc - pc for bc, pc in zip(b_hat, p_hat)]
    d[2] = tau * d[2]
    comps = [sp.l2sq_hat(grid, c) for c in d]
    grads = [sp.grad_l2sq_hat(grid, c) for c in d]
    hess = [sp.hess_l2sq_hat(grid, c) for c in d]
    l2sq, gsq, hsq = sum(comps), sum(grads), sum(hess)
    return DifferenceNorms(
        times=[time],
        l2=[np.sqrt(l2sq)],
        grad_l2=[np.sqrt(gsq)],
        h1=[np.sqrt(l2sq + gsq)],
        grad_h1=[np.sqrt(gsq + hsq)],
        v_l2=[np.sqrt(comps[0] + comps[1])],
        tau_w_l2=[np.sqrt(comps[2])],
        rho_l2=[np.sqrt(comps[3])],
    )


def difference_norms(b: BoussinesqState, p: PEState, time_tol: float = 1e-12) -> DifferenceNorms:
    """Norms of (v_tau - v, tau (w_tau - w), rho_tau - rho) at a shared instant."""
    if b.grid != p.grid:
        raise GridMismatch("states live on different grids")
    if abs(b.time - p.time) > time_tol * max(1.0, abs(b.time)):
        raise ValueError(f"time mismatch: {b.time} vs {p.time}")
    g = b.grid
    w_pe = p.w if p.w is not None else diagnose_w(p.v)
    b_hat = [sp.fwd(g, f.values) for f in (*b.v, b.w, b.rho)]
    p_hat = [sp.fwd(g, f.values) for f in (*p.v, w_pe, p.rho)]
    return difference_sample(g, b.tau, b_hat, p_hat, b.time)
