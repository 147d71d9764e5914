"""Periodic Fourier machinery on the box [0, 2pi)^2 x [-1, 1).

Conventions
-----------
* Physical arrays have shape ``(nx, ny, nz)`` in C order (z varies fastest).
  Horizontal (z-independent) fields have shape ``(nx, ny)``.
* Spectral arrays are real-to-complex transforms over all axes, so the last
  axis holds only non-negative wavenumbers: ``(nx, ny, nz // 2 + 1)`` in 3D
  and ``(nx, ny // 2 + 1)`` in 2D.
* The forward transform divides by the number of samples, so the zero mode is
  the mean of the field.
* ``z_j = -1 + 2 j / nz``. The reflection ``z -> -z`` maps sample ``j`` to
  ``(nz - j) % nz``, which in spectral space is ``kz -> -kz`` with no phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.fft as sfft

from .errors import ConstraintViolation, GridMismatch

Parity = Literal["even", "odd", "none"]
PARITIES = ("even", "odd", "none")

LX = LY = 2.0 * np.pi
LZ = 2.0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic tensor grid on [0, 2pi)^2 x [-1, 1)."""

    nx: int
    ny: int
    nz: int

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < 4 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 4, got {n!r}")

    @classmethod
    def cube(cls, n: int) -> "Grid":
        return cls(n, n, n)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def shape2(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz // 2 + 1)

    @property
    def spectral_shape2(self) -> tuple[int, int]:
        return (self.nx, self.ny // 2 + 1)

    @property
    def size(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def volume(self) -> float:
        return LX * LY * LZ

    @property
    def area(self) -> float:
        return LX * LY

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (LX / self.nx, LY / self.ny, LZ / self.nz)

    # -- coordinates -------------------------------------------------------

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * (LX / self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * (LY / self.ny)

    @cached_property
    def z(self) -> np.ndarray:
        return -1.0 + np.arange(self.nz) * (LZ / self.nz)

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, self.z, indexing="ij")

    def mesh2(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    # -- wavenumbers (integer mode indices and physical wavenumbers) -------

    @cached_property
    def nxi(self) -> np.ndarray:
        return np.rint(sfft.fftfreq(self.nx, 1.0 / self.nx)).astype(int)

    @cached_property
    def nyi(self) -> np.ndarray:
        return np.rint(sfft.fftfreq(self.ny, 1.0 / self.ny)).astype(int)

    @cached_property
    def nzi(self) -> np.ndarray:
        return np.arange(self.nz // 2 + 1)

    @cached_property
    def nyi_half(self) -> np.ndarray:
        return np.arange(self.ny // 2 + 1)

    @cached_property
    def kx(self) -> np.ndarray:
        return (2.0 * np.pi / LX) * self.nxi.astype(float)[:, None, None]

    @cached_property
    def ky(self) -> np.ndarray:
        return (2.0 * np.pi / LY) * self.nyi.astype(float)[None, :, None]

    @cached_property
    def kz(self) -> np.ndarray:
        return (2.0 * np.pi / LZ) * self.nzi.astype(float)[None, None, :]

    @cached_property
    def ksq(self) -> np.ndarray:
        """|k|^2 on the 3D spectral layout (Nyquist modes included)."""
        return self.kx**2 + self.ky**2 + self.kz**2

    @cached_property
    def ikx(self) -> np.ndarray:
        return 1j * np.where(np.abs(self.nxi) == self.nx // 2, 0.0, self.kx[:, 0, 0])[:, None, None]

    @cached_property
    def iky(self) -> np.ndarray:
        return 1j * np.where(np.abs(self.nyi) == self.ny // 2, 0.0, self.ky[0, :, 0])[None, :, None]

    @cached_property
    def ikz(self) -> np.ndarray:
        return 1j * np.where(self.nzi == self.nz // 2, 0.0, self.kz[0, 0, :])[None, None, :]

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep_x = 3 * np.abs(self.nxi) < self.nx
        keep_y = 3 * np.abs(self.nyi) < self.ny
        keep_z = 3 * self.nzi < self.nz
        return keep_x[:, None, None] & keep_y[None, :, None] & keep_z[None, None, :]

    @cached_property
    def parseval_weights(self) -> np.ndarray:
        """Multiplicity of each stored rfft coefficient in the full spectrum."""
        w = np.full(self.nz // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w[None, None, :]

    @cached_property
    def neg_x(self) -> np.ndarray:
        return (-np.arange(self.nx)) % self.nx

    @cached_property
    def neg_y(self) -> np.ndarray:
        return (-np.arange(self.ny)) % self.ny

    # 2D (horizontal) layout: rfft over y.

    @cached_property
    def kx2(self) -> np.ndarray:
        return self.kx[:, :, 0]

    @cached_property
    def ky2(self) -> np.ndarray:
        return (2.0 * np.pi / LY) * self.nyi_half.astype(float)[None, :]

    @cached_property
    def ikx2(self) -> np.ndarray:
        return self.ikx[:, :, 0]

    @cached_property
    def iky2(self) -> np.ndarray:
        return 1j * np.where(self.nyi_half == self.ny // 2, 0.0, self.ky2[0])[None, :]

    @cached_property
    def dealias_mask2(self) -> np.ndarray:
        keep_x = 3 * np.abs(self.nxi) < self.nx
        keep_y = 3 * self.nyi_half < self.ny
        return keep_x[:, None] & keep_y[None, :]

    @cached_property
    def parseval_weights2(self) -> np.ndarray:
        w = np.full(self.ny // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w[None, :]


# ---------------------------------------------------------------------------
# raw array kernels (used by the solvers; no validation)


def fwd(grid: Grid, a: np.ndarray) -> np.ndarray:
    if a.ndim == 3:
        return sfft.rfftn(a) / grid.size
    return sfft.rfft2(a) / (grid.nx * grid.ny)


def inv(grid: Grid, c: np.ndarray) -> np.ndarray:
    if c.ndim == 3:
        return sfft.irfftn(c * grid.size, s=grid.shape)
    return sfft.irfft2(c * (grid.nx * grid.ny), s=grid.shape2)


def reflect_hat(grid: Grid, c: np.ndarray) -> np.ndarray:
    """Coefficients of f(x, y, -z) given those of f (3D rfft layout)."""
    return np.conj(c[grid.neg_x][:, grid.neg_y])


def parity_hat(grid: Grid, c: np.ndarray, parity: Parity) -> np.ndarray:
    if parity == "none":
        return c
    sign = 1.0 if parity == "even" else -1.0
    return 0.5 * (c + sign * reflect_hat(grid, c))


def midplane_hat(grid: Grid, c: np.ndarray) -> np.ndarray:
    """Horizontal Fourier coefficients of f(x, y, z=0), in the 3D kz=0 layout.

    z = 0 is sample nz/2, where exp(i pi kz z_j) reduces to (-1)^kz.
    """
    nh = grid.nz // 2
    signs = (-1.0) ** np.arange(nh + 1)
    inner = c[:, :, 1:nh] + np.conj(c[grid.neg_x][:, grid.neg_y][:, :, 1:nh])
    return c[:, :, 0] + signs[nh] * c[:, :, nh] + np.einsum("ijk,k->ij", inner, signs[1:nh])


def l2sq_hat(grid: Grid, c: np.ndarray) -> float:
    """Squared L2(Omega) norm from 3D spectral coefficients (Parseval)."""
    return float(grid.volume * np.sum(grid.parseval_weights * (c.real**2 + c.imag**2)))


def grad_l2sq_hat(grid: Grid, c: np.ndarray) -> float:
    return float(grid.volume * np.sum(grid.parseval_weights * grid.ksq * (c.real**2 + c.imag**2)))


def hess_l2sq_hat(grid: Grid, c: np.ndarray) -> float:
    """Sum of squared L2 norms of all second derivatives, i.e. ||grad grad f||^2."""
    return float(grid.volume * np.sum(grid.parseval_weights * grid.ksq**2 * (c.real**2 + c.imag**2)))


# ---------------------------------------------------------------------------
# typed containers


@dataclass
class Field:
    """Real samples on a grid, 3D ``(nx, ny, nz)`` or horizontal ``(nx, ny)``."""

    grid: Grid
    values: np.ndarray
    parity: Parity = "none"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape not in (self.grid.shape, self.grid.shape2):
            raise GridMismatch(
                f"values of shape {self.values.shape} do not fit grid {self.grid.shape}"
            )
        if self.parity not in PARITIES:
            raise ValueError(f"unknown parity {self.parity!r}")
        if self.horizontal and self.parity == "odd":
            raise ValueError("a horizontal field cannot be odd in z")

    @property
    def horizontal(self) -> bool:
        return self.values.ndim == 2

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.parity)

    def parity_defect(self) -> float:
        """max |f(z) -+ f(-z)| / 2 for the declared parity (0 when parity is none)."""
        if self.parity == "none" or self.horizontal:
            return 0.0
        refl = reflect(self.values)
        sign = -1.0 if self.parity == "even" else 1.0
        return float(np.max(np.abs(self.values + sign * refl))) / 2.0

    def __add__(self, other: "Field") -> "Field":
        _check_same(self, other)
        parity = self.parity if self.parity == other.parity else "none"
        return Field(self.grid, self.values + other.values, parity)

    def __sub__(self, other: "Field") -> "Field":
        _check_same(self, other)
        parity = self.parity if self.parity == other.parity else "none"
        return Field(self.grid, self.values - other.values, parity)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, self.values * scalar, self.parity)

    __rmul__ = __mul__


@dataclass
class SpectralField:
    grid: Grid
    coeffs: np.ndarray
    parity: Parity = "none"

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape not in (self.grid.spectral_shape, self.grid.spectral_shape2):
            raise GridMismatch(
                f"coefficients of shape {self.coeffs.shape} do not fit grid {self.grid.shape}"
            )

    @property
    def horizontal(self) -> bool:
        return self.coeffs.ndim == 2


def _check_same(a, b):
    if a.grid != b.grid:
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")
    sa = a.values.shape if isinstance(a, Field) else a.coeffs.shape
    sb = b.values.shape if isinstance(b, Field) else b.coeffs.shape
    if sa != sb:
        raise GridMismatch(f"shapes differ: {sa} vs {sb}")


def reflect(values: np.ndarray) -> np.ndarray:
    """Samples of f(x, y, -z) on the same grid."""
    return np.roll(values[..., ::-1], 1, axis=-1)


# ---------------------------------------------------------------------------
# operations


def transform(field, direction: str = "forward"):
    """Forward (Field -> SpectralField) or inverse (SpectralField -> Field) transform."""
    if direction == "forward":
        if not isinstance(field, Field):
            raise TypeError("forward transform expects a Field")
        return SpectralField(field.grid, fwd(field.grid, field.values), field.parity)
    if direction == "inverse":
        if not isinstance(field, SpectralField):
            raise TypeError("inverse transform expects a SpectralField")
        return Field(field.grid, inv(field.grid, field.coeffs), field.parity)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


_FLIP = {"even": "odd", "odd": "even", "none": "none"}


def derivative(f: SpectralField, axis: str, order: int = 1) -> SpectralField:
    """Spectral derivative; odd orders drop the Nyquist mode along ``axis``."""
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    g = f.grid
    if f.horizontal:
        table = {"x": (g.ikx2, g.kx2), "y": (g.iky2, g.ky2)}
    else:
        table = {"x": (g.ikx, g.kx), "y": (g.iky, g.ky), "z": (g.ikz, g.kz)}
    if axis not in table:
        raise ValueError(f"axis {axis!r} not available for this field")
    ik, k = table[axis]
    factor = ik if order == 1 else -(k**2)
    parity = _FLIP[f.parity] if (axis == "z" and order == 1) else f.parity
    return SpectralField(g, f.coeffs * factor, parity)


def dealias(f: SpectralField) -> SpectralField:
    """2/3 rule: zero every mode with |n| >= N/3 along any axis."""
    mask = f.grid.dealias_mask2 if f.horizontal else f.grid.dealias_mask
    return SpectralField(f.grid, f.coeffs * mask, f.parity)


def parity_project(f: Field, parity: str) -> Field:
    """Even or odd part of ``f`` with respect to z -> -z."""
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    if f.horizontal:
        if parity == "odd":
            return Field(f.grid, np.zeros_like(f.values), "none")
        return f.copy()
    sign = 1.0 if parity == "even" else -1.0
    vals = 0.5 * (f.values + sign * reflect(f.values))
    return Field(f.grid, vals, parity)


def _mean_tolerance(coeffs: np.ndarray) -> float:
    return 1e-10 * max(1.0, float(np.max(np.abs(coeffs))))


def solve_anisotropic_poisson(rhs: SpectralField, tau: float) -> SpectralField:
    """Solve (Lap_h + tau^-2 d_zz) p = rhs with zero-mean p."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if rhs.horizontal:
        raise GridMismatch("anisotropic Poisson solve needs a 3D field")
    c = rhs.coeffs
    if abs(c[0, 0, 0]) > _mean_tolerance(c):
        raise ConstraintViolation(f"rhs has nonzero mean {c[0, 0, 0]:.3e}; no periodic solution")
    g = rhs.grid
    denom = -(g.kx**2 + g.ky**2) - g.kz**2 / tau**2
    denom[0, 0, 0] = 1.0
    p = c / denom
    p[0, 0, 0] = 0.0
    return SpectralField(g, p, rhs.parity)


def apply_anisotropic_laplacian(p: SpectralField, tau: float) -> SpectralField:
    g = p.grid
    return SpectralField(g, p.coeffs * (-(g.kx**2 + g.ky**2) - g.kz**2 / tau**2), p.parity)


def solve_horizontal_poisson_zero_mean(rhs: SpectralField) -> SpectralField:
    """Solve -Lap_h q = rhs on the 2-torus with zero-mean q."""
    if not rhs.horizontal:
        raise GridMismatch("horizontal Poisson solve needs a 2D field")
    c = rhs.coeffs
    if abs(c[0, 0]) > _mean_tolerance(c):
        raise ConstraintViolation(f"rhs has nonzero mean {c[0, 0]:.3e}; no periodic solution")
    g = rhs.grid
    ksq = g.kx2**2 + g.ky2**2
    ksq[0, 0] = 1.0
    q = c / ksq
    q[0, 0] = 0.0
    return SpectralField(g, q, rhs.parity)
