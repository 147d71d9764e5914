"""Shared builders for the test suite."""

import numpy as np

from strata import spectral as sp
from strata.spectral import Field, Grid


def sample(grid: Grid, fn, parity="none") -> Field:
    X, Y, Z = grid.mesh()
    return Field(grid, np.broadcast_to(fn(X, Y, Z), grid.shape).astype(float), parity)


def random_field(rng, grid: Grid, parity="none", band=None) -> Field:
    """Random real field; ``band`` keeps modes with |n_i| <= band (Nyquist always removed)."""
    c = sp.fwd(grid, rng.standard_normal(grid.shape))
    keep = np.ones(grid.spectral_shape, dtype=bool)
    limits = [n // 2 - 1 if band is None else band for n in grid.shape]
    keep &= (np.abs(grid.nxi) <= limits[0])[:, None, None]
    keep &= (np.abs(grid.nyi) <= limits[1])[None, :, None]
    keep &= (grid.nzi <= limits[2])[None, None, :]
    c = sp.parity_hat(grid, c * keep, parity)
    return Field(grid, sp.inv(grid, c), parity)


def leray_oracle(u, v, w):
    """Isotropic Leray projection with a full complex FFT (Nyquist modes dropped)."""
    shape = u.shape
    k = [np.fft.fftfreq(n, 1.0 / n) for n in shape]
    for i, n in enumerate(shape):
        k[i][n // 2] = 0.0
    kx, ky, kz = np.meshgrid(k[0], k[1], np.pi * k[2], indexing="ij")
    k2 = kx**2 + ky**2 + kz**2
    inv_k2 = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    U = [np.fft.fftn(a) for a in (u, v, w)]
    kdotu = kx * U[0] + ky * U[1] + kz * U[2]
    return [np.real(np.fft.ifftn(Ui - kk * kdotu * inv_k2)) for Ui, kk in zip(U, (kx, ky, kz))]
