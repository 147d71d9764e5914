import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_field, sample
from strata import spectral as sp
from strata.errors import ConstraintViolation, GridMismatch
from strata.spectral import Field, Grid, SpectralField

PI = np.pi


@pytest.fixture
def grid():
    return Grid(16, 12, 8)


# -- grid ---------------------------------------------------------------------


@pytest.mark.parametrize("shape", [(3, 4, 4), (4, 4, 2), (4, 5, 4), (0, 4, 4)])
def test_grid_rejects_bad_sizes(shape):
    with pytest.raises(ValueError):
        Grid(*shape)


def test_grid_wavenumbers_follow_fft_ordering(grid):
    assert np.array_equal(grid.nxi, np.fft.fftfreq(16, 1 / 16).astype(int))
    assert np.array_equal(grid.nyi, np.fft.fftfreq(12, 1 / 12).astype(int))
    assert np.array_equal(grid.nzi, np.fft.rfftfreq(8, 1 / 8).astype(int))
    assert np.allclose(grid.kz.ravel(), PI * np.arange(5))
    assert grid.size == 16 * 12 * 8
    assert grid.volume == pytest.approx(8 * PI**2)


def test_z_grid_is_symmetric_under_reflection(grid):
    z = grid.z
    assert z[0] == -1.0
    reflected = sp.reflect(np.broadcast_to(z, grid.shape))[0, 0]
    # -z modulo the period 2, mapped back into [-1, 1)
    assert np.allclose(reflected, (-z + 1.0) % 2.0 - 1.0)


# -- transform ---------------------------------------------------------------


def test_constant_field_has_only_zero_mode(grid):
    c = sp.transform(Field(grid, np.full(grid.shape, 2.5)))
    assert c.coeffs[0, 0, 0] == pytest.approx(2.5)
    rest = c.coeffs.copy()
    rest[0, 0, 0] = 0
    assert np.max(np.abs(rest)) < 1e-15


def test_cos_x_has_two_modes(grid):
    X, _, _ = grid.mesh()
    c = np.fft.fftn(np.cos(X)) / grid.size  # full layout to see both +-1
    nonzero = np.argwhere(np.abs(c) > 1e-14)
    assert sorted(map(tuple, nonzero)) == [(1, 0, 0), (15, 0, 0)]
    half = sp.transform(Field(grid, np.cos(X))).coeffs
    assert half[1, 0, 0] == pytest.approx(0.5)
    assert half[-1, 0, 0] == pytest.approx(0.5)
    assert np.sum(np.abs(half) > 1e-14) == 2


def test_round_trip(grid):
    rng = np.random.default_rng(1)
    f = random_field(rng, grid)
    back = sp.transform(sp.transform(f), "inverse")
    assert np.max(np.abs(back.values - f.values)) <= 1e-12 * np.max(np.abs(f.values))
    assert back.parity == f.parity


def test_transform_rejects_wrong_types(grid):
    f = Field(grid, np.zeros(grid.shape))
    with pytest.raises(TypeError):
        sp.transform(f, "inverse")
    with pytest.raises(ValueError):
        sp.transform(f, "sideways")


def test_coefficients_are_hermitian(grid):
    rng = np.random.default_rng(2)
    f = rng.standard_normal(grid.shape)
    full = np.fft.fftn(f)
    neg = full[(-np.arange(16)) % 16][:, (-np.arange(12)) % 12][:, :, (-np.arange(8)) % 8]
    assert np.allclose(full, np.conj(neg))


def test_parseval_on_100_random_fields():
    g = Grid(8, 8, 8)
    rng = np.random.default_rng(3)
    for _ in range(100):
        f = Field(g, rng.standard_normal(g.shape) * rng.uniform(0.1, 10))
        physical = g.volume * np.mean(f.values**2)
        spectral = sp.l2sq_hat(g, sp.fwd(g, f.values))
        assert spectral == pytest.approx(physical, rel=1e-12)


def test_field_shape_and_parity_validation(grid):
    with pytest.raises(GridMismatch):
        Field(grid, np.zeros((4, 4, 4)))
    with pytest.raises(ValueError):
        Field(grid, np.zeros(grid.shape), "sideways")
    with pytest.raises(ValueError):
        Field(grid, np.zeros(grid.shape2), "odd")
    with pytest.raises(GridMismatch):
        Field(grid, np.zeros(grid.shape)) + Field(Grid.cube(8), np.zeros((8, 8, 8)))


# -- derivative ----------------------------------------------------------------


def test_dx_cos_x(grid):
    f = sample(grid, lambda x, y, z: np.cos(x))
    d = sp.transform(sp.derivative(sp.transform(f), "x"), "inverse")
    X, _, _ = grid.mesh()
    assert np.max(np.abs(d.values + np.sin(X))) < 1e-12


def test_dx_sin_3x(grid):
    f = sample(grid, lambda x, y, z: np.sin(3 * x))
    d = sp.transform(sp.derivative(sp.transform(f), "x"), "inverse")
    X, _, _ = grid.mesh()
    assert np.max(np.abs(d.values - 3 * np.cos(3 * X))) <= 1e-11


def test_second_derivatives(grid):
    f = sample(grid, lambda x, y, z: np.cos(2 * y) * np.cos(PI * z), "even")
    c = sp.transform(f)
    dyy = sp.transform(sp.derivative(c, "y", 2), "inverse")
    dzz = sp.transform(sp.derivative(c, "z", 2), "inverse")
    assert np.max(np.abs(dyy.values + 4 * f.values)) < 1e-12
    assert np.max(np.abs(dzz.values + PI**2 * f.values)) < 1e-12
    assert dzz.parity == "even"


def test_dz_flips_parity(grid):
    rng = np.random.default_rng(4)
    for parity, flipped in (("even", "odd"), ("odd", "even")):
        f = random_field(rng, grid, parity)
        d = sp.transform(sp.derivative(sp.transform(f), "z"), "inverse")
        assert d.parity == flipped
        assert Field(grid, d.values, flipped).parity_defect() < 1e-12


def test_odd_derivative_drops_nyquist(grid):
    X, _, _ = grid.mesh()
    f = Field(grid, np.cos(8 * X))  # Nyquist in x
    d = sp.derivative(sp.transform(f), "x")
    assert np.max(np.abs(d.coeffs)) == 0.0
    d2 = sp.derivative(sp.transform(f), "x", 2)
    assert np.max(np.abs(sp.inv(grid, d2.coeffs) + 64 * f.values)) < 1e-10


def test_derivative_argument_checks(grid):
    c = sp.transform(Field(grid, np.zeros(grid.shape)))
    with pytest.raises(ValueError):
        sp.derivative(c, "x", 3)
    with pytest.raises(ValueError):
        sp.derivative(c, "t")
    with pytest.raises(ValueError):
        sp.derivative(SpectralField(grid, np.zeros(grid.spectral_shape2)), "z")


def test_horizontal_derivative(grid):
    X, Y = grid.mesh2()
    c = sp.transform(Field(grid, np.sin(X) * np.cos(Y)))
    d = sp.transform(sp.derivative(c, "y"), "inverse")
    assert np.max(np.abs(d.values + np.sin(X) * np.sin(Y))) < 1e-12


# -- dealias -------------------------------------------------------------------


def test_dealias_keeps_band_limited_field(grid):
    f = sample(grid, lambda x, y, z: np.cos(2 * x) * np.sin(3 * y) + np.cos(PI * z))
    c = sp.transform(f)
    assert np.max(np.abs(sp.dealias(c).coeffs - c.coeffs)) < 1e-15


def test_dealias_removes_nyquist(grid):
    f = sample(grid, lambda x, y, z: np.cos(8 * x))
    assert np.max(np.abs(sp.dealias(sp.transform(f)).coeffs)) == 0.0


def test_dealias_idempotent(grid):
    c = sp.transform(random_field(np.random.default_rng(5), grid))
    once = sp.dealias(c)
    assert np.array_equal(sp.dealias(once).coeffs, once.coeffs)


def test_dealias_cutoff_is_two_thirds():
    g = Grid.cube(12)
    kept = np.abs(g.nxi)[g.dealias_mask[:, 0, 0]]
    assert kept.max() == 3  # 3 * 4 = 12 is not < 12


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_dealiased_product_matches_trig_identity(k):
    g = Grid(16, 4, 4)
    X, _, _ = g.mesh()
    c = sp.fwd(g, np.cos(k * X))
    prod = sp.dealias(sp.transform(Field(g, sp.inv(g, c) ** 2))).coeffs
    exact = sp.fwd(g, 0.5 * (1 + np.cos(2 * k * X))) * g.dealias_mask
    assert np.max(np.abs(prod - exact)) < 1e-14
    if 3 * 2 * k < 16:
        assert prod[2 * k, 0, 0] == pytest.approx(0.25)
    assert prod[0, 0, 0] == pytest.approx(0.5)


# -- parity ----------------------------------------------------------------------


def test_parity_project_cos_plus_sin(grid):
    f = sample(grid, lambda x, y, z: np.cos(PI * z) + np.sin(PI * z))
    even = sp.parity_project(f, "even")
    _, _, Z = grid.mesh()
    assert np.max(np.abs(even.values - np.cos(PI * Z))) < 1e-14
    assert even.parity == "even"


def test_parity_project_idempotent_on_odd(grid):
    f = random_field(np.random.default_rng(6), grid, "odd")
    g = sp.parity_project(f, "odd")
    assert np.max(np.abs(g.values - f.values)) < 1e-14


def test_parts_sum_to_field(grid):
    f = random_field(np.random.default_rng(7), grid)
    s = sp.parity_project(f, "even").values + sp.parity_project(f, "odd").values
    assert np.max(np.abs(s - f.values)) < 1e-14


def test_parity_projection_satisfies_invariant(grid):
    rng = np.random.default_rng(8)
    for parity in ("even", "odd"):
        f = sp.parity_project(Field(grid, rng.standard_normal(grid.shape)), parity)
        assert f.parity_defect() <= 1e-12
        if parity == "odd":
            assert abs(np.mean(f.values)) < 1e-14


def test_spectral_and_physical_parity_agree(grid):
    rng = np.random.default_rng(9)
    f = rng.standard_normal(grid.shape)
    c = sp.fwd(grid, f)
    for parity in ("even", "odd"):
        a = sp.inv(grid, sp.parity_hat(grid, c, parity))
        b = sp.parity_project(Field(grid, f), parity).values
        assert np.max(np.abs(a - b)) < 1e-13


def test_midplane_values(grid):
    rng = np.random.default_rng(10)
    f = rng.standard_normal(grid.shape)
    plane = sp.midplane_hat(grid, sp.fwd(grid, f))
    direct = np.fft.fft2(f[:, :, grid.nz // 2]) / (grid.nx * grid.ny)
    assert np.max(np.abs(plane - direct)) < 1e-13


# -- Poisson solvers ---------------------------------------------------------------


def test_anisotropic_poisson_cos_x(grid):
    rhs = sp.transform(sample(grid, lambda x, y, z: np.cos(x)))
    p = sp.transform(sp.solve_anisotropic_poisson(rhs, 1.0), "inverse")
    X, _, _ = grid.mesh()
    assert np.max(np.abs(p.values + np.cos(X))) < 1e-13


@pytest.mark.parametrize("tau", [1.0, 0.3, 0.05])
def test_anisotropic_poisson_cos_pi_z(grid, tau):
    rhs = sp.transform(sample(grid, lambda x, y, z: np.cos(PI * z)))
    p = sp.transform(sp.solve_anisotropic_poisson(rhs, tau), "inverse")
    _, _, Z = grid.mesh()
    assert np.max(np.abs(p.values + tau**2 / PI**2 * np.cos(PI * Z))) < 1e-14


def test_anisotropic_poisson_zero(grid):
    p = sp.solve_anisotropic_poisson(SpectralField(grid, np.zeros(grid.spectral_shape)), 0.2)
    assert np.max(np.abs(p.coeffs)) == 0.0


def test_anisotropic_poisson_rejects_mean(grid):
    rhs = sp.transform(Field(grid, np.ones(grid.shape)))
    with pytest.raises(ConstraintViolation):
        sp.solve_anisotropic_poisson(rhs, 1.0)
    with pytest.raises(ValueError):
        sp.solve_anisotropic_poisson(sp.transform(Field(grid, np.zeros(grid.shape))), 0.0)


@pytest.mark.parametrize("tau", [1.0, 0.1, 0.01])
def test_operator_inverts_solve(grid, tau):
    rng = np.random.default_rng(11)
    f = random_field(rng, grid)
    c = sp.fwd(grid, f.values)
    c[0, 0, 0] = 0.0
    rhs = SpectralField(grid, c)
    back = sp.apply_anisotropic_laplacian(sp.solve_anisotropic_poisson(rhs, tau), tau)
    assert np.max(np.abs(back.coeffs - c)) <= 1e-10 * np.max(np.abs(c))


def _horizontal(grid, fn):
    X, Y = grid.mesh2()
    return sp.transform(Field(grid, fn(X, Y)))


def test_horizontal_poisson_examples(grid):
    X, Y = grid.mesh2()
    q = sp.transform(sp.solve_horizontal_poisson_zero_mean(_horizontal(grid, lambda x, y: np.cos(x))), "inverse")
    assert np.max(np.abs(q.values - np.cos(X))) < 1e-14
    q = sp.solve_horizontal_poisson_zero_mean(SpectralField(grid, np.zeros(grid.spectral_shape2)))
    assert np.max(np.abs(q.coeffs)) == 0.0
    rhs = _horizontal(grid, lambda x, y: np.cos(x) + 4 * np.cos(2 * y))
    q = sp.transform(sp.solve_horizontal_poisson_zero_mean(rhs), "inverse")
    assert np.max(np.abs(q.values - np.cos(X) - np.cos(2 * Y))) < 1e-14


def test_horizontal_poisson_checks(grid):
    with pytest.raises(ConstraintViolation):
        sp.solve_horizontal_poisson_zero_mean(_horizontal(grid, lambda x, y: 1.0 + 0 * x))
    with pytest.raises(GridMismatch):
        sp.solve_horizontal_poisson_zero_mean(SpectralField(grid, np.zeros(grid.spectral_shape)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), tau=st.floats(0.01, 2.0))
def test_poisson_round_trip_property(seed, tau):
    g = Grid(8, 8, 8)
    rng = np.random.default_rng(seed)
    c = sp.fwd(g, random_field(rng, g).values)
    c[0, 0, 0] = 0.0
    p = sp.solve_anisotropic_poisson(SpectralField(g, c), tau)
    back = sp.apply_anisotropic_laplacian(p, tau).coeffs
    assert np.max(np.abs(back - c)) <= 1e-10 * max(1.0, np.max(np.abs(c)))
