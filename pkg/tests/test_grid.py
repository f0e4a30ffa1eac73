import numpy as np
import pytest

from mfglab import TorusGrid
from mfglab.errors import GridMismatchError


def test_constructor_rejects_bad_parameters():
    with pytest.raises(ValueError):
        TorusGrid(dim=3, n=64, t_final=1.0, nt=10)
    with pytest.raises(ValueError):
        TorusGrid(dim=1, n=48, t_final=1.0, nt=10)  # not a power of two
    with pytest.raises(ValueError):
        TorusGrid(dim=1, n=64, t_final=-1.0, nt=10)
    with pytest.raises(ValueError):
        TorusGrid(dim=1, n=64, t_final=1.0, nt=0)


def test_basic_geometry():
    grid = TorusGrid(dim=2, n=32, t_final=0.5, nt=25)
    assert grid.h == pytest.approx(1.0 / 32)
    assert grid.dt == pytest.approx(0.02)
    assert grid.shape == (32, 32)
    assert grid.num_nodes == 1024
    t = grid.times()
    assert t[0] == 0.0 and t[-1] == pytest.approx(0.5) and len(t) == 26
    x, y = grid.coords()
    assert x.shape == (32, 32)
    assert x[0, 0] == 0.0 and y[0, 5] == pytest.approx(5 / 32)


def test_field_shape_checks():
    grid = TorusGrid(dim=1, n=16, t_final=1.0, nt=4)
    with pytest.raises(GridMismatchError):
        grid.check_field(np.zeros(17))
    with pytest.raises(GridMismatchError):
        grid.check_spacetime_field(np.zeros((4, 16)))  # needs nt+1 slices
    with pytest.raises(GridMismatchError):
        grid.check_field(np.full(16, np.nan))


def test_gradient_and_laplacian_second_order():
    # centered differences on sin(2 pi x): error should shrink like h^2
    errs_g, errs_l = [], []
    for n in (32, 64, 128):
        grid = TorusGrid(dim=1, n=n, t_final=1.0, nt=1)
        x = grid.coords()[0]
        f = np.sin(2 * np.pi * x)
        g_exact = 2 * np.pi * np.cos(2 * np.pi * x)
        l_exact = -((2 * np.pi) ** 2) * f
        errs_g.append(np.max(np.abs(grid.gradient(f)[0] - g_exact)))
        errs_l.append(np.max(np.abs(grid.laplacian(f) - l_exact)))
    for errs in (errs_g, errs_l):
        assert errs[0] / errs[1] > 3.5
        assert errs[1] / errs[2] > 3.5


def test_gradient_2d_components():
    grid = TorusGrid(dim=2, n=64, t_final=1.0, nt=1)
    x, y = grid.coords()
    f = np.sin(2 * np.pi * x) * np.cos(4 * np.pi * y)
    g = grid.gradient(f)
    assert g.shape == (2, 64, 64)
    gx = 2 * np.pi * np.cos(2 * np.pi * x) * np.cos(4 * np.pi * y)
    gy = -4 * np.pi * np.sin(2 * np.pi * x) * np.sin(4 * np.pi * y)
    assert np.max(np.abs(g[0] - gx)) < 0.1
    assert np.max(np.abs(g[1] - gy)) < 0.4


def test_integrate_matches_exact_trig_quadrature():
    # node quadrature with weight h^dim is exact for low trig polynomials
    grid = TorusGrid(dim=1, n=32, t_final=1.0, nt=1)
    x = grid.coords()[0]
    assert grid.integrate(np.ones(32)) == pytest.approx(1.0, abs=1e-14)
    assert grid.integrate(np.cos(2 * np.pi * x)) == pytest.approx(0.0, abs=1e-14)
    assert grid.integrate(np.cos(2 * np.pi * x) ** 2) == pytest.approx(0.5, abs=1e-14)


def test_integrate_batched_over_time():
    grid = TorusGrid(dim=1, n=16, t_final=1.0, nt=3)
    f = np.ones((4, 16)) * np.arange(1.0, 5.0)[:, None]
    out = grid.integrate(f)
    assert np.allclose(out, [1.0, 2.0, 3.0, 4.0])


def test_centered_gradient_is_skew_adjoint():
    # summation by parts on the torus: int f dg + int g df = 0 exactly
    grid = TorusGrid(dim=2, n=16, t_final=1.0, nt=1)
    rng = np.random.default_rng(7)
    f = rng.standard_normal(grid.shape)
    g = rng.standard_normal(grid.shape)
    for i in range(2):
        lhs = grid.integrate(f * grid.gradient(g)[i])
        rhs = -grid.integrate(g * grid.gradient(f)[i])
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_divergence_flux_telescopes():
    grid = TorusGrid(dim=2, n=16, t_final=1.0, nt=1)
    rng = np.random.default_rng(11)
    v = rng.standard_normal((2,) + grid.shape)
    assert grid.integrate(grid.divergence_flux(v)) == pytest.approx(0.0, abs=1e-12)


def test_spectral_diffusion_exact_on_single_mode():
    grid = TorusGrid(dim=1, n=64, t_final=1.0, nt=1)
    x = grid.coords()[0]
    f = np.sin(2 * np.pi * x)
    tau = 0.013
    mult = grid.diffusion_multiplier(1.0, tau, "spectral")
    out = grid.apply_multiplier(f, mult)
    exact = np.exp(-4 * np.pi**2 * tau) * f
    assert np.max(np.abs(out - exact)) < 1e-14


def test_stencil_exp_diffusion_is_positivity_preserving():
    # exp of the stencil laplacian has entrywise nonnegative action
    grid = TorusGrid(dim=1, n=32, t_final=1.0, nt=1)
    mult = grid.diffusion_multiplier(1.0, 0.05, "stencil-exp")
    delta = np.zeros(32)
    delta[5] = 1.0
    out = grid.apply_multiplier(delta, mult)
    assert np.min(out) >= -1e-15
    assert grid.integrate(out) == pytest.approx(grid.integrate(delta), abs=1e-13)


def test_diffusion_multiplier_conserves_mean():
    grid = TorusGrid(dim=2, n=16, t_final=1.0, nt=1)
    rng = np.random.default_rng(3)
    f = rng.standard_normal(grid.shape)
    for mode in ("spectral", "stencil-exp", "cn"):
        mult = grid.diffusion_multiplier(1.0, 0.02, mode)
        out = grid.apply_multiplier(f, mult)
        assert grid.integrate(out) == pytest.approx(grid.integrate(f), abs=1e-12)
