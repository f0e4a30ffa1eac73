import numpy as np
import pytest

from mfglab import backend
from mfglab import kernels_numpy


numba_available = True
try:
    from mfglab import kernels_numba
except ImportError:
    numba_available = False

needs_numba = pytest.mark.skipif(not numba_available, reason="numba not installed")


@pytest.fixture(autouse=True)
def restore_backend():
    previous = backend.active_backend()
    yield
    backend.set_backend(previous)


def test_set_backend_validates_name():
    with pytest.raises(ValueError, match="unknown backend"):
        backend.set_backend("fortran")


def test_numpy_backend_always_available():
    assert backend.set_backend("numpy") == "numpy"
    assert backend.active_backend() == "numpy"
    assert backend.kernels() is kernels_numpy


@needs_numba
def test_auto_prefers_numba():
    assert backend.set_backend("auto") == "numba"
    assert backend.kernels() is kernels_numba


@needs_numba
def test_backends_agree_elementwise(rng):
    h = 1.0 / 32
    f1 = rng.standard_normal(32)
    f2 = rng.standard_normal((32, 32))
    v1 = rng.standard_normal((1, 32))
    v2 = rng.standard_normal((2, 32, 32))
    pairs = [
        ("gradient_1d", (f1, h)),
        ("gradient_2d", (f2, h)),
        ("laplacian_1d", (f1, h)),
        ("laplacian_2d", (f2, h)),
        ("divergence_faces_1d", (v1, h)),
        ("divergence_faces_2d", (v2, h)),
        ("upwind_divergence_1d", (f1, v1, h)),
        ("upwind_divergence_2d", (f2, v2, h)),
        ("central_divergence_1d", (f1, v1, h)),
        ("central_divergence_2d", (f2, v2, h)),
    ]
    backend.warm_up()
    for name, args in pairs:
        got = getattr(kernels_numba, name)(*args)
        want = getattr(kernels_numpy, name)(*args)
        assert np.allclose(got, want, rtol=0.0, atol=1e-13), name


@needs_numba
def test_solver_results_match_across_backends():
    from mfglab import MfgProblem, SolverConfig, TorusGrid, make_kernel
    from mfglab import make_nonconvex_sine, solve_mfg

    grid = TorusGrid(dim=1, n=32, t_final=0.5, nt=40)
    x = grid.coords()[0]
    mT = 1.0 + 0.5 * np.cos(2 * np.pi * x)
    mT = mT / grid.integrate(mT)
    problem = MfgProblem(
        grid=grid,
        hamiltonian=make_nonconvex_sine(c=0.02, dim=1),
        kernel=make_kernel(grid, width=0.25),
        u0=0.1 * np.cos(2 * np.pi * x),
        m_terminal=mT,
    )
    cfg = SolverConfig(theta=0.5, tol=1e-9, max_iter=50)
    results = {}
    for name in ("numpy", "numba"):
        backend.set_backend(name)
        sol = solve_mfg(problem, cfg)
        assert sol.converged
        results[name] = (sol.u, sol.m, sol.iterations)
    assert results["numpy"][2] == results["numba"][2]
    assert np.allclose(results["numpy"][0], results["numba"][0], atol=1e-12)
    assert np.allclose(results["numpy"][1], results["numba"][1], atol=1e-12)
