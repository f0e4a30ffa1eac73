import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfglab import (
    DiscreteGame,
    GameHasNoValueError,
    check_uniqueness_smallness,
    derivative_bound_report,
    game_hamiltonian,
    isaacs_lower,
    isaacs_upper,
    make_drift_plus,
    make_nonconvex_sine,
    make_zero,
)


def brute_force_values(f_table, h_table, p):
    """Reference minimax by explicit double loop."""
    na, nb = h_table.shape
    pay = np.empty((na, nb))
    for a in range(na):
        for b in range(nb):
            pay[a, b] = -np.dot(f_table[a, b], p) - h_table[a, b]
    lower = min(max(pay[a, b] for b in range(nb)) for a in range(na))
    upper = max(min(pay[a, b] for a in range(na)) for b in range(nb))
    return lower, upper


def test_sine_model_derivatives_and_constant():
    hm = make_nonconvex_sine(c=0.1, dim=1)
    p = np.linspace(-4, 4, 9)[None]
    assert np.allclose(hm.value(p), 0.05 * np.sin(p[0]))
    assert np.allclose(hm.grad(p)[0], 0.05 * np.cos(p[0]))
    assert hm.c0 == pytest.approx(0.1)  # (c/2)(sqrt(1)+1) = c
    hm2 = make_nonconvex_sine(c=0.1, dim=2)
    assert hm2.c0 == pytest.approx(0.05 * (math.sqrt(2) + 1))


def test_sine_model_is_nonconvex():
    # second derivative changes sign on a momentum interval
    hm = make_nonconvex_sine(c=0.2, dim=1)
    p = np.linspace(-3, 3, 101)[None]
    d2 = np.gradient(hm.grad(p)[0], p[0])
    assert d2.min() < -1e-3 and d2.max() > 1e-3


def test_certified_bound_dominates_observed_derivatives():
    for hm in (make_nonconvex_sine(0.3, 1), make_nonconvex_sine(0.17, 2)):
        samples = np.stack([np.linspace(-3, 3, 41)] * hm.dim)
        report = derivative_bound_report(hm, samples)
        assert report["observed"] <= hm.c0 * 1.05
        assert report["ok"]


def test_drift_model_shifts_gradient_but_not_c0():
    k = make_nonconvex_sine(c=0.04, dim=1)
    hm = make_drift_plus(b=[0.7], k=k)
    p = np.array([[0.3, -1.2]])
    assert np.allclose(hm.value(p), 0.7 * p[0] + k.value(p))
    assert np.allclose(hm.grad(p), 0.7 + k.grad(p))
    assert hm.c0 == k.c0
    assert np.allclose(hm.drift, [0.7])


def test_zero_model():
    hm = make_zero(2)
    p = np.ones((2, 5))
    assert np.all(hm.value(p) == 0.0)
    assert np.all(hm.grad(p) == 0.0)
    assert hm.c0 == 0.0


def test_smallness_threshold():
    hm = make_nonconvex_sine(c=0.02, dim=1)
    report = check_uniqueness_smallness(hm, m_cap=4.0)
    assert report.holds and report.threshold == pytest.approx(1 / 48)
    assert not check_uniqueness_smallness(hm, m_cap=5.0).holds  # 0.02 >= 1/60


def test_smallness_rejects_sub_unit_cap():
    hm = make_zero(1)
    with pytest.raises(ValueError):
        check_uniqueness_smallness(hm, m_cap=0.5)


# -- finite games -------------------------------------------------------------


def test_game_validation():
    with pytest.raises(ValueError):
        DiscreteGame(f_table=np.zeros((2, 2)), h_table=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        DiscreteGame(f_table=np.zeros((2, 2, 1)), h_table=np.zeros((3, 2)))
    with pytest.raises(ValueError):
        DiscreteGame(f_table=np.full((2, 2, 1), np.inf), h_table=np.zeros((2, 2)))


def test_isaacs_matches_brute_force_oracle(rng):
    for _ in range(200):
        na, nb = rng.integers(1, 5, size=2)
        f = rng.standard_normal((na, nb, 1))
        h = rng.standard_normal((na, nb))
        game = DiscreteGame(f_table=f, h_table=h)
        p = rng.standard_normal(1)
        lower_ref, upper_ref = brute_force_values(f, h, p)
        assert isaacs_lower(game, p) == pytest.approx(lower_ref, abs=1e-13)
        assert isaacs_upper(game, p) == pytest.approx(upper_ref, abs=1e-13)


def test_upper_never_exceeds_lower(rng):
    # weak duality, exact in exact arithmetic
    for _ in range(1000):
        na, nb = rng.integers(1, 6, size=2)
        dim = int(rng.integers(1, 3))
        game = DiscreteGame(
            f_table=rng.standard_normal((na, nb, dim)),
            h_table=rng.standard_normal((na, nb)),
        )
        for _ in range(10):
            p = rng.standard_normal(dim)
            assert isaacs_upper(game, p) <= isaacs_lower(game, p) + 1e-14


@given(
    st.integers(1, 4),
    st.integers(1, 4),
    st.integers(0, 10**6),
    st.floats(-5, 5),
)
@settings(max_examples=60, deadline=None)
def test_separable_games_have_a_value(na, nb, seed, p_val):
    # f and h that split as fa + fb make minimax and maximin coincide
    r = np.random.default_rng(seed)
    fa, fb = r.standard_normal(na), r.standard_normal(nb)
    ha, hb = r.standard_normal(na), r.standard_normal(nb)
    f = (fa[:, None] + fb[None, :])[..., None]
    h = ha[:, None] + hb[None, :]
    game = DiscreteGame(f_table=f, h_table=h)
    p = np.array([p_val])
    assert isaacs_lower(game, p) == pytest.approx(isaacs_upper(game, p), abs=1e-14)


def test_singleton_game_value_is_linear():
    game = DiscreteGame(f_table=np.array([[[1.5]]]), h_table=np.array([[0.25]]))
    p = np.array([2.0])
    assert isaacs_lower(game, p) == pytest.approx(-1.5 * 2.0 - 0.25)
    assert isaacs_upper(game, p) == pytest.approx(-1.5 * 2.0 - 0.25)


def test_matching_pennies_dynamics_have_a_gap():
    game = DiscreteGame(
        f_table=np.array([[[1.0], [-1.0]], [[-1.0], [1.0]]]),
        h_table=np.zeros((2, 2)),
    )
    p = np.array([1.0])
    gap = isaacs_lower(game, p) - isaacs_upper(game, p)
    assert gap > 0.5
    with pytest.raises(GameHasNoValueError):
        game_hamiltonian(game, np.array([[1.0, 2.0]]))


def test_game_hamiltonian_on_separable_game():
    r = np.random.default_rng(5)
    fa, fb = r.standard_normal(3), r.standard_normal(2)
    ha, hb = r.standard_normal(3), r.standard_normal(2)
    game = DiscreteGame(
        f_table=(fa[:, None] + fb[None, :])[..., None],
        h_table=ha[:, None] + hb[None, :],
    )
    samples = np.linspace(-2, 2, 41)[None]
    hm = game_hamiltonian(game, samples)
    assert hm.dim == 1
    assert not hm.c0_certified
    vals = np.array([isaacs_lower(game, np.array([p])) for p in samples[0]])
    assert np.allclose(hm.value(samples), vals)
    # value is piecewise linear in p with slopes -f, so |grad| <= max|f|
    assert np.max(np.abs(hm.grad(samples))) <= np.max(np.abs(game.f_table)) + 1e-6


def test_game_json_round_trip(tmp_path):
    game = DiscreteGame(
        f_table=np.array([[[0.5], [1.0]], [[-1.0], [0.0]]]),
        h_table=np.array([[0.1, 0.2], [0.3, 0.4]]),
    )
    path = tmp_path / "game.json"
    game.save(path)
    back = DiscreteGame.load(path)
    assert np.array_equal(back.f_table, game.f_table)
    assert np.array_equal(back.h_table, game.h_table)


def test_game_scalar_f_accepted_for_dim_one():
    doc = {"dim": 1, "f": [[0.5, -0.5]], "h": [[0.0, 1.0]]}
    game = DiscreteGame.from_json_dict(doc)
    assert game.f_table.shape == (1, 2, 1)
