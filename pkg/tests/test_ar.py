import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from arbary.ar import (
    ArModel,
    acov_from_psd,
    ar_to_parcor,
    ar_to_psd,
    burg_estimate,
    is_stable,
    kappa_to_theta,
    parcor_to_ar,
    poles_to_ar,
    simulate_ar,
    theta_to_kappa,
    theta_to_model,
    yule_walker,
)
from arbary.errors import DegenerateInput, InstabilityError, InvalidArgument
from arbary.spectral import Psd, make_grid, normalize



@st.composite
def kappas(draw):
    # uniform draws: structured inputs (e.g. one value repeated near 0.9)
    # make the step-down inverse exponentially ill-conditioned
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    return rng.uniform(-0.95, 0.95, draw(st.integers(1, 20)))


def test_parcor_to_ar_examples():
    assert parcor_to_ar([]).size == 0
    np.testing.assert_allclose(parcor_to_ar([0.5]), [0.5])
    np.testing.assert_allclose(parcor_to_ar([0.5, -0.2]), [0.4, -0.2], atol=1e-15)
    with pytest.raises(InstabilityError) as info:
        parcor_to_ar([0.1, 1.0])
    assert info.value.stage == 2


def test_ar_to_parcor_examples():
    np.testing.assert_allclose(ar_to_parcor([0.5]), [0.5])
    np.testing.assert_allclose(ar_to_parcor([0.4, -0.2]), [0.5, -0.2], atol=1e-15)
    with pytest.raises(InstabilityError) as info:
        ar_to_parcor([-2.5, 1.0])
    assert info.value.stage is not None
    assert not is_stable([-2.5, 1.0])


@settings(max_examples=100)
@given(kappas())
def test_parcor_round_trip(kappa):
    np.testing.assert_allclose(ar_to_parcor(parcor_to_ar(kappa)), kappa, atol=1e-10)


@given(arrays(float, st.integers(1, 12), elements=st.floats(-1e6, 1e6)))
def test_theta_to_model_is_total(theta):
    grid = make_grid(64)
    model, psd = theta_to_model(theta, 1.0, grid)
    assert np.all(np.isfinite(model.a)) and model.sigma2 > 0
    assert np.all(np.isfinite(psd.mass)) and np.all(psd.mass >= 0)
    assert abs(psd.total - 1.0) <= 1e-12


def test_theta_mass_contract(rng):
    grid = make_grid(128)
    for _ in range(100):
        theta = rng.normal(0, 2, rng.integers(1, 12))
        target = float(rng.uniform(0.1, 10))
        _, psd = theta_to_model(theta, target, grid)
        assert abs(psd.total - target) <= 1e-12 * max(1.0, target)


def test_theta_examples():
    grid = make_grid(16)
    model, psd = theta_to_model(np.zeros(5), 1.0, grid)
    np.testing.assert_array_equal(model.a, np.zeros(4))
    np.testing.assert_allclose(psd.mass, np.full(16, 1 / 16), atol=1e-16)
    model, _ = theta_to_model([0.0, 5.0], 1.0, grid)
    assert model.a[0] == pytest.approx(np.tanh(5.0))
    assert np.all(np.abs(np.roots(np.concatenate([[1.0], model.a]))) < 1)
    # theta_0 does not change the spectrum
    _, p1 = theta_to_model([3.0, 0.4, -0.3], 1.0, grid)
    _, p2 = theta_to_model([-7.0, 0.4, -0.3], 1.0, grid)
    np.testing.assert_array_equal(p1.mass, p2.mass)


def test_step_down_check_on_moderate_theta(rng):
    grid = make_grid(128)
    for _ in range(300):
        model, _ = theta_to_model(rng.normal(0, 1, rng.integers(2, 12)), 1.0, grid)
        assert model.is_stable()


def test_kappa_theta_inverse():
    kappa = np.array([0.3, -0.7, 0.95])
    np.testing.assert_allclose(theta_to_kappa(kappa_to_theta(kappa)), kappa, atol=1e-14)


def test_ar_to_psd_examples():
    np.testing.assert_allclose(ar_to_psd(ArModel([], 1.0), make_grid(4)).mass, [1, 1, 1, 1])
    grid = make_grid(64)
    psd = ar_to_psd(ArModel([-0.9], 1.0), grid)
    assert grid.points[np.argmax(psd.mass)] == 0.0
    assert psd.mass.max() == pytest.approx(100.0)
    # conjugate symmetry: bin n mirrors bin N - n (bin 0 is -pi)
    psd = ar_to_psd(ArModel(parcor_to_ar([0.3, -0.5, 0.2]), 2.0), grid)
    np.testing.assert_allclose(psd.mass[1:], psd.mass[1:][::-1], rtol=1e-12)
    with pytest.raises(InstabilityError):
        ar_to_psd(ArModel([-2.5, 1.0], 1.0), grid)


def test_yule_walker_examples():
    m = yule_walker([1.0, 0.0, 0.0], 2)
    np.testing.assert_allclose(m.a, [0, 0])
    assert m.sigma2 == 1.0
    m = yule_walker([1.0, -0.5], 1)
    np.testing.assert_allclose(m.a, [0.5])
    assert m.sigma2 == pytest.approx(0.75)
    with pytest.raises(DegenerateInput):
        yule_walker([1.0, 1.0, 1.0], 2)


def test_yule_walker_recovers_analytic_ar2():
    a1, a2, s2 = -1.2, 0.6, 1.0
    # forward Yule-Walker: r1 = -a1 r0 - a2 r1, r2 = -a1 r1 - a2 r0, r0 = -a1 r1 - a2 r2 + s2
    M = np.array([[1.0, a1, a2], [a1, 1.0 + a2, 0.0], [a2, a1, 1.0]])
    r = np.linalg.solve(M, [s2, 0.0, 0.0])
    m = yule_walker(r, 2)
    np.testing.assert_allclose(m.a, [a1, a2], atol=1e-8)
    assert m.sigma2 == pytest.approx(s2, abs=1e-8)


@pytest.mark.parametrize("order", [1, 2, 3, 4, 5, 6])
def test_consistency_loop(order, rng):
    grid = make_grid(1024)
    kappa = rng.uniform(-0.8, 0.8, order)
    model = ArModel(parcor_to_ar(kappa), 1.0)
    # Riemann-sum weighting so the cosine sum approximates the true autocovariance
    mass = ar_to_psd(model, grid).mass * grid.spacing / (2 * np.pi)
    r = acov_from_psd(Psd(grid, mass), order)
    est = yule_walker(r, order)
    assert np.max(np.abs(est.a - model.a)) <= 1e-3


def test_acov_examples():
    grid = make_grid(8)
    np.testing.assert_allclose(acov_from_psd(normalize(Psd(grid, np.ones(8))), 3), [1, 0, 0, 0], atol=1e-15)
    dc = np.zeros(8)
    dc[4] = 1.0
    np.testing.assert_allclose(acov_from_psd(Psd(grid, dc), 3), [1, 1, 1, 1])
    pair = np.zeros(8)
    pair[[3, 5]] = 0.5
    w0 = grid.points[5]
    np.testing.assert_allclose(acov_from_psd(Psd(grid, pair), 3), np.cos(np.arange(4) * w0), atol=1e-15)
    with pytest.raises(InvalidArgument):
        acov_from_psd(Psd(grid, pair), 4)


def test_burg_examples():
    x = np.random.default_rng(1).normal(size=10000)
    assert np.all(np.abs(burg_estimate(x, 4).kappa) < 0.1)
    x = simulate_ar(ArModel([-0.8], 1.0), 20000, seed=2)
    assert -0.83 <= burg_estimate(x, 1).a[0] <= -0.77
    m = burg_estimate(np.full(200, 3.0), 4)
    assert np.all(np.isfinite(m.a)) and np.isfinite(m.sigma2)
    assert abs(m.a[0]) == pytest.approx(1 - 1e-8) if m.order == 1 else True
    with pytest.raises(InvalidArgument):
        burg_estimate(np.ones(3), 4)
    with pytest.raises(DegenerateInput):
        burg_estimate(np.zeros(50), 2)


def test_burg_stability_random_signals():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=int(rng.integers(20, 400))) * rng.uniform(0.1, 10)
        if seed % 3 == 0:
            x = np.cumsum(x)  # near-unit-root input
        m = burg_estimate(x, int(rng.integers(1, 12)))
        assert np.all(np.abs(m.kappa) < 1)


def test_simulate_ar():
    m = ArModel([-0.8], 1.0)
    np.testing.assert_array_equal(simulate_ar(m, 500, 7), simulate_ar(m, 500, 7))
    x = simulate_ar(ArModel([], 1.0), 100000, 3)
    assert 0.95 <= x.var() <= 1.05
    x = simulate_ar(m, 100000, 4)
    rho = np.dot(x[1:], x[:-1]) / np.dot(x, x)
    assert 0.77 <= rho <= 0.83
    with pytest.raises(InstabilityError):
        simulate_ar(ArModel([-2.5, 1.0], 1.0), 10, 0)


def test_poles_to_ar():
    a = poles_to_ar([0.9 * np.exp(0.5j)])
    np.testing.assert_allclose(a, [-2 * 0.9 * np.cos(0.5), 0.81])
    assert poles_to_ar([]).size == 0
