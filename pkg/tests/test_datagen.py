import numpy as np
import pytest

from moment_forge.datagen import (
    NETWORK_DESIGNS,
    gen_hetero_iv,
    gen_mean,
    gen_network_iv,
    hetero_iv_test_mse,
    network_iv_test_mse,
    network_true_g,
)
from moment_forge.models import HETERO_THETA0, hetero_g


def test_hetero_iv_shapes_and_bounds():
    ds = gen_hetero_iv(300, seed=0)
    assert ds.x.shape == (300, 2)
    assert ds.z.shape == (300, 2)
    assert np.all(np.abs(ds.z) <= 5.0)


def test_hetero_iv_deterministic():
    a = gen_hetero_iv(100, seed=7)
    b = gen_hetero_iv(100, seed=7)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.z, b.z)
    c = gen_hetero_iv(100, seed=8)
    assert not np.array_equal(a.x, c.x)


def test_hetero_iv_treatment_moments():
    # t = 0.75*(z1 + |z2|) + 0.25*(5h + 0.2w) with z ~ U[-5,5]^2:
    # E[t] = 0.75 * 2.5, Var(t) = 0.5625*(100/12 + 25/12) + 0.0625*(25 + 0.04).
    t = gen_hetero_iv(200_000, seed=1).x[:, 0]
    assert t.mean() == pytest.approx(1.875, abs=0.02)
    assert t.var() == pytest.approx(0.5625 * 125 / 12 + 0.0625 * 25.04, abs=0.08)


def test_hetero_iv_treatment_is_endogenous():
    ds = gen_hetero_iv(100_000, seed=2)
    t, y = ds.x[:, 0], ds.x[:, 1]
    resid = y - hetero_g(HETERO_THETA0, t)
    assert abs(resid.mean()) < 0.05
    # cov(resid, t) = 0.25 * 25 = 6.25: the 5h shock enters both t and y.
    assert np.cov(resid, t)[0, 1] == pytest.approx(6.25, abs=0.3)
    # the instruments stay clean of the shock
    assert abs(np.cov(resid, ds.z[:, 0])[0, 1]) < 0.1


def test_hetero_iv_test_mse_anchors():
    assert hetero_iv_test_mse(HETERO_THETA0) == 0.0
    # g is theta2 plus terms free of theta2, so a delta shift moves g by delta.
    delta = 0.37
    shifted = HETERO_THETA0 + np.array([0.0, delta, 0.0, 0.0])
    assert hetero_iv_test_mse(shifted) == pytest.approx(delta**2, rel=1e-12)


def test_network_true_g_values():
    g_step = network_true_g("step")
    assert np.array_equal(g_step(np.array([-1.0, 0.0, 2.0])), [0.0, 1.0, 1.0])
    assert network_true_g("abs")(-3.0) == 3.0
    assert network_true_g("linear")(np.array([1.5]))[0] == 1.5
    assert network_true_g("sin")(np.pi / 2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        network_true_g("cubic")


def test_network_iv_shapes_and_instrument_range():
    for design in NETWORK_DESIGNS:
        ds = gen_network_iv(design, 50, seed=0)
        assert ds.x.shape == (50, 2)
        assert ds.z.shape == (50, 1)
        assert np.all(np.abs(ds.z) <= 3.0)


def test_network_iv_noiseless_recovers_structural_function():
    for design in NETWORK_DESIGNS:
        ds = gen_network_iv(design, 40, seed=3, noiseless=True)
        t, y = ds.x[:, 0], ds.x[:, 1]
        assert np.array_equal(t, ds.z[:, 0])
        assert np.allclose(y, network_true_g(design)(t))


def test_network_iv_endogeneity_and_instrument_validity():
    ds = gen_network_iv("abs", 100_000, seed=4)
    t, y = ds.x[:, 0], ds.x[:, 1]
    resid = y - np.abs(t)
    # resid = e + delta and t = z + e + gamma share the unit-variance e.
    assert np.cov(resid, t)[0, 1] == pytest.approx(1.0, abs=0.05)
    assert abs(np.cov(resid, ds.z[:, 0])[0, 1]) < 0.05


def test_network_iv_noise_scale_flag():
    var_default = np.var(gen_network_iv("linear", 200_000, seed=5).x[:, 0])
    var_std = np.var(gen_network_iv("linear", 200_000, seed=5, noise_std_is_std=True).x[:, 0])
    # t = z + e + gamma: Var = 3 + 1 + Var(gamma) with Var(gamma) 0.1 vs 0.01.
    assert var_default == pytest.approx(4.1, abs=0.05)
    assert var_std == pytest.approx(4.01, abs=0.05)


def test_network_iv_test_mse_anchors():
    for design in NETWORK_DESIGNS:
        assert network_iv_test_mse(design, network_true_g(design)) == 0.0
    # zero predictor on the abs design scores E[t^2] = Var(z) + Var(e) + Var(gamma).
    mse0 = network_iv_test_mse("abs", lambda t: np.zeros_like(t))
    assert mse0 == pytest.approx(4.1, abs=0.15)
    assert network_iv_test_mse("sin", np.sin) == network_iv_test_mse("sin", np.sin)


def test_network_iv_deterministic():
    a = gen_network_iv("sin", 64, seed=11)
    b = gen_network_iv("sin", 64, seed=11)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.z, b.z)


def test_gen_mean_moments_and_shape():
    ds = gen_mean(50_000, seed=6)
    assert ds.x.shape == (50_000, 1)
    assert ds.z is None
    assert ds.x.mean() == pytest.approx(0.0, abs=0.05)
    assert ds.x.std() == pytest.approx(2.0, abs=0.05)
    shifted = gen_mean(50_000, seed=6, mu=1.5, sigma=0.5)
    assert shifted.x.mean() == pytest.approx(1.5, abs=0.02)


def test_gen_invalid_sizes():
    with pytest.raises(ValueError):
        gen_hetero_iv(0, seed=0)
    with pytest.raises(ValueError):
        gen_network_iv("abs", 0, seed=0)
