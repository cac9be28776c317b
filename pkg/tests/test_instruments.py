import numpy as np
import pytest

from moment_forge.instruments import const_instrument, mlp_instrument, rff_instrument
from moment_forge.kernels import KernelSpec, rff_apply, rff_build

from helpers import central_diff


def _zmap(d=8, z_dim=2, seed=0):
    return rff_build(KernelSpec(bandwidth=1.0, input_dim=z_dim), d, seed=seed)


def test_const_broadcasts_params():
    h = const_instrument(3, value=np.array([1.0, -2.0, 0.5]))
    z = np.zeros((4, 2))
    out = h.evaluate(z)
    assert out.shape == (4, 3)
    assert np.allclose(out, [1.0, -2.0, 0.5])


def test_const_evaluate_without_z():
    h = const_instrument(2, value=np.array([1.0, 2.0]))
    out = h.evaluate(np.zeros((5, 0)))
    assert out.shape == (5, 2)


def test_rff_instrument_is_linear_in_params():
    rng = np.random.default_rng(0)
    zmap = _zmap()
    z = rng.normal(size=(6, 2))
    c1, c2 = rng.normal(size=16), rng.normal(size=16)
    h1 = rff_instrument(zmap, 2, coeffs=c1)
    h2 = rff_instrument(zmap, 2, coeffs=c2)
    hsum = rff_instrument(zmap, 2, coeffs=c1 + 2.0 * c2)
    assert np.allclose(hsum.evaluate(z), h1.evaluate(z) + 2.0 * h2.evaluate(z))


def test_rff_instrument_matches_feature_expansion():
    rng = np.random.default_rng(1)
    zmap = _zmap(d=4, z_dim=1)
    z = rng.normal(size=(5, 1))
    coeffs = rng.normal(size=8)  # 2 outputs x 4 features
    h = rff_instrument(zmap, 2, coeffs=coeffs)
    feats = rff_apply(zmap, z)
    want = feats @ coeffs.reshape(2, 4).T
    assert np.allclose(h.evaluate(z), want)


def test_mlp_instrument_seeded_nonzero_init():
    h1 = mlp_instrument(2, 1, hidden=(4,), seed=3)
    h2 = mlp_instrument(2, 1, hidden=(4,), seed=3)
    assert np.array_equal(h1.params, h2.params)
    assert np.any(h1.params != 0.0)  # zero init would zero all pairing gradients
    z = np.random.default_rng(0).normal(size=(5, 2))
    assert h1.evaluate(z).shape == (5, 1)


def test_squared_norm_zero_iff_zero_params():
    for h in (
        const_instrument(2, value=np.zeros(2)),
        rff_instrument(_zmap(), 1),
        mlp_instrument(2, 1, hidden=(3,), seed=0, params=np.zeros_like(mlp_instrument(2, 1, hidden=(3,), seed=0).params)),
    ):
        assert h.squared_norm() == 0.0
    h = const_instrument(2, value=np.array([0.0, 0.1]))
    assert h.squared_norm() == pytest.approx(0.01)
    assert np.allclose(h.squared_norm_half_grad(), h.params)


def test_weighted_pairing_grad_matches_finite_difference():
    rng = np.random.default_rng(2)
    z = rng.normal(size=(7, 2))
    psi = rng.normal(size=(7, 2))
    w = rng.normal(size=7)
    zmap = _zmap(d=5)
    cases = [
        const_instrument(2, value=rng.normal(size=2)),
        rff_instrument(zmap, 2, coeffs=rng.normal(size=10)),
        mlp_instrument(2, 2, hidden=(4,), seed=1),
    ]
    for h in cases:
        def total(params):
            hp = h.with_params(params)
            return float(np.sum(w * np.einsum("nm,nm->n", psi, hp.evaluate(z))))

        num = central_diff(total, h.params, h=1e-6)
        ana = h.weighted_pairing_grad(psi, z, w)
        assert ana.shape == h.params.shape
        assert np.allclose(ana, num, rtol=1e-6, atol=1e-8), h.kind


def test_with_params_shape_check():
    h = const_instrument(2, value=np.zeros(2))
    with pytest.raises(ValueError):
        h.with_params(np.zeros(3))


def test_output_dim_validations():
    with pytest.raises(ValueError):
        const_instrument(2, value=np.zeros(3))
    with pytest.raises(ValueError):
        rff_instrument(_zmap(d=4), 2, coeffs=np.zeros(5))
