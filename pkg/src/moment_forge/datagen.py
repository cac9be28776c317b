"""Synthetic benchmark generators and their ground-truth regression functions."""
from __future__ import annotations

import numpy as np

from .data import Dataset
from .models import HETERO_THETA0, hetero_g, softplus

NETWORK_DESIGNS = ("sin", "abs", "linear", "step")


def gen_hetero_iv(n: int, seed: int) -> Dataset:
    """Endogenous-treatment design with heteroskedastic noise.

    z ~ U([-5,5]^2); t mixes an exogenous part z1 + |z2| with an endogenous
    5*h + 0.2*w part (h also shifts y); y = g(t; theta0) + 5h + s*e with
    s = 0.1 * log(1 + exp(t_exo)).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.uniform(-5.0, 5.0, size=(n, 2))
    h = rng.standard_normal(n)
    w = rng.standard_normal(n)
    e = rng.standard_normal(n)
    t_exo = z[:, 0] + np.abs(z[:, 1])
    t_endo = 5.0 * h + 0.2 * w
    t = 0.75 * t_exo + 0.25 * t_endo
    s = 0.1 * softplus(t_exo)
    y = hetero_g(HETERO_THETA0, t) + 5.0 * h + s * e
    return Dataset(x=np.column_stack([t, y]), z=z)


def hetero_iv_test_mse(theta_hat: np.ndarray, n_test: int = 20000, seed: int = 10**6) -> float:
    """E[(g(T; theta_hat) - g(T; theta0))^2] over a fresh draw of the treatment marginal."""
    t = gen_hetero_iv(n_test, seed).x[:, 0]
    diff = hetero_g(np.asarray(theta_hat, dtype=float), t) - hetero_g(HETERO_THETA0, t)
    return float(np.mean(diff**2))


def network_true_g(design: str):
    """Ground-truth regression function for the network-IV designs."""
    if design == "sin":
        return np.sin
    if design == "abs":
        return np.abs
    if design == "linear":
        return lambda t: np.asarray(t, dtype=float)
    if design == "step":
        return lambda t: (np.asarray(t, dtype=float) >= 0).astype(float)
    raise ValueError(f"unknown network design {design!r}; expected one of {NETWORK_DESIGNS}")


def gen_network_iv(
    design: str,
    n: int,
    seed: int,
    noise_std_is_std: bool = False,
    noiseless: bool = False,
) -> Dataset:
    """One-dimensional IV design y = g0(t) + e + delta, t = z + e + gamma.

    z ~ U([-3,3]), e ~ N(0,1); gamma, delta are centered Gaussians with
    variance 0.1 by default (`noise_std_is_std=True` reads 0.1 as the std).
    """
    g0 = network_true_g(design)
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.uniform(-3.0, 3.0, size=n)
    e = rng.standard_normal(n)
    scale = 0.1 if noise_std_is_std else np.sqrt(0.1)
    gamma = scale * rng.standard_normal(n)
    delta = scale * rng.standard_normal(n)
    if noiseless:
        e = gamma = delta = np.zeros(n)
    t = z + e + gamma
    y = g0(t) + e + delta
    return Dataset(x=np.column_stack([t, y]), z=z[:, None])


def network_iv_test_mse(
    design: str, predict, n_test: int = 20000, seed: int = 10**6
) -> float:
    """E[(g_hat(t) - g0(t))^2] over the test marginal of t; `predict` maps (n,) -> (n,)."""
    ds = gen_network_iv(design, n_test, seed)
    t = ds.x[:, 0]
    diff = np.asarray(predict(t), dtype=float) - network_true_g(design)(t)
    return float(np.mean(diff**2))


def gen_mean(n: int, seed: int, mu: float = 0.0, sigma: float = 2.0) -> Dataset:
    """Scalar location family x ~ N(mu, sigma^2); no conditioning block."""
    rng = np.random.default_rng(seed)
    return Dataset(x=(mu + sigma * rng.standard_normal(n))[:, None])
