"""Moment functions psi(x; theta) with analytic parameter Jacobians."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.special import expit

from . import nets


def softplus(u: np.ndarray) -> np.ndarray:
    """log(1 + e^u) via the overflow-safe branch max(u, 0) + log1p(e^-|u|)."""
    u = np.asarray(u, dtype=float)
    return np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))


@dataclass(frozen=True, eq=False)
class MomentModel:
    """Vector moment function with evaluate (n, m) and Jacobian (n, p, m)."""

    name: str
    theta: np.ndarray  # current parameter vector, shape (p,)
    psi_dim: int
    x_dim: int
    _psi: Callable = field(repr=False)
    _jac: Callable = field(repr=False)

    @property
    def theta_dim(self) -> int:
        return self.theta.size

    def with_theta(self, theta: np.ndarray) -> "MomentModel":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != self.theta.shape:
            raise ValueError(f"theta shape {theta.shape} != {self.theta.shape}")
        return replace(self, theta=theta)

    def _rows(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.x_dim:
            raise ValueError(f"x has {x.shape[1]} columns, model {self.name!r} expects {self.x_dim}")
        return x, single

    def evaluate(self, x: np.ndarray, theta: np.ndarray | None = None) -> np.ndarray:
        """psi values; (n, m) for a matrix of rows, (m,) for a single row."""
        x, single = self._rows(x)
        th = self.theta if theta is None else np.asarray(theta, dtype=float)
        out = self._psi(th, x)
        return out[0] if single else out

    def jacobian(self, x: np.ndarray, theta: np.ndarray | None = None) -> np.ndarray:
        """d psi / d theta; (n, p, m) for a matrix of rows, (p, m) for a single row."""
        x, single = self._rows(x)
        th = self.theta if theta is None else np.asarray(theta, dtype=float)
        out = self._jac(th, x)
        return out[0] if single else out


def mean_model(dim: int = 1, theta0: np.ndarray | None = None) -> MomentModel:
    """psi(x; theta) = x - theta; the profile argmin is the sample mean."""
    theta0 = np.zeros(dim) if theta0 is None else np.asarray(theta0, dtype=float)

    def psi(theta, x):
        return x - theta

    def jac(theta, x):
        return np.broadcast_to(-np.eye(dim), (x.shape[0], dim, dim)).copy()

    return MomentModel("mean", theta0, psi_dim=dim, x_dim=dim, _psi=psi, _jac=jac)


def linear_iv_model(n_regressors: int, n_instruments: int, theta0=None) -> MomentModel:
    """Linear IV moments z * (y - w' theta); x rows are [w (p cols), y, z (q cols)]."""
    p, q = n_regressors, n_instruments
    theta0 = np.zeros(p) if theta0 is None else np.asarray(theta0, dtype=float)

    def psi(theta, x):
        w, y, z = x[:, :p], x[:, p], x[:, p + 1 :]
        return z * (y - w @ theta)[:, None]

    def jac(theta, x):
        w, z = x[:, :p], x[:, p + 1 :]
        return -w[:, :, None] * z[:, None, :]

    return MomentModel("linear_iv", theta0, psi_dim=q, x_dim=p + 1 + q, _psi=psi, _jac=jac)


def iv_residual_model(
    g: Callable, g_jac: Callable, theta0: np.ndarray, name: str, t_dim: int = 1
) -> MomentModel:
    """Scalar residual moments psi((t, y); theta) = y - g(t; theta), Jacobian -grad_theta g."""
    theta0 = np.asarray(theta0, dtype=float)

    def psi(theta, x):
        t, y = x[:, :t_dim], x[:, t_dim]
        return (y - g(theta, t))[:, None]

    def jac(theta, x):
        t = x[:, :t_dim]
        return -g_jac(theta, t)[:, :, None]

    return MomentModel(name, theta0, psi_dim=1, x_dim=t_dim + 1, _psi=psi, _jac=jac)


HETERO_THETA0 = np.array([2.0, 3.0, -0.5, 3.0])


def hetero_g(theta: np.ndarray, t: np.ndarray) -> np.ndarray:
    """theta2 + theta3 (t - theta1) + (theta4 - theta3)/2 * log(1 + e^{2(t - theta1)})."""
    t = np.asarray(t, dtype=float).reshape(-1)
    t1, t2, t3, t4 = theta
    return t2 + t3 * (t - t1) + 0.5 * (t4 - t3) * softplus(2.0 * (t - t1))


def hetero_g_jac(theta: np.ndarray, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float).reshape(-1)
    t1, t2, t3, t4 = theta
    u = 2.0 * (t - t1)
    sp, sig = softplus(u), expit(u)
    out = np.empty((t.size, 4))
    out[:, 0] = -t3 - (t4 - t3) * sig
    out[:, 1] = 1.0
    out[:, 2] = (t - t1) - 0.5 * sp
    out[:, 3] = 0.5 * sp
    return out


def hetero_iv_model(theta0: np.ndarray | None = None) -> MomentModel:
    """IV residual model for the smoothed piecewise-linear regression function."""
    theta0 = np.zeros(4) if theta0 is None else theta0
    return iv_residual_model(hetero_g, hetero_g_jac, theta0, name="hetero_iv")


@dataclass(frozen=True)
class MLPParams:
    """Flat parameters of a leaky-ReLU net with the given layer widths."""

    widths: tuple[int, ...]
    flat: np.ndarray
    slope: float = 0.2

    def __post_init__(self):
        if self.flat.size != nets.n_params(self.widths):
            raise ValueError(
                f"widths {self.widths} need {nets.n_params(self.widths)} parameters, got {self.flat.size}"
            )


def init_mlp_params(widths: tuple[int, ...], seed: int = 0, slope: float = 0.2) -> MLPParams:
    return MLPParams(widths=tuple(widths), flat=nets.init_params(tuple(widths), seed), slope=slope)


def mlp_forward(params: MLPParams, t: np.ndarray) -> np.ndarray:
    """Network output for inputs t; shape (n,) for a scalar-output net."""
    out = nets.forward(params.widths, params.slope, params.flat, t)
    return out[:, 0] if out.shape[1] == 1 else out


def mlp_param_gradient(params: MLPParams, t: np.ndarray) -> np.ndarray:
    """Per-sample gradient of the scalar output w.r.t. parameters, shape (n, p)."""
    jac = nets.per_sample_param_jac(params.widths, params.slope, params.flat, t)
    if jac.shape[2] != 1:
        raise ValueError("mlp_param_gradient expects a scalar-output network")
    return jac[:, :, 0]


def mlp_model(
    hidden: tuple[int, ...] = (20, 3), t_dim: int = 1, seed: int = 0, slope: float = 0.2
) -> MomentModel:
    """IV residual model whose regression function is a small leaky-ReLU net."""
    widths = (t_dim, *hidden, 1)
    theta0 = nets.init_params(widths, seed)

    def g(theta, t):
        return nets.forward(widths, slope, theta, t)[:, 0]

    def g_jac(theta, t):
        return nets.per_sample_param_jac(widths, slope, theta, t)[:, :, 0]

    model = iv_residual_model(g, g_jac, theta0, name="mlp", t_dim=t_dim)
    return model


_BUILDERS = {
    "mean": mean_model,
    "linear_iv": linear_iv_model,
    "hetero_iv": hetero_iv_model,
    "mlp": mlp_model,
}


def get_model(name: str, **kwargs) -> MomentModel:
    """Build a registered model by config name ("mean" | "linear_iv" | "hetero_iv" | "mlp")."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(_BUILDERS)}") from None
    return builder(**kwargs)
