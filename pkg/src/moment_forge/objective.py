"""Entropy-regularized dual saddle objective and its analytic gradients.

The dual value at (theta, beta) with beta = (eta, alpha, h) is

    mean_i alpha' phi(v_i) + eta - ||alpha||^2 / 2 - (lam/2) ||h||^2
        - eps * mean_j phi*( (alpha' phi(v_j^c) + eta - psi(x_j^c)' h(z_j^c)) / eps )

with v rows drawn from the data and v^c rows from the reference measure.
Concave in beta for every divergence; the estimator minimizes the sup over beta in theta.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .divergences import DivergenceSpec, KL_NAME
from .errors import BarrierViolation
from .instruments import Instrument
from .kernels import RFFMap, rff_apply
from .models import MomentModel


@dataclass(frozen=True, eq=False)
class DualState:
    """Dual variables: normalization multiplier eta, RFF coefficients alpha of f, instrument h."""

    eta: float
    alpha: np.ndarray
    instrument: Instrument

    def __post_init__(self):
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))


@dataclass(frozen=True, eq=False)
class BetaGrad:
    """Gradient of the objective in beta, mirroring DualState's blocks."""

    eta: float
    alpha: np.ndarray
    instrument_params: np.ndarray


@dataclass(frozen=True, eq=False)
class ObjectiveConfig:
    model: MomentModel
    divergence: DivergenceSpec
    rff_map: RFFMap  # feature map of f over joint (x, z) rows
    epsilon: float
    lam: float = 0.0
    batch_n1: int = 200
    batch_n2: int = 200
    clip: float = 50.0  # KL-only guard on conjugate arguments; 0 disables

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if self.batch_n1 < 1 or self.batch_n2 < 1:
            raise ValueError("batch sizes must be >= 1")


class ValueGrads(NamedTuple):
    value: float
    beta_grad: BetaGrad | None
    theta_grad: np.ndarray | None
    n_clipped: int
    max_t: float


def _check_batches(emp_batch, ref_batch):
    if emp_batch.shape[0] == 0 or ref_batch.shape[0] == 0:
        raise ValueError("batches must be nonempty")


def value_and_grads(
    theta: np.ndarray,
    beta: DualState,
    emp_batch: np.ndarray,
    ref_batch: np.ndarray,
    cfg: ObjectiveConfig,
    need_beta: bool = True,
    need_theta: bool = True,
    emp_features: np.ndarray | None = None,
    ref_features: np.ndarray | None = None,
) -> ValueGrads:
    """Objective value with requested gradient blocks in a single pass.

    Optional precomputed feature matrices skip rff_apply for fixed full batches.
    """
    emp_batch = np.atleast_2d(np.asarray(emp_batch, dtype=float))
    ref_batch = np.atleast_2d(np.asarray(ref_batch, dtype=float))
    _check_batches(emp_batch, ref_batch)
    div, eps, x_dim = cfg.divergence, cfg.epsilon, cfg.model.x_dim

    phi_emp = rff_apply(cfg.rff_map, emp_batch) if emp_features is None else emp_features
    phi_ref = rff_apply(cfg.rff_map, ref_batch) if ref_features is None else ref_features
    x_ref, z_ref = ref_batch[:, :x_dim], ref_batch[:, x_dim:]
    psi_ref = cfg.model.evaluate(x_ref, theta)
    h_ref = beta.instrument.evaluate(z_ref)
    pair = np.einsum("nm,nm->n", psi_ref, h_ref)
    t = (phi_ref @ beta.alpha + beta.eta - pair) / eps

    max_t = float(t.max())
    if max_t >= div.domain_upper:
        raise BarrierViolation(max_t)
    n2 = ref_batch.shape[0]
    n_clipped = 0
    tangent_excess = 0.0
    if div.name == KL_NAME and cfg.clip and max_t > cfg.clip:
        # linearize exp beyond the clip: tangent extension keeps the conjugate
        # convex and C^1, so gradients stay informative instead of overflowing
        over = t - cfg.clip
        np.maximum(over, 0.0, out=over)
        n_clipped = int(np.count_nonzero(over))
        tangent_excess = float(np.exp(cfg.clip) * over.sum() / n2)
        t = np.minimum(t, cfg.clip)

    value = float((phi_emp @ beta.alpha).mean())
    value += beta.eta - 0.5 * float(beta.alpha @ beta.alpha)
    if cfg.lam:
        value -= 0.5 * cfg.lam * beta.instrument.squared_norm()
    value -= eps * (float(np.mean(div.conjugate(t))) + tangent_excess)

    beta_grad = theta_grad = None
    if need_beta or need_theta:
        d1 = div.conjugate_d1(t)
    if need_beta:
        g_eta = 1.0 - float(d1.mean())
        g_alpha = phi_emp.mean(axis=0) - beta.alpha - (d1 @ phi_ref) / n2
        g_instr = beta.instrument.weighted_pairing_grad(psi_ref, z_ref, d1 / n2)
        if cfg.lam:
            g_instr = g_instr - cfg.lam * beta.instrument.squared_norm_half_grad()
        beta_grad = BetaGrad(eta=g_eta, alpha=g_alpha, instrument_params=g_instr)
    if need_theta:
        jac_ref = cfg.model.jacobian(x_ref, theta)  # (n2, p, m)
        jh = np.einsum("npm,nm->np", jac_ref, h_ref)
        theta_grad = (jh.T @ d1) / n2
    return ValueGrads(value, beta_grad, theta_grad, n_clipped, max_t)


def dual_objective(theta, beta, emp_batch, ref_batch, cfg) -> float:
    """Objective value only."""
    return value_and_grads(theta, beta, emp_batch, ref_batch, cfg, need_beta=False, need_theta=False).value


def grad_beta(theta, beta, emp_batch, ref_batch, cfg) -> BetaGrad:
    """Gradient blocks in (eta, alpha, instrument params)."""
    return value_and_grads(theta, beta, emp_batch, ref_batch, cfg, need_theta=False).beta_grad


def grad_theta(theta, beta, emp_batch, ref_batch, cfg) -> np.ndarray:
    """Gradient in theta; theta enters only through the pairing inside phi*."""
    return value_and_grads(theta, beta, emp_batch, ref_batch, cfg, need_beta=False).theta_grad


def feasibility_gap(theta, beta, ref_batch, cfg, ref_features=None) -> float:
    """max_j (f_j - pairing_j): the iterate satisfies t < 1 iff eta < eps - gap."""
    ref_batch = np.atleast_2d(np.asarray(ref_batch, dtype=float))
    x_dim = cfg.model.x_dim
    phi_ref = rff_apply(cfg.rff_map, ref_batch) if ref_features is None else ref_features
    psi_ref = cfg.model.evaluate(ref_batch[:, :x_dim], theta)
    h_ref = beta.instrument.evaluate(ref_batch[:, x_dim:])
    pair = np.einsum("nm,nm->n", psi_ref, h_ref)
    return float((phi_ref @ beta.alpha - pair).max())
