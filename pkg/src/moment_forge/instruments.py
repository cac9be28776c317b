"""Instrument functions h: Z -> R^m pairing with moment values, with squared-norm penalties."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import nets
from .kernels import RFFMap, rff_apply

CONST = "const"
RFF = "rff"
MLP = "mlp"


@dataclass(frozen=True, eq=False)
class Instrument:
    """One of: constant vector (unconditional case), RFF-linear map of z, or a small net of z."""

    kind: str
    output_dim: int
    params: np.ndarray  # flat coefficient block
    rff_map: RFFMap | None = None  # rff kind only
    widths: tuple[int, ...] | None = None  # mlp kind only, includes input/output widths
    slope: float = 0.2

    @property
    def n_params(self) -> int:
        return self.params.size

    def with_params(self, params: np.ndarray) -> "Instrument":
        params = np.asarray(params, dtype=float)
        if params.shape != self.params.shape:
            raise ValueError(f"params shape {params.shape} != {self.params.shape}")
        return replace(self, params=params)

    def _z_rows(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return z[None, :] if z.ndim == 1 else z

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """h(z) rows, shape (n, m); a single z vector maps to shape (m,)."""
        zr = self._z_rows(z)
        single = np.asarray(z).ndim == 1
        if self.kind == CONST:
            rows = zr.shape[0] if zr.ndim == 2 else 1
            out = np.broadcast_to(self.params, (rows, self.output_dim)).copy()
        elif self.kind == RFF:
            feats = rff_apply(self.rff_map, zr)
            out = feats @ self.params.reshape(self.output_dim, -1).T
        else:
            out = nets.forward(self.widths, self.slope, self.params, zr)
        return out[0] if single else out

    def squared_norm(self) -> float:
        """||h||^2 surrogate: squared Euclidean norm of the parameter block."""
        return float(self.params @ self.params)

    def squared_norm_half_grad(self) -> np.ndarray:
        """Gradient of ||h||^2 / 2 w.r.t. params."""
        return self.params.copy()

    def pairing(self, psi: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Row-wise inner products psi_j' h(z_j), shape (n,)."""
        h = self.evaluate(z)
        return np.einsum("nm,nm->n", np.atleast_2d(psi), np.atleast_2d(h))

    def weighted_pairing_grad(self, psi: np.ndarray, z: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Flat gradient of sum_j weights_j * psi_j' h(z_j) w.r.t. params."""
        psi = np.atleast_2d(np.asarray(psi, dtype=float))
        w = np.asarray(weights, dtype=float)
        cot = psi * w[:, None]  # d pairing / d h(z_j) = psi_j
        if self.kind == CONST:
            return cot.sum(axis=0)
        if self.kind == RFF:
            feats = rff_apply(self.rff_map, self._z_rows(z))
            return (cot.T @ feats).ravel()
        return nets.backprop_params(self.widths, self.slope, self.params, self._z_rows(z), cot)


def param_gradient_of_pairing(h: Instrument, psi_value: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Gradient of psi' h(z) w.r.t. instrument parameters for a single (psi, z) pair."""
    psi_value = np.asarray(psi_value, dtype=float).reshape(1, -1)
    z = np.asarray(z, dtype=float).reshape(1, -1)
    return h.weighted_pairing_grad(psi_value, z, np.ones(1))


def const_instrument(output_dim: int, value: np.ndarray | None = None) -> Instrument:
    params = np.zeros(output_dim) if value is None else np.asarray(value, dtype=float)
    if params.size != output_dim:
        raise ValueError(f"constant instrument needs {output_dim} entries, got {params.size}")
    return Instrument(kind=CONST, output_dim=output_dim, params=params)


def rff_instrument(rff_map: RFFMap, output_dim: int, coeffs: np.ndarray | None = None) -> Instrument:
    """h(z) = C phi(z) with one coefficient row per moment component."""
    n = output_dim * rff_map.num_features
    params = np.zeros(n) if coeffs is None else np.asarray(coeffs, dtype=float).ravel()
    if params.size != n:
        raise ValueError(f"rff instrument needs {n} coefficients, got {params.size}")
    return Instrument(kind=RFF, output_dim=output_dim, params=params, rff_map=rff_map)


def mlp_instrument(
    z_dim: int,
    output_dim: int,
    hidden: tuple[int, ...] = (20, 3),
    seed: int = 0,
    slope: float = 0.2,
    params: np.ndarray | None = None,
) -> Instrument:
    """Small leaky-ReLU network instrument; zero init would kill gradient flow, so it is seeded."""
    widths = (z_dim, *hidden, output_dim)
    flat = nets.init_params(widths, seed) if params is None else np.asarray(params, dtype=float)
    if flat.size != nets.n_params(widths):
        raise ValueError(f"mlp instrument widths {widths} need {nets.n_params(widths)} parameters")
    return Instrument(kind=MLP, output_dim=output_dim, params=flat, widths=widths, slope=slope)
