"""Gaussian kernels: Gram matrices, median-heuristic bandwidths, squared MMD, random Fourier features."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel k(u, v) = exp(-||u - v||^2 / (2 * bandwidth^2))."""

    bandwidth: float
    input_dim: int

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")


@dataclass(frozen=True, eq=False)
class RFFMap:
    """Random Fourier feature map u -> scale * cos(frequencies @ u + phases)."""

    frequencies: np.ndarray  # (num_features, input_dim)
    phases: np.ndarray  # (num_features,)
    num_features: int
    scale: float  # sqrt(2 / num_features), so ||phi(u)||^2 <= 2

    @property
    def input_dim(self) -> int:
        return self.frequencies.shape[1]


def _as_2d(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.ndim != 2:
        raise ValueError(f"expected a matrix of points, got ndim={points.ndim}")
    return points


def median_heuristic(points: np.ndarray) -> float:
    """Median pairwise Euclidean distance over distinct pairs of rows."""
    points = _as_2d(points)
    if points.shape[0] < 2:
        raise ValueError("median heuristic needs at least 2 points")
    if not np.all(np.isfinite(points)):
        raise ValueError("median heuristic needs finite points")
    med = float(np.median(pdist(points)))
    if med <= 0:
        raise ValueError("degenerate bandwidth: all points identical")
    return med


def median_bandwidth_or(points: np.ndarray, fallback: float = 1.0) -> float:
    """Median heuristic with a fallback for degenerate (constant/single-row) inputs."""
    try:
        return median_heuristic(points)
    except ValueError:
        return fallback


def gram(points_a: np.ndarray, points_b: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Gram matrix G[i, j] = k(a_i, b_j) under spec's Gaussian kernel."""
    a, b = _as_2d(points_a), _as_2d(points_b)
    if a.shape[1] != spec.input_dim or b.shape[1] != spec.input_dim:
        raise ValueError(
            f"input dim mismatch: points have {a.shape[1]}/{b.shape[1]} columns, "
            f"kernel expects {spec.input_dim}"
        )
    sq = cdist(a, b, "sqeuclidean")
    return np.exp(-sq / (2.0 * spec.bandwidth**2))


def mmd_squared(
    sample_p: np.ndarray,
    sample_q: np.ndarray,
    spec: KernelSpec,
    unbiased: bool = False,
) -> float:
    """Squared MMD estimate between two samples.

    Default is the biased V-statistic mean(Kpp) - 2 mean(Kpq) + mean(Kqq),
    clamped at zero; `unbiased=True` switches to the U-statistic (diagnostic
    only, may be negative).
    """
    p, q = _as_2d(sample_p), _as_2d(sample_q)
    if p.shape[0] == 0 or q.shape[0] == 0:
        raise ValueError("mmd_squared needs nonempty samples")
    kpp = gram(p, p, spec)
    kqq = gram(q, q, spec)
    kpq = gram(p, q, spec)
    if unbiased:
        n, m = p.shape[0], q.shape[0]
        if n < 2 or m < 2:
            raise ValueError("unbiased estimator needs at least 2 points per sample")
        term_p = (kpp.sum() - np.trace(kpp)) / (n * (n - 1))
        term_q = (kqq.sum() - np.trace(kqq)) / (m * (m - 1))
        return float(term_p + term_q - 2.0 * kpq.mean())
    val = float(kpp.mean() - 2.0 * kpq.mean() + kqq.mean())
    return max(val, 0.0)


def rff_build(spec: KernelSpec, d: int, seed: int) -> RFFMap:
    """Draw a d-feature random Fourier map approximating spec's kernel."""
    if d < 1:
        raise ValueError(f"number of features must be >= 1, got {d}")
    rng = np.random.default_rng(seed)
    freqs = rng.standard_normal((d, spec.input_dim)) / spec.bandwidth
    phases = rng.uniform(0.0, 2.0 * np.pi, size=d)
    return RFFMap(frequencies=freqs, phases=phases, num_features=d, scale=np.sqrt(2.0 / d))


def rff_apply(rff: RFFMap, points: np.ndarray) -> np.ndarray:
    """Feature matrix (n, d) for rows of `points`; a single vector maps to shape (d,)."""
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]  # one point, not a column of scalars
    if pts.ndim != 2 or pts.shape[1] != rff.input_dim:
        raise ValueError(f"point dim {pts.shape[-1] if pts.ndim else 0} != map dim {rff.input_dim}")
    feats = rff.scale * np.cos(pts @ rff.frequencies.T + rff.phases)
    return feats[0] if single else feats
