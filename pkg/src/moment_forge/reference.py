"""Reference measures for the entropy term: KDE, empirical, uniform box, and mixtures."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

KDE = "kde"
EMPIRICAL = "empirical"
UNIFORM_BOX = "uniform_box"
MIXTURE = "mixture"


@dataclass(frozen=True, eq=False)
class ReferenceMeasure:
    """Samplable reference distribution over joint data rows."""

    kind: str
    dim: int
    base_sample: np.ndarray | None = None
    sigma: float | None = None  # kde jitter std
    per_dim_scale: np.ndarray | None = None  # optional per-coordinate kde scaling
    box_lo: np.ndarray | None = None
    box_hi: np.ndarray | None = None
    alpha: float | None = None  # mixture weight on the non-empirical component
    component: Optional["ReferenceMeasure"] = None

    def sample(self, n: int, seed: int) -> np.ndarray:
        """n i.i.d. rows, deterministic per seed."""
        if n < 1:
            raise ValueError(f"sample size must be >= 1, got {n}")
        rng = np.random.default_rng(seed)
        if self.kind == KDE:
            idx = rng.integers(0, self.base_sample.shape[0], size=n)
            noise = rng.standard_normal((n, self.dim)) * self.sigma
            if self.per_dim_scale is not None:
                noise = noise * self.per_dim_scale
            return self.base_sample[idx] + noise
        if self.kind == EMPIRICAL:
            idx = rng.integers(0, self.base_sample.shape[0], size=n)
            return self.base_sample[idx].copy()
        if self.kind == UNIFORM_BOX:
            return self.box_lo + rng.random((n, self.dim)) * (self.box_hi - self.box_lo)
        # mixture: each row empirical with prob 1 - alpha, else from the component
        from_comp = rng.random(n) < self.alpha
        idx = rng.integers(0, self.base_sample.shape[0], size=n)
        out = self.base_sample[idx].copy()
        k = int(from_comp.sum())
        if k:
            out[from_comp] = self.component.sample(k, seed=int(rng.integers(2**63)))
        return out


def _base(sample) -> np.ndarray:
    sample = np.asarray(sample, dtype=float)
    if sample.ndim == 1:
        sample = sample[:, None]
    if sample.shape[0] == 0:
        raise ValueError("reference needs a nonempty base sample")
    return sample


def fit_kde(sample: np.ndarray, sigma: float = 0.1, scale_per_dim: bool = False) -> ReferenceMeasure:
    """Equal-weight Gaussian KDE on the sample rows with isotropic std sigma.

    `scale_per_dim=True` multiplies the jitter by each coordinate's sample std.
    """
    sample = _base(sample)
    if not sigma > 0:
        raise ValueError(f"kde bandwidth must be positive, got {sigma}")
    scale = sample.std(axis=0, ddof=0) if scale_per_dim else None
    return ReferenceMeasure(kind=KDE, dim=sample.shape[1], base_sample=sample, sigma=float(sigma), per_dim_scale=scale)


def empirical_reference(sample: np.ndarray) -> ReferenceMeasure:
    """Resampling (with replacement) of the rows themselves."""
    sample = _base(sample)
    return ReferenceMeasure(kind=EMPIRICAL, dim=sample.shape[1], base_sample=sample)


def uniform_box_reference(lo: np.ndarray, hi: np.ndarray) -> ReferenceMeasure:
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise ValueError("box bounds must satisfy lo < hi componentwise")
    return ReferenceMeasure(kind=UNIFORM_BOX, dim=lo.size, box_lo=lo, box_hi=hi)


def mixture_reference(sample: np.ndarray, component: ReferenceMeasure, alpha: float) -> ReferenceMeasure:
    """(1 - alpha) * empirical + alpha * component."""
    sample = _base(sample)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"mixture weight must lie in [0, 1], got {alpha}")
    if component.dim != sample.shape[1]:
        raise ValueError("mixture component dimension mismatch")
    return ReferenceMeasure(
        kind=MIXTURE, dim=sample.shape[1], base_sample=sample, alpha=float(alpha), component=component
    )
