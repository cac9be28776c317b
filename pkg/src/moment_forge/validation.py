"""Model-selection metrics (HSIC, kernelized moment violation) and hyperparameter grid search."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DivergedError, MomentForgeError
from .kernels import KernelSpec, gram, median_bandwidth_or
from .models import MomentModel


def hsic(
    residuals: np.ndarray,
    conditioning: np.ndarray,
    kernels: tuple[KernelSpec, KernelSpec] | None = None,
) -> float:
    """Biased HSIC estimate (1/n^2) tr(K H L H) between residual and conditioning rows.

    Bandwidths default to each input's own median heuristic.
    """
    r = np.asarray(residuals, dtype=float)
    c = np.asarray(conditioning, dtype=float)
    r = r[:, None] if r.ndim == 1 else r
    c = c[:, None] if c.ndim == 1 else c
    n = r.shape[0]
    if n < 4:
        raise ValueError(f"hsic needs at least 4 rows, got {n}")
    if c.shape[0] != n:
        raise ValueError("residuals and conditioning must have the same number of rows")
    if kernels is None:
        spec_r = KernelSpec(median_bandwidth_or(r), r.shape[1])
        spec_c = KernelSpec(median_bandwidth_or(c), c.shape[1])
    else:
        spec_r, spec_c = kernels
    k = gram(r, r, spec_r)
    l = gram(c, c, spec_c)
    kc = k - k.mean(axis=0, keepdims=True)
    kc -= kc.mean(axis=1, keepdims=True)
    return float(np.einsum("ij,ji->", kc, l)) / n**2


def mmr_metric(model: MomentModel, theta: np.ndarray, dataset: Dataset, kernel: KernelSpec | None = None,
               batch_size: int = 2000) -> float:
    """V-statistic (1/n^2) sum_ij psi_i' psi_j k(z_i, z_j), averaged over batched partitions.

    Datasets at most `batch_size` rows are scored in one piece, so the metric
    equals the corresponding fit objective exactly there.
    """
    if dataset.z is None:
        raise ValueError("mmr metric needs a conditioning block z")
    if kernel is None:
        kernel = KernelSpec(median_bandwidth_or(dataset.z), dataset.z_dim)
    n = dataset.n
    vals = []
    for start in range(0, n, batch_size):
        zb = dataset.z[start : start + batch_size]
        psi = model.evaluate(dataset.x[start : start + batch_size], theta)
        k = gram(zb, zb, kernel)
        vals.append(float(np.einsum("im,ij,jm->", psi, k, psi)) / zb.shape[0] ** 2)
    return float(np.mean(vals))


def config_key(config) -> str:
    """Canonical sort key for tie-breaking between equally scored grid cells."""
    if hasattr(config, "__dataclass_fields__"):
        from dataclasses import asdict

        config = asdict(config)
    return json.dumps(config, sort_keys=True, default=str)


@dataclass
class GridResult:
    best_config: object
    best_index: int
    best_score: float
    best_fit: object
    report: list[dict]


def grid_search(candidate_configs, train: Dataset, val: Dataset, metric: str = "hsic") -> GridResult:
    """Fit every candidate on `train`, score on `val`, return the argmin cell.

    Ties break on the lexicographically smallest canonical config key. Cells
    that raise are scored +inf with the error recorded; if every cell fails the
    whole search raises with the per-cell report attached.
    """
    candidates = list(candidate_configs)
    if not candidates:
        raise ValueError("grid_search needs at least one candidate")
    from .kmm import fit_kmm, score_fit  # late import: kmm builds on the optimizer stack

    report = []
    for i, cand in enumerate(candidates):
        row = {"index": i, "key": config_key(cand)}
        try:
            fit_res = fit_kmm(train, cand, val=val)
            row["score"] = score_fit(cand, fit_res, val, metric)
            row["fit"] = fit_res
        except MomentForgeError as exc:
            row["score"] = float("inf")
            row["error"] = f"{type(exc).__name__}: {exc}"
        report.append(row)
    finite = [r for r in report if np.isfinite(r["score"])]
    if not finite:
        err = DivergedError("every grid cell failed")
        err.trace = report
        raise err
    best = min(finite, key=lambda r: (r["score"], r["key"]))
    return GridResult(
        best_config=candidates[best["index"]],
        best_index=best["index"],
        best_score=best["score"],
        best_fit=best["fit"],
        report=report,
    )
