"""Monte-Carlo consistency and efficiency checks for the location family."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datagen import gen_mean
from .kmm import KMMConfig, fit_kmm
from .models import mean_model


@dataclass
class AsymptoticsReport:
    n_grid: tuple[int, ...]
    replications: int
    mse: dict  # n -> mean squared parameter error
    slope: float  # of log mse vs log n
    intercept: float
    var_scaled: float  # Var(sqrt(n) (theta_hat - theta0)) at the largest n
    xi0: float  # efficiency bound; Var(X) for the location family
    var_ratio: float
    seed: int

    def passes(self, slope_range=(-1.3, -0.7), var_rtol=0.25) -> bool:
        return (
            slope_range[0] <= self.slope <= slope_range[1]
            and abs(self.var_ratio - 1.0) <= var_rtol
        )


def _kmm_mean_config(n: int, seed: int, max_iters: int) -> KMMConfig:
    # chi-squared divergence + empirical reference + full batches make the
    # saddle a deterministic quadratic game whose argmin is the sample mean
    return KMMConfig(
        model=mean_model(1),
        divergence="chi2",
        epsilon=1.0,
        lam=0.0,
        n_rff=32,
        instrument="const",
        reference="empirical",
        batch_n1=n,
        batch_n2=n,
        lr_theta=0.1,
        lr_beta=0.1,
        max_iters=max_iters,
        update="ogda",
        eval_every=max(50, max_iters // 10),
        metric="moment_norm",
        seed=seed,
    )


def kmm_mean_fit(train, seed: int = 0, max_iters: int = 800) -> np.ndarray:
    """Saddle-point fit of the location parameter; converges to the sample mean."""
    res = fit_kmm(train, _kmm_mean_config(train.n, seed, max_iters))
    return res.theta


def asymptotics_check(
    n_grid: tuple[int, ...] = (250, 500, 1000, 2000),
    replications: int = 200,
    seed: int = 0,
    mu: float = 0.0,
    sigma: float = 2.0,
    max_iters: int = 800,
) -> AsymptoticsReport:
    """Rate (slope of log MSE vs log n) and scaled-variance checks against Xi0 = Var(X)."""
    if replications < 2:
        raise ValueError("need at least 2 replications")
    data_seeds = np.random.SeedSequence(seed).generate_state(len(n_grid) * replications, dtype=np.uint32)
    mse: dict[int, float] = {}
    var_scaled = np.nan
    for i, n in enumerate(n_grid):
        errs = np.empty(replications)
        for r in range(replications):
            ds = gen_mean(n, int(data_seeds[i * replications + r]), mu=mu, sigma=sigma)
            theta = kmm_mean_fit(ds, seed=0, max_iters=max_iters)
            errs[r] = theta[0] - mu
        mse[n] = float(np.mean(errs**2))
        if n == max(n_grid):
            var_scaled = float(n * np.var(errs, ddof=1))
    logn = np.log(np.asarray(n_grid, dtype=float))
    logm = np.log(np.asarray([mse[n] for n in n_grid]))
    slope, intercept = np.polyfit(logn, logm, 1)
    xi0 = sigma**2
    return AsymptoticsReport(
        n_grid=tuple(n_grid),
        replications=replications,
        mse=mse,
        slope=float(slope),
        intercept=float(intercept),
        var_scaled=var_scaled,
        xi0=float(xi0),
        var_ratio=float(var_scaled / xi0),
        seed=seed,
    )
