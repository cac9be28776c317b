"""High-level estimator facade: wire kernels, instruments, reference and optimizer from one config."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, fields, replace

import numpy as np

from .data import Dataset
from .divergences import get_divergence
from .errors import ConfigError
from .instruments import const_instrument, mlp_instrument, rff_instrument
from .kernels import KernelSpec, median_heuristic, rff_build
from .models import MomentModel
from .objective import ObjectiveConfig
from .optimizer import AnnealSchedule, FitResult, GDAConfig, fit
from .reference import empirical_reference, fit_kde, mixture_reference, uniform_box_reference
from .validation import GridResult, grid_search, hsic, mmr_metric


@dataclass(frozen=True)
class KMMConfig:
    """Everything needed to run one saddle-point fit, in config-file-friendly form."""

    model: MomentModel
    divergence: str = "kl"
    epsilon: float = 1.0
    lam: float = 0.0
    n_rff: int = 500
    instrument: str = "rff"  # const | rff | mlp
    instrument_features: int = 64
    instrument_hidden: tuple[int, ...] = (20, 3)
    reference: str = "kde"  # kde | empirical | uniform_box | mixture
    reference_sigma: float = 0.1
    reference_alpha: float = 0.05
    reference_box: tuple | None = None  # (lo, hi) rows; default = inflated data bounding box
    batch_n1: int = 200
    batch_n2: int = 200
    clip: float = 50.0
    lr_theta: float = 5e-4
    lr_beta: float = 2.5e-3
    max_iters: int = 2000
    inner_steps: int = 1
    update: str = "ogda"
    anneal_gamma: float = 1.0
    anneal_floor: float = 0.0
    anneal_start: float | None = None  # decay from here down to `epsilon` when set
    theta_init: str = "zeros"  # zeros | ols
    eval_every: int = 50
    patience: int = 0
    metric: str | None = None
    seed: int = 0
    verbose: bool = False


_INSTRUMENT_KINDS = ("const", "rff", "mlp")
_REFERENCE_KINDS = ("kde", "empirical", "uniform_box", "mixture")


def _inflated_box(rows: np.ndarray, inflate: float = 0.2):
    lo, hi = rows.min(axis=0), rows.max(axis=0)
    pad = inflate * np.maximum(hi - lo, 1e-12)
    return lo - pad / 2, hi + pad / 2


def build_components(train: Dataset, cfg: KMMConfig):
    """(instrument, reference, objective config, gda config) assembled from one config."""
    if cfg.instrument not in _INSTRUMENT_KINDS:
        raise ConfigError(f"unknown instrument kind {cfg.instrument!r}; expected {_INSTRUMENT_KINDS}")
    if cfg.reference not in _REFERENCE_KINDS:
        raise ConfigError(f"unknown reference kind {cfg.reference!r}; expected {_REFERENCE_KINDS}")
    if cfg.instrument != "const" and train.z is None:
        raise ConfigError(f"instrument kind {cfg.instrument!r} needs a dataset with z")

    joint = train.joint()
    m = cfg.model.psi_dim
    f_spec = KernelSpec(median_heuristic(joint), joint.shape[1])
    f_map = rff_build(f_spec, cfg.n_rff, seed=cfg.seed)

    if cfg.instrument == "const":
        instr = const_instrument(m)
    elif cfg.instrument == "rff":
        z_spec = KernelSpec(median_heuristic(train.z), train.z_dim)
        z_map = rff_build(z_spec, cfg.instrument_features, seed=cfg.seed + 1)
        instr = rff_instrument(z_map, m)
    else:
        instr = mlp_instrument(train.z_dim, m, hidden=tuple(cfg.instrument_hidden), seed=cfg.seed + 1)

    if cfg.reference == "kde":
        ref = fit_kde(joint, sigma=cfg.reference_sigma)
    elif cfg.reference == "empirical":
        ref = empirical_reference(joint)
    elif cfg.reference == "uniform_box":
        box = cfg.reference_box or _inflated_box(joint)
        ref = uniform_box_reference(np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float))
    else:
        ref = mixture_reference(joint, fit_kde(joint, sigma=cfg.reference_sigma), cfg.reference_alpha)

    anneal = None
    epsilon0 = cfg.epsilon
    if cfg.anneal_start is not None:
        # interior-point style: decay from anneal_start down to the target epsilon
        if cfg.anneal_start < cfg.epsilon:
            raise ConfigError(f"anneal_start {cfg.anneal_start} below target epsilon {cfg.epsilon}")
        if cfg.anneal_gamma >= 1.0 and cfg.anneal_start > cfg.epsilon:
            raise ConfigError("anneal_start needs anneal_gamma < 1 to reach the target epsilon")
        epsilon0 = cfg.anneal_start
        if cfg.anneal_start > cfg.epsilon:
            anneal = AnnealSchedule(epsilon0=cfg.anneal_start, gamma=cfg.anneal_gamma, floor=cfg.epsilon)
    elif cfg.anneal_gamma < 1.0:
        anneal = AnnealSchedule(epsilon0=cfg.epsilon, gamma=cfg.anneal_gamma, floor=cfg.anneal_floor)

    obj_cfg = ObjectiveConfig(
        model=cfg.model,
        divergence=get_divergence(cfg.divergence),
        rff_map=f_map,
        epsilon=epsilon0,
        lam=cfg.lam,
        batch_n1=cfg.batch_n1,
        batch_n2=cfg.batch_n2,
        clip=cfg.clip,
    )
    gda_cfg = GDAConfig(
        lr_theta=cfg.lr_theta,
        lr_beta=cfg.lr_beta,
        max_iters=cfg.max_iters,
        inner_steps=cfg.inner_steps,
        update=cfg.update,
        anneal=anneal,
        seed=cfg.seed,
        eval_every=cfg.eval_every,
        patience=cfg.patience,
        verbose=cfg.verbose,
    )
    return instr, ref, obj_cfg, gda_cfg


def fit_kmm(train: Dataset, cfg: KMMConfig, val: Dataset | None = None) -> FitResult:
    """One saddle-point fit on `train`, checkpoint-selected on `val` when given."""
    instr, ref, obj_cfg, gda_cfg = build_components(train, cfg)
    if cfg.theta_init == "zeros":
        theta0 = None
    elif cfg.theta_init == "ols":
        from .baselines import ols_fit  # deterministic warm start in the right basin

        theta0 = ols_fit(cfg.model, train)
    else:
        raise ConfigError(f"unknown theta_init {cfg.theta_init!r}; expected 'zeros' or 'ols'")
    return fit(cfg.model, instr, train, ref, obj_cfg, gda_cfg, theta0=theta0, val=val, metric=cfg.metric)


def score_fit(cfg: KMMConfig, result: FitResult, val: Dataset, metric: str = "hsic") -> float:
    """Score a finished fit on held-out data."""
    if metric == "hsic":
        return hsic(cfg.model.evaluate(val.x, result.theta), val.z)
    if metric == "mmr":
        return mmr_metric(cfg.model, result.theta, val)
    if metric == "moment_norm":
        return float(np.linalg.norm(cfg.model.evaluate(val.x, result.theta).mean(axis=0)))
    raise ConfigError(f"unknown metric {metric!r}")


def expand_grid(base: KMMConfig, grid: dict[str, list]) -> list[KMMConfig]:
    """Cartesian product of per-field candidate lists over a base config."""
    names = {f.name for f in fields(KMMConfig)}
    for key in grid:
        if key not in names:
            raise ConfigError(f"unknown grid key {key!r}")
    keys = sorted(grid)
    out = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        out.append(replace(base, **dict(zip(keys, combo))))
    return out


def fit_kmm_selected(
    train: Dataset,
    val: Dataset,
    base: KMMConfig,
    grid: dict[str, list] | None = None,
    metric: str = "hsic",
) -> tuple[FitResult, KMMConfig, GridResult | None]:
    """Grid-search (lambda, epsilon, ...) cells by validation metric; single fit when no grid."""
    if not grid:
        return fit_kmm(train, base, val=val), base, None
    res = grid_search(expand_grid(base, grid), train, val, metric=metric)
    return res.best_fit, res.best_config, res
