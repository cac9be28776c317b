"""Stochastic gradient descent-ascent for the saddle objective, with optimistic updates."""
from __future__ import annotations

import sys
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .divergences import LOG_NAME
from .errors import BarrierViolation, DivergedError, InfeasibleError
from .kernels import rff_apply
from .models import MomentModel
from .objective import DualState, ObjectiveConfig, feasibility_gap, value_and_grads
from .reference import EMPIRICAL, ReferenceMeasure
from .validation import hsic, mmr_metric

UPDATE_KINDS = ("sgd", "momentum", "ogda", "adam", "oadam")
_BARRIER_MARGIN = 1e-3


@dataclass(frozen=True)
class AnnealSchedule:
    """epsilon_k = max(floor, epsilon0 * gamma^k); gamma = 1 freezes the schedule."""

    epsilon0: float
    gamma: float = 1.0
    floor: float = 0.0

    def __post_init__(self):
        if not self.epsilon0 > 0:
            raise ValueError("epsilon0 must be positive")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.floor < 0:
            raise ValueError("floor must be nonnegative")

    def at(self, k: int) -> float:
        return max(self.floor, self.epsilon0 * self.gamma**k)


def anneal_schedule(epsilon0: float, gamma: float = 1.0, floor: float = 0.0) -> AnnealSchedule:
    return AnnealSchedule(epsilon0=epsilon0, gamma=gamma, floor=floor)


@dataclass(frozen=True)
class GDAConfig:
    lr_theta: float = 5e-4
    lr_beta: float = 2.5e-3
    max_iters: int = 2000
    inner_steps: int = 1  # ascent steps per descent step
    update: str = "ogda"
    anneal: AnnealSchedule | None = None
    seed: int = 0
    eval_every: int = 25
    patience: int = 0  # evaluations without improvement before stopping; 0 disables
    max_backtracks: int = 20
    verbose: bool = False

    def __post_init__(self):
        if self.lr_theta <= 0 or self.lr_beta <= 0:
            raise ValueError("learning rates must be positive")
        if self.update not in UPDATE_KINDS:
            raise ValueError(f"unknown update {self.update!r}; expected one of {UPDATE_KINDS}")


@dataclass
class FitResult:
    theta: np.ndarray  # best-checkpoint parameters
    theta_final: np.ndarray
    best_metric: float
    best_iter: int
    n_iters: int
    objective_trace: np.ndarray
    metric_iters: list[int]
    metric_values: np.ndarray
    theta_trace: np.ndarray  # parameters at each recorded checkpoint
    beta_final: DualState
    backtracks: int = 0
    restorations: int = 0
    clip_events: int = 0
    epsilon_final: float = 0.0
    seed: int = 0


class _FirstOrder:
    """First-order step rule over named parameter blocks; returns lr-scaled deltas."""

    def __init__(self, kind: str, lr: float):
        self.kind, self.lr = kind, lr
        self._s: dict[str, dict] = {}

    def delta(self, grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        out = {}
        for key, g in grads.items():
            st = self._s.setdefault(key, {})
            if self.kind == "sgd":
                d = g
            elif self.kind == "momentum":
                v = 0.9 * st.get("v", 0.0) + g
                st["v"] = v
                d = v
            elif self.kind == "ogda":
                prev = st.get("g", g)
                st["g"] = g
                d = 2.0 * g - prev
            else:  # adam family
                k = st.get("k", 0) + 1
                st["k"] = k
                m = 0.9 * st.get("m", 0.0) + 0.1 * g
                v = 0.999 * st.get("v", 0.0) + 0.001 * g * g
                st["m"], st["v"] = m, v
                mhat = m / (1.0 - 0.9**k)
                vhat = v / (1.0 - 0.999**k)
                term = mhat / (np.sqrt(vhat) + 1e-8)
                if self.kind == "adam":
                    d = term
                else:  # oadam: optimistic correction on the normalized step
                    prev = st.get("t", term)
                    st["t"] = term
                    d = 2.0 * term - prev
            out[key] = self.lr * d
        return out


def _default_metric(metric, eval_ds: Dataset):
    if callable(metric):
        return metric
    name = metric
    if name is None:
        name = "hsic" if eval_ds.z is not None else "moment_norm"
    if name == "hsic":
        if eval_ds.z is None:
            raise ValueError("hsic metric needs a dataset with a conditioning block")
        return lambda model, theta, ds: hsic(model.evaluate(ds.x, theta), ds.z)
    if name == "mmr":
        return lambda model, theta, ds: mmr_metric(model, theta, ds)
    if name == "moment_norm":
        return lambda model, theta, ds: float(np.linalg.norm(model.evaluate(ds.x, theta).mean(axis=0)))
    raise ValueError(f"unknown metric {name!r}; expected hsic | mmr | moment_norm or a callable")


def fit(
    model: MomentModel,
    instrument,
    dataset: Dataset,
    reference: ReferenceMeasure,
    obj_cfg: ObjectiveConfig,
    gda_cfg: GDAConfig,
    theta0: np.ndarray | None = None,
    val: Dataset | None = None,
    metric=None,
) -> FitResult:
    """Run descent-ascent and return the best-validation-checkpoint estimate.

    Fresh mini-batches per gradient evaluation; with batch sizes >= n and an
    empirical reference the loop becomes deterministic full-batch.
    """
    rng = np.random.default_rng(gda_cfg.seed)
    theta = np.array(model.theta if theta0 is None else theta0, dtype=float)
    beta = DualState(eta=0.0, alpha=np.zeros(obj_cfg.rff_map.num_features), instrument=instrument)
    eval_ds = dataset if val is None else val
    metric_fn = _default_metric(metric, eval_ds)
    is_log = obj_cfg.divergence.name == LOG_NAME

    joint = dataset.joint()
    n = joint.shape[0]
    full_emp = obj_cfg.batch_n1 >= n
    emp_fixed = joint if full_emp else None
    emp_feat_fixed = rff_apply(obj_cfg.rff_map, joint) if full_emp else None
    full_ref = reference.kind == EMPIRICAL and obj_cfg.batch_n2 >= reference.base_sample.shape[0]
    ref_fixed = reference.base_sample if full_ref else None
    ref_feat_fixed = rff_apply(obj_cfg.rff_map, ref_fixed) if full_ref else None

    def draw_emp():
        if full_emp:
            return emp_fixed, emp_feat_fixed
        idx = rng.integers(0, n, size=obj_cfg.batch_n1)
        return joint[idx], None

    def draw_ref():
        if full_ref:
            return ref_fixed, ref_feat_fixed
        batch = reference.sample(obj_cfg.batch_n2, seed=int(rng.integers(2**63)))
        return batch, None

    stats = {"backtracks": 0, "restorations": 0, "clip_events": 0}

    def evaluate(cfg, th, bt, emp, ref, empf, reff, need_beta, need_theta):
        # a freshly drawn batch can put the current iterate past the log barrier;
        # restore strict feasibility by lowering eta before taking gradients
        try:
            return value_and_grads(th, bt, emp, ref, cfg, need_beta, need_theta,
                                   emp_features=empf, ref_features=reff), bt
        except BarrierViolation:
            if not is_log:
                raise
            gap = feasibility_gap(th, bt, ref, cfg, ref_features=reff)
            new_eta = cfg.epsilon * (1.0 - _BARRIER_MARGIN) - gap
            bt = replace(bt, eta=min(bt.eta, new_eta))
            stats["restorations"] += 1
            return value_and_grads(th, bt, emp, ref, cfg, need_beta, need_theta,
                                   emp_features=empf, ref_features=reff), bt

    def accept(cfg, th, bt, ref, reff, apply_step):
        # halve the offending step until the log barrier admits the iterate
        scale = 1.0
        for i in range(gda_cfg.max_backtracks + 1):
            cand_th, cand_bt = apply_step(scale)
            if not is_log:
                return cand_th, cand_bt
            gap = feasibility_gap(cand_th, cand_bt, ref, cfg, ref_features=reff)
            if (gap + cand_bt.eta) / cfg.epsilon < 1.0:
                stats["backtracks"] += i
                return cand_th, cand_bt
            scale *= 0.5
        raise InfeasibleError(
            f"log barrier still violated after {gda_cfg.max_backtracks} step halvings"
        )

    up_beta = _FirstOrder(gda_cfg.update, gda_cfg.lr_beta)
    up_theta = _FirstOrder(gda_cfg.update, gda_cfg.lr_theta)

    objective_trace: list[float] = []
    metric_iters: list[int] = []
    metric_values: list[float] = []
    theta_trace: list[np.ndarray] = []
    best = (np.inf, theta.copy(), 0)
    since_best = 0
    eps_k = obj_cfg.epsilon

    def checkpoint(k):
        nonlocal best, since_best
        m = float(metric_fn(model, theta, eval_ds))
        metric_iters.append(k)
        metric_values.append(m)
        theta_trace.append(theta.copy())
        if m < best[0]:
            best = (m, theta.copy(), k)
            since_best = 0
        else:
            since_best += 1
        if gda_cfg.verbose:
            obj = objective_trace[-1] if objective_trace else float("nan")
            print(f"{k}\t{obj:.8e}\t{m:.8e}", file=sys.stderr)
        return m

    checkpoint(0)
    k = 0
    for k in range(1, gda_cfg.max_iters + 1):
        eps_k = gda_cfg.anneal.at(k - 1) if gda_cfg.anneal is not None else obj_cfg.epsilon
        cfg_k = replace(obj_cfg, epsilon=eps_k) if eps_k != obj_cfg.epsilon else obj_cfg

        for _ in range(gda_cfg.inner_steps):
            emp, empf = draw_emp()
            ref, reff = draw_ref()
            res, beta = evaluate(cfg_k, theta, beta, emp, ref, empf, reff, True, False)
            stats["clip_events"] += res.n_clipped
            g = res.beta_grad
            if not (np.isfinite(res.value) and np.isfinite(g.eta)
                    and np.all(np.isfinite(g.alpha)) and np.all(np.isfinite(g.instrument_params))):
                raise DivergedError(
                    f"non-finite ascent gradient at iteration {k}",
                    trace=np.asarray(objective_trace),
                )
            d = up_beta.delta({"eta": np.asarray(g.eta), "alpha": g.alpha, "instr": g.instrument_params})

            def beta_step(s, beta=beta, d=d):
                return theta, replace(
                    beta,
                    eta=beta.eta + s * float(d["eta"]),
                    alpha=beta.alpha + s * d["alpha"],
                    instrument=beta.instrument.with_params(beta.instrument.params + s * d["instr"]),
                )

            _, beta = accept(cfg_k, theta, beta, ref, reff, beta_step)

        emp, empf = draw_emp()
        ref, reff = draw_ref()
        res, beta = evaluate(cfg_k, theta, beta, emp, ref, empf, reff, False, True)
        stats["clip_events"] += res.n_clipped
        if not np.isfinite(res.value) or not np.all(np.isfinite(res.theta_grad)):
            raise DivergedError(
                f"non-finite objective/gradient at iteration {k}",
                trace=np.asarray(objective_trace),
            )
        objective_trace.append(res.value)
        d = up_theta.delta({"theta": res.theta_grad})

        def theta_step(s, theta=theta, d=d, beta=beta):
            return theta - s * d["theta"], beta

        theta, beta = accept(cfg_k, theta, beta, ref, reff, theta_step)

        if k % gda_cfg.eval_every == 0:
            checkpoint(k)
            if gda_cfg.patience and since_best >= gda_cfg.patience:
                break

    if not metric_iters or metric_iters[-1] != k:
        checkpoint(k)

    return FitResult(
        theta=best[1],
        theta_final=theta,
        best_metric=best[0],
        best_iter=best[2],
        n_iters=k,
        objective_trace=np.asarray(objective_trace),
        metric_iters=metric_iters,
        metric_values=np.asarray(metric_values),
        theta_trace=np.asarray(theta_trace),
        beta_final=beta,
        backtracks=stats["backtracks"],
        restorations=stats["restorations"],
        clip_events=stats["clip_events"],
        epsilon_final=eps_k,
        seed=gda_cfg.seed,
    )
