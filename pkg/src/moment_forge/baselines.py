"""Classical baselines (OLS, CU-GMM, chi^2-GEL, kernelized moment matching) and profile oracles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.linalg import cho_factor, cho_solve

from .data import Dataset
from .divergences import CHI2, DivergenceSpec, LOG_NAME
from .errors import MomentForgeError
from .instruments import Instrument
from .kernels import KernelSpec, RFFMap, gram, median_bandwidth_or, median_heuristic, rff_apply
from .models import MomentModel


def _theta_start(model: MomentModel, theta0) -> np.ndarray:
    return np.array(model.theta if theta0 is None else theta0, dtype=float)


def ols_fit(model: MomentModel, dataset: Dataset, theta0=None) -> np.ndarray:
    """Minimize (1/n) sum ||psi(x_i; theta)||^2, ignoring any conditioning block."""
    x = dataset.x

    def val_grad(theta):
        psi = model.evaluate(x, theta)
        jac = model.jacobian(x, theta)
        v = float(np.einsum("nm,nm->", psi, psi)) / x.shape[0]
        g = 2.0 * np.einsum("npm,nm->p", jac, psi) / x.shape[0]
        return v, g

    res = optimize.minimize(val_grad, _theta_start(model, theta0), jac=True, method="L-BFGS-B",
                            options={"maxiter": 2000, "ftol": 1e-14, "gtol": 1e-12})
    if not np.all(np.isfinite(res.x)):
        raise MomentForgeError(f"ols_fit diverged: {res.message}")
    return res.x


def cu_gmm_fit(model: MomentModel, dataset: Dataset, theta0=None, ridge: float = 1e-8) -> np.ndarray:
    """Continuous-updating GMM: argmin psibar' (Omega_hat(theta) + ridge I)^-1 psibar."""
    if model.psi_dim < model.theta_dim:
        raise ValueError("cu_gmm_fit needs at least as many moments as parameters")
    x, n = dataset.x, dataset.n

    def crit(theta):
        psi = model.evaluate(x, theta)
        pbar = psi.mean(axis=0)
        omega = psi.T @ psi / n + ridge * np.eye(model.psi_dim)
        try:
            c = cho_factor(omega)
        except np.linalg.LinAlgError as exc:
            raise MomentForgeError("cu_gmm_fit: moment covariance singular after ridge") from exc
        return float(pbar @ cho_solve(c, pbar))

    res = optimize.minimize(crit, _theta_start(model, theta0), method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000, "maxfev": 20000})
    return res.x


def chi2_gel_profile(model: MomentModel, theta, dataset: Dataset) -> float:
    """sup_{eta, h} eta - (1/n) sum phi*(eta - h'psi_i) under the chi^2 conjugate.

    Closed form psibar' S^-1 psibar / 2 with S the centered second-moment matrix.
    """
    psi = model.evaluate(dataset.x, theta)
    pbar = psi.mean(axis=0)
    centered = psi - pbar
    s = centered.T @ centered / dataset.n
    try:
        c = cho_factor(s)
    except np.linalg.LinAlgError as exc:
        raise MomentForgeError("chi2_gel inner maximum diverged: singular centered covariance") from exc
    return 0.5 * float(pbar @ cho_solve(c, pbar))


def gel_implied_weights(model: MomentModel, theta, dataset: Dataset) -> np.ndarray:
    """Implied probabilities p_i = phi*'(u_i)/n at the inner optimum; they sum to one."""
    psi = model.evaluate(dataset.x, theta)
    pbar = psi.mean(axis=0)
    centered = psi - pbar
    s = centered.T @ centered / dataset.n
    h = cho_solve(cho_factor(s), pbar)
    u = -(centered @ h)  # eta* - h'psi_i with eta* = h'psibar
    return CHI2.conjugate_d1(u) / dataset.n


def chi2_gel_fit(model: MomentModel, dataset: Dataset, theta0=None) -> np.ndarray:
    """argmin_theta of the chi^2-GEL profile divergence."""
    if model.psi_dim < model.theta_dim:
        raise ValueError("chi2_gel_fit needs at least as many moments as parameters")
    res = optimize.minimize(lambda th: chi2_gel_profile(model, th, dataset),
                            _theta_start(model, theta0), method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000, "maxfev": 20000})
    return res.x


def mmr_objective(model: MomentModel, theta, dataset: Dataset, kernel_matrix: np.ndarray) -> float:
    psi = model.evaluate(dataset.x, theta)
    return float(np.einsum("im,ij,jm->", psi, kernel_matrix, psi)) / dataset.n**2


def mmr_fit(model: MomentModel, dataset: Dataset, kernel: KernelSpec | None = None, theta0=None) -> np.ndarray:
    """Minimize the V-statistic (1/n^2) sum_ij psi_i' psi_j k(z_i, z_j)."""
    if dataset.z is None:
        raise ValueError("mmr_fit needs a conditioning block z")
    if kernel is None:
        kernel = KernelSpec(median_bandwidth_or(dataset.z), dataset.z_dim)
    k = gram(dataset.z, dataset.z, kernel)
    n = dataset.n

    def val_grad(theta):
        psi = model.evaluate(dataset.x, theta)
        jac = model.jacobian(dataset.x, theta)
        kp = k @ psi
        v = float(np.einsum("nm,nm->", psi, kp)) / n**2
        g = 2.0 * np.einsum("npm,nm->p", jac, kp) / n**2
        return v, g

    res = optimize.minimize(val_grad, _theta_start(model, theta0), jac=True, method="L-BFGS-B",
                            options={"maxiter": 5000, "ftol": 1e-14, "gtol": 1e-12})
    if not np.all(np.isfinite(res.x)):
        raise MomentForgeError(f"mmr_fit diverged: {res.message}")
    return res.x


def default_constraint_grid(dataset: Dataset, n_extra: int = 256, inflate: float = 0.2, seed: int = 0) -> np.ndarray:
    """Data rows plus uniform draws over the 20%-inflated empirical bounding box."""
    x = dataset.x
    lo, hi = x.min(axis=0), x.max(axis=0)
    pad = inflate * np.maximum(hi - lo, 1e-12)
    rng = np.random.default_rng(seed)
    extra = (lo - pad / 2) + rng.random((n_extra, x.shape[1])) * (hi - lo + pad)
    return np.vstack([x, extra])


@dataclass
class ProfileReport:
    value: float
    status: str
    n_support: int
    n_data: int
    max_violation_audit: float | None = None


_SOLVERS = ("CLARABEL", "ECOS", "SCS")


def _solve_qp(problem):
    import warnings

    import cvxpy as cp

    last = None
    for name in _SOLVERS:
        if name not in cp.installed_solvers():
            continue
        try:
            with warnings.catch_warnings():
                # near-infeasible probe points trip accuracy warnings; the
                # caller inspects problem.status instead
                warnings.simplefilter("ignore", UserWarning)
                problem.solve(solver=name)
            return problem.status
        except cp.error.SolverError as exc:
            last = exc
    raise MomentForgeError(f"no conic solver could handle the profile dual: {last}")


def exact_mmd_profile(
    model: MomentModel,
    theta,
    dataset: Dataset,
    constraint_grid: np.ndarray | None = None,
    kernel: KernelSpec | None = None,
    return_report: bool = False,
    audit_factor: int = 10,
):
    """Unregularized profile value R(theta): sup over (eta, f, h) of the sampled-constraint dual.

    f ranges over the span of kernel sections at the data + grid points, and the
    constraint f(u) + eta <= psi(u; theta)' h is imposed at every such point. An
    infeasible moment set makes the dual unbounded, reported as +inf. With
    `return_report=True` also returns the max constraint violation on an
    `audit_factor`-times denser grid.
    """
    import cvxpy as cp

    x = dataset.x
    if kernel is None:
        kernel = KernelSpec(median_heuristic(x), x.shape[1])
    if constraint_grid is None:
        constraint_grid = default_constraint_grid(dataset)
    support = np.vstack([x, np.atleast_2d(constraint_grid)])
    s = support.shape[0]
    k = gram(support, support, kernel) + 1e-9 * np.eye(s)
    psi = model.evaluate(support, theta)
    q = np.zeros(s)
    q[: x.shape[0]] = 1.0 / x.shape[0]

    c = cp.Variable(s)
    eta = cp.Variable()
    h = cp.Variable(model.psi_dim)
    objective = cp.Maximize(q @ k @ c + eta - 0.5 * cp.quad_form(c, cp.psd_wrap(k)))
    constraints = [k @ c + eta - psi @ h <= 0]
    problem = cp.Problem(objective, constraints)
    status = _solve_qp(problem)

    if status in ("unbounded", "unbounded_inaccurate"):
        value = float("inf")
    elif status in ("optimal", "optimal_inaccurate"):
        value = float(problem.value)
    else:
        raise MomentForgeError(f"profile dual solve ended with status {status!r}")

    if not return_report:
        return value
    report = ProfileReport(value=value, status=status, n_support=s, n_data=x.shape[0])
    if np.isfinite(value):
        audit = default_constraint_grid(
            dataset, n_extra=audit_factor * max(s - x.shape[0], 32), seed=1
        )
        f_aud = gram(audit, support, kernel) @ c.value
        psi_aud = model.evaluate(audit, theta)
        report.max_violation_audit = float((f_aud + eta.value - psi_aud @ h.value).max())
    return value, report


def mmd_profile_primal_discrete(
    model: MomentModel,
    theta,
    support: np.ndarray,
    data_weights: np.ndarray,
    kernel: KernelSpec,
    max_iters: int = 20000,
    tol: float = 1e-14,
) -> tuple[float, np.ndarray]:
    """Primal oracle on a finite support: min_p (p - q)' K (p - q) / 2 over the
    constrained simplex {p >= 0, 1'p = 1, Psi'p = 0}, by accelerated projected
    gradient with an alternating-projection (Dykstra) feasibility step.
    """
    support = np.atleast_2d(np.asarray(support, dtype=float))
    q = np.asarray(data_weights, dtype=float)
    k = gram(support, support, kernel)
    psi = model.evaluate(support, theta)
    s = support.shape[0]

    a = np.hstack([np.ones((s, 1)), psi])  # affine constraints a' p = b
    b = np.zeros(a.shape[1])
    b[0] = 1.0
    ata_inv = np.linalg.pinv(a.T @ a)

    def proj_affine(y):
        return y - a @ (ata_inv @ (a.T @ y - b))

    def proj(y):
        # Dykstra between the affine set and the nonnegative orthant
        p, inc_a, inc_pos = y.copy(), np.zeros(s), np.zeros(s)
        for _ in range(500):
            u = proj_affine(p + inc_a)
            inc_a = p + inc_a - u
            v = np.maximum(u + inc_pos, 0.0)
            inc_pos = u + inc_pos - v
            if np.max(np.abs(v - p)) < 1e-15:
                p = v
                break
            p = v
        return p

    lip = float(np.linalg.eigvalsh(k)[-1]) + 1e-12
    p = proj(q)
    y, t_acc = p.copy(), 1.0
    val = 0.5 * float((p - q) @ k @ (p - q))
    for _ in range(max_iters):
        grad = k @ (y - q)
        p_new = proj(y - grad / lip)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc**2))
        y = p_new + ((t_acc - 1.0) / t_new) * (p_new - p)
        t_acc = t_new
        new_val = 0.5 * float((p_new - q) @ k @ (p_new - q))
        if abs(new_val - val) < tol and np.max(np.abs(p_new - p)) < 1e-10:
            p, val = p_new, new_val
            break
        p, val = p_new, new_val
    return val, p


def regularized_dual_value(
    model: MomentModel,
    theta,
    instrument: Instrument,
    data: np.ndarray,
    grid: np.ndarray,
    rff_map: RFFMap,
    divergence: DivergenceSpec,
    epsilon: float,
    x_dim: int | None = None,
    max_newton: int = 200,
    tol: float = 1e-11,
) -> float:
    """Inner sup over (eta, alpha) at frozen (theta, h), reference = uniform atoms on `grid`.

    Deterministic damped Newton on the smooth concave dual; used to trace the
    epsilon -> 0 approach to the sampled-constraint exact value.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    x_dim = model.x_dim if x_dim is None else x_dim
    phi_data = rff_apply(rff_map, data)
    phi_grid = rff_apply(rff_map, grid)
    psi_grid = model.evaluate(grid[:, :x_dim], theta)
    h_grid = instrument.evaluate(grid[:, x_dim:])
    pair = np.einsum("nm,nm->n", psi_grid, h_grid)
    d = rff_map.num_features
    ngrid = grid.shape[0]
    mean_phi = phi_data.mean(axis=0)
    u = np.hstack([np.ones((ngrid, 1)), phi_grid])  # d t_g / d (eta, alpha) * epsilon
    is_log = divergence.name == LOG_NAME

    def value(v):
        t = (u @ v - pair) / epsilon
        if is_log and t.max() >= 1.0:
            return -np.inf
        if divergence.name == "kl":
            t = np.clip(t, None, 700.0)  # exp overflow; such points lose the line search anyway
        return float(v[0] + mean_phi @ v[1:] - 0.5 * v[1:] @ v[1:]
                     - epsilon * np.mean(divergence.conjugate(t)))

    v = np.zeros(1 + d)
    v[0] = min(0.0, float(pair.min()))  # strictly feasible start for the log barrier
    fv = value(v)
    reg = np.zeros(1 + d)
    reg[1:] = 1.0
    for _ in range(max_newton):
        t = (u @ v - pair) / epsilon
        d1 = divergence.conjugate_d1(t)
        d2 = divergence.conjugate_d2(t)
        grad = np.hstack([1.0 - d1.mean(), mean_phi - v[1:] - (d1 @ phi_grid) / ngrid])
        if np.max(np.abs(grad)) < tol:
            break
        hess = -(u.T * d2) @ u / (ngrid * epsilon) - np.diag(reg)
        step = np.linalg.solve(-hess + 1e-13 * np.eye(1 + d), grad)
        scale = 1.0
        for _ in range(80):
            cand = v + scale * step
            fc = value(cand)
            if np.isfinite(fc) and fc >= fv - 1e-15:
                v, fv = cand, fc
                break
            scale *= 0.5
        else:
            break
    return fv


def sampled_dual_value_rff(
    model: MomentModel,
    theta,
    instrument: Instrument,
    data: np.ndarray,
    grid: np.ndarray,
    rff_map: RFFMap,
    x_dim: int | None = None,
) -> float:
    """Exact sampled-constraint dual at frozen (theta, h), f restricted to the RFF span.

    This is the epsilon -> 0 limit of `regularized_dual_value` on the same grid.
    """
    import cvxpy as cp

    data = np.atleast_2d(np.asarray(data, dtype=float))
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    x_dim = model.x_dim if x_dim is None else x_dim
    phi_data = rff_apply(rff_map, data)
    phi_grid = rff_apply(rff_map, grid)
    psi_grid = model.evaluate(grid[:, :x_dim], theta)
    h_grid = instrument.evaluate(grid[:, x_dim:])
    pair = np.einsum("nm,nm->n", psi_grid, h_grid)

    alpha = cp.Variable(rff_map.num_features)
    eta = cp.Variable()
    objective = cp.Maximize(eta + phi_data.mean(axis=0) @ alpha - 0.5 * cp.sum_squares(alpha))
    problem = cp.Problem(objective, [phi_grid @ alpha + eta <= pair])
    status = _solve_qp(problem)
    if status not in ("optimal", "optimal_inaccurate"):
        raise MomentForgeError(f"sampled dual solve ended with status {status!r}")
    return float(problem.value)


def kmm_exact_fit(
    model: MomentModel,
    dataset: Dataset,
    kernel: KernelSpec | None = None,
    constraint_grid: np.ndarray | None = None,
    theta0=None,
    n_extra: int = 64,
) -> np.ndarray:
    """argmin_theta of the unregularized sampled-constraint profile (small problems only)."""
    if constraint_grid is None:
        constraint_grid = default_constraint_grid(dataset, n_extra=n_extra)
    if kernel is None:
        kernel = KernelSpec(median_heuristic(dataset.x), dataset.x_dim)

    def crit(theta):
        val = exact_mmd_profile(model, theta, dataset, constraint_grid, kernel)
        return val if np.isfinite(val) else 1e12

    res = optimize.minimize(crit, _theta_start(model, theta0), method="Nelder-Mead",
                            options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 2000})
    return res.x
