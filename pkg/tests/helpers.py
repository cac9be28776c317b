"""Shared test oracles: finite differences and divergence conjugates computed from scratch."""
import numpy as np
from scipy.optimize import minimize_scalar


def central_diff(f, x, h=1e-6):
    """Central finite-difference gradient of scalar f at 1-D point x."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(a, b, floor=1e-8):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    denom = max(np.max(np.abs(a)), np.max(np.abs(b)), floor)
    return float(np.max(np.abs(a - b)) / denom)


# independent divergence definitions (the phi whose conjugate the library hard-codes);
# tests recover phi* numerically from these, never from the closed forms under test
def phi_kl(u):
    return u * np.log(u) - u + 1 if u > 0 else (1.0 if u == 0 else np.inf)


def phi_log(u):
    return -np.log(u) + u - 1 if u > 0 else np.inf


def phi_chi2(u):
    return 0.5 * (u - 1) ** 2


_PHIS = {"kl": phi_kl, "log": phi_log, "chi2": phi_chi2}


def numeric_conjugate(name, t, u_hi=1e6):
    """phi*(t) = sup_u [t u - phi(u)] by bounded scalar maximization.

    kl/log constrain u > 0; the quadratic divergence is defined on all of R
    (weights may go negative), so its sup ranges over the whole line.
    """
    phi = _PHIS[name]
    u_lo = -u_hi if name == "chi2" else 1e-12
    res = minimize_scalar(
        lambda u: -(t * u - phi(u)),
        bounds=(u_lo, u_hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(-res.fun)


def random_psd(rng, d, jitter=1e-6):
    a = rng.normal(size=(d, d))
    return a @ a.T + jitter * np.eye(d)
