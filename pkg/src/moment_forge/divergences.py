"""Divergence conjugates phi* and derivatives for the KL, log-barrier (Burg) and chi-squared families."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BarrierViolation

KL_NAME = "kl"
LOG_NAME = "log"
CHI2_NAME = "chi2"


@dataclass(frozen=True)
class DivergenceSpec:
    """Convex conjugate phi*(t) of a divergence generator, with first two derivatives.

    Closed forms:
      kl    phi(p) = p log p - p + 1   ->  phi*(t) = e^t - 1          (all t)
      log   phi(p) = -log p + p - 1    ->  phi*(t) = -log(1 - t)      (t < 1)
      chi2  phi(p) = (p - 1)^2 / 2     ->  phi*(t) = t^2/2 + t        (all t)
    All satisfy phi*'(0) = phi*''(0) = 1.
    """

    name: str
    domain_upper: float  # largest admissible conjugate argument; np.inf except log

    def _check(self, t):
        if np.isinf(self.domain_upper):
            return
        t = np.asarray(t)
        if np.any(t >= self.domain_upper):
            raise BarrierViolation(float(np.max(t)))

    def conjugate(self, t):
        self._check(t)
        t = np.asarray(t, dtype=float)
        if self.name == KL_NAME:
            out = np.expm1(t)
        elif self.name == LOG_NAME:
            out = -np.log1p(-t)
        else:
            out = 0.5 * t * t + t
        return out if out.ndim else float(out)

    def conjugate_d1(self, t):
        self._check(t)
        t = np.asarray(t, dtype=float)
        if self.name == KL_NAME:
            out = np.exp(t)
        elif self.name == LOG_NAME:
            out = 1.0 / (1.0 - t)
        else:
            out = t + 1.0
        return out if out.ndim else float(out)

    def conjugate_d2(self, t):
        self._check(t)
        t = np.asarray(t, dtype=float)
        if self.name == KL_NAME:
            out = np.exp(t)
        elif self.name == LOG_NAME:
            out = 1.0 / (1.0 - t) ** 2
        else:
            out = np.ones_like(t)
        return out if out.ndim else float(out)


KL = DivergenceSpec(name=KL_NAME, domain_upper=np.inf)
LOG = DivergenceSpec(name=LOG_NAME, domain_upper=1.0)
CHI2 = DivergenceSpec(name=CHI2_NAME, domain_upper=np.inf)

_BY_NAME = {KL_NAME: KL, LOG_NAME: LOG, CHI2_NAME: CHI2}


def get_divergence(name: str) -> DivergenceSpec:
    """Look up a divergence by its config name ("kl" | "log" | "chi2")."""
    try:
        return _BY_NAME[name.lower()]
    except KeyError:
        raise ValueError(f"unknown divergence {name!r}; expected one of {sorted(_BY_NAME)}") from None
