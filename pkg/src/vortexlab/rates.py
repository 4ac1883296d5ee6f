"""Least-squares rate fitting for convergence studies."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError


@dataclass
class RateFit:
    exponent: float
    prefactor: float
    residual: float
    model: str


def rate_fit(errors, model="pure_power"):
    """Fit error-vs-N data in log space.

    errors: mapping {N: value} or iterable of (N, value) with positive
    values and at least 4 distinct N.  'pure_power' fits value = c N^p; 'power_with_log' fits
    value = c N^p ln(1+N).  Returns RateFit(exponent, prefactor,
    rms-log-residual, model).
    """
    if hasattr(errors, "items"):
        errors = errors.items()
    pts = [(float(n), float(v)) for n, v in errors]
    ns = np.array([p[0] for p in pts])
    vs = np.array([p[1] for p in pts])
    if len(set(ns)) < 4:
        raise ConfigError("rate fit needs at least 4 distinct N values")
    if np.any(vs <= 0) or np.any(ns <= 0):
        raise DomainError("rate fit needs positive N and values")
    y = np.log(vs)
    if model == "power_with_log":
        y = y - np.log(np.log1p(ns))
    elif model != "pure_power":
        raise ConfigError(f"unknown rate model {model!r}")
    x = np.log(ns)
    a = np.stack([x, np.ones_like(x)], axis=-1)
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    p, logc = coef
    resid = float(np.sqrt(np.mean((a @ coef - y) ** 2)))
    return RateFit(float(p), float(np.exp(logc)), resid, model)
