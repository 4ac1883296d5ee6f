import numpy as np
import pytest

from vortexlab.errors import ConfigError, DomainError
from vortexlab.rates import rate_fit


def test_pure_power_exact_recovery():
    ns = np.array([64, 128, 256, 512, 1024])
    errs = {int(n): 3.7 * n ** -0.5 for n in ns}
    fit = rate_fit(errs, "pure_power")
    assert fit.exponent == pytest.approx(-0.5, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.7, rel=1e-12)
    assert fit.residual < 1e-12


def test_power_with_log_exact_recovery():
    ns = [64, 128, 256, 512, 1024, 2048]
    errs = {n: 0.9 * n ** -0.5 * np.log1p(n) for n in ns}
    fit = rate_fit(errs, "power_with_log")
    assert fit.exponent == pytest.approx(-0.5, abs=1e-12)
    assert fit.prefactor == pytest.approx(0.9, rel=1e-10)


def test_noise_injection_tolerance():
    rng = np.random.default_rng(4)
    ns = [2 ** k for k in range(6, 14)]
    errs = {n: 2.0 * n ** -0.45 * np.exp(rng.normal(scale=0.02)) for n in ns}
    fit = rate_fit(errs, "pure_power")
    assert abs(fit.exponent + 0.45) < 0.05


def test_requires_four_distinct_sizes():
    with pytest.raises(ConfigError):
        rate_fit({64: 1.0, 128: 0.7, 256: 0.5}, "pure_power")
    with pytest.raises(ConfigError):
        rate_fit({64: 1.0, 128: 0.7, 256: 0.5, 512: 0.3}, "exp_model")


def test_rejects_nonpositive_errors():
    with pytest.raises(DomainError):
        rate_fit({64: 1.0, 128: 0.0, 256: 0.5, 512: 0.3}, "pure_power")
    with pytest.raises(DomainError):
        rate_fit({64: 1.0, 128: -0.1, 256: 0.5, 512: 0.3}, "pure_power")
