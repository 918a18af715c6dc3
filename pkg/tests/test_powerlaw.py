"""Log-log least squares: exact recovery, invariances, and guards."""

import math
import random

import pytest

from nodelab import fit_power_law
from nodelab.errors import InsufficientDataError, LogDomainError


def test_recovers_exact_power_law():
    pts = [(x, 3.0 * x ** -0.5) for x in (1.0, 2.0, 4.0, 8.0, 64.0)]
    fit = fit_power_law(pts)
    assert fit.exponent == pytest.approx(-0.5, abs=1e-12)
    assert fit.coefficient == pytest.approx(3.0, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_constant_data_has_zero_exponent():
    fit = fit_power_law([(x, 7.0) for x in (1.0, 10.0, 100.0)])
    assert fit.exponent == pytest.approx(0.0, abs=1e-12)
    assert fit.coefficient == pytest.approx(7.0, rel=1e-12)


def test_scale_invariance_of_exponent():
    rng = random.Random(11)
    pts = [(x, 2.0 * x ** 1.7 * math.exp(0.01 * rng.uniform(-1, 1)))
           for x in (1.0, 3.0, 9.0, 27.0)]
    base = fit_power_law(pts)
    # rescaling y multiplies the coefficient, leaves the exponent alone
    scaled = fit_power_law([(x, 5.0 * y) for x, y in pts])
    assert scaled.exponent == pytest.approx(base.exponent, abs=1e-12)
    assert scaled.coefficient == pytest.approx(5.0 * base.coefficient, rel=1e-12)
    # rescaling x leaves the exponent alone too
    stretched = fit_power_law([(2.0 * x, y) for x, y in pts])
    assert stretched.exponent == pytest.approx(base.exponent, abs=1e-12)


def test_noise_lowers_r_squared_but_not_much():
    rng = random.Random(5)
    pts = [(x, x ** -0.5 * (1.0 + 0.03 * rng.uniform(-1, 1)))
           for x in [1.5 ** k for k in range(12)]]
    fit = fit_power_law(pts)
    assert 0.97 < fit.r_squared < 1.0
    assert fit.exponent == pytest.approx(-0.5, abs=0.05)


def test_too_few_points():
    with pytest.raises(InsufficientDataError):
        fit_power_law([(1.0, 1.0), (2.0, 0.5)])


def test_nonpositive_values_rejected():
    with pytest.raises(LogDomainError):
        fit_power_law([(1.0, 1.0), (2.0, -0.5), (3.0, 0.2)])
    with pytest.raises(LogDomainError):
        fit_power_law([(0.0, 1.0), (2.0, 0.5), (3.0, 0.2)])
