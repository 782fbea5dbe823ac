import math

import pytest

from ergokit.quadrature import QuadratureError, integrate, log_integrate


def test_polynomial():
    r = integrate(lambda x: x * x, 0.0, 1.0)
    assert r.value == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert r.converged


def test_semi_infinite_exponential():
    r = integrate(lambda x: math.exp(-x), 0.0, math.inf)
    assert r.value == pytest.approx(1.0, rel=1e-9)
    assert r.converged


def test_semi_infinite_gaussian():
    r = integrate(lambda x: math.exp(-x * x / 2.0), 0.0, math.inf)
    assert r.value == pytest.approx(1.2533141373155001, rel=1e-9)
    assert r.converged


def test_semi_infinite_power_tail():
    r = integrate(lambda x: (1.0 + x) ** -2, 0.0, math.inf)
    assert r.value == pytest.approx(1.0, rel=1e-9)
    assert r.converged


def test_converged_flag_meets_tolerance_contract():
    r = integrate(lambda x: math.sin(x) ** 2, 0.0, 7.0, tol=1e-8)
    assert r.converged
    assert r.error_estimate <= 1e-8 * max(1.0, abs(r.value))


def test_empty_and_reversed_interval():
    assert integrate(lambda x: x, 1.0, 1.0).value == 0.0
    assert integrate(lambda x: x, 2.0, 1.0).value == 0.0


def test_nonfinite_sample_raises():
    with pytest.raises(QuadratureError):
        integrate(lambda x: 1.0 / (x - 0.5), 0.0, 1.0)


def test_budget_exhaustion_reports_not_converged():
    r = integrate(lambda x: math.sin(50 * x) ** 2 + math.exp(-x), 0.0, 50.0,
                  tol=1e-14, max_evals=60)
    assert not r.converged


def test_log_integrate_huge_exponent():
    lv, res = log_integrate(lambda u: 2.0 * u, 0.0, 1e6)
    assert lv == pytest.approx(2e6 + math.log(0.5), abs=1e-6)
    assert res.converged


def test_log_integrate_all_minus_inf():
    lv, _ = log_integrate(lambda u: -math.inf, 0.0, 1.0)
    assert lv == -math.inf


def test_log_integrate_matches_plain():
    lv, _ = log_integrate(lambda u: -u, 0.0, 20.0)
    assert lv == pytest.approx(math.log(1.0 - math.exp(-20.0)), abs=1e-7)


def test_seed_points_pin_narrow_spikes():
    # a spike of width 1e-4 at x = 0.3 that plain sampling at 0, .5, 1 misses
    def f(x):
        return math.exp(-((x - 0.3) / 1e-4) ** 2)

    r = integrate(f, 0.0, 1.0, seed_points=(0.3,))
    assert r.value == pytest.approx(1e-4 * math.sqrt(math.pi), rel=1e-6)
