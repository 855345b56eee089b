import math

import numpy as np
import pytest

from causalcert.measure import (
    DiscreteDist,
    change_of_measure,
    chi2_discrete,
    chi2_from_ratios,
    envelope_value,
    optimal_lambda,
)


def dist(probs, support=None):
    probs = list(probs)
    return DiscreteDist(tuple(range(len(probs))) if support is None else support,
                        np.array(probs))


def test_chi2_identical_is_zero():
    p = dist([0.2, 0.3, 0.5])
    assert chi2_discrete(p, p) == 0.0


def test_chi2_two_atom_closed_form():
    # 0.25 * (2 - 1)^2 + 0.75 * (2/3 - 1)^2 = 1/3
    q = dist([0.5, 0.5])
    p = dist([0.25, 0.75])
    assert chi2_discrete(q, p) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_chi2_disjoint_support_is_infinite():
    q = dist([1.0, 0.0])
    p = dist([0.0, 1.0])
    assert math.isinf(chi2_discrete(q, p))


def test_chi2_mismatched_support_errors():
    q = dist([0.5, 0.5], support=("a", "b"))
    p = dist([0.5, 0.5], support=("a", "c"))
    with pytest.raises(ValueError):
        chi2_discrete(q, p)


def test_discrete_dist_validation():
    with pytest.raises(ValueError):
        dist([0.5, 0.6])
    with pytest.raises(ValueError):
        dist([-0.1, 1.1])
    with pytest.raises(ValueError):
        DiscreteDist(("a",), np.array([0.5, 0.5]))


def test_chi2_from_ratios_examples():
    assert chi2_from_ratios([1.0, 1.0, 1.0]) == 0.0
    assert chi2_from_ratios([2.0, 0.0]) == pytest.approx(1.0, abs=1e-15)
    assert chi2_from_ratios([1.5]) == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(ValueError):
        chi2_from_ratios([])
    with pytest.raises(ValueError):
        chi2_from_ratios([-0.5])
    assert math.isinf(chi2_from_ratios([1.0, math.inf]))


def test_monte_carlo_matches_closed_form_within_3_se():
    rng = np.random.default_rng(77)
    q = dist([0.5, 0.5])
    p = dist([0.25, 0.75])
    exact = chi2_discrete(q, p)
    n = 100_000
    atoms = rng.choice(2, size=n, p=p.probs)
    ratios = (q.probs / p.probs)[atoms]
    estimate = chi2_from_ratios(ratios)
    se = float(np.std((ratios - 1.0) ** 2, ddof=1)) / math.sqrt(n)
    assert abs(estimate - exact) <= 3.0 * se


def test_optimal_lambda_closed_form_and_markers():
    assert optimal_lambda(1.0, 4.0) == pytest.approx(1.0)
    assert math.isinf(optimal_lambda(0.0, 3.0))
    assert optimal_lambda(2.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        optimal_lambda(-1.0, 1.0)
    with pytest.raises(ValueError):
        optimal_lambda(1.0, -1.0)


def test_envelope_markers():
    assert envelope_value(0.0, 5.0, math.inf) == 0.0
    assert envelope_value(1.0, 5.0, math.inf) == math.inf
    assert envelope_value(1.0, 0.0, 0.0) == 0.0
    assert envelope_value(1.0, 4.0, 1.0) == pytest.approx(2.0)


def test_envelope_optimality_grid():
    # grid search over a log range never beats the closed-form optimum
    rng = np.random.default_rng(123)
    grid = np.logspace(-6, 6, 200)
    for _ in range(300):
        chi2 = 10.0 ** rng.uniform(-4, 1)
        var = 10.0 ** rng.uniform(-4, 1)
        star = optimal_lambda(chi2, var)
        e_star = envelope_value(chi2, var, star)
        assert abs(e_star - math.sqrt(chi2 * var)) <= 1e-12
        e_grid = np.array([envelope_value(chi2, var, g) for g in grid])
        assert np.all(e_grid >= e_star * (1.0 - 1e-9))


def test_change_of_measure_example():
    b = change_of_measure(1.0, 0.09, 4.0, lam=1.0)
    assert b.envelope == pytest.approx(1.09)
    star = change_of_measure(1.0, 0.09, 4.0)
    assert star.lam == pytest.approx(10.0 / 3.0)
    assert star.envelope == pytest.approx(0.6)
    assert star.lower == pytest.approx(0.4)
    assert star.upper == pytest.approx(1.6)


def test_change_of_measure_exact_when_divergence_zero():
    b = change_of_measure(2.5, 0.0, 9.0)
    assert b.is_exact
    assert b.lower == b.upper == 2.5


def test_change_of_measure_rejects_bad_lambda():
    with pytest.raises(ValueError):
        change_of_measure(0.0, 1.0, 1.0, lam=0.0)
    with pytest.raises(ValueError):
        change_of_measure(0.0, 1.0, 1.0, lam=-2.0)


def test_sandwich_validity_on_random_discrete_instances():
    # exact discrete P, Q and phi: the two-sided envelope always contains E_P[phi]
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        k = rng.integers(2, 8)
        p = rng.dirichlet(np.ones(k) * rng.uniform(0.5, 3.0))
        q = rng.dirichlet(np.ones(k) * rng.uniform(0.5, 3.0))
        phi = rng.standard_normal(k) * 10.0 ** rng.uniform(-1, 1)
        ep = float(p @ phi)
        eq = float(q @ phi)
        var_p = float(p @ (phi - ep) ** 2)
        chi2 = float(np.sum(p * (q / p - 1.0) ** 2))
        lam = 10.0 ** rng.uniform(-2, 2)
        for bound in (
            change_of_measure(eq, chi2, var_p, lam=lam),
            change_of_measure(eq, chi2, var_p),
        ):
            assert bound.lower - 1e-9 <= ep <= bound.upper + 1e-9
