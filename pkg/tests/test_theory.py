import math

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import lambertw

from hamperc import theory
from hamperc.theory import (
    char_poly_value,
    connectivity_thresholds,
    critical_lambda,
    elementary_symmetric,
    expectation_matrix,
    extinction,
    giant_size_prediction,
    perron,
    tail_constants,
)
from hamperc.torus import make_spec


def poisson_extinction_1d(lam):
    """Extinction probability of a Poisson(lam) Galton-Watson tree."""
    return float(np.real(-lambertw(-lam * math.exp(-lam)) / lam))


def test_expectation_matrix():
    m = expectation_matrix(2.0, [1, 3, 5])
    assert np.array_equal(m, [[0, 6, 10], [2, 0, 10], [2, 6, 0]])


def test_elementary_symmetric_against_subsets():
    a = [0.7, 1.3, 2.0, 0.5]
    e = elementary_symmetric(a)
    from itertools import combinations
    for k in range(5):
        assert e[k] == pytest.approx(sum(math.prod(c) for c in combinations(a, k)))


def test_char_poly_examples():
    assert char_poly_value(1.0, [1, 1]) == pytest.approx(0.0, abs=1e-15)
    assert char_poly_value(0.5, [1, 1, 1]) == pytest.approx(0.0, abs=1e-15)
    for a in ([1, 1], [2, 0.5, 1], [1, 2, 3, 4]):
        assert char_poly_value(0.0, a) == (-1) ** len(a)


def test_char_poly_matches_determinant():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        d = int(rng.integers(1, 7))
        a = rng.uniform(0.5, 2.0, d)
        lam = rng.uniform(0.0, 2.0)
        det = np.linalg.det(expectation_matrix(lam, a) - np.eye(d))
        assert char_poly_value(lam, a) == pytest.approx(det, rel=1e-9, abs=1e-12)


def test_critical_lambda_examples():
    assert critical_lambda([1, 1]) == pytest.approx(1.0, abs=1e-10)
    assert critical_lambda([4, 1]) == pytest.approx(0.5, abs=1e-10)
    assert critical_lambda([1, 1, 1]) == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(ValueError):
        critical_lambda([1])


def test_critical_lambda_d2_formula():
    rng = np.random.default_rng(1)
    for a1, a2 in rng.uniform(0.1, 10, (50, 2)):
        assert critical_lambda([a1, a2]) == pytest.approx(1 / math.sqrt(a1 * a2), rel=1e-10)


def test_critical_lambda_is_inverse_spectral_radius():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a = rng.uniform(0.2, 3, int(rng.integers(2, 8)))
        rho1 = max(np.linalg.eigvals(expectation_matrix(1.0, a)).real)
        assert critical_lambda(a) == pytest.approx(1 / rho1, rel=1e-10)


def test_critical_lambda_scale_covariance():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = rng.uniform(0.5, 2, int(rng.integers(2, 7)))
        c = rng.uniform(0.1, 10)
        assert critical_lambda(c * a) == pytest.approx(critical_lambda(a) / c, abs=1e-10)


def test_critical_lambda_nonincreasing_in_each_a():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a = rng.uniform(0.5, 2, 4)
        i = int(rng.integers(4))
        b = a.copy()
        b[i] += rng.uniform(0.01, 1)
        assert critical_lambda(b) <= critical_lambda(a)


def test_perron_examples():
    rho, mu = perron(0.7, [1, 1])
    assert rho == pytest.approx(0.7, rel=1e-12)
    assert mu == pytest.approx([0.5, 0.5], abs=1e-12)


def test_perron_against_eig_and_linearity():
    rng = np.random.default_rng(5)
    for _ in range(100):
        a = rng.uniform(0.3, 3, int(rng.integers(2, 7)))
        lam = rng.uniform(0.1, 3)
        rho, mu = perron(lam, a)
        m = expectation_matrix(lam, a)
        w, v = np.linalg.eig(m)
        k = np.argmax(w.real)
        ref = np.abs(v[:, k].real)
        assert rho == pytest.approx(w[k].real, rel=1e-10)
        assert mu == pytest.approx(ref / ref.sum(), abs=1e-10)
        assert np.all(mu > 0) and mu.sum() == pytest.approx(1.0)
        assert rho == pytest.approx(lam * perron(1.0, a)[0], rel=1e-10)


def test_perron_at_critical_is_one():
    rng = np.random.default_rng(6)
    for _ in range(200):
        a = rng.uniform(0.5, 2, int(rng.integers(2, 7)))
        assert abs(perron(critical_lambda(a), a)[0] - 1) < 1e-8


def test_extinction_subcritical():
    a = [1.0, 2.0, 0.5]
    q_vec, q = extinction(0.9 * critical_lambda(a), a)
    assert np.all(q_vec == 1.0) and q == 1.0


def test_extinction_d2_symmetric():
    q1 = poisson_extinction_1d(2.0)
    assert q1 == pytest.approx(0.203188, abs=1e-6)
    q_vec, q = extinction(2.0, [1, 1])
    assert q_vec == pytest.approx([q1, q1], abs=1e-12)
    assert q == pytest.approx(q1 * q1, abs=1e-12)
    assert q == pytest.approx(0.041285, abs=1e-6)


def test_extinction_is_fixed_point_and_special_start_identity():
    rng = np.random.default_rng(7)
    for _ in range(30):
        a = rng.uniform(0.5, 2, int(rng.integers(2, 6)))
        lam = critical_lambda(a) * rng.uniform(1.1, 3)
        q_vec, q = extinction(lam, a)
        s = a * (1 - q_vec)
        assert q_vec == pytest.approx(np.exp(-lam * (s.sum() - s)), abs=1e-12)
        assert np.all(q_vec < 1)
        # an untyped ancestor bears Poisson(lam a_j) children of every type
        assert q == pytest.approx(math.exp(-lam * s.sum()), rel=1e-10)


def test_extinction_symmetric_a_gives_equal_q():
    q_vec, _ = extinction(1.0, [1.3] * 4)
    assert np.ptp(q_vec) < 1e-14


def test_extinction_nonincreasing_in_lambda():
    a = [1.0, 0.7, 1.5]
    lc = critical_lambda(a)
    prev = np.ones(3)
    for lam in lc * np.linspace(1.05, 4, 20):
        q_vec, _ = extinction(lam, a)
        assert np.all(q_vec <= prev + 1e-15)
        prev = q_vec


def test_giant_size_prediction():
    giant, norm = giant_size_prediction(make_spec(2, (1, 1), 2000), 2.0)
    assert norm == pytest.approx(4000)
    assert giant == pytest.approx(0.958715 * 4000, abs=0.01)
    giant, norm = giant_size_prediction(make_spec(2, (1, 1), 1000), 1.2)
    q1 = brentq(lambda x: x - math.exp(-1.2 * (1 - x)), 0.0, 0.9)
    assert giant == pytest.approx(1200 * (1 - q1 * q1), rel=1e-9)
    with pytest.raises(ValueError):
        giant_size_prediction(make_spec(2, (1, 1), 100), 0.9)


def test_giant_vanishes_at_criticality():
    spec = make_spec(3, (1, 1, 1), 50)
    small = giant_size_prediction(spec, 0.5 * (1 + 1e-4))[0] / giant_size_prediction(spec, 0.5 * 1.01)[0]
    assert small < 0.02


def test_connectivity_thresholds():
    assert connectivity_thresholds([1, 1]) == pytest.approx((0.5, 1 / 3))
    assert connectivity_thresholds([1, 1, 1])[0] == pytest.approx(2 / 3)
    assert connectivity_thresholds([3, 1]) == pytest.approx((0.25, 0.2))
    assert connectivity_thresholds([1, 3]) == pytest.approx((0.25, 0.2))
    with pytest.raises(ValueError):
        connectivity_thresholds([2])


def test_tail_constants_closed_form():
    tc = tail_constants(0.5, [1, 1])
    assert tc.mu == pytest.approx([0.5, 0.5])
    assert tc.theta_star == pytest.approx(2 * math.log(2), abs=1e-6)
    assert math.exp(-tc.alpha) == pytest.approx(math.exp(0.5) / 2, abs=1e-10)
    assert tc.alpha == pytest.approx(math.log(2) - 0.5, abs=1e-10)
    assert tc.C == pytest.approx(math.exp(tc.theta_star))
    assert tail_constants(0.5, [1, 1], start=[1, 0]).C == pytest.approx(2.0, rel=1e-6)


def test_tail_constants_min_matches_grid():
    a = np.array([1.5, 0.8, 1.0])
    lam = 0.6 * critical_lambda(a)
    tc = tail_constants(lam, a)
    grid = np.linspace(1e-4, 20, 200_001)
    env = np.array([theory.psi(t, lam, a, tc.mu).max() for t in grid[::100]])
    assert math.exp(-tc.alpha) <= env.min() + 1e-9
    assert tc.alpha > 0


def test_alpha_positive_and_vanishing_at_criticality():
    a = [1.0, 2.0]
    lc = critical_lambda(a)
    alphas = [tail_constants(f * lc, a).alpha for f in (0.2, 0.5, 0.8, 0.95, 0.99, 0.999)]
    assert all(x > 0 for x in alphas)
    assert all(x > y for x, y in zip(alphas, alphas[1:]))
    assert alphas[-1] < 1e-5
    with pytest.raises(ValueError):
        tail_constants(lc, a)


def test_theory_report_fields():
    r = theory.theory_report([1, 1], 2.0)
    assert r.giant_fraction == pytest.approx(1 - r.q)
    assert r.q == pytest.approx(math.prod(r.q_vec) ** (1 / (r.d - 1)))
    assert r.rho == pytest.approx(2.0)
