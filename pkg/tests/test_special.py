"""Special-function layer: values against independent oracles, domain
errors, and the basis-weight invariants."""

import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest

from opgeom.errors import DomainError
from opgeom.special import (LogDomainValue, bernstein_basis,
                            bernstein_basis_matrix, bernstein_basis_row, beta,
                            binomial, log_binomial, log_gamma, mkz_basis_weight,
                            mkz_weight_matrix, mkz_weight_row)

mp.mp.dps = 40


class TestLogGamma:
    def test_exact_points(self):
        assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-15)
        assert log_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-14)
        assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-14)

    def test_against_mpmath_sweep(self):
        xs = np.concatenate([
            np.logspace(-6, 0, 60), np.linspace(0.1, 4.0, 79),
            np.logspace(1, 6, 60)])
        for x in xs:
            ref = float(mp.loggamma(mp.mpf(float(x))))
            got = log_gamma(float(x))
            assert abs(got - ref) <= 1e-13 * max(1.0, abs(ref)), x

    def test_vectorized(self):
        xs = np.array([0.5, 1.0, 5.0])
        out = log_gamma(xs)
        assert out.shape == (3,)
        assert out[2] == pytest.approx(math.log(24.0), rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            log_gamma(0.0)
        with pytest.raises(DomainError):
            log_gamma(-3.2)


class TestBeta:
    def test_values(self):
        assert beta(1.0, 1.0) == pytest.approx(1.0, rel=1e-14)
        exact = Fraction(math.factorial(1) * math.factorial(2),
                         math.factorial(4))
        assert beta(2.0, 3.0) == pytest.approx(float(exact), rel=1e-13)
        assert beta(0.5, 0.5) == pytest.approx(math.pi, rel=1e-13)

    def test_symmetry_exact(self):
        # the log-domain formula commutes in a and b, so equality is exact
        for a, b in [(0.3, 4.7), (2.0, 9.5), (13.25, 0.75)]:
            assert beta(a, b) == beta(b, a)

    def test_domain(self):
        with pytest.raises(DomainError):
            beta(0.0, 1.0)
        with pytest.raises(DomainError):
            beta(1.0, -2.0)


class TestLogDomainValue:
    def test_round_trip(self):
        rng = np.random.default_rng(7)
        for v in np.concatenate([rng.uniform(-5, 5, 50),
                                 10.0 ** rng.uniform(-30, 30, 50)]):
            back = LogDomainValue.from_value(float(v)).value()
            assert back == pytest.approx(float(v), rel=1e-14)
        # exp/log conditioning limits extreme magnitudes to ~|log v| ulp
        for v in 10.0 ** rng.uniform(-250, 250, 50):
            back = LogDomainValue.from_value(float(v)).value()
            assert back == pytest.approx(float(v), rel=1e-13)

    def test_zero(self):
        z = LogDomainValue.from_value(0.0)
        assert z.sign == 0 and z.value() == 0.0

    def test_product(self):
        a = LogDomainValue.from_value(-3.0)
        b = LogDomainValue.from_value(0.5)
        assert (a * b).value() == pytest.approx(-1.5, rel=1e-14)
        assert (a * LogDomainValue.from_value(0.0)).value() == 0.0


class TestBinomial:
    def test_exact_small(self):
        assert binomial(30, 14) == float(math.comb(30, 14))
        assert binomial(5, 0) == 1.0

    def test_log_route_matches_comb(self):
        for n, k in [(64, 31), (400, 123), (1500, 700)]:
            ref = float(mp.log(mp.binomial(n, k)))
            assert log_binomial(n, k) == pytest.approx(ref, abs=1e-12, rel=1e-13)

    def test_domain(self):
        with pytest.raises(DomainError):
            binomial(4, 5)
        with pytest.raises(DomainError):
            log_binomial(4, -1)


class TestBernsteinBasis:
    def test_values(self):
        assert bernstein_basis(2, 1, 0.5) == pytest.approx(0.5, rel=1e-15)
        assert bernstein_basis(17, 0, 0.0) == 1.0
        assert bernstein_basis(17, 3, 0.0) == 0.0
        brute = math.comb(10, 3) * 0.3 ** 3 * 0.7 ** 7
        assert bernstein_basis(10, 3, 0.3) == pytest.approx(brute, rel=1e-14)

    def test_index_error(self):
        with pytest.raises(IndexError):
            bernstein_basis(5, 6, 0.5)
        with pytest.raises(IndexError):
            bernstein_basis(5, -1, 0.5)

    def test_partition_of_unity(self):
        xs = np.linspace(0.0, 1.0, 101)
        for n in (1, 7, 33, 64):
            p = bernstein_basis_matrix(n, xs)
            assert np.max(np.abs(p.sum(axis=1) - 1.0)) <= 1e-12
            assert np.min(p) >= 0.0

    def test_symmetry(self):
        xs = np.linspace(0.01, 0.99, 57)
        for n in (5, 33, 64):
            a = bernstein_basis_matrix(n, xs)
            b = bernstein_basis_matrix(n, 1.0 - xs)[:, ::-1]
            assert np.max(np.abs(a - b)) <= 1e-13

    def test_row_matches_scalar(self):
        row = bernstein_basis_row(12, 0.37)
        for k in range(13):
            assert row[k] == pytest.approx(bernstein_basis(12, k, 0.37), rel=1e-14)

    def test_large_order_log_route(self):
        # above the direct-product cutoff the log-domain path takes over
        val = bernstein_basis(1200, 600, 0.5)
        ref = float(mp.binomial(1200, 600) * mp.mpf(0.5) ** 1200)
        assert val == pytest.approx(ref, rel=1e-11)


class TestMkzWeights:
    def test_values(self):
        assert mkz_basis_weight(3, 0, 0.0) == 1.0
        assert mkz_basis_weight(3, 2, 0.0) == 0.0
        assert mkz_basis_weight(1, 1, 0.5) == pytest.approx(0.25, rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            mkz_basis_weight(3, 1, 1.0)
        with pytest.raises(DomainError):
            mkz_basis_weight(3, -1, 0.5)
        with pytest.raises(DomainError):
            mkz_basis_weight(0, 1, 0.5)

    def test_partial_sums_monotone_normalized(self):
        w = mkz_weight_row(3, 0.4, 400)
        cums = np.cumsum(w)
        assert np.all(np.diff(cums) >= 0.0)
        assert cums[-1] <= 1.0 + 1e-12
        assert cums[-1] >= 1.0 - 1e-10

    def test_row_matches_scalar_log_route(self):
        w = mkz_weight_row(4, 0.8, 300)
        for k in (0, 1, 17, 120, 300):
            assert w[k] == pytest.approx(mkz_basis_weight(4, k, 0.8), rel=1e-11)

    def test_matrix_matches_rows(self):
        xs = np.array([0.1, 0.5, 0.92])
        mat = mkz_weight_matrix(5, xs, 200)
        for i, x in enumerate(xs):
            assert np.max(np.abs(mat[i] - mkz_weight_row(5, float(x), 200))) == 0.0
