import math

import numpy as np
import pytest

from zrp import (
    DomainError,
    RateModel,
    critical_density,
    critical_fugacity,
    density,
    fluid_density,
    fluid_entropy,
    fluid_fugacity,
    fluid_pressure,
    fluid_quantities,
    grand_canonical_entropy,
    grand_canonical_point,
    invert_density,
    log_partition,
    log_weight,
    marginal_pmf,
    marginal_quantile,
    marginal_variance,
    sample_marginal,
    tail_exceed_probability,
)
from helpers import series_log_partition

M = RateModel(c0=2.0, c1=1.0)
MA = RateModel(c0=2.0, c1=1.0, a=0.5)


class TestRateModel:
    def test_validation(self):
        with pytest.raises(DomainError):
            RateModel(c0=1.0, c1=1.0)
        with pytest.raises(DomainError):
            RateModel(c0=1.0, c1=2.0)
        with pytest.raises(DomainError):
            RateModel(c0=2.0, c1=1.0, a=-0.1)
        with pytest.raises(DomainError):
            RateModel(c0=2.0, c1=1.0, a=1.0, mode="particle")
        with pytest.raises(DomainError):
            RateModel(c0=2.0, c1=1.0, mode="weird")

    def test_cutoff(self):
        assert MA.cutoff(L=100) == 50
        assert MA.cutoff(L=101) == 50
        assert RateModel(2, 1, a=0.5, mode="particle").cutoff(N=91) == 45
        assert RateModel(2, 1, explicit_R=7).cutoff(L=100, N=3) == 7
        with pytest.raises(DomainError):
            MA.cutoff(N=10)  # lattice mode needs L

    def test_jump_rate(self):
        assert MA.jump_rate(0, 5) == 0.0
        assert MA.jump_rate(5, 5) == 2.0
        assert MA.jump_rate(6, 5) == 1.0


class TestWeights:
    def test_empty_product(self):
        for R in (0, 3, 10):
            assert log_weight(0, R, M) == 0.0

    def test_bulk(self):
        assert log_weight(3, 5, M) == pytest.approx(-3 * math.log(2), abs=1e-15)

    def test_tail(self):
        # -5 log 2 + (5-7) log 1 = -5 log 2
        assert log_weight(7, 5, M) == pytest.approx(-5 * math.log(2), abs=1e-15)
        m = RateModel(c0=3.0, c1=0.5)
        assert log_weight(7, 5, m) == pytest.approx(-5 * math.log(3) - 2 * math.log(0.5), abs=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            log_weight(-1, 3, M)


class TestPartition:
    def test_phi_zero(self):
        assert log_partition(0.0, 7, M) == 0.0

    def test_against_series(self):
        for phi, R in ((0.5, 4), (0.9, 10), (0.2, 0), (0.99, 25)):
            direct = series_log_partition(phi, R, M)
            assert log_partition(phi, R, M) == pytest.approx(direct, rel=1e-10)

    def test_divergence_toward_c1(self):
        vals = [log_partition(phi, 10, M) for phi in (0.9, 0.99, 0.999, 0.999999, 1.0 - 1e-12)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
        assert vals[-1] > 15.0

    def test_domain(self):
        with pytest.raises(DomainError):
            log_partition(1.0, 5, M)
        with pytest.raises(DomainError):
            log_partition(-0.1, 5, M)


class TestDensity:
    def test_zero(self):
        assert density(0.0, 5, M) == 0.0

    def test_finite_difference(self):
        h = 1e-6
        for phi, R in ((0.5, 6), (0.8, 12), (0.3, 0)):
            fd = phi * (log_partition(phi + h, R, M) - log_partition(phi - h, R, M)) / (2 * h)
            assert density(phi, R, M) == pytest.approx(fd, abs=1e-6)

    def test_fluid_limit_large_R(self):
        # phi = 0.9 below c1: the finite-R density approaches phi/(c0-phi)
        assert density(0.9, 200, M) == pytest.approx(0.9 / 1.1, rel=1e-12)

    def test_monotone_in_phi(self):
        rng = np.random.default_rng(10)
        for _ in range(5):
            c1 = rng.uniform(0.3, 2.0)
            m = RateModel(c0=c1 * rng.uniform(1.2, 3.0), c1=c1)
            R = int(rng.integers(0, 30))
            phis = np.linspace(0.0, 0.999 * c1, 100)
            vals = [density(p, R, m) for p in phis]
            assert all(b > a for a, b in zip(vals, vals[1:]))


class TestInvertDensity:
    def test_zero(self):
        assert invert_density(0.0, 10, M) == 0.0

    def test_forward_backward(self):
        for rho, R in ((0.5, 10), (1.0, 40), (2.0, 40), (7.3, 25)):
            phi = invert_density(rho, R, M)
            assert 0.0 <= phi < M.c1
            assert abs(density(phi, R, M) - rho) <= 1e-10 * max(1.0, rho)

    def test_supercritical_asymptotic(self):
        # leading-order correction c1 - phi ~ (c1/c0)^(R/2) c1 / sqrt(z_inf(c1) (rho - rho_c))
        R, rho = 40, 2.0
        phi = invert_density(rho, R, M)
        z_at_c1 = M.c0 / (M.c0 - M.c1)
        x_pred = (M.c1 / M.c0) ** (R / 2) * M.c1 / math.sqrt(z_at_c1 * (rho - 1.0))
        assert (M.c1 - phi) == pytest.approx(x_pred, rel=1e-3)

    def test_roundtrip_grid(self):
        for frac in (0.1, 0.3, 0.5, 0.7, 0.9, 0.99):
            phi = frac * M.c1
            rho = density(phi, 15, M)
            assert invert_density(rho, 15, M) == pytest.approx(phi, abs=1e-8)


class TestFluid:
    def test_zero_density(self):
        q = fluid_quantities(M, rho=0.0)
        assert q.phi == 0.0 and q.entropy == 0.0 and q.pressure == 0.0

    def test_entropy_at_one(self):
        assert fluid_entropy(1.0, M) == pytest.approx(math.log(2), abs=1e-14)

    def test_roundtrip(self):
        for rho in (0.1, 1.0, 10.0):
            assert fluid_density(fluid_fugacity(rho, M), M) == pytest.approx(rho, rel=1e-13)

    def test_legendre_duality(self):
        for rho in np.linspace(0.05, 8.0, 60):
            phi = fluid_fugacity(rho, M)
            dual = fluid_pressure(phi, M) - rho * math.log(phi)
            assert fluid_entropy(rho, M) == pytest.approx(dual, abs=1e-10)

    def test_log_z_equals_pressure(self):
        q = fluid_quantities(M, phi=1.3)
        assert q.log_z == q.pressure

    def test_domain(self):
        with pytest.raises(DomainError):
            fluid_density(2.0, M)
        with pytest.raises(DomainError):
            fluid_quantities(M, rho=1.0, phi=0.5)


class TestCritical:
    def test_lattice(self):
        assert critical_density(M) == pytest.approx(1.0, abs=1e-15)
        assert critical_fugacity(M) == 1.0
        assert critical_density(RateModel(c0=3.0, c1=1.0)) == pytest.approx(0.5, abs=1e-15)

    def test_particle_reduces_at_a0(self):
        mp = RateModel(2.0, 1.0, a=0.0, mode="particle")
        assert critical_density(mp) == pytest.approx(1.0, abs=1e-15)

    def test_particle_half(self):
        mp = RateModel(2.0, 1.0, a=0.5, mode="particle")
        assert critical_density(mp) == pytest.approx(1.0 / (math.sqrt(2) - 1.0), rel=1e-12)
        assert critical_fugacity(mp) == pytest.approx(math.sqrt(2), rel=1e-15)


class TestGrandCanonicalEntropy:
    def test_fluid_branch(self):
        for rho in (0.2, 0.7, 1.0):
            assert grand_canonical_entropy(rho, MA) == fluid_entropy(rho, MA)

    def test_condensed_branch(self):
        # c1 = 1 so the linear term vanishes
        assert grand_canonical_entropy(2.0, M) == pytest.approx(math.log(2), abs=1e-14)
        m = RateModel(c0=3.0, c1=1.5)
        rc = critical_density(m)
        val = fluid_entropy(rc, m) - (4.0 - rc) * math.log(1.5)
        assert grand_canonical_entropy(4.0, m) == pytest.approx(val, abs=1e-13)

    def test_concave_on_grid(self):
        grid = np.linspace(0.05, 6.0, 120)
        s = np.array([grand_canonical_entropy(r, MA) for r in grid])
        mid = 0.5 * (s[:-2] + s[2:])
        assert np.all(s[1:-1] >= mid - 1e-12)


class TestMarginal:
    def test_pointwise_convergence_to_geometric(self):
        # fixed phi < c1: the finite-R marginal approaches the geometric law
        phi = 0.7
        z_inf = M.c0 / (M.c0 - phi)
        sups = []
        for R in (5, 10, 20, 40):
            pt = grand_canonical_point(M, R, phi=phi)
            sup = max(
                abs(marginal_pmf(pt, k) - (phi / M.c0) ** k / z_inf) for k in range(21)
            )
            sups.append(sup)
        assert all(b < a for a, b in zip(sups, sups[1:]))
        assert sups[-1] < 1e-6

    def test_fugacity_limit_monotone(self):
        for rho, limit in ((0.5, fluid_fugacity(0.5, M)), (1.5, M.c1), (2.0, M.c1)):
            gaps = [abs(invert_density(rho, R, M) - limit) for R in (10, 20, 40, 80)]
            assert all(b <= a for a, b in zip(gaps, gaps[1:]))
        assert invert_density(0.5, 80, M) == pytest.approx(fluid_fugacity(0.5, M), abs=1e-9)

    def test_variance_blowup_rate(self):
        # at rho = 2 rho_c the variance grows like (c0/c1)^(R/2)
        R = 80
        pt = grand_canonical_point(M, R, rho=2.0)
        rate = math.log(marginal_variance(pt)) / R
        target = 0.5 * math.log(M.c0 / M.c1)
        assert abs(rate - target) <= 0.1 * target

    def test_variance_matches_summation(self):
        pt = grand_canonical_point(M, 12, phi=0.8)
        probs = np.array([marginal_pmf(pt, k) for k in range(400)])
        ks = np.arange(400)
        var = float((probs * ks**2).sum() - (probs * ks).sum() ** 2)
        assert marginal_variance(pt) == pytest.approx(var, rel=1e-9)

    def test_quantile_is_exact_inverse_cdf(self):
        # the u-interval mapped to each k has length pmf(k)
        for phi, R in ((0.8, 6), (0.5, 0), (0.99, 12)):
            pt = grand_canonical_point(M, R, phi=phi)
            cdf = 0.0
            for k in range(50):
                cdf += marginal_pmf(pt, k)
                if cdf >= 1.0 - 1e-12:
                    break
                assert marginal_quantile(pt, cdf - 1e-13) == k
                assert marginal_quantile(pt, cdf + 1e-13) == k + 1

    def test_phi_zero_always_zero(self):
        pt = grand_canonical_point(M, 10, phi=0.0)
        rng = np.random.default_rng(0)
        assert sample_marginal(pt, rng) == 0
        assert np.all(sample_marginal(pt, rng, size=100) == 0)

    def test_empirical_mean_subcritical(self):
        pt = grand_canonical_point(M, 30, rho=0.5)
        rng = np.random.default_rng(123)
        draws = sample_marginal(pt, rng, size=1_000_000)
        sigma = math.sqrt(marginal_variance(pt))
        assert abs(draws.mean() - 0.5) <= 3 * sigma / 1000.0

    def test_nonstandard_lln_batches(self):
        # supercritical density: sample means of 1e6 draws stick to rho_c, not rho
        pt = grand_canonical_point(M, 60, rho=2.0)
        rng = np.random.default_rng(2024)
        means = [sample_marginal(pt, rng, size=10_000).mean() for _ in range(100)]
        assert abs(np.mean(means) - 1.0) < 0.02
        assert max(abs(m - 1.0) for m in means) < 0.06

    def test_tail_probability(self):
        pt = grand_canonical_point(M, 8, phi=0.9)
        direct = sum(marginal_pmf(pt, k) for k in range(9, 500))
        assert tail_exceed_probability(pt) == pytest.approx(direct, rel=1e-10)

    def test_point_constructor_validation(self):
        with pytest.raises(DomainError):
            grand_canonical_point(M, 5, phi=0.5, rho=0.5)
        with pytest.raises(DomainError):
            grand_canonical_point(M, 5, phi=1.5)
