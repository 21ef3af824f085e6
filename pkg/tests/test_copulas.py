import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats
from scipy.special import ndtr, ndtri

from ar1ess import copulas as cop
from ar1ess.copulas import MixtureParams

FAMILY_KW = {
    cop.GAUSSIAN: {},
    cop.EXT_CLAYTON: {},
    cop.EXT_GUMBEL: {},
    cop.SURVIVAL_GUMBEL: {},
    cop.STUDENT_T: {"nu": 5.0},
    cop.MIXTURE: {"nu": 5.0, "p": 0.5},
}


def score_space_integral(family, tau, n_nodes=200, **kw):
    """Quadrature oracle: integral of the density over the unit square,
    computed on Gaussian-score coordinates where corner mass is resolved."""
    z, w = np.polynomial.legendre.leggauss(n_nodes)
    z, w = 8 * z, 8 * w
    u = ndtr(z)
    phi_w = w * np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi)
    U1, U2 = np.meshgrid(u, u, indexing="ij")
    lp = cop.logpdf(family, U1, U2, np.full_like(U1, tau), **kw)
    return float(phi_w @ np.exp(lp) @ phi_w)


class TestFisherZ:
    def test_values(self):
        assert cop.fisher_z(0.0) == 0.0
        assert_allclose(cop.fisher_z(0.9), 1.4722194895832204, rtol=1e-12)

    def test_inverse_pair(self):
        x = np.linspace(-0.99, 0.99, 23)
        assert_allclose(cop.fisher_z_inv(cop.fisher_z(x)), x, atol=1e-14)

    def test_domain(self):
        for bad in (1.0, -1.0, 1.5):
            with pytest.raises(ValueError):
                cop.fisher_z(bad)


class TestTauToParam:
    def test_independence(self):
        assert cop.tau_to_param(cop.GAUSSIAN, 0.0) == 0.0
        assert cop.tau_to_param(cop.EXT_GUMBEL, 0.0) == 1.0
        assert cop.tau_to_param(cop.EXT_CLAYTON, 0.0) == 0.0

    def test_tau_half(self):
        assert_allclose(cop.tau_to_param(cop.EXT_GUMBEL, 0.5), 2.0)
        assert_allclose(cop.tau_to_param(cop.EXT_CLAYTON, 0.5), 2.0)
        assert_allclose(cop.tau_to_param(cop.GAUSSIAN, 0.5), np.sin(np.pi / 4))

    def test_rejects_unit_tau(self):
        for fam in cop.FAMILIES:
            with pytest.raises(ValueError):
                cop.tau_to_param(fam, 1.0)

    @pytest.mark.parametrize("family", [cop.GAUSSIAN, cop.EXT_CLAYTON, cop.EXT_GUMBEL, cop.STUDENT_T])
    @pytest.mark.parametrize("tau", [-0.6, 0.3, 0.7])
    def test_empirical_kendall_tau(self, family, tau):
        rng = np.random.default_rng(hash((family, tau)) % 2**32)
        uv = cop.sample(family, tau, n=10**5, rng=rng, **FAMILY_KW[family])
        emp, _ = stats.kendalltau(uv[:, 0], uv[:, 1])
        assert abs(emp - tau) < 0.01


class TestLogDensity:
    def test_gaussian_independence_is_zero(self):
        u = np.linspace(0.05, 0.95, 7)
        U1, U2 = np.meshgrid(u, u)
        assert_allclose(cop.logpdf(cop.GAUSSIAN, U1, U2, 0.0), 0.0, atol=1e-12)

    @pytest.mark.parametrize("family", list(FAMILY_KW))
    @pytest.mark.parametrize("tau", [-0.7, -0.2, 0.2, 0.7])
    def test_normalization(self, family, tau):
        assert abs(score_space_integral(family, tau, **FAMILY_KW[family]) - 1.0) < 1e-4

    def test_clayton_rotation_pointwise(self):
        # density at tau < 0 equals the 90-degree rotation of the positive-tau density
        rng = np.random.default_rng(0)
        u1, u2 = rng.uniform(0.01, 0.99, (2, 50))
        got = cop.logpdf(cop.EXT_CLAYTON, u1, u2, -0.4)
        theta = cop.tau_to_param(cop.EXT_CLAYTON, 0.4)
        want = cop._clayton_logpdf(1 - u1, u2, theta)
        assert_allclose(got, want, atol=1e-12)

    def test_gumbel_rotation_pointwise(self):
        rng = np.random.default_rng(1)
        u1, u2 = rng.uniform(0.01, 0.99, (2, 50))
        for tau in (-0.3, -0.8):
            got = cop.logpdf(cop.EXT_GUMBEL, u1, u2, tau)
            want = cop.logpdf(cop.EXT_GUMBEL, 1 - u1, u2, -tau)
            assert_allclose(got, want, atol=1e-12)

    def test_mixture_degenerate_weights(self):
        rng = np.random.default_rng(2)
        u1, u2 = rng.uniform(0.01, 0.99, (2, 40))
        lt = cop.logpdf(cop.STUDENT_T, u1, u2, 0.4, nu=6.0)
        lg = cop.logpdf(cop.EXT_GUMBEL, u1, u2, 0.4)
        assert_allclose(cop.logpdf(cop.MIXTURE, u1, u2, 0.4, nu=6.0, p=1.0), lt, atol=1e-12)
        assert_allclose(cop.logpdf(cop.MIXTURE, u1, u2, 0.4, nu=6.0, p=0.0), lg, atol=1e-12)

    def test_boundary_inputs_rejected(self):
        with pytest.raises(ValueError):
            cop.logpdf(cop.GAUSSIAN, 0.0, 0.5, 0.3)
        with pytest.raises(ValueError):
            cop.logpdf(cop.GAUSSIAN, 0.5, 1.0, 0.3)

    def test_finite_at_extreme_tau_and_corner(self):
        u = np.array([1e-10, 1 - 1e-10, 0.5])
        for fam, kw in FAMILY_KW.items():
            for tau in (-0.9999, 0.9999):
                val = cop.logpdf(fam, u, u[::-1], np.full(3, tau), **kw)
                assert np.all(np.isfinite(val))


class TestCdf:
    def test_uniform_margins(self):
        for fam, kw in FAMILY_KW.items():
            for tau in (-0.5, 0.5):
                assert cop.cdf(fam, 0.37, 1.0, tau, **kw) == pytest.approx(0.37, abs=1e-12)
                assert cop.cdf(fam, 0.0, 0.8, tau, **kw) == 0.0
                assert cop.cdf(fam, 1.0, 0.8, tau, **kw) == pytest.approx(0.8, abs=1e-12)

    def test_gumbel_closed_form_value(self):
        # exp(-sqrt(2) log 2), frozen from the closed form; cross-checked by MC below
        got = cop.cdf(cop.EXT_GUMBEL, 0.5, 0.5, 0.5)
        assert_allclose(got, 0.3752142272464818, rtol=1e-12)
        rng = np.random.default_rng(3)
        uv = cop.sample(cop.EXT_GUMBEL, 0.5, n=10**5, rng=rng)
        mc = np.mean((uv[:, 0] <= 0.5) & (uv[:, 1] <= 0.5))
        assert abs(mc - got) < 4 * np.sqrt(got * (1 - got) / 10**5)

    def test_mixture_linearity(self):
        pts = [(0.2, 0.7), (0.5, 0.5), (0.9, 0.1)]
        for (a, b) in pts:
            ct = cop.cdf(cop.STUDENT_T, a, b, 0.4, nu=5.0)
            cg = cop.cdf(cop.EXT_GUMBEL, a, b, 0.4)
            cm = cop.cdf(cop.MIXTURE, a, b, 0.4, nu=5.0, p=0.3)
            assert_allclose(cm, 0.3 * ct + 0.7 * cg, atol=1e-9)

    @pytest.mark.parametrize("family", [cop.GAUSSIAN, cop.STUDENT_T, cop.EXT_CLAYTON, cop.SURVIVAL_GUMBEL])
    def test_cdf_matches_monte_carlo(self, family):
        tau = -0.45
        kw = FAMILY_KW[family]
        rng = np.random.default_rng(4)
        uv = cop.sample(family, tau, n=10**5, rng=rng, **kw)
        for (a, b) in [(0.3, 0.6), (0.7, 0.2)]:
            c = cop.cdf(family, a, b, tau, **kw)
            mc = np.mean((uv[:, 0] <= a) & (uv[:, 1] <= b))
            assert abs(mc - c) < 4 * np.sqrt(c * (1 - c) / 10**5) + 1e-4


class TestHFunctions:
    @pytest.mark.parametrize("family", [cop.GAUSSIAN, cop.STUDENT_T, cop.EXT_CLAYTON, cop.EXT_GUMBEL, cop.SURVIVAL_GUMBEL])
    @pytest.mark.parametrize("tau", [-0.6, 0.4])
    def test_round_trip(self, family, tau):
        rng = np.random.default_rng(5)
        u = rng.uniform(0.02, 0.98, 200)
        v = rng.uniform(0.02, 0.98, 200)
        kw = FAMILY_KW[family]
        h = cop.h_function(family, u, v, tau, **kw)
        back = cop.h_inverse(family, h, v, tau, **kw)
        assert_allclose(back, u, atol=1e-8)

    def test_h_is_conditional_cdf(self):
        # finite-difference check: h = dC/du1
        family, tau = cop.EXT_GUMBEL, 0.5
        u1, u2 = 0.4, 0.7
        eps = 1e-6
        fd = (cop.cdf(family, u1 + eps, u2, tau) - cop.cdf(family, u1 - eps, u2, tau)) / (2 * eps)
        assert_allclose(cop.h_function(family, u2, u1, tau), fd, atol=1e-6)


class TestSampling:
    def test_independence_scores_uncorrelated(self):
        rng = np.random.default_rng(6)
        uv = cop.sample(cop.GAUSSIAN, 0.0, n=10**5, rng=rng)
        z = ndtri(uv)
        r = np.corrcoef(z[:, 0], z[:, 1])[0, 1]
        assert abs(r) < 4 / np.sqrt(10**5)

    def test_mixture_component_frequencies(self):
        rng = np.random.default_rng(7)
        n = 10**5
        # count via the stream: first uniform block decides the component
        rng2 = np.random.default_rng(7)
        picks = rng2.uniform(size=n) < 0.5
        uv = cop.sample(cop.MIXTURE, 0.4, n=n, rng=rng, nu=5.0, p=0.5)
        assert abs(picks.mean() - 0.5) < 4 * np.sqrt(0.25 / n)
        assert uv.shape == (n, 2)
        assert np.all((uv > 0) & (uv < 1))

    def test_mixture_empirical_tau(self):
        rng = np.random.default_rng(8)
        uv = cop.sample(cop.MIXTURE, -0.5, n=10**5, rng=rng, nu=5.0, p=0.5)
        emp, _ = stats.kendalltau(uv[:, 0], uv[:, 1])
        assert abs(emp - (-0.5)) < 0.012

    def test_per_draw_tau_vector(self):
        rng = np.random.default_rng(9)
        taus = np.concatenate([np.full(500, -0.8), np.full(500, 0.8)])
        uv = cop.sample(cop.EXT_CLAYTON, taus, rng=rng)
        assert uv.shape == (1000, 2)
        lo, _ = stats.kendalltau(uv[:500, 0], uv[:500, 1])
        hi, _ = stats.kendalltau(uv[500:, 0], uv[500:, 1])
        assert lo < -0.6 and hi > 0.6


class TestMixtureTau:
    def test_degenerate_weights_exact(self):
        assert cop.mixture_tau(MixtureParams(0.37, 5.0, 1.0)) == 0.37
        assert cop.mixture_tau(MixtureParams(-0.61, 7.0, 0.0)) == -0.61

    def test_negligible_difference_positive_tau(self):
        tm = cop.mixture_tau(MixtureParams(0.4, 5.0, 0.5))
        assert abs(tm - 0.4) < 0.01

    def test_negligible_difference_negative_tau(self):
        tm = cop.mixture_tau(MixtureParams(-0.8, 5.0, 0.25))
        assert abs(tm + 0.8) < 0.01

    @pytest.mark.slow
    @pytest.mark.parametrize("tau", [-0.8, -0.3, 0.4, 0.7])
    @pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
    @pytest.mark.parametrize("nu", [5.0, 15.0])
    def test_negligible_difference_grid(self, tau, p, nu):
        assert abs(cop.mixture_tau(MixtureParams(tau, nu, p)) - tau) < 0.01


class TestTailDependence:
    def test_gumbel_only_limits(self):
        lo, up = cop.tail_dependence(MixtureParams(0.5, 5.0, 0.0))
        assert lo == 0.0
        assert_allclose(up, 2 - 2**0.5, rtol=1e-12)
        lo0, up0 = cop.tail_dependence(MixtureParams(0.0, 5.0, 0.0))
        assert lo0 == 0.0 and up0 == 0.0

    def test_pure_student_t_symmetric(self):
        lo, up = cop.tail_dependence(MixtureParams(0.5, 5.0, 1.0))
        assert lo == up > 0

    def test_asymmetry_value(self):
        lo, up = cop.tail_dependence(MixtureParams(0.5, 5.0, 0.5))
        assert_allclose(up - lo, 0.2928932188134524, rtol=1e-12)

    def test_upper_exceeds_lower(self):
        for tau in (0.1, 0.5, 0.9):
            for p in (0.0, 0.3, 0.7):
                lo, up = cop.tail_dependence(MixtureParams(tau, 5.0, p))
                assert up >= lo

    def test_sign_preconditions(self):
        with pytest.raises(ValueError):
            cop.tail_dependence(MixtureParams(-0.2, 5.0, 0.5))
        with pytest.raises(ValueError):
            cop.quarter_tail_dependence(MixtureParams(0.2, 5.0, 0.5))

    def test_quarter_coefficients_mirror(self):
        lr, ul = cop.quarter_tail_dependence(MixtureParams(-0.5, 5.0, 0.5))
        lo, up = cop.tail_dependence(MixtureParams(0.5, 5.0, 0.5))
        assert (lr, ul) == (lo, up)

    def test_quarter_monotone_in_strength(self):
        vals = [cop.quarter_tail_dependence(MixtureParams(t, 7.0, 0.4)) for t in (-0.2, -0.5, -0.8)]
        lrs = [v[0] for v in vals]
        uls = [v[1] for v in vals]
        assert lrs == sorted(lrs) and uls == sorted(uls)

    def test_tail_exceedance_cross_check(self):
        # lambda_L approx C(u,u)/u at small u (CDF-based proxy for the limit)
        prm = MixtureParams(0.5, 5.0, 0.5)
        lo, _ = cop.tail_dependence(prm)
        u = 1e-4
        ratio = cop.cdf(cop.MIXTURE, u, u, prm.tau, nu=prm.nu, p=prm.p) / u
        assert abs(ratio - lo) < 0.05


class TestContourGrid:
    def test_shape_and_finiteness(self):
        z, grid = cop.normalized_contour_grid(cop.MIXTURE, -0.8, nu=5.0, p=0.25, n=41)
        assert z.shape == (41,) and grid.shape == (41, 41)
        assert np.all(np.isfinite(grid)) and np.all(grid >= 0)

    def test_symmetric_family_symmetric_grid(self):
        _, grid = cop.normalized_contour_grid(cop.GAUSSIAN, 0.5, n=31)
        assert_allclose(grid, grid.T, atol=1e-12)
