import numpy as np
import pytest
from scipy.special import ndtr
from scipy.stats import beta as beta_dist

from dxaffinity import (
    Beta,
    ConfigError,
    DataError,
    Exponential,
    GridDensity,
    Mixture,
    Normal,
    TruncatedNormal,
    affine_transform,
    default_quadrature,
    integrate,
    rescale_covariate,
    standardize,
)

# quadrature of y^k f(y) must reproduce the raw moments of the family;
# values below were derived from the normal moment recursion
NORMAL_RAW_MOMENTS = {
    (2.0, 1.0): [1.0, 2.0, 5.0, 14.0, 43.0, 142.0, 499.0],
    (-1.5, 0.7): [1.0, -1.5, 2.74, -5.58, 12.3978, -29.5335, 74.67486],
}


@pytest.fixture
def rng():
    return np.random.default_rng(42)


class TestNormal:
    def test_pdf_peak(self):
        np.testing.assert_allclose(Normal(0, 1).pdf(0.0), 0.39894228040143267794, rtol=1e-15)

    def test_cdf_matches_ndtr(self):
        d = Normal(1.2, 0.4)
        ys = np.linspace(-1, 3, 7)
        np.testing.assert_allclose(d.cdf(ys), ndtr((ys - 1.2) / 0.4), rtol=1e-14)

    @pytest.mark.parametrize("mu, sigma", list(NORMAL_RAW_MOMENTS))
    def test_quadrature_moments(self, mu, sigma):
        d = Normal(mu, sigma)
        spec = default_quadrature(d)
        for k, want in enumerate(NORMAL_RAW_MOMENTS[(mu, sigma)]):
            got = integrate(lambda y: y**k * d.pdf(y), spec)
            np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-12)

    def test_sample_moments(self, rng):
        ys = Normal(2.0, 1.0).sample(200_000, rng)
        np.testing.assert_allclose(ys.mean(), 2.0, atol=0.02)
        np.testing.assert_allclose(ys.std(), 1.0, atol=0.02)

    @pytest.mark.parametrize("sigma", [0.0, -1.0, np.nan])
    def test_bad_sigma(self, sigma):
        with pytest.raises(ConfigError):
            Normal(0.0, sigma)


class TestTruncatedNormal:
    def test_mass_one(self):
        d = TruncatedNormal(-2.0, 2.0, 0.5, 0.8)
        np.testing.assert_allclose(integrate(d.pdf, default_quadrature(d)), 1.0, atol=1e-10)

    def test_cdf_endpoints(self):
        d = TruncatedNormal(-1.0, 3.0, 0.0, 1.0)
        np.testing.assert_allclose(d.cdf(-1.0), 0.0, atol=1e-15)
        np.testing.assert_allclose(d.cdf(3.0), 1.0, atol=1e-15)

    def test_samples_in_bounds(self, rng):
        d = TruncatedNormal(4.0, 6.0, 5.0, 1.0 / 3.0)
        ys = d.sample(10_000, rng)
        assert ys.min() >= 4.0 and ys.max() <= 6.0
        np.testing.assert_allclose(ys.mean(), 5.0, atol=0.02)

    def test_no_mass_rejected(self):
        # interval 40 sigma into the tail carries no representable mass
        with pytest.raises(ConfigError):
            TruncatedNormal(40.0, 41.0, 0.0, 1.0)

    def test_bad_interval(self):
        with pytest.raises(ConfigError):
            TruncatedNormal(2.0, -2.0, 0.0, 1.0)


class TestBeta:
    def test_pdf_matches_scipy(self):
        d = Beta(2.0, 5.0)
        ys = np.linspace(0.01, 0.99, 9)
        np.testing.assert_allclose(d.pdf(ys), beta_dist.pdf(ys, 2, 5), rtol=1e-12)

    def test_endpoints_zero_for_interior_shapes(self):
        d = Beta(2.0, 5.0)
        assert d.pdf(0.0) == 0.0 and d.pdf(1.0) == 0.0

    def test_cdf(self):
        d = Beta(1.5, 8.0)
        np.testing.assert_allclose(d.cdf(0.3), beta_dist.cdf(0.3, 1.5, 8.0), rtol=1e-12)

    def test_mass_one_gauss(self):
        d = Beta(1.5, 8.0)
        np.testing.assert_allclose(integrate(d.pdf, default_quadrature(d)), 1.0, atol=1e-10)

    def test_sample(self, rng):
        ys = Beta(2.0, 5.0).sample(100_000, rng)
        np.testing.assert_allclose(ys.mean(), 2.0 / 7.0, atol=0.01)


class TestExponential:
    def test_pdf_cdf(self):
        d = Exponential(4.0)
        np.testing.assert_allclose(d.pdf(0.25), 4.0 * np.exp(-1.0), rtol=1e-14)
        np.testing.assert_allclose(d.cdf(0.25), 1.0 - np.exp(-1.0), rtol=1e-14)

    def test_mass_one(self):
        d = Exponential(0.5)
        np.testing.assert_allclose(integrate(d.pdf, default_quadrature(d)), 1.0, atol=1e-10)

    def test_negative_rate(self):
        with pytest.raises(ConfigError):
            Exponential(-1.0)


class TestMixture:
    def test_pdf_is_weighted_sum(self):
        m = Mixture([0.7, 0.3], [Normal(0.1, 0.2), Normal(3.1, 0.2)])
        ys = np.linspace(-1, 4, 11)
        want = 0.7 * Normal(0.1, 0.2).pdf(ys) + 0.3 * Normal(3.1, 0.2).pdf(ys)
        np.testing.assert_allclose(m.pdf(ys), want, rtol=1e-14)

    def test_cdf_limits(self):
        m = Mixture([0.5, 0.5], [Normal(-5, 1), Normal(5, 1)])
        np.testing.assert_allclose(m.cdf(0.0), 0.5, atol=1e-9)

    def test_sample_component_frequencies(self, rng):
        m = Mixture([0.7, 0.3], [Normal(0.0, 0.1), Normal(10.0, 0.1)])
        ys = m.sample(50_000, rng)
        np.testing.assert_allclose(np.mean(ys > 5.0), 0.3, atol=0.01)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ConfigError):
            Mixture([0.7, 0.4], [Normal(0, 1), Normal(1, 1)])

    def test_negative_weight(self):
        with pytest.raises(ConfigError):
            Mixture([1.2, -0.2], [Normal(0, 1), Normal(1, 1)])

    def test_empty(self):
        with pytest.raises(ConfigError):
            Mixture([], [])


class TestGridDensity:
    def test_cdf_matches_normal(self):
        grid = np.linspace(-8, 8, 2001)
        d = GridDensity(grid, Normal(0, 1).pdf(grid))
        ys = np.array([-1.5, 0.0, 0.7, 2.0])
        # piecewise-linear density between grid points: O(h^2) cdf error
        np.testing.assert_allclose(d.cdf(ys), ndtr(ys), atol=1e-5)

    def test_unnormalized_rejected_without_flag(self):
        grid = np.linspace(0, 1, 101)
        with pytest.raises(DataError):
            GridDensity(grid, np.full(101, 2.0))

    def test_normalize_flag(self):
        grid = np.linspace(0, 1, 101)
        d = GridDensity(grid, np.full(101, 2.0), normalize=True)
        np.testing.assert_allclose(d.pdf(0.5), 1.0, rtol=1e-12)
        np.testing.assert_allclose(d.cdf(1.0), 1.0, rtol=1e-12)

    def test_unsorted_grid_rejected(self):
        with pytest.raises(DataError):
            GridDensity(np.array([0.0, 2.0, 1.0]), np.ones(3), normalize=True)

    def test_sampling_unsupported(self):
        grid = np.linspace(-8, 8, 801)
        d = GridDensity(grid, Normal(0, 1).pdf(grid))
        with pytest.raises(ConfigError):
            d.sample(5, 0)


class TestAffineTransform:
    def test_normal(self):
        d = affine_transform(Normal(1.0, 2.0), shift=3.0, scale=0.5)
        assert isinstance(d, Normal)
        np.testing.assert_allclose([d.mu, d.sigma], [3.5, 1.0])

    def test_mixture(self):
        m = Mixture([0.5, 0.5], [Normal(0, 1), Normal(2, 1)])
        t = affine_transform(m, shift=1.0, scale=2.0)
        np.testing.assert_allclose(t.pdf(1.0), m.pdf(0.0) / 2.0, rtol=1e-13)

    def test_exponential_scale_only(self):
        d = affine_transform(Exponential(4.0), shift=0.0, scale=2.0)
        assert isinstance(d, Exponential)
        np.testing.assert_allclose(d.rate, 2.0)
        with pytest.raises(ConfigError):
            affine_transform(Exponential(4.0), shift=1.0, scale=2.0)

    def test_density_value_transform(self):
        # f_T(t) = f((t - shift)/scale)/scale for every supported family
        base = TruncatedNormal(-2, 2, 0, 1)
        t = affine_transform(base, shift=5.0, scale=3.0)
        np.testing.assert_allclose(t.pdf(6.5), base.pdf(0.5) / 3.0, rtol=1e-13)


class TestStandardize:
    def test_two_points(self):
        std = standardize(np.array([0.0, 1.0]))
        np.testing.assert_allclose(std.z[1], 0.7071067811865475244, rtol=1e-15)
        np.testing.assert_allclose(std.location, 0.5)

    def test_roundtrip(self, rng):
        ys = rng.normal(3.0, 2.0, size=500)
        std = standardize(ys)
        np.testing.assert_allclose(std.z * std.scale + std.location, ys, rtol=1e-12)
        np.testing.assert_allclose(std.z.mean(), 0.0, atol=1e-12)
        np.testing.assert_allclose(std.z.std(ddof=1), 1.0, rtol=1e-12)

    @pytest.mark.parametrize("ys", [[1.0], [2.0, 2.0, 2.0], [0.0, np.inf]])
    def test_degenerate_rejected(self, ys):
        with pytest.raises(DataError):
            standardize(np.asarray(ys, dtype=float))


class TestRescaleCovariate:
    def test_maps_to_unit_interval(self):
        xs = np.array([2.0, 4.0, 6.0])
        x01, cmap = rescale_covariate(xs)
        np.testing.assert_allclose(x01, [-1.0, 0.0, 1.0])
        np.testing.assert_allclose(cmap.inverse(x01), xs)

    def test_forward_snaps_endpoints(self):
        _, cmap = rescale_covariate(np.array([0.0, 1.0]))
        assert cmap.forward(1.0 + 1e-13) == 1.0

    def test_constant_rejected(self):
        with pytest.raises(DataError):
            rescale_covariate(np.array([3.0, 3.0, 3.0]))
