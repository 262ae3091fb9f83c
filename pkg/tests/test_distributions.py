import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special
from scipy import stats as sps

from shotnoise import distributions as D
from shotnoise.stats import empirical_lst, ks_one_sample, ks_two_sample

FAMILIES = [
    D.Gamma(0.5, 0.5),
    D.Gamma(2.0, 3.0),
    D.PositiveLinnik(0.5, 1.0),
    D.PositiveLinnik(1.0, 2.0),
    D.GeneralizedLinnik(1.5, 1.0, 0.6),
    D.S2(2.0),
    D.S2Rho(2.0, 0.5),
    D.StableSubordinated(D.Gamma(0.5, 0.5), 0.5),
    D.PointMass(3.0),
]


# -- transforms ------------------------------------------------------------

def test_s2_lst_value():
    y = math.sqrt(2.0)
    assert float(D.S2(2.0).lst(1.0)) == pytest.approx((y / math.sinh(y)) ** 2, rel=1e-14)
    assert float(D.S2(2.0).lst(1.0)) == pytest.approx(0.5341190429, abs=1e-10)


def test_lst_at_zero_and_large():
    for f in FAMILIES:
        assert float(f.lst(0.0)) == 1.0
        assert float(f.lst_complement(0.0)) == 0.0
    # no overflow far out; the value underflows towards 0
    assert 0.0 <= float(D.S2(1.0).lst(1e8)) < 1e-300


def test_glinnik_index_one_is_gamma():
    s = np.geomspace(1e-4, 1e3, 60)
    np.testing.assert_allclose(D.GeneralizedLinnik(0.7, 2.0, 1.0).lst(s), D.Gamma(0.7, 2.0).lst(s),
                               rtol=1e-15)


def test_s2_lst_product_form():
    # y / sinh y = prod_n (1 + y**2 / (pi n)**2)**-1
    delta, s = 1.5, np.array([0.01, 0.7, 4.0])
    n = np.arange(1, 200_001)[:, None]
    prod = np.exp(-2.0 * np.sum(np.log1p(delta * s / (math.pi ** 2 * n ** 2)), axis=0))
    np.testing.assert_allclose(D.S2(delta).lst(s), prod, rtol=1e-5)


@pytest.mark.parametrize("f", FAMILIES, ids=lambda f: f.key)
def test_lst_complement_consistent(f):
    s = np.geomspace(1e-3, 1e2, 40)
    np.testing.assert_allclose(f.lst_complement(s), 1.0 - f.lst(s), atol=2e-15)


@pytest.mark.parametrize("f", [D.Gamma(0.5, 0.5), D.S2(2.0), D.PositiveLinnik(0.5, 1.0)],
                         ids=lambda f: f.key)
def test_lst_complement_small_s_relative(f):
    s = np.geomspace(1e-14, 1e-6, 9)
    c = f.lst_complement(s)
    # leading term of 1 - phi
    lead = {"gamma": 0.25 * s, "s2": (2.0 / 3.0) * s, "linnik": np.sqrt(s) - s}[f.key.split(":")[0]]
    np.testing.assert_allclose(c, lead, rtol=1e-5)


@pytest.mark.parametrize("f", FAMILIES, ids=lambda f: f.key)
def test_lst_monotone_log_convex(f):
    s = np.geomspace(1e-3, 50.0, 80)
    v = f.lst(s)
    assert np.all((v > 0) & (v <= 1))
    assert np.all(np.diff(v) <= 0)
    lv = np.log(v)
    d0, d1 = np.diff(s)[:-1], np.diff(s)[1:]
    sd = ((lv[2:] - lv[1:-1]) / d1 - (lv[1:-1] - lv[:-2]) / d0)
    assert np.all(sd >= -1e-12)


# -- tails -----------------------------------------------------------------

def test_linnik_index_one_tail():
    assert float(D.PositiveLinnik(1.0, 1.0).tail(1.0)) == pytest.approx(math.exp(-1), rel=1e-14)


def test_linnik_half_tail_erfc():
    # E_{1/2}(-1) = e * erfc(1)
    v = float(D.PositiveLinnik(0.5, 1.0).tail(np.array(1.0)))
    assert v == pytest.approx(0.4275836, abs=1e-7)
    assert v == pytest.approx(math.e * math.erfc(1.0), abs=1e-14)


def test_linnik_tail_far_uses_integral():
    x = np.array([10.0, 100.0, 1e4])
    np.testing.assert_allclose(D.PositiveLinnik(0.5, 1.0).tail(x), special.erfcx(np.sqrt(x)),
                               rtol=1e-10)


def test_series_cap_raises():
    with pytest.raises(D.SeriesBreakdownError):
        D.mittag_leffler_tail(40.0, 0.5, 1.0)
    with pytest.raises(D.SeriesBreakdownError):
        D.mittag_leffler_tail(31.0, 1.0, 1.0)


def test_s2_tail_value():
    assert float(D.S2(2.0).tail(np.array(2.0))) == pytest.approx(1.94e-3, abs=1e-5)
    assert float(D.S2(2.0).cdf(np.array(2.0))) == pytest.approx(0.99806, abs=1e-5)


def test_sampler_only():
    for f in (D.S2Rho(1.0, 0.5), D.StableSubordinated(D.Gamma(1, 1), 0.5),
              D.GeneralizedLinnik(1.0, 1.0, 0.5)):
        with pytest.raises(D.SamplerOnlyError):
            f.tail(np.array(1.0))


def test_negative_tail_argument_rejected():
    with pytest.raises(D.DistError):
        D.tail(D.Gamma(1, 1), -1.0)


@pytest.mark.parametrize("f", [D.Gamma(1.0, 1.0), D.PositiveLinnik(1.0, 1.0), D.S2(2.0)],
                         ids=lambda f: f.key)
def test_tail_reproduces_lst(f):
    # phi(s) = s * int_0^inf exp(-s x) F(x) dx
    for s in (0.5, 1.0, 2.0):
        val = s * integrate.quad(lambda x: math.exp(-s * x) * float(f.cdf(np.array(x))), 0, np.inf,
                                 epsabs=1e-13, epsrel=1e-12, limit=500)[0]
        assert val == pytest.approx(float(f.lst(s)), abs=1e-6)


@pytest.mark.parametrize("f", [D.Gamma(0.5, 0.5), D.S2(1.0), D.PointMass(2.0)],
                         ids=lambda f: f.key)
def test_partial_mean_limits(f):
    assert float(np.asarray(f.partial_mean(np.array(0.0)))) == 0.0
    assert float(np.asarray(f.partial_mean(np.array(100.0)))) == pytest.approx(f.mean(), rel=1e-9)


def test_s2_cdf_monotone():
    x = np.geomspace(1e-3, 20, 400)
    assert np.all(np.diff(D.S2(1.0).cdf(x)) >= 0)


# -- means -----------------------------------------------------------------

def test_means():
    assert D.Gamma(0.5, 0.5).mean() == 0.25
    assert D.S2(2.0).mean() == pytest.approx(2.0 / 3.0)
    assert math.isinf(D.PositiveLinnik(0.5, 1.0).mean())
    assert D.PositiveLinnik(1.0, 2.0).mean() == 2.0
    assert D.GeneralizedLinnik(2.0, 1.5, 1.0).mean() == 3.0
    for f in (D.GeneralizedLinnik(1, 1, 0.5), D.S2Rho(1, 0.5), D.StableSubordinated(D.S2(1), 0.3)):
        assert math.isinf(f.mean())


def test_s2_mean_from_lst_slope():
    s = 1e-7
    assert float(D.S2(2.0).lst_complement(s)) / s == pytest.approx(2.0 / 3.0, rel=1e-6)


# -- sampling --------------------------------------------------------------

def test_point_mass_sample():
    assert D.sample(D.PointMass(3.0), 5, 1).values.tolist() == [3.0] * 5


def test_sample_rejects_empty():
    with pytest.raises(D.DistError):
        D.sample(D.Gamma(1, 1), 0, 1)


def test_sample_deterministic_and_sorted():
    a = D.sample(D.S2(1.0), 1000, 9)
    b = D.sample(D.S2(1.0), 1000, 9)
    assert np.array_equal(a.values, b.values)
    assert np.all(np.diff(a.values) >= 0) and a.n == 1000
    assert not a.values.flags.writeable


def test_sample_chunked_deterministic():
    a = D.sample(D.Gamma(1, 1), 10_001, 5, chunks=4)
    b = D.sample(D.Gamma(1, 1), 10_001, 5, chunks=4)
    assert a.n == 10_001 and np.array_equal(a.values, b.values)


def test_gamma_sample_mean_clt():
    smp = D.sample(D.Gamma(0.5, 0.5), 200_000, 42)
    sigma = math.sqrt(0.5 * 0.25 / smp.n)
    assert abs(smp.mean() - 0.25) <= 3 * sigma


def test_linnik_index_one_is_exponential():
    smp = D.sample(D.PositiveLinnik(1.0, 2.0), 100_000, 3)
    assert ks_one_sample(smp, sps.expon(scale=2.0).cdf, 0.01).passed


def test_stable_half_is_levy():
    smp = D.stable_sample(0.5, 100_000, 11)
    # density (2 sqrt(pi))**-1 x**-3/2 exp(-1/(4x)); CDF erfc(1 / (2 sqrt x))
    assert ks_one_sample(smp, lambda x: special.erfc(0.5 / np.sqrt(x)), 0.01).passed


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
def test_stable_lst(alpha):
    smp = D.stable_sample(alpha, 100_000, 12)
    assert empirical_lst(smp, 0.0) == (1.0, 0.0)
    for s in (0.5, 1.0, 2.0):
        v, se = empirical_lst(smp, s)
        assert abs(v - math.exp(-s ** alpha)) <= 4 * se


def test_stable_rejects_index():
    for a in (0.0, 1.0, 1.5):
        with pytest.raises(D.DistError):
            D.stable_sample(a, 10, 1)


@pytest.mark.parametrize("f", FAMILIES, ids=lambda f: f.key)
def test_sampler_matches_lst(f):
    smp = D.sample(f, 100_000, 20)
    for s in (0.25, 1.0, 4.0):
        v, se = empirical_lst(smp, s)
        assert abs(v - float(f.lst(s))) <= 4 * se + 1e-12


def test_s2_sampler_matches_gamma_series_oracle():
    # S2(delta) = sum_n delta / (pi n)**2 * G_n with G_n ~ Gamma(2, 1)
    rng = np.random.default_rng(77)
    delta, n, terms = 1.0, 20_000, 400
    w = delta / (math.pi ** 2 * np.arange(1, terms + 1) ** 2)
    oracle = rng.gamma(2.0, 1.0, (n, terms)) @ w + 2.0 * (delta / 6.0 - w.sum())
    smp = D.sample(D.S2(delta), n, 78)
    assert ks_two_sample(smp, oracle, 0.01).passed
    assert ks_one_sample(oracle, D.S2(delta).cdf, 0.01).passed


def test_gamma_scale_equivariance():
    a = D.sample(D.Gamma(1.5, 6.0), 50_000, 1)
    b = D.sample(D.Gamma(1.5, 2.0), 50_000, 2)
    assert ks_two_sample(a, 3.0 * b.values, 0.01).passed


def test_subordination_identity():
    base = D.S2(1.0)
    smp = D.sample(D.StableSubordinated(base, 0.6), 100_000, 8)
    for s in (0.25, 1.0, 4.0):
        v, se = empirical_lst(smp, s)
        assert abs(v - float(base.lst(s ** 0.6))) <= 4 * se


def test_empirical_sample_resampling():
    smp = D.EmpiricalSample([3.0, 1.0, 2.0], 1)
    assert smp.values.tolist() == [1.0, 2.0, 3.0]
    draws = smp.draw(np.random.default_rng(0), 100)
    assert set(draws.tolist()) <= {1.0, 2.0, 3.0}
    with pytest.raises(D.DistError):
        D.EmpiricalSample([-1.0])


# -- Levy density ------------------------------------------------------------

def test_s2_levy_k_dominant_term():
    assert float(D.s2_levy_k(1.0, 2.0)) == pytest.approx(2 * math.exp(-math.pi ** 2 * 2), rel=1e-10)


def test_s2_levy_k_small_x_limit():
    # k(x) = sqrt(delta / (pi x)) - 1 up to exp(-delta / x), so k(x) sqrt(x) -> sqrt(delta / pi)
    for delta in (0.5, 1.0, 3.0):
        x = 1e-6
        kx = float(D.s2_levy_k(delta, x)) * math.sqrt(x)
        assert kx + math.sqrt(x) == pytest.approx(math.sqrt(delta / math.pi), rel=1e-12)
        assert 0 < kx < math.sqrt(delta / math.pi)


def test_s2_levy_khintchine():
    # phi(s) = exp(-int (1 - e**(-s x)) k(x) / x dx) and int k = mean
    delta = 2.0
    k = lambda x: float(D.s2_levy_k(delta, np.array(x)))
    mean = integrate.quad(k, 0, np.inf, limit=400)[0]
    assert mean == pytest.approx(delta / 3.0, rel=1e-8)
    for s in (0.5, 3.0):
        ex = integrate.quad(lambda x: -math.expm1(-s * x) * k(x) / x, 0, np.inf, limit=400)[0]
        assert math.exp(-ex) == pytest.approx(float(D.S2(delta).lst(s)), rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0), st.lists(st.floats(1e-5, 30.0), min_size=2, max_size=30, unique=True))
def test_s2_levy_k_decreasing(delta, xs):
    x = np.sort(np.array(xs))
    k = D.s2_levy_k(delta, x)
    assert np.all(np.diff(k) <= 0)
    assert np.all(k >= 0)


def test_s2_levy_domain():
    with pytest.raises(D.DistError):
        D.s2_levy_density(1.0, 0.0)


# -- parsing ---------------------------------------------------------------

@pytest.mark.parametrize("key", ["gamma:0.5,0.5", "linnik:0.5,1", "glinnik:1,2,0.5", "s2:2",
                                 "s2rho:2,0.5", "stable-sub:gamma:0.5,0.5,0.5", "point:3",
                                 "stable-sub:stable-sub:s2:1,0.5,0.5"])
def test_parse_round_trip(key):
    f = D.parse_dist(key)
    assert D.parse_dist(f.key) == f


@pytest.mark.parametrize("key", ["gamma:1", "gamma:-1,1", "linnik:1.5,1", "s2rho:1,1",
                                 "nope:1", "point:x", "stable-sub:gamma:1,1,1.2"])
def test_parse_rejects(key):
    with pytest.raises(D.DistError):
        D.parse_dist(key)
