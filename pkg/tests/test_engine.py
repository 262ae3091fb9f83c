import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special
from scipy.stats import gamma

from shotnoise import distributions as D
from shotnoise import engine as E
from shotnoise import response as R
from shotnoise.stats import ks_one_sample


@pytest.fixture(scope="module")
def exp_cfg():
    return E.SntConfig(1.0, R.exponential())


@pytest.fixture(scope="module")
def exp_levy(exp_cfg):
    return E.LevyTail(D.Gamma(1.0, 1.0), exp_cfg)


@pytest.fixture(scope="module")
def sech_levy():
    return E.LevyTail(D.Gamma(0.5, 0.5), E.SntConfig(1.0, R.sech2()))


# -- configuration ---------------------------------------------------------

def test_config_invariants():
    with pytest.raises(E.EngineError):
        E.SntConfig(0.0, R.exponential())
    with pytest.raises(E.EngineError):
        E.SntConfig(1.0, R.exponential(), trunc_eps=1e-2)
    with pytest.raises(E.EngineError):
        E.SntConfig(1.0, R.exponential(), horizon_override=-1.0)


def test_horizon_meets_tail_budget(exp_cfg):
    # int_T^inf e^-u du = e^-T
    t = exp_cfg.horizon()
    assert math.exp(-t) <= 1e-8 * (1 + 1e-6)
    assert math.exp(-t) > 0.5e-8


def test_indicator_rejected():
    cfg = E.SntConfig(1.0, R.make_response("indicator:2"))
    with pytest.raises(E.ValidationRejection):
        E.sample_snt(D.PointMass(1.0), cfg, 100, 1)


def test_infinite_regime_rejected():
    # int h = inf
    h = R.from_function(lambda u: 1.0 / (1.0 + np.asarray(u)), h0=1.0, name="harmonic")
    with pytest.raises(E.ValidationRejection):
        E.sample_snt(D.PointMass(1.0), E.SntConfig(1.0, h), 100, 1)


# -- Monte Carlo -----------------------------------------------------------

def test_campbell_mean(exp_cfg):
    out = E.sample_snt(D.PointMass(1.0), exp_cfg, 100_000, 11)
    se = out.values.std() / math.sqrt(out.n)
    assert out.mean() == pytest.approx(1.0, abs=3 * se)


def test_zero_input_gives_zero_sample(exp_cfg):
    out = E.sample_snt(D.PointMass(0.0), exp_cfg, 1000, 3)
    assert np.all(out.values == 0.0)


@pytest.mark.slow
def test_sech2_gamma_fixed_point_by_simulation():
    spec = D.Gamma(0.5, 0.5)
    out = E.sample_snt(spec, E.SntConfig(1.0, R.sech2()), 200_000, 42)
    assert ks_one_sample(out, spec.cdf, 0.01).passed


def test_sample_is_deterministic(exp_cfg):
    a = E.sample_snt(D.Gamma(2.0, 0.5), exp_cfg, 120_000, 5)
    b = E.sample_snt(D.Gamma(2.0, 0.5), exp_cfg, 120_000, 5)
    assert np.array_equal(a.values, b.values)
    assert a.provenance["horizon"] == exp_cfg.horizon()


def test_empirical_input_resampled(exp_cfg):
    src = D.sample(D.Gamma(1.0, 1.0), 5000, 2)
    out = E.sample_snt(src, exp_cfg, 50_000, 9)
    se = out.values.std() / math.sqrt(out.n)
    assert out.mean() == pytest.approx(src.mean(), abs=4 * se)


def test_infinite_mean_needs_horizon():
    cfg = E.SntConfig(0.5, R.exponential())
    with pytest.raises(E.EngineError):
        E.sample_snt(D.PositiveLinnik(0.5, 1.0), cfg, 100, 7)
    out = E.sample_snt(D.PositiveLinnik(0.5, 1.0),
                       E.SntConfig(0.5, R.exponential(), horizon_override=60.0), 10_000, 7)
    assert out.n == 10_000 and np.all(out.values >= 0)


def test_truncation_doubling(exp_cfg):
    spec = D.Gamma(1.0, 1.0)
    t = exp_cfg.horizon()
    a = E.sample_snt(spec, E.SntConfig(1.0, R.exponential(), horizon_override=t), 100_000, 21)
    b = E.sample_snt(spec, E.SntConfig(1.0, R.exponential(), horizon_override=2 * t), 100_000, 22)
    se = math.hypot(a.values.std(), b.values.std()) / math.sqrt(a.n)
    assert abs(a.mean() - b.mean()) < 1e-8 + 4 * se


# -- LST residuals ---------------------------------------------------------

def test_sech2_gamma_residual_small():
    recs = E.lst_residual(D.Gamma(0.5, 0.5), E.SntConfig(1.0, R.sech2()), E.STANDARD_S_GRID)
    assert E.max_residual(recs) <= 1e-6


def test_residual_at_zero_exact(exp_cfg):
    (rec,) = E.lst_residual(D.Gamma(1.0, 1.0), exp_cfg, [0.0])
    assert rec.residual == 0.0 and rec.lhs == rec.rhs == 1.0


def test_negative_control_lambda_two():
    cfg = E.SntConfig(2.0, R.exponential())
    (rec,) = E.lst_residual(D.Gamma(1.0, 1.0), cfg, [1.0])
    # int_0^inf (1 - 1/(1 + e^-u)) du = ln 2, so rhs = exp(-2 ln 2) = 1/4
    assert rec.rhs == pytest.approx(0.25, rel=1e-9)
    assert rec.residual >= 1e-2


@pytest.mark.parametrize("spec,key,lam", [
    (D.Gamma(2.0, 0.5), "gamma:2", 1.0),
    (D.Gamma(1.0, 1.0), "exp", 1.0),
    (D.S2(2.0), "s2", 1.0),
    (D.S2Rho(2.0, 0.5), "pow:s2:0.5", 1.0),
    (D.PositiveLinnik(0.5, 1.0), "exp", 0.5),
])
def test_declared_fixed_points(spec, key, lam):
    recs = E.lst_residual(spec, E.SntConfig(lam, R.make_response(key)), E.STANDARD_S_GRID)
    assert E.max_residual(recs) <= 1e-5


def test_exponent_oracle(exp_cfg):
    # h = e^-u, phi = 1/(1+s): int (1 - phi(s e^-u)) du = ln(1 + s)
    for s in (0.1, 1.0, 7.0):
        assert E.shot_noise_exponent(D.Gamma(1.0, 1.0), exp_cfg.response, s) == pytest.approx(
            math.log1p(s), rel=1e-10)


def test_residual_record_dict(exp_cfg):
    (rec,) = E.lst_residual(D.Gamma(1.0, 1.0), exp_cfg, [0.5])
    assert set(rec.as_dict()) == {"s", "lhs", "rhs", "residual"}


# -- Levy tail -------------------------------------------------------------

@pytest.mark.parametrize("x,expected", [(1.0, 0.2193839344), (0.5, 0.5597735948)])
def test_levy_tail_exponential_integral(exp_cfg, x, expected):
    v = E.levy_tail(D.Gamma(1.0, 1.0), exp_cfg, x)
    assert float(v) == pytest.approx(expected, abs=1e-9)
    assert float(v) == pytest.approx(special.exp1(x), rel=1e-9)


def test_levy_tail_rejects_nonpositive(exp_levy):
    with pytest.raises(D.DistError):
        exp_levy.value(0.0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(1e-3, 40.0), min_size=2, max_size=8))
def test_levy_tail_monotone_nonnegative(sech_levy, xs):
    x = np.sort(np.array(xs))
    v = sech_levy(x)
    assert np.all(v >= 0)
    assert np.all(np.diff(v) <= 1e-12 * np.maximum(v[:-1], 1e-300))


def test_levy_tail_vanishes_far_out(exp_levy):
    assert exp_levy.value(200.0) < 1e-80


def test_truncated_first_moment_closed_form(exp_levy):
    # for E1 tail: W(y) = int_0^y t e^-t / t dt = 1 - e^-y
    x = E.uniform_grid(2.0, 1e-2)
    w = exp_levy.truncated_first_moment(x)
    np.testing.assert_allclose(w, -np.expm1(-x), atol=5e-8)
    assert exp_levy.truncated_first_moment(x) is w


def test_grid_must_be_uniform(exp_levy):
    with pytest.raises(E.EngineError):
        exp_levy.truncated_first_moment(np.array([0.0, 0.1, 0.3]))
    with pytest.raises(E.EngineError):
        exp_levy.truncated_first_moment(np.array([0.1, 0.2, 0.3]))


# -- Levy identities -------------------------------------------------------

def test_steutel_exponential(exp_levy):
    res = E.steutel_check(D.Gamma(1.0, 1.0), exp_levy, E.uniform_grid(4.0, 1e-3))
    assert res.passed and res.bound == pytest.approx(5e-3)
    assert res.lhs[0] == 0.0 and res.rhs[0] == 0.0


def test_steutel_sech2(sech_levy):
    assert E.steutel_check(D.Gamma(0.5, 0.5), sech_levy, E.uniform_grid(4.0, 1e-3)).passed


def test_steutel_negative_control(exp_levy):
    # a law that is not the one generating the Levy tail must fail
    res = E.steutel_check(D.Gamma(2.0, 0.5), exp_levy, E.uniform_grid(4.0, 1e-3))
    assert not res.passed


def test_steutel_rejects_infinite_mean(exp_levy):
    with pytest.raises(E.EngineError):
        E.steutel_check(D.PositiveLinnik(0.5, 1.0), exp_levy, E.uniform_grid(1.0, 1e-2))


def test_feature_exponential(exp_levy):
    res = E.feature_check(D.Gamma(1.0, 1.0), exp_levy, R.MixingMeasure.uniform(),
                          E.uniform_grid(4.0, 1e-3))
    assert res.passed
    assert res.lhs[0] == res.rhs[0] == 0.0


def test_feature_sech2(sech_levy):
    res = E.feature_check(D.Gamma(0.5, 0.5), sech_levy, R.MixingMeasure.beta1(0.5),
                          E.uniform_grid(4.0, 1e-3))
    assert res.passed
    default = E.feature_check(D.Gamma(0.5, 0.5), sech_levy, None, E.uniform_grid(1.0, 1e-2))
    assert default.passed


def test_check_result_dict(exp_levy):
    d = E.steutel_check(D.Gamma(1.0, 1.0), exp_levy, E.uniform_grid(1.0, 1e-2)).as_dict()
    assert d["check"] == "steutel" and d["n_grid"] == 101 and d["pass"] is True


def test_partial_mean_quadrature_oracle():
    # independent check of the left side of both identities
    x = 1.7
    ref = integrate.quad(lambda y: y * gamma.pdf(y, 0.5, scale=0.5), 0, x)[0]
    assert float(D.Gamma(0.5, 0.5).partial_mean(np.float64(x))) == pytest.approx(ref, rel=1e-8)
