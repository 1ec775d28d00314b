import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_tails.evt import (
    ExtrapolationError,
    FitError,
    NoExceedancesError,
    Sample,
    TailModel,
    WorstCaseCurve,
    empirical_cdf,
    fit_gpd_mle,
    gpd_loglik,
    load_sample_csv,
    mean_excess_curve,
    return_level,
    survival,
)


def test_sample_sorts_and_freezes():
    s = Sample([3.0, 1.0, 2.0])
    assert list(s.values) == [1.0, 2.0, 3.0]
    with pytest.raises(ValueError):
        s.values[0] = 5.0


@pytest.mark.parametrize("bad", [[], [1.0, -1.0], [1.0, math.nan], [math.inf]])
def test_sample_rejects(bad):
    with pytest.raises(ValueError):
        Sample(bad)


def test_exceedances_and_rate():
    s = Sample(np.arange(1.0, 11.0))
    assert np.array_equal(s.exceedances(8.0), [1.0, 2.0])
    assert np.array_equal(s.above(8.0), [9.0, 10.0])
    assert s.exceedance_rate(8.0) == 0.2
    assert s.quantile(0.5) == 5.5


def test_empirical_cdf_right_continuous():
    s = Sample([1.0, 2.0, 2.0, 4.0])
    assert empirical_cdf(s, 2.0) == 0.75
    assert empirical_cdf(s, 1.999) == 0.25
    assert np.array_equal(empirical_cdf(s, [0.0, 5.0]), [0.0, 1.0])


def test_mean_excess_linear_for_gpd(rng):
    m = TailModel(0.0, 1.0, 4.0, 1.0)
    s = Sample(m.sample_exceedances(rng, 200_000))
    curve = mean_excess_curve(s, [0.5, 1.0, 2.0])
    # E(X - v | X > v) = (sigma + xi v) / (1 - xi) for a GPD with shape xi and scale sigma
    for v, e in curve:
        assert e == pytest.approx((1.0 + 0.25 * v) / 0.75, rel=0.03)


def test_mean_excess_no_exceedances():
    with pytest.raises(NoExceedancesError):
        mean_excess_curve(Sample([1.0, 2.0]), [5.0])


def test_survival_examples():
    m = TailModel(0.0, 1.0, 2.0, 1.0)
    assert m.survival(0.0) == 1.0
    assert m.survival(2.0) == pytest.approx(0.25, rel=1e-15)
    m2 = TailModel(9.97, 0.05, 2.03, 7.034)
    assert survival(m2, 9.97) == 0.05
    with pytest.raises(ValueError):
        m2.survival(5.0)


@given(beta=st.floats(0.3, 10), sigma=st.floats(0.1, 10), p=st.floats(1e-14, 1.0))
@settings(max_examples=60, deadline=None)
def test_isf_inverts_survival(beta, sigma, p):
    m = TailModel(1.0, 1.0, beta, sigma)
    x = m.isf(p)
    assert m.survival(x) == pytest.approx(p, rel=1e-9)


@given(beta=st.floats(0.5, 5), x=st.floats(0, 1e6), dx=st.floats(1e-6, 1e3))
@settings(max_examples=60, deadline=None)
def test_survival_decreasing(beta, x, dx):
    m = TailModel(0.0, 0.3, beta, 1.0)
    assert m.survival(x + dx) <= m.survival(x)


def test_density_integrates_to_p_u():
    from scipy import integrate

    m = TailModel(2.0, 0.1, 3.0, 1.5)
    val, _ = integrate.quad(m.density, 2.0, np.inf)
    assert val == pytest.approx(0.1, rel=1e-10)


def test_tail_model_validation():
    for args in [(-1, 1, 2, 1), (0, 0, 2, 1), (0, 1.5, 2, 1), (0, 1, 0, 1), (0, 1, 2, -1)]:
        with pytest.raises(ValueError):
            TailModel(*args)


def test_fit_recovers_parameters(rng):
    truth = TailModel(0.0, 1.0, 2.5, 3.0)
    y = truth.sample_exceedances(rng, 5000)
    fit = fit_gpd_mle(y)
    lo, hi = fit.xi_ci
    assert lo < truth.xi < hi
    assert fit.model.sigma == pytest.approx(3.0, rel=0.08)
    assert fit.epsilon == pytest.approx(hi - fit.model.xi)
    assert fit.n_exceedances == 5000


def test_fit_is_at_likelihood_maximum(rng):
    y = TailModel(0.0, 1.0, 2.0, 1.0).sample_exceedances(rng, 800)
    fit = fit_gpd_mle(y)
    xi, sig = fit.model.xi, fit.model.sigma
    best = gpd_loglik(xi, sig, y)
    for dxi, dsig in [(1e-3, 0), (-1e-3, 0), (0, 1e-3), (0, -1e-3)]:
        assert gpd_loglik(xi + dxi, sig * (1 + dsig), y) <= best + 1e-9


def test_fit_stores_threshold_and_rate(rng):
    y = TailModel(0.0, 1.0, 3.0, 1.0).sample_exceedances(rng, 300)
    fit = fit_gpd_mle(y, u=9.97, p_u=0.05)
    assert fit.model.u == 9.97 and fit.model.p_u == 0.05


@pytest.mark.parametrize(
    "data",
    [np.ones(5), np.full(20, 2.0), np.array([1.0] * 15 + [-1.0])],
)
def test_fit_errors(data):
    with pytest.raises(FitError):
        fit_gpd_mle(data)


def test_fit_rejects_light_tail(rng):
    with pytest.raises(FitError):
        fit_gpd_mle(rng.uniform(0.0, 1.0, 2000))


def test_return_level_model():
    m = TailModel(10.0, 0.05, 2.0, 5.0)
    x = return_level(m, 100, obs_per_year=1.0)
    assert m.survival(x) == pytest.approx(0.01, rel=1e-12)
    with pytest.raises(ExtrapolationError):
        return_level(m, 10)
    with pytest.raises(ValueError):
        return_level(m, 0.5)


def test_return_level_curve_interpolates():
    m = TailModel(0.0, 1.0, 2.0, 1.0)
    xs = np.logspace(0, 4, 400)
    curve = WorstCaseCurve(xs, m.survival(xs), "exact")
    assert return_level(curve, 1000) == pytest.approx(return_level(m, 1000), rel=1e-3)
    with pytest.raises(ExtrapolationError):
        return_level(curve, 1e12)


def test_curve_validation():
    with pytest.raises(ValueError):
        WorstCaseCurve([1.0, 1.0], [0.5, 0.4], "exact")
    with pytest.raises(ValueError):
        WorstCaseCurve([1.0], [0.5], "exact")


def test_load_csv(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("date,claim\n1980-01-01,1.5\n\n1980-01-02,2.5\n")
    assert np.array_equal(load_sample_csv(f, column=1).values, [1.5, 2.5])
    assert np.array_equal(load_sample_csv(f, column="claim").values, [1.5, 2.5])
    with pytest.raises(ValueError, match="no column"):
        load_sample_csv(f, column="loss")


def test_load_csv_reports_bad_lines(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("1.0\n2.0\nabc\n4.0\n")
    with pytest.raises(ValueError, match="line"):
        load_sample_csv(f)


def test_load_csv_empty(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("")
    with pytest.raises(ValueError):
        load_sample_csv(f)
