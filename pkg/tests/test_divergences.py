import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import lambertw

from robust_tails.divergences import (
    KINDS,
    DivergenceSpec,
    boundary_values,
    divergence_discrete,
    f_inverse_tail,
    f_raw,
    f_tilted,
    f_tilted_prime,
    lambert_w,
    renyi_radius,
)

ALL_SPECS = [
    DivergenceSpec("kl"),
    DivergenceSpec("hellinger", 2.0),
    DivergenceSpec("hellinger", 2.86),
    DivergenceSpec("hellinger", 1.5),
    DivergenceSpec("chi2"),
    DivergenceSpec("triangle"),
    DivergenceSpec("jeffrey"),
    DivergenceSpec("js"),
    DivergenceSpec("renyi", 2.0),
]


def test_parse_round_trip():
    for spec in ALL_SPECS:
        assert DivergenceSpec.parse(str(spec)) == spec


@pytest.mark.parametrize("bad", ["tv", "hellinger", "hellinger:1", "renyi:0.5", "banana", "kl:2"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        DivergenceSpec.parse(bad)


def test_kinds_cover_all():
    assert set(KINDS) == {s.kind for s in ALL_SPECS}


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
def test_tilted_is_zero_and_flat_at_one(spec):
    assert f_tilted(spec, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert f_tilted_prime(spec, 1.0) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
def test_tilted_nonnegative_and_convex(spec):
    y = np.linspace(0.0, 20.0, 2001)
    v = np.asarray(f_tilted(spec, y))
    finite = np.isfinite(v)
    assert np.all(v[finite] >= -1e-15)
    second = np.diff(v[1:], 2)
    assert np.all(second[np.isfinite(second)] >= -1e-12)


@pytest.mark.parametrize(
    "spec,expected",
    [
        (DivergenceSpec("kl"), (1.0, math.inf)),
        (DivergenceSpec("hellinger", 3.0), (1.0, math.inf)),
        (DivergenceSpec("chi2"), (1.0, math.inf)),
        (DivergenceSpec("triangle"), (1.0, 1.0)),
        (DivergenceSpec("jeffrey"), (math.inf, math.inf)),
        (DivergenceSpec("js"), (math.log(2), math.log(2))),
    ],
    ids=str,
)
def test_boundary_values(spec, expected):
    assert boundary_values(spec) == pytest.approx(expected)
    # f~(0) equals the limit of the generator at 0
    assert f_tilted(spec, 0.0) == pytest.approx(expected[0])
    # f~*(0) = lim f~(y)/y
    if math.isfinite(expected[1]):
        assert f_tilted(spec, 1e9) / 1e9 == pytest.approx(expected[1], rel=1e-6)


def test_hellinger_two_is_chi_squared():
    y = np.linspace(0, 10, 101)
    assert np.allclose(f_tilted(DivergenceSpec("hellinger", 2.0), y), f_tilted(DivergenceSpec("chi2"), y))


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
@given(t=st.floats(1e-8, 1e12))
@settings(max_examples=40, deadline=None)
def test_inverse_tail_inverts(spec, t):
    z = f_inverse_tail(spec, t)
    assert z >= 1.0
    assert f_tilted(spec, z) == pytest.approx(t, rel=1e-9)


def test_inverse_tail_closed_forms():
    t = np.logspace(-3, 8, 23)
    assert np.allclose(f_inverse_tail(DivergenceSpec("chi2"), t), 1 + np.sqrt(t), rtol=1e-14)
    z = f_inverse_tail(DivergenceSpec("kl"), t, tilted=False)
    assert np.allclose(z * np.log(z), t, rtol=1e-12)
    assert f_inverse_tail(DivergenceSpec("kl"), -1.0) == 1.0


@pytest.mark.parametrize("t", [1e-300, 1e-6, 0.3, 1.0, math.e, 10.0, 1e5, 1e12, 1e300])
def test_lambert_w_against_scipy(t):
    assert lambert_w(t) == pytest.approx(lambertw(t).real, rel=1e-14)


def test_lambert_w_edges():
    assert lambert_w(0.0) == 0.0
    assert lambert_w(math.e) == 1.0 or abs(lambert_w(math.e) - 1.0) < 1e-15
    with pytest.raises(ValueError):
        lambert_w(-1.0)


def test_renyi_radius():
    assert renyi_radius(2.0, math.log(2.0)) == pytest.approx(1.0, rel=1e-15)
    assert renyi_radius(3.0, 0.0) == 0.0
    assert renyi_radius(1.5, 1e-12) == pytest.approx(1e-12, rel=1e-6)


def _simplex(draw, n):
    w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n)))
    return w / w.sum()


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
@given(data=st.data())
@settings(max_examples=30, deadline=None)
def test_tilt_preserves_divergence(spec, data):
    n = data.draw(st.integers(2, 6))
    p = _simplex(data.draw, n)
    q = _simplex(data.draw, n)
    a = divergence_discrete(spec, p, q)
    b = divergence_discrete(spec, p, q, tilted=True)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)
    assert a >= -1e-12


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
def test_divergence_of_self_is_zero(spec):
    p = np.array([0.2, 0.3, 0.5])
    assert divergence_discrete(spec, p, p) == pytest.approx(0.0, abs=1e-15)


def test_divergence_known_values():
    p = np.array([0.5, 0.5])
    q = np.array([0.25, 0.75])
    kl = 0.25 * math.log(0.5) + 0.75 * math.log(1.5)
    assert divergence_discrete(DivergenceSpec("kl"), p, q) == pytest.approx(kl, rel=1e-14)
    assert divergence_discrete(DivergenceSpec("chi2"), p, q) == pytest.approx(0.25, rel=1e-14)


def test_divergence_batched_matches_loop():
    spec = DivergenceSpec("js")
    p = np.array([0.4, 0.6])
    qs = np.array([[0.1, 0.9], [0.4, 0.6], [0.7, 0.3]])
    batch = divergence_discrete(spec, p, qs)
    assert np.allclose(batch, [divergence_discrete(spec, p, q) for q in qs], rtol=0, atol=0)


def test_divergence_errors():
    spec = DivergenceSpec("kl")
    with pytest.raises(ValueError):
        divergence_discrete(spec, [0.5, 0.5], [0.3, 0.3])
    with pytest.raises(ValueError):
        divergence_discrete(spec, [1.0, 0.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        divergence_discrete(spec, [0.5, 0.5], [1.0])


def test_raw_generators_vanish_at_one():
    for spec in ALL_SPECS:
        assert f_raw(spec, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_max_radius():
    assert DivergenceSpec("triangle").max_radius == 2.0
    assert DivergenceSpec("js").max_radius == pytest.approx(2 * math.log(2))
    assert math.isinf(DivergenceSpec("kl").max_radius)
