"""Geometry checks for the trawl families.

Closed-form Lebesgue measures are compared with adaptive quadrature of
the boundary height function, and analytic parameter gradients with
central finite differences, so every formula is confirmed by a slower
independent route.
"""

import numpy as np
import pytest
from scipy.integrate import quad

from ivtrawl import ExpTrawl, GammaTrawl, IGTrawl, SupExpTrawl

TRAWL_CASES = [
    ExpTrawl(1.8),
    ExpTrawl(0.4),
    SupExpTrawl((0.3, 0.7), (2.5, 0.9)),
    SupExpTrawl((0.55, 0.45), (4.0, 0.35)),
    IGTrawl(1.8, 0.8),
    IGTrawl(0.6, 2.2),
    GammaTrawl(1.7, 0.8),
    GammaTrawl(0.8, 1.5),  # slowly decaying: heavy correlation tail
    GammaTrawl(3.2, 0.5),
]

HS = [0.0, 0.1, 0.7, 2.5]


def leb_overlap_quad(trawl, h):
    """Area of the overlap between the trawl set and its shift by h.

    The set at time zero collects points (x, s) with s <= 0 and
    x < height(s); the height is nondecreasing, so the overlap with the
    copy shifted by h >= 0 integrates the height over s <= -h.
    """
    val, err = quad(
        lambda u: trawl.height(-u), h, np.inf, limit=400, epsabs=1e-13, epsrel=1e-11
    )
    assert err < 1e-9 * max(val, 1.0)
    return val


@pytest.mark.parametrize("trawl", TRAWL_CASES)
def test_full_measure_matches_quadrature(trawl):
    assert trawl.leb_full() == pytest.approx(leb_overlap_quad(trawl, 0.0), rel=1e-8)


@pytest.mark.parametrize("trawl", TRAWL_CASES)
@pytest.mark.parametrize("h", HS)
def test_overlap_measure_matches_quadrature(trawl, h):
    assert trawl.leb_intersection(h) == pytest.approx(
        leb_overlap_quad(trawl, h), rel=1e-8
    )


@pytest.mark.parametrize("trawl", TRAWL_CASES)
@pytest.mark.parametrize("h", HS)
def test_difference_complements_overlap(trawl, h):
    total = trawl.leb_intersection(h) + trawl.leb_difference(h)
    assert total == pytest.approx(trawl.leb_full(), rel=1e-12)


@pytest.mark.parametrize("trawl", TRAWL_CASES)
@pytest.mark.parametrize("h", [0.1, 0.7, 2.5])
def test_acf_is_overlap_fraction(trawl, h):
    assert trawl.acf(h) == pytest.approx(
        trawl.leb_intersection(h) / trawl.leb_full(), rel=1e-12
    )


@pytest.mark.parametrize("trawl", TRAWL_CASES)
def test_acf_at_zero_is_one(trawl):
    assert trawl.acf(0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("trawl", TRAWL_CASES)
def test_acf_decreasing(trawl):
    hs = np.linspace(0.0, 8.0, 60)
    vals = np.array([trawl.acf(h) for h in hs])
    assert np.all(np.diff(vals) < 0)


@pytest.mark.parametrize("trawl", TRAWL_CASES)
def test_height_inverse_roundtrip(trawl):
    top = trawl.height(0.0)
    for x in np.linspace(1e-6, 1.0, 23) * top:
        s = trawl.height_inverse(x)
        assert s <= 0.0
        assert trawl.height(s) == pytest.approx(x, rel=1e-8)


def test_height_inverse_handles_tiny_arguments():
    # must not loop forever or return nan deep in the tail
    for trawl in (IGTrawl(1.8, 0.8), GammaTrawl(1.7, 0.8), ExpTrawl(1.8)):
        s = trawl.height_inverse(1e-300)
        assert np.isfinite(s) and s < 0.0
        assert trawl.height_inverse(0.0) <= s


@pytest.mark.parametrize("trawl", TRAWL_CASES)
@pytest.mark.parametrize("eps", [1e-4, 1e-6])
def test_overlap_tail_depth_bounds_remaining_overlap(trawl, eps):
    depth = trawl.overlap_tail_depth(eps)
    assert trawl.acf(depth) <= eps * (1.0 + 1e-9)
    assert trawl.acf(0.5 * depth) > eps


def build_like(trawl, values):
    cls = type(trawl)
    if cls is SupExpTrawl:
        k = len(trawl.weights)
        return cls(tuple(values[:k]), tuple(values[k:]))
    return cls(*values)


def param_values(trawl):
    if isinstance(trawl, SupExpTrawl):
        return np.array(trawl.weights + trawl.rates, dtype=float)
    return np.array([getattr(trawl, name) for name in trawl.param_names], dtype=float)


def central_diff(f, theta, j, rel=1e-6):
    step = rel * max(abs(theta[j]), 1e-3)
    up, dn = theta.copy(), theta.copy()
    up[j] += step
    dn[j] -= step
    return (f(up) - f(dn)) / (2.0 * step)


@pytest.mark.parametrize("trawl", TRAWL_CASES)
def test_full_measure_gradient_matches_finite_differences(trawl):
    theta = param_values(trawl)
    grad = trawl.leb_full_gradient()
    for j in range(theta.size):
        fd = central_diff(lambda v: build_like(trawl, v).leb_full(), theta, j)
        assert grad[j] == pytest.approx(fd, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("trawl", TRAWL_CASES)
@pytest.mark.parametrize("h", [0.1, 0.7, 2.5])
def test_overlap_gradients_match_finite_differences(trawl, h):
    theta = param_values(trawl)
    d_inter, d_diff = trawl.leb_gradients(h)
    for j in range(theta.size):
        fd_inter = central_diff(
            lambda v: build_like(trawl, v).leb_intersection(h), theta, j
        )
        fd_diff = central_diff(
            lambda v: build_like(trawl, v).leb_difference(h), theta, j
        )
        assert d_inter[j] == pytest.approx(fd_inter, rel=2e-6, abs=1e-9)
        assert d_diff[j] == pytest.approx(fd_diff, rel=2e-6, abs=1e-9)


@pytest.mark.parametrize("trawl", TRAWL_CASES)
def test_gradients_sum_to_full_gradient(trawl):
    d_inter, d_diff = trawl.leb_gradients(0.6)
    np.testing.assert_allclose(
        d_inter + d_diff, trawl.leb_full_gradient(), rtol=1e-10, atol=1e-12
    )


@pytest.mark.parametrize(
    "bad",
    [
        lambda: ExpTrawl(0.0),
        lambda: ExpTrawl(-1.0),
        lambda: IGTrawl(0.0, 1.0),
        lambda: IGTrawl(1.0, -0.5),
        lambda: GammaTrawl(0.0, 1.0),
        lambda: GammaTrawl(1.0, 0.0),
        lambda: SupExpTrawl((0.5,), (1.0, 2.0)),
        lambda: SupExpTrawl((0.5, -0.5), (1.0, 2.0)),
        lambda: SupExpTrawl((0.5, 0.5), (1.0, -2.0)),
    ],
)
def test_invalid_parameters_rejected(bad):
    with pytest.raises(ValueError):
        bad()


def test_negative_lag_rejected():
    with pytest.raises(ValueError):
        ExpTrawl(1.0).leb_intersection(-0.1)


def test_gamma_trawl_memory_regimes():
    # finite overall measure always, but the overlap decays polynomially
    short = GammaTrawl(1.7, 0.8)
    assert short.acf(50.0) == pytest.approx((1.0 + 50.0 / 0.8) ** -1.7, rel=1e-12)
    long = GammaTrawl(0.8, 1.5)
    hs = np.array([10.0, 100.0, 1000.0])
    vals = np.array([long.acf(h) for h in hs])
    # slope on log-log axes approaches -shape
    slopes = np.diff(np.log(vals)) / np.diff(np.log(hs))
    assert abs(slopes[-1] + 0.8) < 0.05
