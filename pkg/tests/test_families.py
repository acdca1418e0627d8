"""Model family grammar, parameter packing, and reparameterization."""

import numpy as np
import pytest

import ivtrawl
from ivtrawl import CountSeries, family, family_of
from ivtrawl.families import CORE_FAMILIES, ParamTransform

THETAS = {
    "poisson-exp": [17.5, 1.8],
    "poisson-ig": [17.5, 1.8, 0.8],
    "poisson-gamma": [17.5, 1.7, 0.8],
    "nb-exp": [7.5, 0.7, 1.8],
    "nb-ig": [7.5, 0.7, 1.8, 0.8],
    "nb-gamma": [7.5, 0.7, 1.7, 0.8],
    "skellam-exp": [3.0, 2.0, 1.8],
    "skellam-ig": [3.0, 2.0, 1.8, 0.8],
    "skellam-gamma": [3.0, 2.0, 1.7, 0.8],
}


@pytest.mark.parametrize("tag", sorted(THETAS))
def test_build_and_theta_roundtrip(tag):
    fam = family(tag)
    theta = np.asarray(THETAS[tag], dtype=float)
    model = fam.build(theta, 0.1)
    assert model.delta == 0.1
    np.testing.assert_allclose(fam.theta_of(model), theta, rtol=1e-14)
    assert len(fam.param_names) == fam.dim == theta.size
    assert fam.dim == fam.dim_seed + fam.dim_trawl


def test_core_family_list():
    assert list(CORE_FAMILIES) == [
        "poisson-exp",
        "poisson-ig",
        "poisson-gamma",
        "nb-exp",
        "nb-ig",
        "nb-gamma",
    ]


@pytest.mark.parametrize("tag", ["poisson-supexp", "nb-supexp", "skellam-supexp"])
@pytest.mark.parametrize("terms", [2, 3])
def test_supexp_dimensions(tag, terms):
    fam = family(tag, supexp_terms=terms)
    assert fam.dim_trawl == 2 * terms
    theta = np.concatenate(
        [
            THETAS[tag.replace("supexp", "exp")][:-1],
            np.full(terms, 1.0 / terms),
            np.linspace(0.5, 2.5, terms),
        ]
    )
    model = fam.build(theta, 0.1)
    np.testing.assert_allclose(fam.theta_of(model), theta, rtol=1e-14)


@pytest.mark.parametrize("tag", ["poisson", "exp", "poisson-", "geometric-exp", ""])
def test_unknown_tags_rejected(tag):
    with pytest.raises(ValueError):
        family(tag)


def test_wrong_parameter_count_rejected():
    with pytest.raises(ValueError):
        family("poisson-exp").build([1.0, 2.0, 3.0], 0.1)


def test_family_of_recovers_tag():
    for tag, theta in THETAS.items():
        model = family(tag).build(theta, 0.1)
        assert family_of(model).name == tag


@pytest.mark.parametrize("tag", sorted(THETAS))
def test_transform_roundtrip(tag):
    fam = family(tag)
    theta = np.asarray(THETAS[tag], dtype=float)
    internal = fam.transform.to_internal(theta)
    back = fam.transform.to_natural(internal)
    np.testing.assert_allclose(back, theta, rtol=1e-12)


def test_transform_jacobian_is_positive_and_matches_fd():
    tr = ParamTransform(("log", "logit", "log"))
    natural = np.array([4.2, 0.37, 0.9])
    internal = tr.to_internal(natural)
    jac = tr.jacobian(natural)
    assert np.all(jac > 0)
    eps = 1e-7
    for j in range(3):
        up, dn = internal.copy(), internal.copy()
        up[j] += eps
        dn[j] -= eps
        fd = (tr.to_natural(up)[j] - tr.to_natural(dn)[j]) / (2 * eps)
        assert jac[j] == pytest.approx(fd, rel=1e-6)


def test_logit_maps_unit_interval():
    tr = ParamTransform(("logit",))
    for p in (1e-4, 0.5, 1.0 - 1e-4):
        z = tr.to_internal(np.array([p]))
        assert np.isfinite(z).all()
        assert tr.to_natural(z)[0] == pytest.approx(p, rel=1e-10)


def test_default_lag_choice():
    assert family("poisson-exp").default_lags == 1
    assert family("nb-exp").default_lags == 1
    for tag in ("poisson-ig", "poisson-gamma", "nb-gamma"):
        assert family(tag).default_lags == 10


def test_model_moments_match_seed_and_trawl():
    model = family("nb-exp").build([7.5, 0.7, 1.8], 0.1)
    leb = model.trawl.leb_full()
    assert model.mean() == pytest.approx(model.seed.cumulant(1) * leb, rel=1e-12)
    assert model.variance() == pytest.approx(model.seed.cumulant(2) * leb, rel=1e-12)
    # acf takes grid lags and converts through the grid spacing
    assert model.acf(5) == pytest.approx(model.trawl.acf(0.5), rel=1e-12)


def test_count_series_validation():
    with pytest.raises(ValueError):
        CountSeries(np.array([1.5, 2.0]), 0.1)
    with pytest.raises(ValueError):
        CountSeries(np.array([1, 2]), 0.0)
    s = CountSeries(np.array([3, 1, 4]), 0.5, start=2.0)
    np.testing.assert_allclose(s.times, [2.0, 2.5, 3.0])
    assert s.n == 3
