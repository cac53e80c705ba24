import numpy as np
import pytest

from conftest import catalogue, probe_points
from wmass.conformal import (check_area_equality, check_conformal_mean_curvature,
                             check_conformal_scalar, conformal_metric_field, conformal_spec,
                             potential_transform)
from wmass.fields import constant_field, finite_difference_spec, make_family
from wmass.jets import fd_jet
from wmass.mass import adm_mass, weighted_mass
from wmass.surfaces import RadialSurface

FAMILIES = catalogue()


def _surface_radius(spec):
    return max(2.0, 2.0 * spec.excluded_radius)


def test_zero_weight_leaves_metric_unchanged():
    spec = make_family("conformally_flat", coeffs=[0.5, 0.3])
    x = probe_points(spec, 50)
    a = spec.eval_metric(x)
    b = conformal_spec(spec).tilde_spec.eval_metric(x)
    for u, v in [(a.value, b.value), (a.d1, b.d1), (a.d2, b.d2)]:
        np.testing.assert_allclose(u, v, rtol=0, atol=0)


@pytest.mark.parametrize("weight", ["inverse_r", {"type": "exp", "a": 0.5, "scale": 0.7}])
def test_f_schwarzschild_tilde_is_schwarzschild(weight):
    spec = make_family("f_schwarzschild", m=1.0, weight=weight)
    ref = make_family("schwarzschild", m=1.0)
    x = probe_points(spec, 100)
    a = conformal_spec(spec).tilde_spec.eval_metric(x)
    b = ref.eval_metric(x)
    for u, v in [(a.value, b.value), (a.d1, b.d1), (a.d2, b.d2)]:
        np.testing.assert_allclose(u, v, rtol=1e-12, atol=1e-14)


def test_flat_inverse_r_factor():
    spec = make_family("flat_with_weight", weight="inverse_r")
    g = conformal_spec(spec).tilde_spec.eval_metric(np.array([[1.0, 0.0, 0.0]])).value[0]
    np.testing.assert_allclose(g, np.exp(-1.0) * np.eye(3), rtol=1e-15)


def test_inverse_transform_recovers_base():
    spec = FAMILIES["f_conformally_flat"][0]
    pair = conformal_spec(spec)
    back = conformal_metric_field(pair.tilde, spec.weight, spec.n, sign=+1.0)
    x = probe_points(spec, 50)
    a, b = back.jet(x), spec.metric.jet(x)
    for u, v in [(a.value, b.value), (a.d1, b.d1), (a.d2, b.d2)]:
        np.testing.assert_allclose(u, v, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_scalar_curvature_identity(name):
    spec = FAMILIES[name][0]
    x = probe_points(spec, 300)
    assert np.max(np.abs(check_conformal_scalar(spec, x))) < 1e-10


@pytest.mark.parametrize("name", sorted(n for n in FAMILIES if FAMILIES[n][0].spherical))
def test_mean_curvature_identity(name):
    spec = FAMILIES[name][0]
    surf = RadialSurface(_surface_radius(spec))
    assert np.max(np.abs(check_conformal_mean_curvature(spec, surf))) < 1e-10


@pytest.mark.parametrize("name", sorted(n for n in FAMILIES if FAMILIES[n][0].spherical))
def test_weighted_area_is_conformal_area(name):
    spec = FAMILIES[name][0]
    af, at, d = check_area_equality(spec, RadialSurface(_surface_radius(spec)))
    assert abs(d) <= 1e-12 * af


def test_potential_transform_value_and_jets():
    spec = make_family("flat_with_weight", weight="inverse_r")
    u = potential_transform(constant_field(1.0), spec)
    x = np.array([[2.0, 0.0, 0.0], [0.0, 1.0, 1.0]])
    assert u(x)[0] == pytest.approx(np.exp(-0.25), rel=1e-15)
    j = u.jet(x)
    _, g, h = fd_jet(lambda y: u(y), x, 1e-3)
    np.testing.assert_allclose(j.grad, g, atol=1e-9)
    np.testing.assert_allclose(j.hess, h, atol=1e-6)


@pytest.mark.parametrize("name", ["flat_inverse_r", "f_schwarzschild_inverse_r",
                                  "f_schwarzschild_bump", "f_conformally_flat",
                                  "schwarzschild"])
def test_weighted_mass_is_mass_of_conformal_metric(name):
    spec, m = FAMILIES[name]
    mf = weighted_mass(spec).value
    mt = adm_mass(conformal_spec(spec).tilde_spec).value
    assert mf == pytest.approx(mt, abs=1e-4)
    assert mf == pytest.approx(m, abs=1e-4)


def test_differenced_fields_converge_at_second_order():
    base = make_family("f_schwarzschild", m=1.0, weight=FAMILIES["f_schwarzschild_bump"][0]
                       .to_json()["params"]["weight"])
    x = np.array([[2.3, 0.4, -0.2], [0.5, 1.9, 0.8], [-1.2, -0.7, 1.6]])
    errs = [np.max(np.abs(check_conformal_scalar(finite_difference_spec(base, h), x)))
            for h in (0.04, 0.02, 0.01)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.7)
    assert errs[-1] < 1e-4
