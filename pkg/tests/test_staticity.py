from dataclasses import replace

import numpy as np
import pytest

from conftest import catalogue, probe_points
from wmass.curvature import geometry_at
from wmass.errors import ConfigError
from wmass.fields import (DerivedScalar, DerivedTensor, Perturbation, constant_field,
                          make_family, random_compact_perturbation, weight_from_doc)
from wmass.staticity import (adjoint, adjoint_duality, dPhi, f_static_residual,
                             conformal_adjoint_residuals, michel_integral_check,
                             michel_pointwise_residual, potential_from_id,
                             s_f_vanishing_check, trace_identity_residual)

FAMILIES = catalogue()
FLAT = make_family("flat")
TRIAL = ["one", "x1", "x3", "r2", "inv_r"]


def _shifted(spec, pert, t):
    """``(g + t h, f + t phi)`` with jets composed exactly."""
    g = DerivedTensor(lambda a, b: a + b.scale(t), spec.metric, pert.h)
    f = DerivedScalar(lambda a, b: a + b * t, spec.weight, pert.phi)
    return replace(spec, metric=g, weight=f)


def _density(spec, x):
    geom = geometry_at(spec, x)
    return geom.conf_scal * np.exp(-geom.f.value) * geom.sqrt_det


# -- linearisation -----------------------------------------------------------

def test_zero_perturbation_has_zero_linearisation(rng):
    pert = random_compact_perturbation(3, rng, radius=2.0).scaled(0.0)
    spec = FAMILIES["f_schwarzschild_bump"][0]
    assert np.max(np.abs(dPhi(spec, pert, probe_points(spec, 20)))) == 0.0


def test_flat_linearisation_is_divergence_form(rng):
    pert = random_compact_perturbation(3, rng, radius=2.0, scale=0.3)
    x = rng.uniform(-1, 1, (20, 3))
    h, phi = pert.jets(x)
    expected = (np.einsum("...ijij->...", h.d2) - np.einsum("...iijj->...", h.d2)
                + 2 * np.einsum("...ii->...", phi.hess))
    np.testing.assert_allclose(dPhi(FLAT, pert, x), expected, atol=1e-12)


@pytest.mark.parametrize("name", ["f_schwarzschild_bump", "f_conformally_flat",
                                  "perturbed_flat", "flat_inverse_r"])
def test_linearisation_matches_difference_quotient(name, rng):
    spec = FAMILIES[name][0]
    x = probe_points(spec, 20, rmax=4.0)
    pert = random_compact_perturbation(3, rng, radius=8.0, scale=0.5)

    def quotient(t):
        return (_density(_shifted(spec, pert, t), x)
                - _density(_shifted(spec, pert, -t), x)) / (2 * t)

    geom = geometry_at(spec, x)
    exact = dPhi(spec, pert, x) * np.exp(-geom.f.value) * geom.sqrt_det
    e1 = np.max(np.abs(quotient(2e-3) - exact))
    e2 = np.max(np.abs(quotient(1e-3) - exact))
    assert e2 < 1e-5 * max(1.0, np.max(np.abs(exact)))
    assert e1 / e2 > 3.5


# -- adjoint -----------------------------------------------------------------

@pytest.mark.parametrize("ident", ["one", "x1", "x2", "x3"])
def test_affine_potentials_are_static_on_flat_space(ident):
    x = probe_points(FLAT, 50)
    adj = adjoint(FLAT, potential_from_id(FLAT, ident), x)
    assert np.max(np.abs(adj.Fg)) == 0.0 and np.max(np.abs(adj.Ff)) == 0.0


@pytest.mark.parametrize("n", [3, 4])
def test_quadratic_potential_on_flat_space(n):
    spec = make_family("flat", n=n)
    x = probe_points(spec, 20)
    adj = adjoint(spec, potential_from_id(spec, "r2"), x)
    np.testing.assert_allclose(adj.Fg, np.broadcast_to((2 - 2 * n) * np.eye(n), adj.Fg.shape),
                               atol=1e-13)
    np.testing.assert_allclose(adj.Ff, 4 * n, atol=1e-12)


def test_densitised_adjoint_carries_weight_factor():
    spec = FAMILIES["f_schwarzschild_bump"][0]
    x = probe_points(spec, 20)
    V = potential_from_id(spec, "x1")
    a, b = adjoint(spec, V, x), adjoint(spec, V, x, densitised=True)
    w = np.exp(-spec.eval_weight(x).value)
    np.testing.assert_allclose(b.Ff, w * a.Ff, rtol=1e-14)
    np.testing.assert_allclose(b.Fg, w[:, None, None] * a.Fg, rtol=1e-14)


@pytest.mark.parametrize("name", sorted(FAMILIES))
@pytest.mark.parametrize("ident", TRIAL)
def test_trace_identity(name, ident):
    spec = FAMILIES[name][0]
    x = probe_points(spec, 100)
    V = potential_from_id(spec, ident)
    scale = 1 + np.max(np.abs(V(x)))
    assert np.max(np.abs(trace_identity_residual(spec, V, x))) < 1e-10 * scale


# -- divergence identity on flat space ----------------------------------------

@pytest.mark.parametrize("ident", TRIAL)
def test_pointwise_divergence_identity(ident, rng):
    pert = random_compact_perturbation(3, rng, radius=2.0, scale=0.5)
    x = rng.uniform(-1.5, 1.5, (200, 3))
    x = x[np.linalg.norm(x, axis=1) > 0.3]
    V = potential_from_id(FLAT, ident)
    assert np.max(np.abs(michel_pointwise_residual(FLAT, pert, V, x))) < 1e-10


@pytest.mark.parametrize("ident", ["one", "x1", "r2"])
def test_integrated_divergence_identity(ident, rng):
    pert = random_compact_perturbation(3, rng, radius=1.2, scale=0.5)
    flux, vol, diff = michel_integral_check(FLAT, pert, potential_from_id(FLAT, ident), 1.2)
    assert abs(diff) < 1e-6 * max(1.0, abs(flux), abs(vol))


def test_affine_potential_flux_vanishes_outside_support(rng):
    pert = random_compact_perturbation(3, rng, radius=1.0, scale=0.5)
    flux, vol, _ = michel_integral_check(FLAT, pert, potential_from_id(FLAT, "x2"), 1.0)
    assert abs(flux) < 1e-12


def test_divergence_identity_needs_flat_background(rng):
    pert = random_compact_perturbation(3, rng)
    with pytest.raises(ConfigError):
        michel_pointwise_residual(FAMILIES["schwarzschild"][0], pert, constant_field(1.0),
                                  [[3.0, 0, 0]])


# -- weighted integration by parts ---------------------------------------------

@pytest.mark.parametrize("name", ["f_schwarzschild_bump", "perturbed_flat"])
def test_adjoint_duality(name, rng):
    spec = FAMILIES[name][0]
    pert = random_compact_perturbation(3, rng, center=[3.0, 0.5, 0.0], radius=1.0, scale=0.5)
    lhs, rhs = adjoint_duality(spec, pert, potential_from_id(spec, "x1"))
    assert lhs == pytest.approx(rhs, rel=1e-4)


def test_duality_needs_support():
    pert = Perturbation(FAMILIES["perturbed_flat"][0].metric, weight_from_doc("zero"))
    with pytest.raises(ConfigError):
        adjoint_duality(FLAT, pert, constant_field(1.0))


# -- conformal form ------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(FAMILIES))
@pytest.mark.parametrize("ident", TRIAL)
def test_conformal_form_of_adjoint(name, ident):
    spec = FAMILIES[name][0]
    x = probe_points(spec, 100)
    V = potential_from_id(spec, ident)
    r1, r2 = conformal_adjoint_residuals(spec, V, x)
    scale = 1 + np.max(np.abs(V(x)))
    assert np.max(np.abs(r1)) < 1e-10 * scale
    assert np.max(np.abs(r2)) < 1e-10 * scale


# -- static certificates ---------------------------------------------------------

@pytest.mark.parametrize("name", ["schwarzschild", "f_schwarzschild_inverse_r",
                                  "f_schwarzschild_bump"])
def test_schwarzschild_potential_is_certified(name):
    spec = FAMILIES[name][0]
    cert = s_f_vanishing_check(spec, potential_from_id(spec, "schwarzschild"))
    assert cert["certified"]
    assert cert["sf_sup"] < 1e-10


def test_flat_space_with_weight_is_not_static():
    spec = FAMILIES["flat_inverse_r"][0]
    for ident in TRIAL:
        assert not s_f_vanishing_check(spec, potential_from_id(spec, ident))["certified"]


def test_static_residual_on_explicit_points():
    x = probe_points(FLAT, 30)
    fg, ff = f_static_residual(FLAT, potential_from_id(FLAT, "r2"), x)
    assert fg == pytest.approx(4 * np.sqrt(3), rel=1e-12)
    assert ff == pytest.approx(12, rel=1e-12)


@pytest.mark.parametrize("ident", ["x4", "y", "schwarzschild"])
def test_bad_potential_ids(ident):
    with pytest.raises(ConfigError):
        potential_from_id(FLAT, ident)
