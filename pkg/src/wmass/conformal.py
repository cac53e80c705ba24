"""The conformal metric ``g~ = exp(-2f/(n-1)) g`` and its dictionary.

For analytic specs the jets of ``g~`` are composed exactly from the base
jets (product and chain rule). For user-defined specs, whose base jets are
finite differences, ``g~`` is itself treated as a user field and differenced
from its values, so the two sides of each identity carry independent
truncation errors.
"""

from dataclasses import dataclass, replace

import numpy as np

from .curvature import geometry_at
from .fields import DerivedScalar, DerivedTensor, FDTensor, ScalarField, TensorField
from .fields import WeightedManifoldSpec, zero_weight


@dataclass(frozen=True)
class ConformalPair:
    base: WeightedManifoldSpec
    tilde: TensorField
    psi: ScalarField
    tilde_spec: WeightedManifoldSpec


def conformal_metric_field(metric, weight, n, sign=-1.0):
    """``exp(2 sign f/(n-1)) g`` with jets composed from ``metric``, ``weight``."""
    c = 2.0 * sign / (n - 1)
    return DerivedTensor(lambda g, f: g.scale((f * c).exp()), metric, weight,
                         decay=min(metric.decay, weight.decay))


def conformal_spec(spec, step=None):
    """Build the :class:`ConformalPair` of ``spec``.

    ``tilde_spec`` carries ``g~`` with zero weight and the base's excluded
    region, so every module can run on it unchanged.
    """
    n = spec.n
    if spec.analytic:
        tilde = conformal_metric_field(spec.metric, spec.weight, n)
    else:
        G, F = spec.metric, spec.weight
        s = step if step is not None else getattr(G, "step", None)
        tilde = FDTensor(
            lambda x: np.exp(-2.0 * F(x) / (n - 1))[:, None, None] * G(x),
            decay=G.decay, step=s)
    psi = DerivedScalar(lambda f: f * (-1.0 / (n - 1)), spec.weight)
    tilde_spec = replace(spec, metric=tilde, weight=zero_weight(),
                         family=spec.family + "~",
                         spherical=spec.spherical, tau=spec.tau)
    return ConformalPair(spec, tilde, psi, tilde_spec)


def check_conformal_scalar(spec, p, pair=None, extend=False):
    """``R~(p) - exp(2f/(n-1)) S_f(p)``, each side from its own pipeline."""
    pair = conformal_spec(spec) if pair is None else pair
    base = geometry_at(spec, p, extend)
    tilde = geometry_at(pair.tilde_spec, p, extend)
    return tilde.scal - np.exp(2.0 * base.f.value / (spec.n - 1)) * base.conf_scal


def check_conformal_mean_curvature(spec, surface, p=None, pair=None):
    """``H~ - exp(f/(n-1)) H_f`` at points of a coordinate sphere."""
    from .surfaces import surface_geometry
    pair = conformal_spec(spec) if pair is None else pair
    b = surface_geometry(spec, surface, p)
    t = surface_geometry(pair.tilde_spec, surface, p)
    return t.H - np.exp(b.f / (spec.n - 1)) * b.H_f


def check_area_equality(spec, surface, pair=None):
    """Return ``(A_f(g), A(g~), A_f - A~)``."""
    from .surfaces import weighted_area
    pair = conformal_spec(spec) if pair is None else pair
    af = weighted_area(spec, surface)
    at = weighted_area(pair.tilde_spec, surface)
    return af, at, af - at


def potential_transform(V, spec):
    """``u = exp(-f/(n-1)) V`` as a field with composed jets."""
    c = -1.0 / (spec.n - 1)
    return DerivedScalar(lambda v, f: v * (f * c).exp(), V, spec.weight)
