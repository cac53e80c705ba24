"""Linearised weighted scalar curvature, its adjoint, and static potentials.

``Phi(g, f) = S_f(g) e^-f dV_g``. Everything here is pointwise on jets: the
linearisation ``D Phi`` is returned as the coefficient of ``e^-f dV_g``, and
the adjoint pair ``(F_g, F_f)`` is defined by

    int V DPhi(h, phi) e^-f dV_g = int (<h, F_g> + phi F_f) e^-f dV_g

for compactly supported ``(h, phi)``. ``F_g`` is stored with lower indices
and paired as ``h^ij F_g,ij``.
"""

from dataclasses import dataclass

import numpy as np

from .conformal import conformal_spec, potential_transform
from .curvature import geometry_at, tensor_derivatives
from .errors import ConfigError
from .fields import (DerivedScalar, ExprScalar, constant_field, coordinate_field,
                     schwarzschild_potential)
from .jets import squared_distance
from .mass import _map_nodes, flux_divergence_jets, flux_U
from .quadrature import annulus_probe, ball_rule, sphere_shell

STATIC_THRESHOLD = 1e-6


def _points(p):
    return np.atleast_2d(np.asarray(p, dtype=float))


# -- D Phi -------------------------------------------------------------------

def dphi_from_geometry(geom, hjet, pjet):
    """Density coefficient of ``D Phi_(g,f)(h, phi)`` from prepared jets."""
    n = geom.n
    gi = geom.inv_metric
    Dh, DDh = tensor_derivatives(geom, hjet)
    h = hjet.value
    h_up = geom.raise_both(h)
    tr = geom.trace(h)
    ddh = np.einsum("...ia,...jb,...ijba->...", gi, gi, DDh)
    lap_tr = np.einsum("...ij,...kl,...ijkl->...", gi, gi, DDh)
    div_h = np.einsum("...ij,...jki->...k", gi, Dh)
    grad_tr = np.einsum("...ij,...ijk->...k", gi, Dh)
    df = geom.f.grad
    hess_f = geom.hess_f
    c = (n - 2) / (n - 1)
    return (ddh - lap_tr
            - np.einsum("...ij,...ij->...", h_up, geom.ric)
            + 2 * geom.laplacian(pjet)
            - 2 * np.einsum("...ij,...ij->...", h_up, hess_f)
            - 2 * geom.inner(div_h - 0.5 * grad_tr, df)
            + c * np.einsum("...ij,...i,...j->...", h_up, df, df)
            - 2 * c * geom.inner(df, pjet.grad)
            + geom.conf_scal * (0.5 * tr - pjet.value))


def dPhi(spec, pert, p, extend=False):
    """``D Phi_(g,f)(h, phi)`` at ``p``, as the coefficient of ``e^-f dV_g``."""
    p = _points(p)
    geom = geometry_at(spec, p, extend)
    hj, pj = pert.jets(p)
    return dphi_from_geometry(geom, hj, pj)


# -- adjoint -----------------------------------------------------------------

@dataclass
class AdjointValue:
    """``(F_g, F_f)`` at a batch of points.

    With ``densitised`` set both entries carry the factor ``e^-f`` so they
    are coefficients of ``dV_g`` rather than of ``e^-f dV_g``.
    """

    Fg: np.ndarray
    Ff: np.ndarray
    densitised: bool = False

    def pair(self, geom, h, phi):
        """``h^ij F_g,ij + phi F_f``."""
        return (np.einsum("...ij,...ij->...", geom.raise_both(h), self.Fg)
                + phi * self.Ff)


def adjoint_from_geometry(geom, vjet, densitised=False):
    n = geom.n
    g = geom.metric
    df = geom.f.grad
    hessV = geom.hessian(vjet)
    lapV = geom.trace(hessV)
    V = vjet.value
    Vf = geom.inner(vjet.grad, df)
    Sf = geom.conf_scal
    dfdf = np.einsum("...i,...j->...ij", df, df)
    Fg = (hessV + (Vf - lapV + 0.5 * V * Sf)[..., None, None] * g
          - V[..., None, None] * (geom.ric + geom.hess_f + dfdf / (n - 1)))
    Ff = (2 * lapV - 2 * n / (n - 1) * Vf - 2 / (n - 1) * V * geom.lap_f
          + 2 / (n - 1) * V * geom.gradnorm2_f - V * Sf)
    if densitised:
        w = np.exp(-geom.f.value)
        Fg = w[..., None, None] * Fg
        Ff = w * Ff
    return AdjointValue(Fg, Ff, densitised)


def adjoint(spec, V, p, densitised=False, extend=False):
    """``(F_g(V), F_f(V))`` at ``p``."""
    p = _points(p)
    geom = geometry_at(spec, p, extend)
    return adjoint_from_geometry(geom, V.jet(p), densitised)


def trace_identity_residual(spec, V, p, extend=False):
    """``tr_g F_g + (n-1)/2 F_f + 1/2 V S_f`` (zero for every V)."""
    p = _points(p)
    geom = geometry_at(spec, p, extend)
    vj = V.jet(p)
    adj = adjoint_from_geometry(geom, vj)
    return (geom.trace(adj.Fg) + 0.5 * (spec.n - 1) * adj.Ff
            + 0.5 * vj.value * geom.conf_scal)


# -- Michel identity ---------------------------------------------------------

def _is_flat_background(spec):
    return spec.family in ("flat",) and spec.weight.doc in (None, "zero")


def michel_pointwise_residual(spec0, pert, V, p):
    """``V DPhi(h, phi) - <(h, phi), DPhi^* V> - div U(V, h, phi)`` on flat space."""
    if not _is_flat_background(spec0):
        raise ConfigError("the Michel identity is evaluated on the flat background with f = 0")
    p = _points(p)
    geom = geometry_at(spec0, p)
    vj = V.jet(p)
    hj, pj = pert.jets(p)
    lhs = vj.value * dphi_from_geometry(geom, hj, pj)
    lhs = lhs - adjoint_from_geometry(geom, vj).pair(geom, hj.value, pj.value)
    return lhs - flux_divergence_jets(vj, hj, pj)


def michel_integral_check(spec0, pert, V, rho, radial_order=48, sphere_order=None):
    """Flux of ``U`` through ``S_rho`` against the volume integral over ``B_rho``.

    Returns ``(flux, volume, flux - volume)``. The volume integrand is
    ``V DPhi - <(h, phi), DPhi^* V>``, so ``V`` need not be affine.
    """
    if not _is_flat_background(spec0):
        raise ConfigError("the Michel identity is evaluated on the flat background with f = 0")
    n = spec0.n
    shell = sphere_shell(rho, n, sphere_order)
    U = flux_U(V, pert, shell.nodes)
    flux = float(shell.integrate(np.einsum("...i,...i->...", U, shell.normal)))
    nodes, w = ball_rule(rho, n, radial_order, sphere_order)

    def integrand(x):
        geom = geometry_at(spec0, x)
        vj = V.jet(x)
        hj, pj = pert.jets(x)
        return (vj.value * dphi_from_geometry(geom, hj, pj)
                - adjoint_from_geometry(geom, vj).pair(geom, hj.value, pj.value))

    vol = float(w @ _map_nodes(integrand, nodes))
    return flux, vol, flux - vol


def adjoint_duality(spec, pert, V, radial_order=48, sphere_order=None):
    """Both sides of the weighted integration-by-parts identity.

    Integrates over the support ball of ``pert`` with a rule centred on it
    (Gauss-Legendre in radius times the sphere rule). Radial bumps are then
    resolved far better than by a box rule of equal size.
    """
    if pert.support is None:
        raise ConfigError("adjoint duality needs a compactly supported perturbation")
    c, r = pert.support
    nodes, w = ball_rule(float(r), spec.n, radial_order, sphere_order,
                         center=np.asarray(c, dtype=float))

    def integrand(x):
        geom = geometry_at(spec, x)
        vj = V.jet(x)
        hj, pj = pert.jets(x)
        dens = geom.sqrt_det * np.exp(-geom.f.value)
        return np.stack([
            dens * vj.value * dphi_from_geometry(geom, hj, pj),
            dens * adjoint_from_geometry(geom, vj).pair(geom, hj.value, pj.value)], -1)

    lhs, rhs = w @ _map_nodes(integrand, nodes)
    return float(lhs), float(rhs)


# -- conformal identities ----------------------------------------------------

def conformal_adjoint_residuals(spec, V, p, pair=None, extend=False):
    """Residuals of the conformal form of the adjoint equations.

    With ``u = e^(-f/(n-1)) V`` and ``g~ = e^(-2f/(n-1)) g``::

        Lap~ u            = e^( f/(n-1)) (F_f/2 + V S_f/2)
        Hess~ u - u Ric~  = e^(-f/(n-1)) (F_g + F_f g/2)

    Left sides come from the curvature pipeline on ``g~``, right sides from
    the adjoint on ``(g, f)``. Returns ``(res_lap, res_hessric)``.
    """
    n = spec.n
    p = _points(p)
    pair = conformal_spec(spec) if pair is None else pair
    u = potential_transform(V, spec)
    tg = geometry_at(pair.tilde_spec, p, extend)
    uj = u.jet(p)
    lap_u = tg.laplacian(uj)
    hr = tg.hessian(uj) - uj.value[..., None, None] * tg.ric
    base = geometry_at(spec, p, extend)
    vj = V.jet(p)
    adj = adjoint_from_geometry(base, vj)
    ef = np.exp(base.f.value / (n - 1))
    rhs_lap = ef * 0.5 * (adj.Ff + vj.value * base.conf_scal)
    rhs_hr = (1 / ef)[..., None, None] * (adj.Fg + 0.5 * adj.Ff[..., None, None] * base.metric)
    return lap_u - rhs_lap, hr - rhs_hr


def static_vacuum_residuals(spec, u, p, extend=False):
    """``(Lap u, Hess u - u Ric)`` for an unweighted metric."""
    p = _points(p)
    geom = geometry_at(spec, p, extend)
    uj = u.jet(p)
    return geom.laplacian(uj), geom.hessian(uj) - uj.value[..., None, None] * geom.ric


# -- certificates ------------------------------------------------------------

def probe_grid(spec, grid=None):
    """Points of an annulus probe grid ``(rmin, rmax, count[, seed])``."""
    if grid is None:
        rmin = max(2.0, 2.0 * spec.excluded_radius)
        grid = (rmin, 25.0 * rmin, 1024, 0)
    rmin, rmax, count = grid[:3]
    seed = grid[3] if len(grid) > 3 else 0
    return annulus_probe(spec.n, float(rmin), float(rmax), int(count), seed,
                         spec.excluded_center)


def f_static_residual(spec, V, grid=None):
    """Sup norms of ``F_g(V)`` (Frobenius in ``g``) and ``F_f(V)`` on the probe grid."""
    p = probe_grid(spec, grid) if not isinstance(grid, np.ndarray) else grid
    geom = geometry_at(spec, p)
    adj = adjoint_from_geometry(geom, V.jet(p))
    fg = np.sqrt(np.abs(np.einsum("...ij,...ij->...", geom.raise_both(adj.Fg), adj.Fg)))
    return float(np.max(fg)), float(np.max(np.abs(adj.Ff)))


def s_f_vanishing_check(spec, V, grid=None, threshold=STATIC_THRESHOLD):
    """Static certificate ``{fg_sup, ff_sup, sf_sup, certified}``.

    ``certified`` means both adjoint residuals are below ``threshold`` on the
    probe grid; it is a numerical certificate, not a proof. ``sf_sup`` is
    reported either way, so a certified potential with large ``S_f`` would
    expose an inconsistency.
    """
    p = probe_grid(spec, grid) if not isinstance(grid, np.ndarray) else grid
    fg, ff = f_static_residual(spec, V, p)
    sf = float(np.max(np.abs(geometry_at(spec, p).conf_scal)))
    return {"fg_sup": fg, "ff_sup": ff, "sf_sup": sf,
            "certified": bool(fg < threshold and ff < threshold)}


# -- potential catalogue -----------------------------------------------------

POTENTIALS = ("one", "x1", "x2", "x3", "r2", "inv_r", "schwarzschild")


def potential_from_id(spec, ident):
    """Scalar fields used as trial potentials.

    ``one``, ``x<a>`` (coordinate, 1-based), ``r2`` (``|x|^2``), ``inv_r``
    (``1/|x|``) and
    ``schwarzschild`` (``e^(f/(n-1)) u_m`` for the Schwarzschild-type
    families).
    """
    n = spec.n
    if ident == "one":
        return constant_field(1.0)
    if ident == "r2":
        return ExprScalar(squared_distance, decay=-2.0, radial=True)
    if ident == "inv_r":
        return ExprScalar(lambda x: squared_distance(x) ** -0.5, decay=1.0, radial=True)
    if ident.startswith("x") and ident[1:].isdigit():
        a = int(ident[1:]) - 1
        if not 0 <= a < n:
            raise ConfigError(f"coordinate potential {ident!r} out of range")
        return coordinate_field(a)
    if ident == "schwarzschild":
        if spec.family not in ("schwarzschild", "f_schwarzschild"):
            raise ConfigError("the schwarzschild potential needs a Schwarzschild-type family")
        m = float(spec.params.get("m", 1.0))
        um = schwarzschild_potential(n, m, spec.params.get("center"))
        return DerivedScalar(lambda w, f: w * (f * (1.0 / (n - 1))).exp(), um, spec.weight)
    raise ConfigError(f"unknown potential {ident!r}; choose from {POTENTIALS}")


__all__ = ["AdjointValue", "adjoint", "adjoint_duality", "dPhi", "f_static_residual",
           "conformal_adjoint_residuals", "michel_integral_check", "michel_pointwise_residual",
           "potential_from_id", "s_f_vanishing_check", "static_vacuum_residuals",
           "trace_identity_residual"]
