"""Flux integrals at infinity: ADM and weighted mass, centres of mass.

Every invariant is sampled on coordinate spheres ``rho_k = rho0 * 2^k`` and
extrapolated to ``rho = inf`` by a least-squares fit of
``c_inf + c_1 rho^-s + c_2 rho^-2s + c_3 rho^-3s`` with the exponent ``s``
free. Decays mixing unrelated exponents (say ``r^-0.6`` weights alongside
``r^-1`` metric terms) are outside this model and extrapolate poorly.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigError, NonConverged, ZeroMass
from .fields import background_perturbation, coordinate_field, constant_field
from .quadrature import sphere_shell, sphere_volume

log = logging.getLogger(__name__)

DEFAULT_RHO0 = 16.0
DEFAULT_LEVELS = 5
DEFAULT_TOL = 1e-4
CHUNK = 4096


# -- the flux form -----------------------------------------------------------

def _flux_terms(Vv, Vg, hv, hg, pv, pg):
    """Bilinear kernel of U in (V-data) x (h, phi)-data, flat indices."""
    div_h = np.einsum("...ijj->...i", hg)
    grad_tr = np.einsum("...jji->...i", hg)
    tr = np.einsum("...ii->...", hv)
    return (Vv[..., None] * (div_h - grad_tr + 2.0 * pg)
            - np.einsum("...ij,...j->...i", hv, Vg)
            + (tr - 2.0 * pv)[..., None] * Vg)


def flux_U_jets(V, h, phi):
    """``U_i = V(d^j h_ij - d_i tr h + 2 d_i phi) - h_ij d^j V + (tr h - 2 phi) d_i V``."""
    return _flux_terms(V.value, V.grad, h.value, h.d1, phi.value, phi.grad)


def flux_divergence_jets(V, h, phi):
    """Euclidean divergence of U from second jets, by bilinearity."""
    n = V.n
    total = 0.0
    for k in range(n):
        dV = _flux_terms(V.grad[..., k], V.hess[..., :, k], h.value, h.d1,
                         phi.value, phi.grad)
        dP = _flux_terms(V.value, V.grad, h.d1[..., k], h.d2[..., :, :, :, k],
                         phi.grad[..., k], phi.hess[..., :, k])
        total = total + dV[..., k] + dP[..., k]
    return total


def flux_U(V, pert, p):
    """The Michel 1-form ``U(V, h, phi)`` at points ``p``.

    ``V`` is a scalar field and ``pert`` a :class:`~wmass.fields.Perturbation`.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    hj, pj = pert.jets(p)
    return flux_U_jets(V.jet(p), hj, pj)


# -- extrapolation -----------------------------------------------------------

@dataclass
class Fit:
    limit: float
    exponent: float
    residual: float
    coeffs: list = field(default_factory=list)
    drift: float = 0.0


def _checked_fit(radii, values, s0):
    """Fit all radii, then refit without the innermost one.

    ``drift`` is the change in the limit. A small residual alone does not
    detect a wrong decay model, whereas a sliding window does.
    """
    fit = extrapolate(radii, values, s0)
    if len(radii) > 4:
        fit.drift = abs(fit.limit - extrapolate(radii[1:], values[1:], s0).limit)
    return fit


def _fit_ok(fit, tol):
    bound = tol * max(1.0, abs(fit.limit))
    return fit.residual <= bound and fit.drift <= bound and fit.exponent > 0.1


def _lsq(r, v, s, terms):
    A = np.column_stack([np.ones_like(r)] + [r ** (-j * s) for j in range(1, terms + 1)])
    c, *_ = np.linalg.lstsq(A, v, rcond=None)
    return c, A @ c - v


def extrapolate(radii, values, s0=1.0, terms=3):
    """Fit ``c_inf + sum_j c_j rho^(-j s)`` and return a :class:`Fit`.

    With fewer than ``terms + 3`` samples the number of correction terms is
    reduced so that at least one residual degree of freedom remains.
    """
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    scale = max(1.0, np.max(np.abs(v)))
    if np.ptp(v) <= 1e-13 * scale:
        return Fit(float(v[-1]), np.inf, float(np.ptp(v)), [float(v[-1])])
    terms = max(1, min(terms, len(r) - 3))
    s0 = float(np.clip(s0, 0.1, 10.0))
    # the residual is multimodal in s and s/j aliases s exactly; seed the
    # polish from every local minimum of a coarse scan and, among fits that
    # tie to rounding, keep the fastest decay (best conditioned)
    grid = np.geomspace(0.05, 20.0, 161)
    norms = np.array([np.linalg.norm(_lsq(r, v, g, terms)[1]) for g in grid])
    local = [i for i in range(len(grid))
             if norms[i] <= norms[max(i - 1, 0)] and norms[i] <= norms[min(i + 1, len(grid) - 1)]]
    near = int(np.argmin(np.abs(np.log(grid / s0))))
    local = sorted(set(local) | {near})

    def sq(s):
        return float(np.sum(_lsq(r, v, s, terms)[1] ** 2))

    fits = []
    for i in local:
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        sol = minimize_scalar(sq, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13 * hi})
        fits.append((float(sol.x), float(np.sqrt(sol.fun))))
    floor = min(nm for _, nm in fits)
    tie = max(4.0 * floor, 1e-12 * scale)
    s = max(c for c, nm in fits if nm <= tie)
    c, res = _lsq(r, v, s, terms)
    return Fit(float(c[0]), s, float(np.linalg.norm(res)), [float(x) for x in c])


# -- reports -----------------------------------------------------------------

@dataclass
class MassReport:
    """Extrapolated invariant with its per-radius samples and fit."""

    kind: str
    value: object
    samples: list
    fit: object
    converged: bool
    tolerance: float

    def to_json(self):
        def conv(x):
            if isinstance(x, np.ndarray):
                return x.tolist()
            if isinstance(x, Fit):
                return {"limit": x.limit, "exponent": _finite(x.exponent),
                        "residual": x.residual, "drift": x.drift}
            if isinstance(x, list):
                return [conv(y) for y in x]
            if isinstance(x, tuple):
                return [conv(y) for y in x]
            if isinstance(x, (np.floating,)):
                return float(x)
            return x
        return {"kind": self.kind, "value": conv(self.value),
                "samples": conv(self.samples), "fit": conv(self.fit),
                "converged": bool(self.converged), "tolerance": self.tolerance}

    def to_csv(self):
        rows = ["rho,value"]
        for rho, val in self.samples:
            vals = np.atleast_1d(val)
            rows.append(",".join([repr(float(rho))] + [repr(float(x)) for x in vals]))
        return "\n".join(rows) + "\n"


def _finite(x):
    return None if not np.isfinite(x) else float(x)


def radii_schedule(radii=None, rho0=DEFAULT_RHO0, levels=DEFAULT_LEVELS):
    if radii is not None:
        return np.asarray(radii, dtype=float)
    return rho0 * 2.0 ** np.arange(levels + 1)


def _initial_exponent(spec):
    s0 = 2 * spec.tau - (spec.n - 2)
    if not np.isfinite(s0):
        s0 = spec.n - 2
    return s0


def _report(kind, radii, values, spec, tol, strict):
    fit = _checked_fit(radii, values, _initial_exponent(spec))
    ok = _fit_ok(fit, tol)
    rep = MassReport(kind, fit.limit, [(float(r), float(v)) for r, v in zip(radii, values)],
                     fit, bool(ok), tol)
    if not ok:
        msg = (f"{kind}: extrapolation not converged (residual {fit.residual:.3g}, "
               f"drift {fit.drift:.3g}, exponent {fit.exponent:.3g})")
        if strict:
            raise NonConverged(msg, rep)
        log.warning(msg)
    return rep


def _require_af(spec):
    if not spec.asymptotically_flat:
        raise ConfigError(
            f"family {spec.family!r} violates the decay condition; no mass defined")


def _map_nodes(fn, nodes):
    out = [fn(nodes[i:i + CHUNK]) for i in range(0, len(nodes), CHUNK)]
    return np.concatenate(out, axis=0)


def sphere_flux(spec, rho, V=None, weighted=False, order=None):
    """``int_{S_rho} U_i(V, g - delta, phi) nu^i dS`` with ``phi = f`` or 0."""
    shell = sphere_shell(rho, spec.n, order)
    V = constant_field(1.0) if V is None else V
    pert = background_perturbation(spec, with_weight=weighted)

    def integrand(x):
        return np.einsum("...i,...i->...", flux_U(V, pert, x), shell_normal(x))

    return shell.integrate(_map_nodes(integrand, shell.nodes))


def _adm_sample(spec, rho, order):
    shell = sphere_shell(rho, spec.n, order)

    def integrand(x):
        hg = spec.eval_metric(x).d1
        U = np.einsum("...ijj->...i", hg) - np.einsum("...jji->...i", hg)
        return np.einsum("...i,...i->...", U, shell_normal(x))

    flux = shell.integrate(_map_nodes(integrand, shell.nodes))
    return flux / (2 * (spec.n - 1) * shell.omega)


def _weight_sample(spec, rho, order):
    shell = sphere_shell(rho, spec.n, order)

    def integrand(x):
        fj = spec.eval_weight(x)
        return np.einsum("...i,...i->...", fj.grad, shell_normal(x)) * np.exp(-fj.value)

    flux = shell.integrate(_map_nodes(integrand, shell.nodes))
    return flux / ((spec.n - 1) * shell.omega)


def shell_normal(x):
    """Outward unit normal of the origin-centred sphere through ``x``."""
    return x / np.linalg.norm(x, axis=-1)[:, None]


def adm_mass(spec, radii=None, order=None, tol=DEFAULT_TOL, strict=True):
    """ADM mass by extrapolation of coordinate-sphere fluxes.

    Raises :class:`NonConverged` if the fit residual exceeds ``tol``
    (relative to ``max(1, |m|)``) and ``strict`` is set.
    """
    _require_af(spec)
    radii = radii_schedule(radii)
    vals = [_adm_sample(spec, r, order) for r in radii]
    return _report("adm", radii, vals, spec, tol, strict)


def weighted_mass(spec, radii=None, order=None, tol=DEFAULT_TOL, strict=True):
    """Weighted mass: ADM flux plus the ``grad f . nu e^-f`` correction.

    The two fluxes are added radius by radius before extrapolating, since for
    slowly decaying weights neither converges on its own.
    """
    _require_af(spec)
    radii = radii_schedule(radii)
    vals = [_adm_sample(spec, r, order) + _weight_sample(spec, r, order) for r in radii]
    return _report("weighted", radii, vals, spec, tol, strict)


def centre_of_mass(spec, radii=None, weighted=True, order=None, tol=DEFAULT_TOL,
                   strict=True, mass=None):
    """Centre of mass vector from the fluxes of ``U(x^a, g - delta, f)``.

    The flux is normalised by ``2 (n-1) omega_{n-1}`` times the mass, which
    makes a translated Schwarzschild end report its translation vector.
    """
    _require_af(spec)
    if not spec.parity_compatible:
        raise ConfigError(
            f"family {spec.family!r} is not tagged parity-compatible; "
            "centre of mass is undefined")
    radii = radii_schedule(radii)
    if mass is None:
        mass = (weighted_mass if weighted else adm_mass)(spec, radii, order, tol, strict)
    m = mass.value
    if abs(m) < 1e-10:
        raise ZeroMass("centre of mass needs nonzero mass")
    n = spec.n
    norm = 2 * (n - 1) * sphere_volume(n)
    samples = np.array([[sphere_flux(spec, r, coordinate_field(a), weighted, order) / norm
                         for a in range(n)] for r in radii])
    kind = "com_weighted" if weighted else "com_adm"
    fits = []
    ok = mass.converged
    s0 = _initial_exponent(spec)
    for a in range(n):
        fit = _checked_fit(radii, samples[:, a], s0)
        fits.append(fit)
        ok = ok and _fit_ok(fit, tol)
    value = np.array([f.limit for f in fits]) / m
    rep = MassReport(kind, value, [(float(r), s) for r, s in zip(radii, samples)],
                     fits, bool(ok), tol)
    if not ok:
        msg = f"{kind}: extrapolation not converged"
        if strict:
            raise NonConverged(msg, rep)
        log.warning(msg)
    return rep


def check_com_conformal(spec, radii=None, order=None, tol=DEFAULT_TOL):
    """Componentwise ``c_f(g) - c_ADM(g~)``."""
    from .conformal import conformal_spec
    tilde = conformal_spec(spec).tilde_spec
    cf = centre_of_mass(spec, radii, weighted=True, order=order, tol=tol)
    ct = centre_of_mass(tilde, radii, weighted=False, order=order, tol=tol)
    return cf.value - ct.value
