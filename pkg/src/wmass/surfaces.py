"""Coordinate spheres in weighted manifolds.

Mean curvature is the divergence of the outward ``g``-unit normal of the
level set ``r_c = |x - c|``, so flat spheres have ``H = (n-1)/rho > 0``. The
weighted mean curvature is ``H_f = H - d_nu f``.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .conformal import conformal_spec
from .curvature import geometry_at, geometry_from_jets
from .errors import (NoSignChange, NotPositiveDefinite, NotSpherical,
                     PreconditionFailed, WrongDimension)
from .jets import distance
from .quadrature import annulus_probe, sphere_shell, sphere_volume

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RadialSurface:
    """The coordinate sphere ``|x - center| = rho``."""

    rho: float
    center: tuple = None
    order: int = None

    def shell(self, n):
        return sphere_shell(self.rho, n, self.order, self.center)


@dataclass
class SurfaceGeometry:
    """Pointwise data on a sphere: ``H``, ``H_f``, ``d_nu f``, area density."""

    points: np.ndarray
    H: np.ndarray
    H_f: np.ndarray
    dnu_f: np.ndarray
    f: np.ndarray
    area_density: np.ndarray


@dataclass
class SurfaceReport:
    rho: float
    H_f_values: np.ndarray
    A_f: float
    A_g: float
    hawking_f: float = None
    penrose_rhs: float = None

    def to_json(self):
        return {"rho": self.rho, "A_f": self.A_f, "A_g": self.A_g,
                "hawking_f": self.hawking_f, "penrose_rhs": self.penrose_rhs,
                "H_f_max_abs": float(np.max(np.abs(self.H_f_values)))}


def surface_geometry(spec, surface, p=None, extend=False):
    """Mean curvature data of ``surface`` at ``p`` (default: its quadrature nodes)."""
    n = spec.n
    if p is None:
        p = surface.shell(n).nodes
    p = np.atleast_2d(np.asarray(p, dtype=float))
    r = distance(p, surface.center)
    geom = geometry_from_jets(spec.eval_metric(p, extend), spec.eval_weight(p, extend))
    dr = r.grad
    norm2 = geom.inner(dr, dr)
    norm = np.sqrt(norm2)
    hess_r = geom.hessian(r)
    up = geom.raise_index(dr)
    H = (geom.laplacian(r)
         - np.einsum("...ij,...i,...j->...", hess_r, up, up) / norm2) / norm
    dnu_f = geom.inner(geom.f.grad, dr) / norm
    # dA_g / dS_euclid for a level set of |x - c| (Euclidean gradient norm 1)
    density = geom.sqrt_det * norm
    return SurfaceGeometry(p, H, H - dnu_f, dnu_f, geom.f.value, density)


def mean_curvature(spec, surface, p=None, extend=False):
    return surface_geometry(spec, surface, p, extend).H


def weighted_mean_curvature(spec, surface, p=None, extend=False):
    return surface_geometry(spec, surface, p, extend).H_f


def _areas(spec, surface, extend=False):
    shell = surface.shell(spec.n)
    sg = surface_geometry(spec, surface, shell.nodes, extend)
    A_g = shell.integrate(sg.area_density)
    A_f = shell.integrate(sg.area_density * np.exp(-sg.f))
    return shell, sg, float(A_f), float(A_g)


def weighted_area(spec, surface, extend=False):
    """``A_f = int e^-f dA_g`` by sphere quadrature."""
    return _areas(spec, surface, extend)[2]


def surface_report(spec, surface, extend=False):
    shell, sg, A_f, A_g = _areas(spec, surface, extend)
    n = spec.n
    rhs = 0.5 * (A_f / sphere_volume(n)) ** ((n - 2) / (n - 1))
    hawking = None
    if n == 3:
        willmore = shell.integrate(sg.H_f ** 2 * sg.area_density)
        hawking = math.sqrt(A_f / (16 * math.pi)) * (1 - willmore / (16 * math.pi))
    return SurfaceReport(surface.rho, sg.H_f, A_f, A_g, hawking, rhs)


# -- f-minimal spheres -------------------------------------------------------

def _require_spherical(spec):
    if not spec.spherical:
        raise NotSpherical(f"family {spec.family!r} is not spherically symmetric")


def _hf_radial(spec, rho):
    """``H_f`` of centred spheres at the points ``(rho, 0, ..., 0)``."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    p = np.zeros((len(rho), spec.n))
    p[:, 0] = rho
    with np.errstate(over="ignore", invalid="ignore"):
        return weighted_mean_curvature(spec, RadialSurface(1.0), p, extend=True)


def find_f_minimal_sphere(spec, bracket, scan=400, xtol=1e-12):
    """Outermost radius in ``bracket`` where ``H_f`` changes sign.

    Radii inside the family's excluded ball are evaluated on the analytic
    extension of the fields, so a horizon on the ball's boundary is found.
    """
    _require_spherical(spec)
    a, b = map(float, bracket)
    if not 0 < a < b:
        raise ValueError("bracket must satisfy 0 < a < b")
    grid = np.geomspace(b, a, scan)
    try:
        values = _hf_radial(spec, grid)
    except NotPositiveDefinite:
        values = np.array([_hf_or_nan(spec, r) for r in grid])
    sign = np.sign(values)
    for k in range(scan):
        if not np.isfinite(values[k]):
            break
        if sign[k] == 0:
            return float(grid[k])
        if k and sign[k] != sign[k - 1]:
            return float(brentq(lambda s: float(_hf_radial(spec, s)[0]),
                                grid[k], grid[k - 1], xtol=xtol,
                                rtol=4 * np.finfo(float).eps))
    raise NoSignChange(f"H_f has no sign change in [{a:g}, {b:g}]")


def _hf_or_nan(spec, r):
    try:
        return float(_hf_radial(spec, r)[0])
    except NotPositiveDefinite:
        return np.nan


def check_f_outer_minimising(spec, rho_star, rho_max=None, samples=64, order=4,
                             rtol=1e-10):
    """Sphere-competitor test of the outer-minimising property.

    Returns ``(ok, profile)`` where ``profile`` is a list of
    ``(rho, A_f(rho) - A_f(rho_star))``. ``ok`` holds iff ``A_f`` is
    non-decreasing on the sampled radii and never drops below its value at
    ``rho_star`` (both up to ``rtol`` relative).
    """
    _require_spherical(spec)
    rho_max = 50.0 * rho_star if rho_max is None else rho_max
    radii = np.geomspace(rho_star, rho_max, samples)
    areas = np.array([weighted_area(spec, RadialSurface(r, order=order), extend=True)
                      for r in radii])
    a0 = areas[0]
    slack = rtol * abs(a0)
    margins = areas - a0
    ok = bool(np.all(np.diff(areas) >= -slack) and np.all(margins >= -slack))
    return ok, [(float(r), float(m)) for r, m in zip(radii, margins)]


# -- Hawking mass and the Penrose inequality ---------------------------------

def weighted_hawking_mass(spec, surface, with_tilde=False):
    """``(A_f/16 pi)^1/2 (1 - 1/16 pi int H_f^2 dA_g)`` (n = 3 only).

    The Willmore term integrates against the unweighted area element. With
    ``with_tilde`` the Hawking mass of the same sphere in ``g~`` is returned
    as well.
    """
    if spec.n != 3:
        raise WrongDimension("the weighted Hawking mass is defined for n = 3")
    m = surface_report(spec, surface, extend=True).hawking_f
    if not with_tilde:
        return m
    tilde = conformal_spec(spec).tilde_spec
    return m, surface_report(tilde, surface, extend=True).hawking_f


def sf_min_on_grid(spec, rmin, rmax, count=512, seed=0):
    pts = annulus_probe(spec.n, rmin, rmax, count, seed, spec.excluded_center)
    return float(np.min(geometry_at(spec, pts, extend=True).conf_scal))


@dataclass
class PenroseReport:
    rho_star: float
    A_f: float
    m_f: float
    rhs: float
    ratio: float
    certified_outer_minimising: bool
    sf_min_on_grid: float
    H_f_max: float
    mass_converged: bool
    margins: list = field(default_factory=list)

    def to_json(self):
        d = dict(self.__dict__)
        d.pop("margins")
        return d


def _preconditions(spec, rho_star, sf_tol, grid, seed, rho_max):
    ok, margins = check_f_outer_minimising(spec, rho_star, rho_max)
    rmax = 50.0 * rho_star if rho_max is None else rho_max
    sfmin = sf_min_on_grid(spec, rho_star, rmax, grid, seed)
    return ok, margins, sfmin


def penrose_ratio(spec, rho_star, radii=None, sf_tol=1e-9, hf_tol=1e-6,
                  grid=512, seed=0, rho_max=None, order=None):
    """``m_f / (1/2 (A_f/omega)^((n-2)/(n-1)))`` at the f-minimal sphere ``rho_star``.

    Raises :class:`PreconditionFailed` if ``S_f`` is negative somewhere on
    the probe grid, or the sphere is not f-minimal or not outer-minimising
    among spheres.
    """
    from .mass import weighted_mass
    _require_spherical(spec)
    n = spec.n
    surf = RadialSurface(rho_star, order=order)
    rep = surface_report(spec, surf, extend=True)
    hf_max = float(np.max(np.abs(rep.H_f_values)))
    ok, margins, sfmin = _preconditions(spec, rho_star, sf_tol, grid, seed, rho_max)
    if sfmin < -sf_tol:
        raise PreconditionFailed(f"S_f = {sfmin:.3g} < 0 on the probe grid")
    if hf_max > hf_tol:
        raise PreconditionFailed(f"sphere is not f-minimal (|H_f| = {hf_max:.3g})")
    if not ok:
        raise PreconditionFailed("sphere is not f-outer-minimising among spheres")
    mf = weighted_mass(spec, radii, order)
    rhs = 0.5 * (rep.A_f / sphere_volume(n)) ** ((n - 2) / (n - 1))
    return PenroseReport(float(rho_star), rep.A_f, float(mf.value), float(rhs),
                         float(mf.value / rhs), ok, sfmin, hf_max, mf.converged,
                         margins)


def hawking_vs_mass(spec, surface, radii=None, sf_tol=1e-9, grid=512, seed=0,
                    rho_max=None, require_outer=True):
    """Return ``(m_Hf, m_f, m_f - m_Hf)`` after checking the hypotheses."""
    from .mass import weighted_mass
    if spec.n != 3:
        raise WrongDimension("Hawking mass comparison is for n = 3")
    if require_outer:
        _require_spherical(spec)
        ok, _, sfmin = _preconditions(spec, surface.rho, sf_tol, grid, seed, rho_max)
        if sfmin < -sf_tol:
            raise PreconditionFailed(f"S_f = {sfmin:.3g} < 0 on the probe grid")
        if not ok:
            raise PreconditionFailed("sphere is not f-outer-minimising among spheres")
    mh = weighted_hawking_mass(spec, surface)
    mf = weighted_mass(spec, radii).value
    return mh, mf, mf - mh


# -- randomised admissible families ------------------------------------------

def _random_radial_weight(rng):
    kind = rng.choice(["zero", "power", "power2", "exp", "shell"])
    if kind == "zero":
        return {"type": "zero"}
    if kind == "power":
        return {"type": "power", "a": float(rng.uniform(-1, 1)), "k": 1.0}
    if kind == "power2":
        return {"type": "power", "a": float(rng.uniform(-2, 2)), "k": 2.0}
    if kind == "exp":
        # short scale so the tail is negligible at the extrapolation radii
        return {"type": "exp", "a": float(rng.uniform(-1, 1)),
                "scale": float(rng.uniform(0.3, 0.8))}
    return {"type": "shell", "radius": float(rng.uniform(1, 4)),
            "width": float(rng.uniform(0.2, 0.9)), "amplitude": float(rng.uniform(-1, 1))}


def random_admissible_family(rng, n=3, max_tries=200):
    """Random spherically symmetric family with ``S_f >= 0`` and an f-minimal sphere.

    The metric is ``e^(2f/(n-1)) u^(4/(n-2)) delta`` with
    ``u = 1 + c1/r + c2/r^2 + c3/r^3``, ``c1 > 0`` and ``c2, c3 <= 0``; in
    ``n = 3`` the latter makes ``u`` superharmonic, hence ``S_f >= 0``.
    Candidates where ``u`` vanishes too far out, no f-minimal sphere exists
    or the probe grid shows ``S_f < 0`` are rejected. Returns
    ``(spec, rho_star)``.
    """
    from .fields import make_family
    for _ in range(max_tries):
        c1 = float(rng.uniform(0.2, 2.0))
        c2 = -float(rng.uniform(0, 0.3)) * c1 ** 2
        c3 = -float(rng.uniform(0, 0.1)) * c1 ** 3
        roots = np.roots([1.0, c1, c2, c3])
        real = roots[np.abs(roots.imag) < 1e-12].real
        r_u = float(max(real.max(initial=0.0), 0.0))
        spec = make_family("f_conformally_flat", n=n, coeffs=[c1, c2, c3],
                           weight=_random_radial_weight(rng), excluded_radius=r_u)
        lo = r_u * 1.001 + 1e-3
        try:
            rho = find_f_minimal_sphere(spec, (lo, 20.0 * c1 + 5.0))
        except NoSignChange:
            continue
        spec = make_family("f_conformally_flat", n=n, coeffs=[c1, c2, c3],
                           weight=spec.params["weight"], excluded_radius=rho)
        if sf_min_on_grid(spec, rho, 50 * rho, 256) < -1e-9:
            continue
        return spec, rho
    raise RuntimeError("no admissible family found")
