"""Quadrature on coordinate spheres and bounded regions.

The sphere rule for ``S^{n-1}`` is a product rule in hyperspherical angles:
Gauss-Jacobi in ``cos(theta_k)`` for each polar angle (Gauss-Legendre when
``n = 3``) and the trapezoid rule with ``2q`` points in azimuth. The node
count is ``q^{n-2} * 2q``, so the default order drops with dimension.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_jacobi

DEFAULT_ORDER = {3: 24, 4: 12}


def default_order(n):
    return DEFAULT_ORDER.get(n, 8)


def sphere_volume(n):
    """``omega_{n-1}``: the area of the unit sphere in ``R^n``."""
    return 2.0 * math.pi ** (n / 2) / math.exp(gammaln(n / 2))


@lru_cache(maxsize=32)
def _unit_sphere_rule(n, q):
    """Nodes ``(N, n)`` and weights ``(N,)`` on the unit sphere in ``R^n``."""
    nphi = 2 * q
    phi = 2 * np.pi * np.arange(nphi) / nphi
    # circle S^1: coordinates (cos phi, sin phi)
    nodes = np.stack([np.cos(phi), np.sin(phi)], -1)
    weights = np.full(nphi, 2 * np.pi / nphi)
    # lift S^{d-1} to S^d: x = (t, sqrt(1-t^2) y), measure (1-t^2)^{(d-2)/2} dt
    for d in range(2, n):
        alpha = 0.5 * (d - 2)
        t, wt = roots_jacobi(q, alpha, alpha)
        s = np.sqrt(1 - t ** 2)
        nodes = np.concatenate([
            np.repeat(t, len(weights))[:, None],
            (s[:, None, None] * nodes[None]).reshape(-1, d)], axis=1)
        weights = (wt[:, None] * weights[None]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class SphereShell:
    """Quadrature on the coordinate sphere ``|x - center| = rho``.

    ``normal`` is the outward Euclidean unit normal at each node and the
    weights sum to ``omega * rho^(n-1)``.
    """

    rho: float
    n: int
    order: int
    center: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    normal: np.ndarray
    omega: float

    @property
    def area(self):
        return self.omega * self.rho ** (self.n - 1)

    def integrate(self, values):
        """Sum ``values`` (leading axis = nodes) against the weights."""
        return np.tensordot(self.weights, values, axes=(0, 0))


def sphere_shell(rho, n=3, order=None, center=None):
    q = default_order(n) if order is None else int(order)
    unit, w = _unit_sphere_rule(n, q)
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    return SphereShell(rho=float(rho), n=n, order=q, center=c,
                       nodes=c + rho * unit, weights=w * rho ** (n - 1),
                       normal=unit.copy(), omega=sphere_volume(n))


def box_rule(lo, hi, order=32):
    """Tensor-product Gauss-Legendre rule on the box ``[lo, hi]``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    t, w = np.polynomial.legendre.leggauss(order)
    axes = [0.5 * (b - a) * t + 0.5 * (a + b) for a, b in zip(lo, hi)]
    wax = [0.5 * (b - a) * w for a, b in zip(lo, hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    wgrid = np.ones_like(grids[0])
    for k, wk in enumerate(wax):
        shape = [1] * len(lo)
        shape[k] = -1
        wgrid = wgrid * wk.reshape(shape)
    return np.stack([g.ravel() for g in grids], -1), wgrid.ravel()


def annulus_probe(n, rmin, rmax, count=512, seed=0, center=None):
    """Scrambled Halton points in the annulus ``rmin <= |x - c| <= rmax``.

    The radius is uniform in ``[rmin, rmax]`` (so the inner region is not
    undersampled) and the direction is a normalised Gaussian vector drawn
    from the remaining low-discrepancy coordinates.
    """
    from scipy.special import ndtri
    from scipy.stats import qmc
    u = qmc.Halton(d=n + 1, scramble=True, seed=seed).random(count)
    u = np.clip(u, 1e-12, 1 - 1e-12)
    r = rmin + (rmax - rmin) * u[:, 0]
    z = ndtri(u[:, 1:])
    z /= np.linalg.norm(z, axis=1)[:, None]
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    return c + r[:, None] * z


def ball_rule(rho, n=3, radial_order=48, sphere_order=None, center=None):
    """Gauss-Legendre in radius times the sphere rule, on ``|x - c| < rho``."""
    t, w = np.polynomial.legendre.leggauss(radial_order)
    r = 0.5 * rho * (t + 1)
    wr = 0.5 * rho * w * r ** (n - 1)
    q = default_order(n) if sphere_order is None else sphere_order
    unit, ws = _unit_sphere_rule(n, q)
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    nodes = c + (r[:, None, None] * unit[None]).reshape(-1, n)
    return nodes, (wr[:, None] * ws[None]).ravel()
