"""Pointwise tensor calculus on metric and weight 2-jets.

Conventions
-----------
* ``Delta = nabla_i nabla^i`` (non-negative on ``|x|^2`` in flat space).
* ``Ric_ij = d_k Gamma^k_ij - d_j Gamma^k_ik + Gamma^k_kl Gamma^l_ij
  - Gamma^k_jl Gamma^l_ik``, so round spheres have positive curvature.
* Christoffel symbols are stored as ``gamma[..., k, i, j] = Gamma^k_ij`` and
  their derivatives as ``dgamma[..., k, i, j, l] = d_l Gamma^k_ij``.
* Weighted curvatures::

      R_f = R + 2 Delta f - |grad f|^2
      S_f = R_f + |grad f|^2 / (n - 1)
"""

from dataclasses import dataclass

import numpy as np

from .jets import Jet2


@dataclass(frozen=True)
class GeometryJet:
    n: int
    metric: np.ndarray
    inv_metric: np.ndarray
    sqrt_det: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray
    ric: np.ndarray
    scal: np.ndarray
    f: Jet2
    grad_f: np.ndarray
    hess_f: np.ndarray
    lap_f: np.ndarray
    gradnorm2_f: np.ndarray
    weighted_scal: np.ndarray
    conf_scal: np.ndarray

    def hessian(self, w):
        """Covariant Hessian ``nabla_i nabla_j w`` of a scalar jet."""
        return w.hess - np.einsum("...kij,...k->...ij", self.gamma, w.grad)

    def laplacian(self, w):
        return np.einsum("...ij,...ij->...", self.inv_metric, self.hessian(w))

    def raise_index(self, covector):
        return np.einsum("...ij,...j->...i", self.inv_metric, covector)

    def inner(self, a, b):
        """``g^{ij} a_i b_j`` for two covectors."""
        return np.einsum("...ij,...i,...j->...", self.inv_metric, a, b)

    def raise_both(self, t):
        return np.einsum("...ia,...jb,...ab->...ij", self.inv_metric,
                         self.inv_metric, t)

    def trace(self, t):
        return np.einsum("...ij,...ij->...", self.inv_metric, t)

    def to_record(self, index=0):
        """Plain-JSON dump of one batch entry (debugging aid for ``probe``)."""
        def pick(a):
            a = np.asarray(a)
            return (a[index] if a.ndim and a.shape[0] > index and a.ndim > 0
                    else a).tolist()
        return {
            "metric": pick(self.metric), "gamma": pick(self.gamma),
            "ric": pick(self.ric), "scal": pick(self.scal),
            "f": pick(self.f.value), "grad_f": pick(self.grad_f),
            "hess_f": pick(self.hess_f), "lap_f": pick(self.lap_f),
            "gradnorm2_f": pick(self.gradnorm2_f),
            "weighted_scal": pick(self.weighted_scal),
            "conf_scal": pick(self.conf_scal),
        }


def christoffel(gjet):
    """Return ``(inv_metric, gamma, dgamma)`` from a metric :class:`TensorJet`."""
    g, d1, d2 = gjet.value, gjet.d1, gjet.d2
    ginv = np.linalg.inv(g)
    # first-kind symbols Gamma_{l i j} and their derivatives
    low = 0.5 * (np.einsum("...jli->...lij", d1) + np.einsum("...ilj->...lij", d1)
                 - np.einsum("...ijl->...lij", d1))
    dlow = 0.5 * (np.einsum("...jlim->...lijm", d2) + np.einsum("...iljm->...lijm", d2)
                  - np.einsum("...ijlm->...lijm", d2))
    dginv = -np.einsum("...ka,...abm,...bl->...klm", ginv, d1, ginv)
    gamma = np.einsum("...kl,...lij->...kij", ginv, low)
    dgamma = (np.einsum("...klm,...lij->...kijm", dginv, low)
              + np.einsum("...kl,...lijm->...kijm", ginv, dlow))
    return ginv, gamma, dgamma


def ricci(gamma, dgamma):
    return (np.einsum("...kijk->...ij", dgamma) - np.einsum("...kikj->...ij", dgamma)
            + np.einsum("...kkl,...lij->...ij", gamma, gamma)
            - np.einsum("...kjl,...lik->...ij", gamma, gamma))


def geometry_from_jets(gjet, fjet):
    n = gjet.n
    ginv, gamma, dgamma = christoffel(gjet)
    ric = ricci(gamma, dgamma)
    ric = 0.5 * (ric + np.swapaxes(ric, -1, -2))
    scal = np.einsum("...ij,...ij->...", ginv, ric)
    hess_f = fjet.hess - np.einsum("...kij,...k->...ij", gamma, fjet.grad)
    lap_f = np.einsum("...ij,...ij->...", ginv, hess_f)
    grad_f = np.einsum("...ij,...j->...i", ginv, fjet.grad)
    gn2 = np.einsum("...i,...i->...", grad_f, fjet.grad)
    rf = scal + 2.0 * lap_f - gn2
    sf = rf + gn2 / (n - 1)
    return GeometryJet(
        n=n, metric=gjet.value, inv_metric=ginv,
        sqrt_det=np.sqrt(np.linalg.det(gjet.value)), gamma=gamma, dgamma=dgamma,
        ric=ric, scal=scal, f=fjet, grad_f=grad_f, hess_f=hess_f, lap_f=lap_f,
        gradnorm2_f=gn2, weighted_scal=rf, conf_scal=sf)


def geometry_at(spec, p, extend=False):
    """All curvature data of ``spec`` at the point(s) ``p``."""
    gjet = spec.eval_metric(p, extend)
    fjet = spec.eval_weight(p, extend)
    return geometry_from_jets(gjet, fjet)


def conf_scal_field(spec):
    """The scalar field ``S_f`` of ``spec`` as a callable of points."""
    def sf(p, extend=False):
        return geometry_at(spec, p, extend).conf_scal
    return sf


def conf_scal_alt(geom):
    """``S_f`` via ``R + 2 Delta f - (n-2)/(n-1) |grad f|^2``."""
    n = geom.n
    return geom.scal + 2 * geom.lap_f - (n - 2) / (n - 1) * geom.gradnorm2_f


# -- covariant derivatives of symmetric 2-tensors ----------------------------

def tensor_derivatives(geom, hjet):
    """First and second covariant derivatives of a symmetric tensor jet.

    Returns ``(Dh, DDh)`` with ``Dh[..., i, j, k] = nabla_k h_ij`` and
    ``DDh[..., i, j, k, l] = nabla_l nabla_k h_ij``.
    """
    G, dG = geom.gamma, geom.dgamma
    h, h1, h2 = hjet.value, hjet.d1, hjet.d2
    Dh = (h1 - np.einsum("...mki,...mj->...ijk", G, h)
          - np.einsum("...mkj,...im->...ijk", G, h))
    # d_l (nabla_k h_ij)
    dDh = (h2
           - np.einsum("...mkil,...mj->...ijkl", dG, h)
           - np.einsum("...mki,...mjl->...ijkl", G, h1)
           - np.einsum("...mkjl,...im->...ijkl", dG, h)
           - np.einsum("...mkj,...iml->...ijkl", G, h1))
    DDh = (dDh
           - np.einsum("...mlk,...ijm->...ijkl", G, Dh)
           - np.einsum("...mli,...mjk->...ijkl", G, Dh)
           - np.einsum("...mlj,...imk->...ijkl", G, Dh))
    return Dh, DDh
