"""Asymptotic-end data: metric and weight fields evaluated as 2-jets.

Built-in families compose their fields from coordinate jets, so their jets
are exact. User-supplied callables fall back to finite differences.
Every family is expressed directly in end coordinates.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BadParams, ConfigError, NotPositiveDefinite, PointExcluded
from .jets import (Jet2, TensorJet, conformal_tensor, coordinates, distance,
                   fd_jet, squared_distance)

INF = math.inf


def _points(x):
    x = np.asarray(x, dtype=float)
    return np.atleast_2d(x)


# -- scalar fields -----------------------------------------------------------

class ScalarField:
    """A scalar field that can be evaluated as a 2-jet at a batch of points.

    Attributes
    ----------
    decay : float
        Decay order ``tau`` with ``field = O_2(r^-tau)``; ``inf`` for compact
        support or faster than any power, negative for growing fields.
    radial : bool
        True if the field depends on ``|x|`` only.
    doc : object
        JSON-serialisable catalogue entry, or None for ad-hoc fields.
    """

    decay = INF
    radial = True
    doc = None

    def jet(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.jet(_points(x)).value


class ExprScalar(ScalarField):
    """Field given by a jet expression ``fn(x) -> Jet2``."""

    def __init__(self, fn, decay=INF, radial=True, doc=None):
        self.fn = fn
        self.decay = decay
        self.radial = radial
        self.doc = doc

    def jet(self, x):
        return self.fn(_points(x))


class FDScalar(ScalarField):
    """Field given by a plain callable; jets by finite differences."""

    def __init__(self, func, decay=INF, radial=False, step=None):
        self.func = func
        self.decay = decay
        self.radial = radial
        self.step = step

    def jet(self, x):
        v, d1, d2 = fd_jet(self.func, _points(x), self.step)
        return Jet2(v, d1, d2)

    def __call__(self, x):
        return np.asarray(self.func(_points(x)), dtype=float)


class DerivedScalar(ScalarField):
    """Pointwise combination ``fn(*jets)`` of other fields' jets."""

    def __init__(self, fn, *fields, decay=INF, radial=None):
        self.fn = fn
        self.fields = fields
        self.decay = decay
        self.radial = all(f.radial for f in fields) if radial is None else radial

    def jet(self, x):
        x = _points(x)
        return self.fn(*[f.jet(x) for f in self.fields])


def constant_field(c):
    return ExprScalar(lambda x: Jet2.constant(c, x.shape[:-1], x.shape[-1]),
                      decay=INF if c == 0 else 0.0, doc={"type": "constant", "c": c})


def coordinate_field(a):
    """The coordinate function ``x^a`` (0-based index)."""
    return ExprScalar(lambda x: coordinates(x)[a], decay=-1.0, radial=False,
                      doc={"type": "coordinate", "index": a})


# -- weight catalogue --------------------------------------------------------

def _center(c, n):
    return np.zeros(n) if c is None else np.asarray(c, dtype=float)


def zero_weight():
    return ExprScalar(lambda x: Jet2.constant(0.0, x.shape[:-1], x.shape[-1]),
                      doc="zero")


def power_weight(a=1.0, k=1.0, center=None):
    """``a |x - c|^-k``; ``k = 1`` is the catalogue entry ``inverse_r``."""
    c = None if center is None else list(map(float, center))

    def fn(x):
        return (squared_distance(x, c) ** (-0.5 * k)) * a

    return ExprScalar(fn, decay=float(k), radial=c is None or not np.any(c),
                      doc={"type": "power", "a": a, "k": k, "center": c})


def exp_weight(a=1.0, scale=1.0, center=None):
    """``a exp(-|x - c| / scale)``."""
    c = None if center is None else list(map(float, center))

    def fn(x):
        return (distance(x, c) * (-1.0 / scale)).exp() * a

    return ExprScalar(fn, radial=c is None or not np.any(c),
                      doc={"type": "exp", "a": a, "scale": scale, "center": c})


def _bump_of(q):
    """``exp(1 - 1/(1 - q))`` for ``q < 1``, zero otherwise (``q`` a jet)."""
    inside = q.value < 1.0
    qs = q.where(inside, 0.0)
    b = ((1.0 - qs).reciprocal() * -1.0 + 1.0).exp()
    return b.where(inside, 0.0)


def bump_weight(center=None, radius=1.0, amplitude=1.0):
    """Smooth compactly supported bump of height ``amplitude`` at ``center``."""
    c = None if center is None else list(map(float, center))

    def fn(x):
        q = squared_distance(x, c) * (1.0 / radius ** 2)
        return _bump_of(q) * amplitude

    return ExprScalar(fn, radial=c is None or not np.any(c),
                      doc={"type": "bump", "center": c, "radius": radius,
                           "amplitude": amplitude})


def shell_weight(radius=2.0, width=0.5, amplitude=1.0):
    """Radial bump ``amplitude * b((|x| - radius) / width)``."""
    if width >= radius:
        raise BadParams("shell must not reach the origin")

    def fn(x):
        s = (distance(x) - radius) * (1.0 / width)
        return _bump_of(s * s) * amplitude

    return ExprScalar(fn, doc={"type": "shell", "radius": radius, "width": width,
                               "amplitude": amplitude})


def dipole_weight(a=1.0, direction=None):
    """``a (d . x) / |x|^3`` with unit direction ``d`` (default ``e_1``)."""

    def fn(x):
        n = x.shape[-1]
        d = np.eye(n)[0] if direction is None else np.asarray(direction, float)
        X = coordinates(x)
        lin = sum((X[i] * d[i] for i in range(n)), Jet2.constant(0.0, x.shape[:-1], n))
        return lin * (squared_distance(x) ** -1.5) * a

    return ExprScalar(fn, decay=2.0, radial=False,
                      doc={"type": "dipole", "a": a,
                           "direction": None if direction is None else list(direction)})


def linear_weight(slope):
    """``slope . x``; not asymptotically flat, for local checks only."""
    slope = list(map(float, slope))

    def fn(x):
        X = coordinates(x)
        out = Jet2.constant(0.0, x.shape[:-1], x.shape[-1])
        for i, s in enumerate(slope):
            out = out + X[i] * s
        return out

    return ExprScalar(fn, decay=-1.0, radial=False,
                      doc={"type": "linear", "slope": slope})


def weight_from_doc(doc):
    """Build a catalogue weight from its JSON entry."""
    if doc is None or doc == "zero":
        return zero_weight()
    if doc == "inverse_r":
        return power_weight(1.0, 1.0)
    if not isinstance(doc, dict) or "type" not in doc:
        raise ConfigError(f"unknown weight profile {doc!r}")
    kind = doc["type"]
    kw = {k: v for k, v in doc.items() if k != "type"}
    builders = {"power": power_weight, "exp": exp_weight, "bump": bump_weight,
                "shell": shell_weight, "dipole": dipole_weight,
                "linear": linear_weight, "zero": lambda: zero_weight()}
    if kind == "inverse_r":
        return power_weight(kw.get("a", 1.0), 1.0, kw.get("center"))
    if kind not in builders:
        raise ConfigError(f"unknown weight profile type {kind!r}")
    try:
        return builders[kind](**kw)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for weight {kind!r}: {exc}") from None


def as_weight(w):
    if isinstance(w, ScalarField):
        return w
    return weight_from_doc(w)


# -- tensor fields -----------------------------------------------------------

class TensorField:
    """Symmetric 2-tensor field evaluated as a :class:`TensorJet`."""

    decay = INF
    doc = None

    def jet(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.jet(_points(x)).value


class ExprTensor(TensorField):
    def __init__(self, fn, decay=INF, doc=None):
        self.fn = fn
        self.decay = decay
        self.doc = doc

    def jet(self, x):
        return self.fn(_points(x))


class FDTensor(TensorField):
    def __init__(self, func, decay=INF, step=None):
        self.func = func
        self.decay = decay
        self.step = step

    def jet(self, x):
        return TensorJet(*fd_jet(self.func, _points(x), self.step))

    def __call__(self, x):
        return np.asarray(self.func(_points(x)), dtype=float)


class DerivedTensor(TensorField):
    def __init__(self, fn, *fields, decay=INF):
        self.fn = fn
        self.fields = fields
        self.decay = decay

    def jet(self, x):
        x = _points(x)
        return self.fn(*[f.jet(x) for f in self.fields])


def flat_metric():
    return ExprTensor(lambda x: TensorJet.identity(x.shape[:-1], x.shape[-1]))


def bump_tensor(amplitude, center=None, radius=1.0):
    """``amplitude_ij * bump(x)`` for a constant symmetric matrix."""
    A = np.asarray(amplitude, dtype=float)
    A = 0.5 * (A + A.T)
    b = bump_weight(center, radius, 1.0)

    def fn(x):
        bj = b.jet(x)
        return TensorJet(bj.value[..., None, None] * A,
                         A[:, :, None] * bj.grad[..., None, None, :],
                         A[:, :, None, None] * bj.hess[..., None, None, :, :])

    return ExprTensor(fn, doc={"type": "bump_tensor", "amplitude": A.tolist(),
                               "center": b.doc["center"], "radius": radius})


def sum_tensor(fields):
    def fn(x):
        out = TensorJet.zeros(x.shape[:-1], x.shape[-1])
        for f in fields:
            out = out + f.jet(x)
        return out
    return ExprTensor(fn, decay=min((f.decay for f in fields), default=INF))


def random_perturbation(n, rng, center=None, radius=1.0, scale=0.1):
    """Random smooth compactly supported ``(h, phi)``: bump times quadratics.

    Returns ``(h_field, phi_field)``. Coefficients are drawn from ``rng``.
    """
    c = _center(center, n)
    nsym = n * (n + 1) // 2
    A = rng.normal(size=(nsym,))
    B = rng.normal(size=(nsym, n))
    C = rng.normal(size=(nsym, n, n))
    a = rng.normal()
    bvec = rng.normal(size=n)
    Cs = rng.normal(size=(n, n))
    bump = bump_weight(c, radius, 1.0)
    pairs = [(i, j) for i in range(n) for j in range(i, n)]

    def poly(x, a0, b1, c2):
        Y = [(X - ci) * (1.0 / radius) for X, ci in zip(coordinates(x), c)]
        out = Jet2.constant(a0, x.shape[:-1], n)
        for k in range(n):
            out = out + Y[k] * b1[k]
            for l in range(n):
                out = out + Y[k] * Y[l] * c2[k, l]
        return out

    def hfn(x):
        bj = bump.jet(x)
        comps = [[None] * n for _ in range(n)]
        for p, (i, j) in enumerate(pairs):
            comps[i][j] = poly(x, A[p], B[p], C[p]) * bj * scale
        return TensorJet.from_components(comps)

    def phifn(x):
        return poly(x, a, bvec, Cs) * bump.jet(x) * scale

    return ExprTensor(hfn), ExprScalar(phifn, radial=False)


# -- rotations ---------------------------------------------------------------

class RotatedScalar(ScalarField):
    """Push-forward ``f'(x) = f(Q^T x)`` of a field under rotation ``Q``."""

    def __init__(self, base, Q):
        self.base = base
        self.Q = np.asarray(Q, dtype=float)
        self.decay = base.decay
        self.radial = base.radial

    def jet(self, x):
        x = _points(x)
        Q = self.Q
        j = self.base.jet(x @ Q)
        return Jet2(j.value, j.grad @ Q.T, Q @ j.hess @ Q.T)


class RotatedTensor(TensorField):
    """Push-forward ``g'(x) = Q g(Q^T x) Q^T`` under rotation ``Q``."""

    def __init__(self, base, Q):
        self.base = base
        self.Q = np.asarray(Q, dtype=float)
        self.decay = base.decay

    def jet(self, x):
        x = _points(x)
        Q = self.Q
        j = self.base.jet(x @ Q)
        v = np.einsum("ia,jb,...ab->...ij", Q, Q, j.value)
        d1 = np.einsum("ia,jb,kc,...abc->...ijk", Q, Q, Q, j.d1)
        d2 = np.einsum("ia,jb,kc,ld,...abcd->...ijkl", Q, Q, Q, Q, j.d2)
        return TensorJet(v, d1, d2)


# -- manifold specs ----------------------------------------------------------

@dataclass(frozen=True)
class WeightedManifoldSpec:
    """Immutable description of an asymptotically flat weighted end.

    ``tau`` is the validated decay order (``inf`` for flat data). Points with
    ``|x - excluded_center| < excluded_radius`` are rejected on evaluation
    unless ``extend=True``; the boundary sphere itself is allowed.
    """

    n: int
    metric: TensorField
    weight: ScalarField
    tau: float
    family: str
    params: dict = field(default_factory=dict)
    excluded_radius: float = 0.0
    excluded_center: tuple = None
    spherical: bool = False
    parity_compatible: bool = True
    asymptotically_flat: bool = True
    analytic: bool = True

    def _check(self, x, extend):
        x = _points(x)
        if x.shape[-1] != self.n:
            raise ConfigError(f"points have dimension {x.shape[-1]}, spec has n={self.n}")
        if not extend and self.excluded_radius > 0:
            c = np.zeros(self.n) if self.excluded_center is None else np.asarray(
                self.excluded_center)
            r = np.linalg.norm(x - c, axis=-1)
            if np.any(r < self.excluded_radius * (1 - 1e-12)):
                raise PointExcluded(
                    f"point inside excluded ball r < {self.excluded_radius:g}")
        return x

    def eval_metric(self, x, extend=False):
        x = self._check(x, extend)
        j = self.metric.jet(x)
        try:
            np.linalg.cholesky(j.value)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite("metric is not positive definite") from None
        return j

    def eval_weight(self, x, extend=False):
        x = self._check(x, extend)
        return self.weight.jet(x)

    def with_fd_step(self, step):
        """Copy with the finite-difference step of FD fields overridden."""
        metric, weight = self.metric, self.weight
        if isinstance(metric, FDTensor):
            metric = FDTensor(metric.func, metric.decay, step)
        if isinstance(weight, FDScalar):
            weight = FDScalar(weight.func, weight.decay, weight.radial, step)
        return replace(self, metric=metric, weight=weight)

    def to_json(self):
        return spec_to_json(self)


def eval_metric(spec, p, extend=False):
    return spec.eval_metric(p, extend)


def eval_weight(spec, p, extend=False):
    return spec.eval_weight(p, extend)


def _decay_ok(n, tau):
    return tau > 0.5 * (n - 2)


def _finish(n, metric, weight, metric_tau, family, params, strict, **tags):
    if n < 3:
        raise BadParams("dimension must be at least 3")
    tau = min(metric_tau, weight.decay)
    af = _decay_ok(n, tau)
    if strict and not af:
        raise BadParams(
            f"decay order tau={tau:g} violates tau > (n-2)/2 = {(n - 2) / 2:g}")
    spherical = tags.pop("spherical", True) and weight.radial
    return WeightedManifoldSpec(n=n, metric=metric, weight=weight, tau=tau,
                                family=family, params=params,
                                spherical=spherical, asymptotically_flat=af, **tags)


def _schwarzschild_factor(n, m, center):
    def u(x):
        return (squared_distance(x, center) ** (-0.5 * (n - 2))) * (0.5 * m) + 1.0
    return u


def schwarzschild_potential(n, m, center=None):
    """Static potential ``(1 - m/2r^{n-2}) / (1 + m/2r^{n-2})``."""
    def fn(x):
        w = (squared_distance(x, center) ** (-0.5 * (n - 2))) * (0.5 * m)
        return (1.0 - w) / (1.0 + w)
    return ExprScalar(fn, decay=n - 2.0, radial=center is None or not np.any(center))


def make_family(name, n=3, strict=True, **params):
    """Construct a :class:`WeightedManifoldSpec` for a built-in family.

    Families: ``flat``, ``conformally_flat``, ``schwarzschild``,
    ``f_schwarzschild``, ``flat_with_weight``, ``perturbed_flat``,
    ``spherically_symmetric``, ``user``. With ``strict=False`` the decay
    condition is recorded instead of enforced (local checks on fields such
    as ``f = r``).
    """
    n = int(n)
    if n < 3:
        raise BadParams("dimension must be at least 3")
    center = params.get("center")
    ctr = None if center is None else tuple(map(float, center))
    centred = ctr is None or not any(ctr)
    weight = as_weight(params.get("weight", "zero"))
    doc_params = dict(params)
    if isinstance(params.get("weight"), ScalarField):
        doc_params["weight"] = params["weight"].doc
    name = name.replace("-", "_").lower()

    if name == "flat":
        return _finish(n, flat_metric(), weight, INF, name, doc_params, strict)

    if name == "flat_with_weight":
        return _finish(n, flat_metric(), weight, INF, name, doc_params, strict)

    if name in ("schwarzschild", "f_schwarzschild"):
        m = float(params.get("m", 1.0))
        if not m > 0:
            raise BadParams("Schwarzschild-type families need m > 0")
        if name == "schwarzschild" and weight.doc not in (None, "zero"):
            raise BadParams("use f_schwarzschild for a nonzero weight")
        u = _schwarzschild_factor(n, m, ctr)
        wf = weight

        def metric_fn(x):
            omega = u(x) ** (4.0 / (n - 2))
            if name == "f_schwarzschild":
                omega = omega * (wf.jet(x) * (2.0 / (n - 1))).exp()
            return conformal_tensor(omega)

        r0 = (0.5 * m) ** (1.0 / (n - 2))
        return _finish(n, ExprTensor(metric_fn, decay=n - 2.0), weight, n - 2.0,
                       name, doc_params, strict, excluded_radius=r0,
                       excluded_center=ctr, spherical=centred)

    if name in ("conformally_flat", "f_conformally_flat"):
        # u^{4/(n-2)} delta with u = 1 + sum_k c_k r^-k; the f_ variant carries
        # the extra factor e^{2f/(n-1)} like f-Schwarzschild
        coeffs = [float(c) for c in params.get("coeffs", [0.5])]
        ks = [k + 1 for k, c in enumerate(coeffs) if c != 0]
        mtau = float(min(ks)) if ks else INF
        wf = weight if name == "f_conformally_flat" else None

        def metric_fn(x):
            r2 = squared_distance(x, ctr)
            u = Jet2.constant(1.0, x.shape[:-1], n)
            for k, c in enumerate(coeffs, start=1):
                if c:
                    u = u + (r2 ** (-0.5 * k)) * c
            omega = u ** (4.0 / (n - 2))
            if wf is not None:
                omega = omega * (wf.jet(x) * (2.0 / (n - 1))).exp()
            return conformal_tensor(omega)

        r_ex = float(params.get("excluded_radius", 0.0))
        return _finish(n, ExprTensor(metric_fn, decay=mtau), weight, mtau, name,
                       doc_params, strict, excluded_radius=r_ex,
                       excluded_center=ctr, spherical=centred)

    if name == "perturbed_flat":
        hs = [h if isinstance(h, TensorField) else bump_tensor(**{
            k: v for k, v in h.items() if k != "type"}) for h in params.get("h", [])]
        doc_params["h"] = [h.doc for h in hs]
        pert = sum_tensor(hs)
        phi = as_weight(params.get("phi", params.get("weight", "zero")))
        doc_params["phi"] = phi.doc
        doc_params.pop("weight", None)

        def metric_fn(x):
            return TensorJet.identity(x.shape[:-1], n) + pert.jet(x)

        return _finish(n, ExprTensor(metric_fn, decay=INF), phi, INF, name,
                       doc_params, strict, spherical=False)

    if name == "spherically_symmetric":
        a_coeffs = [float(c) for c in params.get("A", [])]
        b_coeffs = [float(c) for c in params.get("B", [])]
        areal_mass = params.get("areal_mass")
        taus = []
        for cs in (a_coeffs, b_coeffs):
            nz = [k + 1 for k, c in enumerate(cs) if c != 0]
            if nz:
                taus.append(float(min(nz)))
        r_ex = 0.0
        if areal_mass is not None:
            areal_mass = float(areal_mass)
            if not areal_mass > 0:
                raise BadParams("areal_mass must be positive")
            taus.append(n - 2.0)
            r_ex = (2 * areal_mass) ** (1.0 / (n - 2))
        mtau = min(taus) if taus else INF

        def profile(r2, cs):
            out = Jet2.constant(1.0, r2.value.shape, n)
            for k, c in enumerate(cs, start=1):
                if c:
                    out = out + (r2 ** (-0.5 * k)) * c
            return out

        def metric_fn(x):
            r2 = squared_distance(x)
            A = profile(r2, a_coeffs)
            if areal_mass is not None:
                A = A * (1.0 - (r2 ** (-0.5 * (n - 2))) * (2 * areal_mass)).reciprocal()
            B = profile(r2, b_coeffs)
            X = coordinates(x)
            inv_r2 = r2.reciprocal()
            diff = A - B
            comps = [[None] * n for _ in range(n)]
            for i in range(n):
                for j in range(i, n):
                    c = X[i] * X[j] * inv_r2 * diff
                    comps[i][j] = c + B if i == j else c
            return TensorJet.from_components(comps)

        return _finish(n, ExprTensor(metric_fn, decay=mtau), weight, mtau, name,
                       doc_params, strict, excluded_radius=r_ex)

    if name == "user":
        metric = params.get("metric")
        wfun = params.get("weight_fn")
        tau = float(params.get("tau", 1.0))
        if metric is None:
            raise BadParams("user family needs a metric callable")
        mf = FDTensor(metric, decay=tau)
        wf = FDScalar(wfun, decay=tau) if wfun is not None else zero_weight()
        spec = _finish(n, mf, wf, tau, name, {"tau": tau}, strict,
                       spherical=bool(params.get("spherical", False)),
                       parity_compatible=bool(params.get("parity_compatible", False)))
        return replace(spec, analytic=False,
                       excluded_radius=float(params.get("excluded_radius", 0.0)))

    raise BadParams(f"unknown family {name!r}")


def rotate_spec(spec, Q):
    """Push a spec forward under a rotation ``Q`` about the origin."""
    Q = np.asarray(Q, dtype=float)
    ctr = spec.excluded_center
    if ctr is not None:
        ctr = tuple(Q @ np.asarray(ctr))
    return replace(spec, metric=RotatedTensor(spec.metric, Q),
                   weight=RotatedScalar(spec.weight, Q), excluded_center=ctr,
                   family=spec.family + "+rotated", params=dict(spec.params))


# -- JSON --------------------------------------------------------------------

def spec_to_json(spec):
    if spec.family == "user" or spec.family.endswith("+rotated"):
        raise ConfigError("user-defined and rotated specs are not serialisable")
    return {"family": spec.family, "n": spec.n, "params": _jsonable(spec.params)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def spec_from_json(doc):
    """Inverse of :func:`spec_to_json`."""
    if not isinstance(doc, dict) or "family" not in doc:
        raise ConfigError("spec document needs a 'family' key")
    params = dict(doc.get("params", {}))
    return make_family(doc["family"], n=doc.get("n", 3), **params)


# -- perturbations -----------------------------------------------------------

@dataclass(frozen=True)
class Perturbation:
    """A pair ``(h, phi)``: symmetric tensor field and scalar field.

    ``support`` is an optional ``(center, radius)`` ball outside of which both
    fields vanish.
    """

    h: TensorField
    phi: ScalarField
    support: tuple = None

    def jets(self, x):
        x = _points(x)
        return self.h.jet(x), self.phi.jet(x)

    def scaled(self, c):
        h, phi = self.h, self.phi
        return Perturbation(
            DerivedTensor(lambda j: j.scale(c), h),
            DerivedScalar(lambda j: j * c, phi, radial=phi.radial),
            self.support)


def background_perturbation(spec, with_weight=True):
    """``(g - delta, f)`` (or ``(g - delta, 0)``) as a :class:`Perturbation`."""
    n = spec.n

    def hfn(x):
        return spec.eval_metric(x) - TensorJet.identity(x.shape[:-1], n)

    phi = spec.weight if with_weight else zero_weight()
    return Perturbation(ExprTensor(hfn, decay=spec.tau), phi)


def random_compact_perturbation(n, rng, center=None, radius=1.0, scale=0.1):
    h, phi = random_perturbation(n, rng, center, radius, scale)
    c = tuple(_center(center, n))
    return Perturbation(h, phi, (c, float(radius)))


def finite_difference_spec(spec, step=None):
    """Copy of ``spec`` whose jets are finite differences of its values.

    Used to exercise the FD path on families with known analytic jets.
    """
    metric, weight = spec.metric, spec.weight
    return replace(spec,
                   metric=FDTensor(lambda x: metric(x), decay=metric.decay, step=step),
                   weight=FDScalar(lambda x: weight(x), decay=weight.decay,
                                   radial=weight.radial, step=step),
                   analytic=False, family=spec.family)
