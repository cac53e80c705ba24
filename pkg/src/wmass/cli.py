"""Command-line runner: ``wmass <task> --config spec.json [options]``.

A config file is either a bare spec document (``{"family": ..., "n": ...,
"params": {...}}``) or a full experiment document::

    {"schema": 1, "spec": {...}, "numerics": {...}, "task_params": {...}}

Reports are JSON with sorted keys. Apart from ``wall_time`` they depend only
on the config and seed. Exit codes: 0 all assertions pass, 1 an assertion
failed, 2 configuration error, 3 numerical non-convergence.
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import conformal, mass, staticity, surfaces
from .curvature import geometry_at
from .errors import BadParams, ConfigError, NonConverged, WMassError
from .fields import finite_difference_spec, random_compact_perturbation, spec_from_json
from .quadrature import annulus_probe

log = logging.getLogger("wmass")

SCHEMA = 1
TASKS = ("mass", "check-conformal", "static-check", "penrose", "hawking", "michel",
         "convergence", "probe")
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NONCONV = 0, 1, 2, 3

DEFAULT_NUMERICS = {
    "order": None,
    "h_fd": None,
    "radii": [mass.DEFAULT_RHO0, mass.DEFAULT_LEVELS],
    "tol": mass.DEFAULT_TOL,
    "grid": None,
    "seed": 0,
}


@dataclass
class ExperimentConfig:
    task: str
    spec: dict
    numerics: dict = field(default_factory=dict)
    task_params: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    schema: int = SCHEMA

    @classmethod
    def from_dict(cls, doc, task=None):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        if "family" in doc:
            doc = {"schema": SCHEMA, "spec": doc}
        if doc.get("schema", SCHEMA) != SCHEMA:
            raise ConfigError(f"unsupported config schema {doc.get('schema')!r}")
        task = task or doc.get("task")
        if task not in TASKS:
            raise ConfigError(f"unknown task {task!r}; choose from {', '.join(TASKS)}")
        if "spec" not in doc:
            raise ConfigError("config needs a 'spec' document")
        numerics = dict(DEFAULT_NUMERICS)
        numerics.update(doc.get("numerics", {}))
        unknown = set(numerics) - set(DEFAULT_NUMERICS)
        if unknown:
            raise ConfigError(f"unknown numerics keys {sorted(unknown)}")
        return cls(task, doc["spec"], numerics, dict(doc.get("task_params", {})),
                   dict(doc.get("output", {})))

    def to_dict(self):
        return {"schema": self.schema, "task": self.task, "spec": self.spec,
                "numerics": self.numerics, "task_params": self.task_params}

    def build_spec(self):
        spec = spec_from_json(self.spec)
        h = self.numerics.get("h_fd")
        if h is not None and not spec.analytic:
            spec = spec.with_fd_step(h)
        return spec

    def validate(self, spec):
        tp = self.task_params
        if self.task == "penrose":
            if "bracket" not in tp:
                raise ConfigError("penrose needs a bracket (--bracket a:b)")
            if not 3 <= spec.n <= 7:
                raise ConfigError("penrose is configured for 3 <= n <= 7")
        if self.task == "hawking":
            if spec.n != 3:
                raise ConfigError("hawking needs n = 3")
            if "rho" not in tp:
                raise ConfigError("hawking needs a sphere radius (--rho R)")
        if self.task == "convergence" and tp.get("parameter") not in ("q", "h_fd", "rho0"):
            raise ConfigError("convergence needs parameter q, h_fd or rho0")

    def radii(self):
        r0, k = self.numerics["radii"]
        return mass.radii_schedule(None, float(r0), int(k))

    def grid(self, spec, default):
        g = self.numerics.get("grid") or default
        rmin, rmax, count = float(g[0]), float(g[1]), int(g[2])
        return annulus_probe(spec.n, rmin, rmax, count, int(self.numerics["seed"]),
                             spec.excluded_center)


@dataclass
class RunReport:
    config: dict
    results: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    assertions: list = field(default_factory=list)
    wall_time: float = 0.0

    def check(self, name, passed, value=None, tolerance=None, converged=True):
        self.assertions.append({"name": name, "passed": bool(passed),
                                "value": _plain(value), "tolerance": tolerance,
                                "converged": bool(converged)})

    @property
    def passed(self):
        return all(a["passed"] for a in self.assertions)

    def to_json(self):
        doc = {"schema": SCHEMA, "config": self.config, "results": _plain(self.results),
               "tables": _plain(self.tables), "assertions": self.assertions,
               "passed": self.passed, "wall_time": self.wall_time}
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True)

    def table_csv(self, name):
        rows = self.tables[name]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(rows["columns"])
        w.writerows(rows["rows"])
        return buf.getvalue()


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# -- tasks -------------------------------------------------------------------

def _task_mass(cfg, spec, rep):
    radii, tol, order = cfg.radii(), cfg.numerics["tol"], cfg.numerics["order"]
    mf = mass.weighted_mass(spec, radii, order, tol, strict=False)
    adm = mass.adm_mass(spec, radii, order, tol, strict=False)
    tilde = conformal.conformal_spec(spec).tilde_spec
    mt = mass.adm_mass(tilde, radii, order, tol, strict=False)
    rep.results.update(weighted=mf.to_json(), adm=adm.to_json(), adm_tilde=mt.to_json())
    rep.tables["samples"] = {"columns": ["rho", "weighted", "adm", "adm_tilde"],
                             "rows": [[r, a[1], b[1], c[1]] for r, a, b, c in
                                      zip(radii, mf.samples, adm.samples, mt.samples)]}
    diff = abs(mf.value - mt.value)
    rep.check("weighted mass == ADM mass of conformal metric", diff < tol * max(1, abs(mf.value)),
              diff, tol, mf.converged and mt.converged)
    if "expected" in cfg.task_params:
        err = abs(mf.value - float(cfg.task_params["expected"]))
        rep.check("weighted mass matches expected", err < tol * max(1, abs(mf.value)),
                  err, tol, mf.converged)
    if not (mf.converged and adm.converged and mt.converged):
        raise NonConverged("mass extrapolation did not converge", rep)


def _task_conformal(cfg, spec, rep):
    p = cfg.grid(spec, _default_grid(spec, 64))
    pair = conformal.conformal_spec(spec)
    rs = conformal.check_conformal_scalar(spec, p, pair)
    rows = []
    for x, r_s in zip(p, rs):
        surf = surfaces.RadialSurface(float(np.linalg.norm(x - _ctr(spec))),
                                      spec.excluded_center, order=8)
        r_h = float(conformal.check_conformal_mean_curvature(spec, surf, x[None], pair)[0])
        a_f, a_t, r_a = conformal.check_area_equality(spec, surf, pair)
        rows.append([*x.tolist(), float(r_s), r_h, r_a / a_f])
    rows = np.array(rows)
    n = spec.n
    rep.tables["residuals"] = {
        "columns": [f"x{i + 1}" for i in range(n)] + ["residual_scalar", "residual_H",
                                                     "residual_area"],
        "rows": rows.tolist()}
    tol = 1e-8 if spec.analytic else 1e-5
    for k, name in enumerate(("scalar curvature", "mean curvature", "area")):
        v = float(np.max(np.abs(rows[:, n + k])))
        rep.results[f"max_residual_{name.replace(' ', '_')}"] = v
        rep.check(f"conformal {name} identity", v < tol, v, tol)


def _task_static(cfg, spec, rep):
    V = staticity.potential_from_id(spec, cfg.task_params.get("potential", "one"))
    p = cfg.grid(spec, _default_grid(spec, 4096))
    cert = staticity.s_f_vanishing_check(spec, V, p)
    rep.results.update(cert)
    tr = float(np.max(np.abs(staticity.trace_identity_residual(spec, V, p))))
    rep.results["trace_identity_residual"] = tr
    rep.check("trace identity", tr < 1e-9, tr, 1e-9)
    if "expect_static" in cfg.task_params:
        rep.check("static certificate matches expectation",
                  cert["certified"] == bool(cfg.task_params["expect_static"]),
                  cert["certified"])


def _task_penrose(cfg, spec, rep):
    a, b = cfg.task_params["bracket"]
    rho = surfaces.find_f_minimal_sphere(spec, (float(a), float(b)))
    pr = surfaces.penrose_ratio(spec, rho, cfg.radii(), order=cfg.numerics["order"],
                                seed=int(cfg.numerics["seed"]))
    rep.results.update(pr.to_json())
    rep.tables["outer_minimising_margin"] = {"columns": ["rho", "margin"],
                                             "rows": [list(m) for m in pr.margins]}
    rep.check("penrose ratio >= 1", pr.ratio >= 1 - 1e-3, pr.ratio, 1e-3, pr.mass_converged)
    if cfg.task_params.get("expect_equality"):
        rep.check("penrose equality", abs(pr.ratio - 1) < 1e-3, pr.ratio, 1e-3)


def _task_hawking(cfg, spec, rep):
    surf = surfaces.RadialSurface(float(cfg.task_params["rho"]))
    mh, mt = surfaces.weighted_hawking_mass(spec, surf, with_tilde=True)
    mh, mf, margin = surfaces.hawking_vs_mass(
        spec, surf, cfg.radii(), seed=int(cfg.numerics["seed"]),
        require_outer=spec.spherical)
    rep.results.update(hawking_f=mh, hawking_tilde=mt, m_f=mf, margin=margin)
    rep.check("weighted Hawking mass == Hawking mass of conformal metric",
              abs(mh - mt) < 1e-6, abs(mh - mt), 1e-6)
    rep.check("mass >= weighted Hawking mass", margin >= -1e-3, margin, 1e-3)


def _task_michel(cfg, spec, rep):
    if spec.family != "flat":
        raise ConfigError("michel runs on the flat background")
    rng = np.random.default_rng(int(cfg.numerics["seed"]))
    tp = cfg.task_params
    count = int(tp.get("count", 10))
    radius = float(tp.get("radius", 1.5))
    scale = float(tp.get("scale", 0.2))
    potentials = tp.get("potentials", ["one"] + [f"x{a + 1}" for a in range(spec.n)])
    rows = []
    for k in range(count):
        pert = random_compact_perturbation(spec.n, rng, radius=radius, scale=scale)
        pts = annulus_probe(spec.n, 0.0, radius, 32, int(cfg.numerics["seed"]) + k)
        for vid in potentials:
            V = staticity.potential_from_id(spec, vid)
            r = float(np.max(np.abs(staticity.michel_pointwise_residual(spec, pert, V, pts))))
            rows.append([k, vid, r])
        if k == 0:
            flux, vol, diff = staticity.michel_integral_check(spec, pert, V, radius)
            rep.results.update(integral_flux=flux, integral_volume=vol,
                               integral_residual=diff)
            rep.check("integral Michel identity", abs(diff) < 1e-6, diff, 1e-6)
    worst = max(r[2] for r in rows)
    rep.results["max_pointwise_residual"] = worst
    rep.tables["pointwise"] = {"columns": ["perturbation", "potential", "residual"],
                               "rows": rows}
    rep.check("pointwise Michel identity", worst < 1e-8, worst, 1e-8)


def convergence_study(cfg, spec, parameter, values):
    """Table of ``(value, result, error, observed_order)`` for one parameter.

    ``q``: ADM mass against sphere order, error relative to the last entry
    (or ``reference``). ``h_fd``: max ``S_f`` error of FD jets against the
    analytic pipeline. ``rho0``: extrapolated weighted mass and fit residual.
    """
    rows = []
    radii, tol = cfg.radii(), cfg.numerics["tol"]
    if parameter == "q":
        vals = [mass.adm_mass(spec, radii, int(q), tol, strict=False).value for q in values]
        ref = cfg.task_params.get("reference", vals[-1])
        errs = [abs(v - ref) for v in vals]
        rows = [[q, v, e] for q, v, e in zip(values, vals, errs)]
    elif parameter == "h_fd":
        if not spec.analytic:
            raise ConfigError("h_fd study needs a family with analytic jets as reference")
        p = cfg.grid(spec, _default_grid(spec, 256))
        exact = geometry_at(spec, p).conf_scal
        for h in values:
            approx = geometry_at(finite_difference_spec(spec, float(h)), p).conf_scal
            e = float(np.max(np.abs(approx - exact)))
            rows.append([h, float(np.max(np.abs(approx))), e])
    elif parameter == "rho0":
        k = int(cfg.numerics["radii"][1])
        for r0 in values:
            rep = mass.weighted_mass(spec, mass.radii_schedule(None, float(r0), k),
                                     cfg.numerics["order"], tol, strict=False)
            rows.append([r0, rep.value, rep.fit.residual])
    else:
        raise ConfigError(f"unknown convergence parameter {parameter!r}")
    for i, row in enumerate(rows):
        order = None
        if i and parameter != "rho0" and row[2] > 0 and rows[i - 1][2] > 0:
            order = math.log(rows[i - 1][2] / row[2]) / math.log(
                float(rows[i - 1][0]) / float(row[0]))
            order = abs(order)
        row.append(order)
    return rows


def _task_convergence(cfg, spec, rep):
    tp = cfg.task_params
    parameter = tp["parameter"]
    defaults = {"q": [8, 12, 16, 20, 24], "h_fd": [0.04, 0.02, 0.01],
                "rho0": [8.0, 16.0, 32.0]}
    values = tp.get("values", defaults[parameter])
    rows = convergence_study(cfg, spec, parameter, values)
    col = "residual" if parameter == "rho0" else "error"
    rep.tables["convergence"] = {"columns": [parameter, "result", col, "observed_order"],
                                 "rows": rows}
    if parameter == "q":
        errs = [r[2] for r in rows[:-1]] if "reference" not in tp else [r[2] for r in rows]
        ok = all(b <= a * (1 + 1e-6) + 1e-12 for a, b in zip(errs, errs[1:]))
        rep.check("error non-increasing in q", ok, errs[-1] if errs else 0.0)
    elif parameter == "h_fd":
        orders = [r[3] for r in rows if r[3] is not None]
        rep.check("observed FD order in [1.8, 2.2]",
                  bool(orders) and all(1.8 <= o <= 2.2 for o in orders), orders)
    else:
        vals = [r[1] for r in rows]
        drift = max(vals) - min(vals)
        res = max(r[2] for r in rows)
        rep.check("mass drift within fit tolerance", drift <= max(res, cfg.numerics["tol"]),
                  drift, cfg.numerics["tol"])


def _task_probe(cfg, spec, rep):
    pts = cfg.task_params.get("points")
    p = np.asarray(pts, dtype=float) if pts else cfg.grid(spec, _default_grid(spec, 4))
    geom = geometry_at(spec, p)
    rep.results["points"] = p.tolist()
    rep.results["records"] = [geom.to_record(i) for i in range(len(p))]


def _ctr(spec):
    return np.zeros(spec.n) if spec.excluded_center is None else np.asarray(
        spec.excluded_center, dtype=float)


def _default_grid(spec, count):
    rmin = max(2.0, 2.0 * spec.excluded_radius)
    return (rmin, 25.0 * rmin, count)


DISPATCH = {"mass": _task_mass, "check-conformal": _task_conformal,
            "static-check": _task_static, "penrose": _task_penrose,
            "hawking": _task_hawking, "michel": _task_michel,
            "convergence": _task_convergence, "probe": _task_probe}


def run(cfg):
    """Execute one experiment; returns the :class:`RunReport`.

    Module errors propagate; :class:`NonConverged` carries the partial report.
    """
    t0 = time.perf_counter()
    try:
        spec = cfg.build_spec()
    except BadParams as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate(spec)
    rep = RunReport(cfg.to_dict())
    DISPATCH[cfg.task](cfg, spec, rep)
    rep.wall_time = time.perf_counter() - t0
    return rep


# -- argument parsing --------------------------------------------------------

def _pair(text, kind=float):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}")
    return [kind(parts[0]), kind(parts[1])]


def _radii(text):
    a, b = text.split(":")
    return [float(a), int(b)]


def _grid(text):
    parts = text.split(":")
    if len(parts) != 4 or parts[0] != "annulus":
        raise argparse.ArgumentTypeError("expected annulus:rmin:rmax:count")
    return [float(parts[1]), float(parts[2]), int(parts[3])]


def build_parser():
    ap = argparse.ArgumentParser(prog="wmass", description=__doc__.splitlines()[0])
    ap.add_argument("task", choices=TASKS)
    ap.add_argument("--config", required=True, help="JSON spec or experiment document")
    ap.add_argument("--out", help="write the JSON report here (default: stdout)")
    ap.add_argument("--csv", help="write the main table as CSV here")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--radii", type=_radii, help="rho0:K")
    ap.add_argument("--bracket", type=_pair, help="a:b")
    ap.add_argument("--grid", type=_grid, help="annulus:rmin:rmax:count")
    ap.add_argument("--potential", help=f"one of {', '.join(staticity.POTENTIALS)}")
    ap.add_argument("--rho", type=float, help="sphere radius for hawking")
    ap.add_argument("--parameter", choices=("q", "h_fd", "rho0"))
    ap.add_argument("--order", type=int, help="sphere quadrature order q")
    ap.add_argument("--h-fd", type=float, dest="h_fd")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args):
    try:
        with open(args.config) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    cfg = ExperimentConfig.from_dict(doc, args.task)
    for key in ("seed", "radii", "grid", "order", "h_fd"):
        v = getattr(args, key)
        if v is not None:
            cfg.numerics[key] = v
    for key in ("bracket", "potential", "rho", "parameter"):
        v = getattr(args, key)
        if v is not None:
            cfg.task_params[key] = v
    return cfg


def _emit(rep, args):
    text = rep.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    if args.csv and rep.tables:
        with open(args.csv, "w") as fh:
            fh.write(rep.table_csv(sorted(rep.tables)[0]))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        rep = run(cfg)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NonConverged as exc:
        log.error("not converged: %s", exc)
        if isinstance(exc.report, RunReport):
            _emit(exc.report, args)
        return EXIT_NONCONV
    except WMassError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_FAIL
    _emit(rep, args)
    for a in rep.assertions:
        log.info("%s %s (value=%s)", "PASS" if a["passed"] else "FAIL", a["name"], a["value"])
    return EXIT_PASS if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
