import numpy as np
import pytest
from hypothesis import settings

from wmass.fields import make_family

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")

BUMP = {"type": "bump", "center": [2.5, 0.0, 0.0], "radius": 1.5, "amplitude": 0.4}


def catalogue():
    """Built-in families used across the suite, with their known masses.

    ``None`` marks a mass that is only compared between two pipelines.
    """
    return {
        "flat": (make_family("flat"), 0.0),
        "flat_inverse_r": (make_family("flat_with_weight", weight="inverse_r"), -0.5),
        "flat_dipole": (make_family("flat_with_weight",
                                    weight={"type": "dipole", "a": 0.7}), 0.0),
        "schwarzschild": (make_family("schwarzschild", m=1.0), 1.0),
        "f_schwarzschild_inverse_r": (make_family("f_schwarzschild", m=1.0,
                                                  weight="inverse_r"), 1.0),
        "f_schwarzschild_bump": (make_family("f_schwarzschild", m=2.0, weight=BUMP), 2.0),
        "conformally_flat": (make_family("conformally_flat", coeffs=[0.5, 0.3, -0.1]), 1.0),
        "f_conformally_flat": (make_family("f_conformally_flat", coeffs=[1.0],
                                           weight={"type": "power", "a": 0.6, "k": 2}), 2.0),
        "areal_schwarzschild": (make_family("spherically_symmetric", areal_mass=1.0), 1.0),
        "perturbed_flat": (make_family(
            "perturbed_flat",
            h=[{"amplitude": [[0.1, 0.02, 0.0], [0.02, -0.05, 0.01], [0.0, 0.01, 0.03]],
                "center": [1.0, 0.5, 0.0], "radius": 1.5}],
            phi=BUMP), 0.0),
    }


@pytest.fixture(scope="session")
def families():
    return catalogue()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def probe_points(spec, count=200, seed=0, rmax=None):
    from wmass.quadrature import annulus_probe
    rmin = max(1.5, 1.5 * spec.excluded_radius)
    return annulus_probe(spec.n, rmin, rmax or 12.0 * rmin, count, seed,
                         spec.excluded_center)


ACCEPTANCE = {}


def record(criterion, passed, detail):
    """Log one acceptance line; printed again in the terminal summary."""
    line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
