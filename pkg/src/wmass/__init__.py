"""Numerical toolkit for weighted asymptotically flat manifolds.

Curvature of ``(g, f)``, the conformal metric ``exp(-2f/(n-1)) g``, weighted
mass and centre of mass, linearised weighted scalar curvature and static
potentials, and weighted minimal spheres with their Penrose and Hawking
inequalities.
"""

from .conformal import (ConformalPair, check_area_equality, check_conformal_mean_curvature,
                        check_conformal_scalar, conformal_spec, potential_transform)
from .curvature import GeometryJet, geometry_at
from .errors import (BadParams, ConfigError, NoSignChange, NonConverged, NotPositiveDefinite,
                     NotSpherical, PointExcluded, PreconditionFailed, WMassError, WrongDimension,
                     ZeroMass)
from .fields import (Perturbation, WeightedManifoldSpec, make_family, random_compact_perturbation,
                     spec_from_json, spec_to_json)
from .mass import MassReport, adm_mass, centre_of_mass, check_com_conformal, flux_U, weighted_mass
from .quadrature import SphereShell, sphere_shell, sphere_volume
from .staticity import (AdjointValue, adjoint, dPhi, f_static_residual, conformal_adjoint_residuals,
                        michel_pointwise_residual, s_f_vanishing_check)
from .surfaces import (RadialSurface, SurfaceReport, check_f_outer_minimising,
                       find_f_minimal_sphere, hawking_vs_mass, mean_curvature, penrose_ratio,
                       weighted_area, weighted_hawking_mass, weighted_mean_curvature)

__version__ = "0.1.0"
