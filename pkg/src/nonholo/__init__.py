"""Differential geometry of Pfaff equations ``P dx + Q dy + R dz = 0``.

Exact symbolic core (``nonholo.symcore``), field operators, the induced affine
connection and its curvature, the 6D Riemann extension, ODE integration and a
command-line front end.
"""
from .extension import ExtendedMetric6, build_extension, integrate_transport, invariant_E, psi_system_matrices
from .field import (
    PlanarPolySystem,
    VectorField3,
    catalog,
    curl,
    euler_contraction,
    exactness_residuals,
    holonomicity,
    is_closed,
    load_system,
    projective_extension,
    tangent_plane,
)
from .geometry import (
    Connection3,
    asymptotic_form,
    build_connection,
    chern_simons_density,
    curvature_line_form,
    curvature_tensor,
    geodesic_rhs,
    ricci,
)
from .integrators import IntegratorConfig, Trajectory, integrate
from .ode import (
    asymptotic_directions,
    integrate_asymptotic,
    integrate_extended,
    integrate_flow,
    integrate_geodesic,
)

__version__ = "0.1.0"
