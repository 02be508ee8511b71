"""Killing submersion models: construction, lifts, mean curvature of Killing
graphs, minimal sections, Calabi duality, cylinders and stability."""

from .errors import *  # noqa: F401,F403
from .fields import Domain2D, ScalarField2D
from .model import (
    KillingModel,
    bundle_curvature_check,
    connection_coeffs,
    frame_at,
    lie_brackets,
    metric_at,
    scalar_curvature,
    sectional_curvatures,
)
from .graphs import (
    GraphFunction,
    VectorField2D,
    area,
    area_element,
    div_jz_residual,
    generalized_gradient,
    mean_curvature,
    surface_area,
    z_field,
)
from .minimal import SolverConfig, SolveReport, solve_dirichlet, solve_minimal_torus, verify_area_minimality
from .lifts import BaseCurve, flux_inside_curve, flux_integral, holonomy_displacement, horizontal_lift
from .calabi import SpacelikeFunction, calabi_dual, dual_gradient, integrate_potential, manufactured_model
from .cylinders import (
    angle_function,
    cmc_cylinder_curve,
    cylinder_second_fundamental,
    rosenberg_threshold,
    stability_apply,
)
from .homogeneous import (
    QuotientSpec,
    exp_matrix,
    nil3_quotient_holonomy,
    semidirect_bundle_curvature,
    semidirect_tau_mu,
)

__version__ = "0.1.0"
