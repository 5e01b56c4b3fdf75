"""lambdalab: a numerical laboratory for lambda-surfaces.

A lambda-surface is a closed surface whose mean curvature satisfies
H = <x, n>/2 + lambda; the lambda = 0 case is the familiar self-shrinker
of mean curvature flow.  The package builds exact and discrete examples
(spheres, cylinders, shooting-produced revolution surfaces, closed planar
lambda-curves), assembles the Gaussian-weighted drift Laplacian and the
stability operator as sparse pairs, and checks the identities, spectra,
monotonicity estimates and rigidity behaviour that characterise these
surfaces at desk scale.
"""

__version__ = "0.1.0"

from .mesh import (
    TriMesh,
    ShapeSpec,
    MeshError,
    build_primitive,
    icosphere,
    torus,
    cylinder_band,
    disk,
    ball_patch,
    genus,
    read_mesh,
    write_mesh,
    sphere_radius,
    circle_radius,
)
from .curvature import CurvatureData, curvature, lambda_residual
from .gaussian import (
    WeightedOperator,
    gaussian_area,
    drift_laplacian,
    stability_operator,
    spectrum,
    quadratic_form,
)
from .shooting import (
    ShootingError,
    ShootResult,
    shoot_closed_curve,
    noncircular_search,
    shoot_revolution,
    revolve_profile,
)
from .continuation import (
    ContinuationError,
    GraphOverSphere,
    Branch,
    graph_mesh,
    graph_residual,
    newton_solve,
    continue_branch,
    linearization_check,
    rigidity_experiment,
)
from .estimates import (
    EstimateError,
    EstimateReport,
    gauss_bonnet_check,
    monotonicity_profile,
    choi_schoen_quantity,
    singularity_diagnostic,
    convex_area_growth,
    sphere_intersection_check,
    rescaled_residual,
    run_manifest,
)
from .report import (
    ReportError,
    SCHEMA_VERSION,
    build_report,
    write_report,
    report_schema_validate,
)

__all__ = [
    "TriMesh",
    "ShapeSpec",
    "MeshError",
    "build_primitive",
    "icosphere",
    "torus",
    "cylinder_band",
    "disk",
    "ball_patch",
    "genus",
    "read_mesh",
    "write_mesh",
    "sphere_radius",
    "circle_radius",
    "CurvatureData",
    "curvature",
    "lambda_residual",
    "WeightedOperator",
    "gaussian_area",
    "drift_laplacian",
    "stability_operator",
    "spectrum",
    "quadratic_form",
    "ShootingError",
    "ShootResult",
    "shoot_closed_curve",
    "noncircular_search",
    "shoot_revolution",
    "revolve_profile",
    "ContinuationError",
    "GraphOverSphere",
    "Branch",
    "graph_mesh",
    "graph_residual",
    "newton_solve",
    "continue_branch",
    "linearization_check",
    "rigidity_experiment",
    "EstimateError",
    "EstimateReport",
    "gauss_bonnet_check",
    "monotonicity_profile",
    "choi_schoen_quantity",
    "singularity_diagnostic",
    "convex_area_growth",
    "sphere_intersection_check",
    "rescaled_residual",
    "run_manifest",
    "ReportError",
    "SCHEMA_VERSION",
    "build_report",
    "write_report",
    "report_schema_validate",
]
