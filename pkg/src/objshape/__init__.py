"""Object shape: a fourth-order measure of shape for data in metric spaces."""

__version__ = "0.1.0"

from .metrics import (  # noqa: E402
    DistanceMatrix,
    Metric,
    clr,
    distance,
    distance_matrix,
    spd_affine_distance,
    validate_metric,
)
from .peeling import (  # noqa: E402
    PeelingTrace,
    detect_outliers_by_jump,
    emit_peeling_plot,
    oracle_outliers,
    pc1_representatives,
    peel,
)
from .population import (  # noqa: E402
    CompositionalParams,
    DiscreteParams,
    EllipticalParams,
    VonMisesParams,
    compositional_shape,
    compositional_upper_bound,
    discrete_shape,
    elliptical_shape,
    elliptical_upper_bound,
    vonmises_shape,
)
from .shape import (  # noqa: E402
    DegenerateSampleError,
    ShapeEstimate,
    leave_one_out_shapes,
    object_shape,
    sample_shape,
    square_distances,
)
from .symmetry import (  # noqa: E402
    RadialMoments,
    TestResult,
    circular_uniformity_test,
    compositional_symmetry_test,
    discrete_uniformity_test,
    sphericity_test,
)
