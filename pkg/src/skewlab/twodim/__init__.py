"""Two-dimensional estimators and the Fatou/Julia classification pipeline."""

from .classify import (
    AreaRow, ClassificationRaster, Window, classify_point, classify_raster, first_events,
    gray_level, julia_area_estimate, label_name,
)
from .estimators import (
    PhiOrbit, SlowApproach, SlowApproachBatch, VerticalDistanceField, VerticalLyapunov,
    dist_v_crit, lyapunov_batch, phi_orbit, slow_approach_batch, slow_approach_test,
    vertical_field, vertical_lyapunov,
)
from .hyptimes import (
    HypTimeRecord, ShadowConfig, expanding_horizon, pliss_bruteforce, pliss_hyperbolic_times,
    shadow_membership,
)
from .trap import Trap2D, build_trap2d
