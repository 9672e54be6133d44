"""One-dimensional analysis of the fiber polynomial."""

from .blaschke import Blaschke, BlaschkeReport, blaschke_measure_check, measure_ratio
from .conditions import (
    AwayFit, CEReport, DPUResult, LyapunovResult, PrzytyckiResult, WRProfileEntry, ce_report,
    crit_prime, dpu_sum, fiber_orbit, hyperbolic_away, hyperbolic_away_batch, lyapunov_at_value,
    przytycki_fit, przytycki_stat, sr_alpha_from_wr, sr_check, wr_profile, wr_sum, wr_terms,
)
from .fatou import (
    Cycle, KmResult, TrappingRegion, attracting_cycles, build_trap, check_trap, classify_crit,
    km_measure,
)
from .julia import (
    BoxDimension, DistanceBracket, JuliaSampler, box_dimension, green, green_distance,
    julia_sample, preimages,
)
from .roots import CriticalSet, critical_points, poly_roots, roots_with_multiplicity
from .shrink import ShrinkResult, ThetaFit, exp_shrink_estimate, theta_fit
