"""Bidisk sequences, Henon-like checks, stable graphs and renormalization scales."""

from .blocks import (
    BidiskSequence, BlockSchedule, block_schedule, horizontal_radii, radii_pl, radii_tce_wr,
    select_block_length, verify_schedule,
)
from .branch import CriticalBranch, critical_branch
from .graph import ShadowFit, StableGraph, backward_orbit, graph_transform, shadow_rate
from .henon import HenonRecord, bidisks_along, henon_check, modulus_lower_bound, select_r0, winding_number
from .renorm import (
    EscapeFraction, RenormScale, beta_from, complement_slope, default_M, escape_fraction, j_of_s,
    psi_n, renorm_scale, renorm_scales,
)
