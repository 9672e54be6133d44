"""skewlab: numerical experiments with attracting polynomial skew products."""

from .dyncore import (
    BUILTIN_MAPS, FiberPolynomial, OrbitTrace, PartialSupBound, Point2, Region, SkewMap, builtin_map,
    eval_skew, format_map, load_map,
    orbit, parse_map, sup_partials, vertical_cocycle, vertical_derivative,
)
from .errors import InputError, NumericalError, PreconditionError, SkewlabError

__version__ = "0.1.0"
