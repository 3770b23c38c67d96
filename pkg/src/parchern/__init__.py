"""Exact Chern characters of parabolic bundles over truncated Chow rings."""

from .chowring import (
    GradedClass,
    RingPresentation,
    eval_series,
    exp,
    invert,
    parse_class,
    product_projective_ring,
    projective_space_ring,
    render,
    surface_ring,
)
from .errors import ParchernError, PreconditionError, RingMismatchError, ValidationError
from .parabolic import ComponentTable, FiltrationData, SplitBundle, split_to_filtration, split_to_table
from .chernformulas import (
    chern_classes,
    deligne_ch,
    graded_gysin_ch,
    gysin_ch,
    integral_ch,
    shifted_window_ch,
    single_divisor_closed_form,
    weighted_average_ch,
)

__version__ = "0.1.0"
