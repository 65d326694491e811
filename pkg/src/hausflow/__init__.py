"""Induced Hausdorff metric flows on Lie groups.

A finite set ``X`` containing the identity turns a metric ``d`` into
``d_X(p, q) = d_H(pX, qX)``; the flow replaces ``d`` by the intrinsic metric
of ``d_X`` and repeats.  This package runs the flow on grids over ``R^n``,
``T^n`` and the Heisenberg group, and measures its limit.
"""

__version__ = "0.1.0"

from .exceptions import (
    BracketGenerationError,
    CloudSizeError,
    ConfigError,
    EnvelopeInfiniteError,
    GridMismatchError,
    GroupMismatchError,
    HausflowError,
    IsotropyError,
    MonotonicityError,
    TruncationError,
    WindowError,
)
from .groups import AlgebraVector, GroupElement, bracket, exp_map, get_group, identity, inv, mul
from .window import Grid, WindowSpec, sample_window, window
from .generators import GeneratorSet, check_isotropy_trivial, invert_generators, lattice_sample
from .metrics import (
    BaseMetricSpec,
    MetricField,
    eval_base_metric,
    hausdorff_distance,
    induced_metric,
    max_translate_metric,
    metric_matrix,
)
from .flow import AdjacencySpec, FlowState, compare_fields, flow_step, intrinsicize, path_length, run_flow
from .semigroup import (
    WordCloud,
    build_generator_from_basis,
    check_bracket_generating,
    covering_radius,
    generate_words,
)
from .finsler import (
    FinslerEstimate,
    bar_metric,
    finsler_estimate,
    norm_table,
    right_invariance_defect,
    right_invariant_envelope,
    sup_equals_limsup_check,
)
from .estimators import FinslerNormEstimator, InducedHausdorffFlow
