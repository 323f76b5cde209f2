"""Simulation and stability analysis of regime-switching discrete-time systems."""

__version__ = "0.1.0"

from .analysis import (
    FixedPointResult,
    LocalLinearization,
    Spectrum,
    common_fixed_point,
    eigenvalues,
    fixed_point,
    growth_factor,
    linearize,
    word_product,
)
from .core import RegimeSystem, SwitchingSignal, Trajectory, compose, simulate, step
from .errors import (
    DimensionError,
    EmptyWordError,
    ExpressionSyntaxError,
    NoUniqueFixedPoint,
    NumericalError,
    SamplingError,
    ScenarioError,
    SignalExhausted,
    VariableIndexError,
)
from .expression import parse_expression
from .jsr import JsrBounds, StabilityVerdict, jsr_bounds, jsr_lower, jsr_upper, stability_verdict
from .operators import AffineOperator, CollateralOperator, ComposedOperator, ExpressionMap, apply, jacobian
from .structure import (
    SamplingPlan,
    commutation_witness,
    invariant_law_verdict,
    irreducibility_check,
    matrix_commutator_norm,
    topology_report,
)
