"""Failure-event correlation of two shadowed radio links.

Maps the cross-correlation of log-normal shadowing between the two links of a
dual-connectivity device to the correlation of their packet-failure events,
inverts that mapping, and checks it by Monte Carlo simulation.
"""

__version__ = "0.1.0"

from .bivariate import (
    OrthantProbability,
    upper_tail,
    upper_tail_degenerate,
    upper_tail_second_method,
    upper_tail_single_integral,
)
from .errors import (
    AttainableRangeError,
    ConfigError,
    DegenerateInputError,
    DegenerateScenarioError,
    DomainError,
    InsufficientEventsError,
    ShadowCorrError,
)
from .gaussian import normal_pdf, q_function, q_inverse
from .mapping import (
    CorrelationResult,
    DualLinkScenario,
    LinkBudget,
    LinkReliability,
    dual_failure_probability,
    event_correlation,
    indicator_sigma,
    invert_correlation,
    link_reliability,
    max_event_correlation,
    normalized_margin,
    table_one,
)
from .montecarlo import (
    McEstimate,
    McMethod,
    SimConfig,
    estimate_event_correlation,
    estimate_joint_failure,
    sample_pair,
)
