"""Link budget -> normalized margin -> failure probability -> event correlation.

The failure indicator of link i is I_i = 1{X_i > beta_i} where X_i is the
standardized shadowing draw and beta_i the normalized fade margin.  The
failure-event correlation is the Pearson correlation of (I_1, I_2):

    rho = (P(I_1 = 1, I_2 = 1) - eps1 * eps2) / (sigma1 * sigma2),
    sigma_i = sqrt(eps_i * (1 - eps_i)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bivariate import upper_tail
from .errors import AttainableRangeError, DegenerateScenarioError, DomainError
from .gaussian import _finite, q_function, q_inverse

__all__ = [
    "LinkBudget",
    "LinkReliability",
    "DualLinkScenario",
    "CorrelationResult",
    "TABLE_ONE_EPSILON",
    "TABLE_ONE_RHO_H",
    "normalized_margin",
    "link_reliability",
    "link_reliability_from_epsilon",
    "indicator_sigma",
    "event_correlation",
    "invert_correlation",
    "dual_failure_probability",
    "max_event_correlation",
    "attainable_range",
    "table_one",
]

TABLE_ONE_EPSILON = 1e-4
TABLE_ONE_RHO_H = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 1.0)

# tolerated overshoot of |rho| beyond 1 before it is treated as a numerical failure
_RHO_SLACK = 1e-9
_RHO_H_XTOL = 2e-13


@dataclass(frozen=True)
class LinkBudget:
    """Deterministic part of one link: received power is p_t - p_l - shadowing."""

    p_t: float  # transmit power, dBm
    p_l: float  # path loss, dB
    p_th: float  # receiver threshold, dBm
    sigma_db: float  # shadowing standard deviation, dB

    def __post_init__(self):
        for name in ("p_t", "p_l", "p_th", "sigma_db"):
            _finite(getattr(self, name), name)
        if not self.sigma_db > 0.0:
            raise DomainError(f"sigma_db must be positive, got {self.sigma_db!r}")


@dataclass(frozen=True)
class LinkReliability:
    beta: float
    epsilon: float
    reliability: float


@dataclass(frozen=True)
class DualLinkScenario:
    link1: LinkReliability
    link2: LinkReliability
    rho_h: float

    def __post_init__(self):
        rho_h = _finite(self.rho_h, "rho_h")
        if not -1.0 <= rho_h <= 1.0:
            raise DomainError(f"rho_h must lie in [-1, 1], got {rho_h!r}")

    @classmethod
    def from_betas(cls, beta1: float, beta2: float, rho_h: float) -> DualLinkScenario:
        return cls(link_reliability(beta1), link_reliability(beta2), rho_h)

    @classmethod
    def from_epsilons(cls, eps1: float, eps2: float, rho_h: float) -> DualLinkScenario:
        return cls(
            link_reliability_from_epsilon(eps1),
            link_reliability_from_epsilon(eps2),
            rho_h,
        )

    @classmethod
    def from_budgets(cls, budget1: LinkBudget, budget2: LinkBudget, rho_h: float) -> DualLinkScenario:
        return cls.from_betas(normalized_margin(budget1), normalized_margin(budget2), rho_h)


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    joint_failure: float
    sigma_ind1: float
    sigma_ind2: float


def normalized_margin(budget: LinkBudget) -> float:
    """Fade margin in units of the shadowing deviation, (p_t - p_l - p_th) / sigma_db."""
    if not budget.sigma_db > 0.0:
        raise DomainError(f"sigma_db must be positive, got {budget.sigma_db!r}")
    return (budget.p_t - budget.p_l - budget.p_th) / budget.sigma_db


def link_reliability(beta: float) -> LinkReliability:
    beta = _finite(beta, "beta")
    eps = q_function(beta)
    return LinkReliability(beta=beta, epsilon=eps, reliability=1.0 - eps)


def link_reliability_from_epsilon(epsilon: float) -> LinkReliability:
    """Reliability triple for a target failure probability (beta via q_inverse)."""
    return link_reliability(q_inverse(epsilon))


def indicator_sigma(epsilon: float) -> float:
    """Standard deviation sqrt(eps (1 - eps)) of a Bernoulli(eps) indicator."""
    epsilon = _finite(epsilon, "epsilon")
    if not 0.0 <= epsilon <= 1.0:
        raise DomainError(f"epsilon must lie in [0, 1], got {epsilon!r}")
    return math.sqrt(epsilon * (1.0 - epsilon))


def _require_nondegenerate(eps1: float, eps2: float) -> None:
    for i, eps in enumerate((eps1, eps2), start=1):
        if not 0.0 < eps < 1.0:
            raise DegenerateScenarioError(
                f"link {i} failure probability is {eps!r}; the event "
                "correlation is undefined for a constant indicator"
            )


def _correlation(joint: float, eps1: float, eps2: float) -> CorrelationResult:
    s1 = indicator_sigma(eps1)
    s2 = indicator_sigma(eps2)
    if eps1 == eps2 and joint == eps1:
        # the two indicators coincide; the general formula would round
        rho = 1.0
    elif eps1 + eps2 == 1.0 and joint == 0.0:
        # complementary indicators
        rho = -1.0
    else:
        rho = (joint - eps1 * eps2) / (s1 * s2)
    if abs(rho) > 1.0 + _RHO_SLACK:
        raise ArithmeticError(
            f"event correlation {rho!r} exceeds [-1, 1] by more than {_RHO_SLACK}; "
            "joint-failure quadrature is unreliable here"
        )
    rho = min(max(rho, -1.0), 1.0)
    return CorrelationResult(rho=rho, joint_failure=joint, sigma_ind1=s1, sigma_ind2=s2)


def event_correlation(scenario: DualLinkScenario) -> CorrelationResult:
    """Pearson correlation of the two link failure indicators.

    Raises DegenerateScenarioError if either failure probability is 0 or 1.
    """
    l1, l2 = scenario.link1, scenario.link2
    _require_nondegenerate(l1.epsilon, l2.epsilon)
    joint = upper_tail(l1.beta, l2.beta, scenario.rho_h).value
    return _correlation(joint, l1.epsilon, l2.epsilon)


def dual_failure_probability(scenario: DualLinkScenario) -> float:
    """Probability that a duplicated packet fails on both links."""
    l1, l2 = scenario.link1, scenario.link2
    joint = upper_tail(l1.beta, l2.beta, scenario.rho_h).value
    if 0.0 < l1.epsilon < 1.0 and 0.0 < l2.epsilon < 1.0:
        res = _correlation(joint, l1.epsilon, l2.epsilon)
        product = l1.epsilon * l2.epsilon
        recon = product + res.rho * res.sigma_ind1 * res.sigma_ind2
        # rho carries joint - eps1*eps2, so a few ulps of eps1*eps2 are lost
        # whenever the joint failure is far below the independent product
        assert abs(recon - joint) <= 1e-12 * joint + 4.0 * math.ulp(product), (recon, joint)
    return joint


def max_event_correlation(eps1: float, eps2: float) -> float:
    """Largest attainable event correlation given the marginals (Frechet upper bound)."""
    eps1 = _finite(eps1, "eps1")
    eps2 = _finite(eps2, "eps2")
    _require_nondegenerate(eps1, eps2)
    return (min(eps1, eps2) - eps1 * eps2) / (indicator_sigma(eps1) * indicator_sigma(eps2))


def _rho_at(rho_h: float, beta1: float, beta2: float, eps1: float, eps2: float) -> float:
    return _correlation(upper_tail(beta1, beta2, rho_h).value, eps1, eps2).rho


def _resolve_pair(eps1: float, eps2: float) -> tuple[LinkReliability, LinkReliability]:
    _require_nondegenerate(eps1, eps2)
    return link_reliability_from_epsilon(eps1), link_reliability_from_epsilon(eps2)


def attainable_range(eps1: float, eps2: float) -> tuple[float, float]:
    """Event correlations produced by rho_h = -1 and rho_h = +1."""
    l1, l2 = _resolve_pair(eps1, eps2)
    return (
        _rho_at(-1.0, l1.beta, l2.beta, l1.epsilon, l2.epsilon),
        _rho_at(1.0, l1.beta, l2.beta, l1.epsilon, l2.epsilon),
    )


def invert_correlation(rho_target: float, eps1: float, eps2: float, *, max_iter: int = 200) -> float:
    """Shadowing correlation rho_h whose event correlation equals ``rho_target``.

    The forward map is strictly increasing in rho_h, so a bisection over
    [-1, 1] is used, run until the bracket is narrower than 2e-13.

    Raises AttainableRangeError when the target lies outside the attainable
    interval for the given marginals.
    """
    rho_target = _finite(rho_target, "rho_target")
    eps1 = _finite(eps1, "eps1")
    eps2 = _finite(eps2, "eps2")
    l1, l2 = _resolve_pair(eps1, eps2)
    # same (beta, eps) resolution as DualLinkScenario.from_epsilons
    b1, b2, eps1, eps2 = l1.beta, l2.beta, l1.epsilon, l2.epsilon
    rho_min = _rho_at(-1.0, b1, b2, eps1, eps2)
    rho_max = _rho_at(1.0, b1, b2, eps1, eps2)
    if not rho_min <= rho_target <= rho_max:
        raise AttainableRangeError(rho_target, rho_min, rho_max)
    if rho_target == rho_max:
        return 1.0
    if rho_target == rho_min:
        return -1.0
    if rho_target == 0.0:
        # independent shadowing is the unique zero of the strictly monotone map
        return 0.0

    lo, hi = -1.0, 1.0
    # the sign of the target fixes the half-interval
    if rho_target > 0.0:
        lo = 0.0
    else:
        hi = 0.0
    # Bisect to a bracket far narrower than the residual tolerance
    # 1e-9 * max(|rho_target|, 1e-12) requires: where the map is flat a small
    # residual does not pin rho_h down.
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= _RHO_H_XTOL or not lo < mid < hi:
            break
        f = _rho_at(mid, b1, b2, eps1, eps2) - rho_target
        if f == 0.0:
            break
        if f < 0.0:
            lo = mid
        else:
            hi = mid
    return mid


def table_one(epsilon: float = TABLE_ONE_EPSILON, rho_h_values=TABLE_ONE_RHO_H) -> list[tuple[float, float]]:
    """(rho_h, rho) pairs for two identical links with failure probability ``epsilon``."""
    link = link_reliability_from_epsilon(epsilon)
    return [
        (rho_h, event_correlation(DualLinkScenario(link, link, rho_h)).rho)
        for rho_h in rho_h_values
    ]
