"""Upper-orthant probability of a standard bivariate normal.

    L(b1, b2; rho) = P(X1 > b1, X2 > b2),  corr(X1, X2) = rho

Two evaluation paths are kept deliberately independent so that each can act
as an oracle for the other:

* ``upper_tail_single_integral`` conditions on X2 and integrates
  Q((b1 - rho*x) / sqrt(1 - rho^2)) * pdf(x) over x > b2 with an adaptive
  Gauss-Kronrod (7/15) rule.
* ``upper_tail_second_method`` integrates the bivariate density over the
  correlation coefficient with fixed-order Gauss-Legendre rules (the
  Drezner-Wesolowsky / Genz scheme), returning the upper orthant directly.

``upper_tail`` is the dispatcher used by the rest of the package.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DomainError
from .gaussian import _finite, pdf_array, q_array, q_function

__all__ = [
    "Method",
    "OrthantProbability",
    "upper_tail",
    "upper_tail_single_integral",
    "upper_tail_second_method",
    "upper_tail_degenerate",
]

# correlations this close to +-1 are treated as exactly degenerate
DEGENERATE_SNAP = 1e-10
UNDERFLOW = 1e-300


class Method(str, enum.Enum):
    SINGLE_INTEGRAL = "single_integral"
    SECOND_METHOD = "second_method"
    CLOSED_FORM_DEGENERATE = "closed_form_degenerate"


@dataclass(frozen=True)
class OrthantProbability:
    value: float
    method: Method
    abs_error_bound: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise AssertionError(f"orthant probability {self.value!r} outside [0, 1]")
        if not self.abs_error_bound >= 0.0:
            raise AssertionError(f"negative error bound {self.abs_error_bound!r}")

    def __float__(self) -> float:
        return self.value


def _check_rho(rho_h: float) -> float:
    rho_h = _finite(rho_h, "rho_h")
    if not -1.0 <= rho_h <= 1.0:
        raise DomainError(f"rho_h must lie in [-1, 1], got {rho_h!r}")
    return rho_h


def _result(value: float, method: Method, err: float) -> OrthantProbability:
    if value < UNDERFLOW:
        return OrthantProbability(0.0, method, max(err, value, 0.0) + UNDERFLOW)
    return OrthantProbability(value, method, err)


# ---------------------------------------------------------------------------
# Path A: conditional single integral, adaptive Gauss-Kronrod
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
# full 15-point abscissae on [-1, 1]; Gauss nodes are the odd-indexed Kronrod nodes
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])

_REL_TOL = 1e-13
_ABS_TOL_FLOOR = 1e-302
_MAX_LEVELS = 60
_MAX_INTERVALS = 4096
_ENVELOPE_CUTOFF = 1e-20
_PDF_UNDERFLOW_X = 39.0


def _gk_adaptive(f, a: float, b: float, abs_tol: float) -> tuple[float, float]:
    """Integrate f over [a, b] by batch-vectorised adaptive G7/K15 bisection.

    An interval is accepted once |K15 - G7| falls below its share of
    ``abs_tol`` (proportional to its width).  Refinement stops after
    _MAX_LEVELS bisections or once _MAX_INTERVALS are pending.  Returns
    (integral, error sum).
    """
    total = 0.0
    err = 0.0
    lo = np.array([a])
    hi = np.array([b])
    width = b - a
    for _ in range(_MAX_LEVELS):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        x = mid[:, None] + half[:, None] * _NODES[None, :]
        fx = f(x)
        k = half * (fx @ _KW)
        g = half * (fx @ _GW)
        e = np.abs(k - g)
        done = e <= abs_tol * (2.0 * half) / width
        total += float(k[done].sum())
        err += float(e[done].sum())
        if done.all():
            return total, err
        if 2 * int((~done).sum()) > _MAX_INTERVALS:
            break
        lo_r, hi_r, mid_r = lo[~done], hi[~done], mid[~done]
        lo = np.concatenate([lo_r, mid_r])
        hi = np.concatenate([mid_r, hi_r])
    # level cap reached: keep the last Kronrod estimates of the open intervals
    total += float(k[~done].sum())
    err += float(e[~done].sum())
    return total, err


def _conditional_integral(b1: float, b2: float, rho_h: float, s: float) -> tuple[float, float]:
    """Integral of Q((b1 - rho*x)/s) * pdf(x) over x > b2, with b1 <= b2."""

    def integrand(t):
        x = b2 + t
        return q_array((b1 - rho_h * x) / s) * pdf_array(x)

    def tail_bound(t: float) -> float:
        # Q-factor is monotone in x: bounded by 1 when rho >= 0,
        # by its value at the panel edge when rho < 0
        x = b2 + t
        bound = q_function(x)
        if rho_h < 0.0:
            bound *= q_function((b1 - rho_h * x) / s)
        return bound

    # decay scale of exp(-b2*t - t^2/2)
    h = 1.0 / (1.0 + max(b2, 0.0))
    t0 = 0.0
    t1 = h
    total = 0.0
    err = 0.0
    while True:
        coarse, _ = _gk_adaptive(integrand, t0, t1, math.inf)
        tol = _REL_TOL * (abs(total) + abs(coarse))
        part, part_err = _gk_adaptive(integrand, t0, t1, max(tol, _ABS_TOL_FLOOR))
        total += part
        err += part_err
        bound = tail_bound(t1)
        if bound <= _ENVELOPE_CUTOFF * total or b2 + t1 >= _PDF_UNDERFLOW_X:
            err += bound
            break
        t0, t1 = t1, t1 + 2.0 * (t1 - t0)
    return total, err


def upper_tail_single_integral(b1: float, b2: float, rho_h: float) -> OrthantProbability:
    """P(X1 > b1, X2 > b2) as a one-dimensional integral over X2.

    Integrates ``Q((b1 - rho*x)/s) * pdf(x)`` with ``s = sqrt(1 - rho^2)``
    on x = b2 + t, t >= 0.  The t-axis is swept in doubling panels; the sweep
    stops once an upper bound on the mass beyond the current panel drops
    below 1e-20 of the running total.  When a negative threshold makes L
    nearly constant, a complementary orthant is integrated instead.
    """
    b1 = _finite(b1, "b1")
    b2 = _finite(b2, "b2")
    rho_h = _check_rho(rho_h)
    if abs(rho_h) == 1.0:
        raise DegenerateInputError(
            "rho_h = +-1 makes the conditional integral singular; "
            "use upper_tail_degenerate"
        )
    s = math.sqrt((1.0 - rho_h) * (1.0 + rho_h))
    # L is symmetric in (b1, b2); conditioning on the variable with the
    # higher threshold keeps the integration range on the rare side
    if b1 > b2:
        b1, b2 = b2, b1
    # Where L sits close to a constant, integrate the small complementary
    # piece instead: a fixed offset plus a monotone term keeps the rounded
    # result monotone in rho.  The choice depends on the thresholds only.
    if b2 < 0.0:
        # L(b1, b2) = Q(b1) - Q(-b2) + L(-b2, -b1)
        inner, err = _conditional_integral(-b2, -b1, rho_h, s)
        offset = q_function(b1) - q_function(-b2)
        total = offset + inner
        err += 2.0 * math.ulp(max(total, offset))
    elif b1 < 0.0 and q_function(-b1) <= 0.5 * q_function(b2):
        # L(b1, b2, rho) = Q(b2) - L(-b1, b2, -rho); the subtrahend is at
        # most half of Q(b2), so at most one bit is lost to cancellation
        inner, err = _conditional_integral(min(-b1, b2), max(-b1, b2), -rho_h, s)
        offset = q_function(b2)
        total = offset - inner
        err += 2.0 * math.ulp(offset)
    else:
        total, err = _conditional_integral(b1, b2, rho_h, s)
    return _result(min(total, 1.0), Method.SINGLE_INTEGRAL, err)


# ---------------------------------------------------------------------------
# Path B: Gauss-Legendre integration over the correlation (Genz, 2004)
# ---------------------------------------------------------------------------

def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


_GL = {n: _legendre(n) for n in (6, 12, 20)}


def _gl_order(r: float) -> int:
    if abs(r) < 0.3:
        return 6
    if abs(r) < 0.75:
        return 12
    return 20


def upper_tail_second_method(b1: float, b2: float, rho_h: float) -> OrthantProbability:
    """P(X1 > b1, X2 > b2) by Gauss-Legendre integration over the correlation.

    For |rho| < 0.925 uses Plackett's identity

        L(rho) = Q(b1) Q(b2) + 1/(2 pi) * int_0^asin(rho) exp(...) dtheta,

    otherwise the asymptotic-series correction around the comonotone limit.
    The upper orthant (= Phi2(-b1, -b2; rho)) is returned directly, so small
    tails do not suffer cancellation against 1.
    """
    h = _finite(b1, "b1")
    k = _finite(b2, "b2")
    r = _check_rho(rho_h)
    if abs(r) == 1.0:
        raise DegenerateInputError(
            "rho_h = +-1 has no density; use upper_tail_degenerate"
        )
    x, w = _GL[_gl_order(r)]
    hk = h * k
    if abs(r) < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = math.asin(r)
        sn = np.sin(0.5 * asr * (x + 1.0))
        terms = np.exp((sn * hk - hs) / (1.0 - sn * sn))
        bvn = float(w @ terms) * asr / (4.0 * math.pi) + q_function(h) * q_function(k)
    else:
        if r < 0.0:
            k = -k
            hk = -hk
        one_minus_r2 = (1.0 - r) * (1.0 + r)
        a = math.sqrt(one_minus_r2)
        bs = (h - k) ** 2
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 16.0
        bvn = 0.0
        asr = -0.5 * (bs / one_minus_r2 + hk)
        if asr > -100.0:
            bvn = a * math.exp(asr) * (
                1.0 - c * (bs - one_minus_r2) * (1.0 - d * bs / 5.0) / 3.0
                + c * d * one_minus_r2 * one_minus_r2 / 5.0
            )
        if -hk < 100.0:
            b = math.sqrt(bs)
            bvn -= (
                math.exp(-0.5 * hk) * math.sqrt(2.0 * math.pi) * q_function(b / a)
                * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0)
            )
        a *= 0.5
        xs = (a * (x + 1.0)) ** 2
        rs = np.sqrt(1.0 - xs)
        asr_v = -0.5 * (bs / xs + hk)
        keep = asr_v > -100.0
        terms = np.zeros_like(xs)
        xs_k, rs_k = xs[keep], rs[keep]
        terms[keep] = np.exp(asr_v[keep]) * (
            np.exp(-hk * (1.0 - rs_k) / (2.0 * (1.0 + rs_k))) / rs_k
            - (1.0 + c * xs_k * (1.0 + d * xs_k))
        )
        bvn += a * float(w @ terms)
        bvn = -bvn / (2.0 * math.pi)
        if r > 0.0:
            bvn += q_function(max(h, k))
        elif h >= k:
            bvn = -bvn
        else:
            # P(h < X < -k_original) written without cancellation against 1
            if h < 0.0:
                span = q_function(-k) - q_function(-h)
            else:
                span = q_function(h) - q_function(k)
            bvn = span - bvn
    bvn = min(max(bvn, 0.0), 1.0)
    return _result(bvn, Method.SECOND_METHOD, 1e-15)


# ---------------------------------------------------------------------------
# Degenerate correlations and dispatcher
# ---------------------------------------------------------------------------

def upper_tail_degenerate(b1: float, b2: float, rho_h: float) -> OrthantProbability:
    """Closed form at rho_h = +1 (X2 = X1) and rho_h = -1 (X2 = -X1)."""
    b1 = _finite(b1, "b1")
    b2 = _finite(b2, "b2")
    rho_h = _finite(rho_h, "rho_h")
    if abs(rho_h) != 1.0:
        raise DomainError(f"closed form needs |rho_h| = 1, got {rho_h!r}")
    if rho_h > 0.0:
        value = q_function(max(b1, b2))
    else:
        # P(b1 < X < -b2) = Q(b1) - Q(-b2)
        value = max(0.0, q_function(b1) - q_function(-b2))
    return OrthantProbability(value, Method.CLOSED_FORM_DEGENERATE, 0.0)


def upper_tail(b1: float, b2: float, rho_h: float) -> OrthantProbability:
    """P(X1 > b1, X2 > b2) for standard normals with correlation rho_h.

    Correlations within 1e-10 of +-1 use the degenerate closed form; all
    others use the conditional single integral.
    """
    b1 = _finite(b1, "b1")
    b2 = _finite(b2, "b2")
    rho_h = _check_rho(rho_h)
    if abs(rho_h) > 1.0 - DEGENERATE_SNAP:
        res = upper_tail_degenerate(b1, b2, math.copysign(1.0, rho_h))
    else:
        res = upper_tail_single_integral(b1, b2, rho_h)
    e1, e2 = q_function(b1), q_function(b2)
    slack = 1e-12 * max(res.value, 1e-300) + res.abs_error_bound
    assert max(0.0, e1 + e2 - 1.0) - slack <= res.value <= min(e1, e2) + slack, (
        f"orthant probability {res.value!r} violates Frechet bounds "
        f"for b=({b1}, {b2}), rho_h={rho_h}"
    )
    # the exact value lies inside the bounds, so projecting onto them only
    # removes rounding where a bound is attained
    clipped = min(max(res.value, e1 + e2 - 1.0, 0.0), e1, e2)
    if clipped != res.value:
        res = OrthantProbability(clipped, res.method, res.abs_error_bound)
    return res
