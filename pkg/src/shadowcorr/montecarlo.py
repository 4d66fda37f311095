"""Monte Carlo oracle for joint link failure and failure-event correlation.

Standardized shadowing pairs are drawn as

    x1 = z1,  x2 = rho_h * z1 + sqrt(1 - rho_h^2) * z2,

and link i fails when x_i > beta_i.

Reproducibility: sample index i belongs to chunk i // CHUNK_SIZE and every
chunk has its own Philox stream keyed by (seed, chunk index).  The sample
sequence therefore depends only on (seed, n_samples); batches are index
ranges laid over it and only feed the standard error, and chunks can be
generated on any number of threads without changing a single bit of the
result.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InsufficientEventsError
from .gaussian import _finite

__all__ = [
    "McMethod",
    "SimConfig",
    "McEstimate",
    "ShadowingSamplePair",
    "FailureCounts",
    "CHUNK_SIZE",
    "chunk_rng",
    "sample_pair",
    "sample_pairs",
    "failure_counts",
    "estimate_joint_failure",
    "estimate_event_correlation",
]

CHUNK_SIZE = 1 << 16
_SEED_LIMIT = 1 << 64


class McMethod(str, enum.Enum):
    PLAIN = "plain"
    IMPORTANCE = "importance"


@dataclass(frozen=True)
class SimConfig:
    n_samples: int
    seed: int = 0
    method: McMethod = McMethod.PLAIN
    batch_count: int = 64
    # threads used to generate chunks; never changes the result
    workers: int = 1

    def __post_init__(self):
        for name in ("n_samples", "seed", "batch_count", "workers"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples}")
        if not 0 <= self.seed < _SEED_LIMIT:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 1 <= self.batch_count <= self.n_samples:
            raise ConfigError(
                f"batch_count must lie in [1, n_samples={self.n_samples}], got {self.batch_count}"
            )
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        try:
            object.__setattr__(self, "method", McMethod(self.method))
        except ValueError as exc:
            raise ConfigError(f"unknown method {self.method!r}") from exc


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    std_error: float
    n_samples: int
    method: McMethod


@dataclass(frozen=True)
class ShadowingSamplePair:
    x1: float
    x2: float


@dataclass(frozen=True)
class FailureCounts:
    """Failure tallies of a plain simulation run."""

    n_samples: int
    link1: int
    link2: int
    both: int


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Independent counter-based stream for one chunk of samples."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,)))
    )


def _check_rho(rho_h: float) -> float:
    rho_h = _finite(rho_h, "rho_h")
    if not -1.0 <= rho_h <= 1.0:
        raise ConfigError(f"rho_h must lie in [-1, 1], got {rho_h!r}")
    return rho_h


def _correlate(z1, z2, rho_h: float):
    # (1 - r)(1 + r) avoids cancellation near |r| = 1 and is exactly 0 at r = +-1
    return z1, rho_h * z1 + math.sqrt((1.0 - rho_h) * (1.0 + rho_h)) * z2


def sample_pair(rho_h: float, rng: np.random.Generator) -> ShadowingSamplePair:
    """One standardized shadowing pair with correlation rho_h."""
    rho_h = _check_rho(rho_h)
    z1, z2 = rng.standard_normal(2)
    x1, x2 = _correlate(float(z1), float(z2), rho_h)
    return ShadowingSamplePair(x1, x2)


def sample_pairs(rho_h: float, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``sample_pair``: arrays x1, x2 of length n."""
    rho_h = _check_rho(rho_h)
    z = rng.standard_normal((n, 2))
    return _correlate(z[:, 0], z[:, 1], rho_h)


# ---------------------------------------------------------------------------
# chunked driver
# ---------------------------------------------------------------------------

def _batch_edges(n: int, batches: int) -> np.ndarray:
    return (np.arange(batches + 1, dtype=np.int64) * n) // batches


def _run_chunks(config: SimConfig, rho_h: float, stats_fn):
    """Evaluate ``stats_fn(x1, x2) -> (k, m) array`` chunk by chunk.

    Returns (totals, batch_sums, moments): per-statistic totals summed in
    chunk order, per-batch sums of shape (batch_count, k), and the
    (count, mean, M2) of the first statistic within each chunk.
    """
    n = config.n_samples
    n_chunks = -(-n // CHUNK_SIZE)
    edges = _batch_edges(n, config.batch_count)

    def work(chunk: int):
        start = chunk * CHUNK_SIZE
        m = min(CHUNK_SIZE, n - start)
        x1, x2 = sample_pairs(rho_h, m, chunk_rng(config.seed, chunk))
        stats = np.atleast_2d(stats_fn(x1, x2))
        batch_id = np.searchsorted(edges, np.arange(start, start + m), side="right") - 1
        per_batch = np.stack(
            [np.bincount(batch_id, weights=row, minlength=config.batch_count) for row in stats],
            axis=1,
        )
        mu = float(stats[0].mean())
        moments = (m, mu, float(((stats[0] - mu) ** 2).sum()))
        return stats.sum(axis=1), per_batch, moments

    if config.workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(work, range(n_chunks)))
    else:
        results = [work(c) for c in range(n_chunks)]
    # aggregation happens in chunk order regardless of scheduling
    totals = results[0][0].copy()
    batch_sums = results[0][1].copy()
    for chunk_totals, per_batch, _ in results[1:]:
        totals += chunk_totals
        batch_sums += per_batch
    return totals, batch_sums, [r[2] for r in results]


def _failure_stats(b1: float, b2: float):
    def fn(x1, x2):
        f1 = x1 > b1
        f2 = x2 > b2
        return np.stack([f1, f2, f1 & f2]).astype(np.float64)
    return fn


def failure_counts(b1: float, b2: float, rho_h: float, config: SimConfig) -> FailureCounts:
    """Plain-sampling tallies of single and joint link failures."""
    b1, b2 = _finite(b1, "b1"), _finite(b2, "b2")
    rho_h = _check_rho(rho_h)
    totals, _, _ = _run_chunks(config, rho_h, _failure_stats(b1, b2))
    n1, n2, n12 = (int(t) for t in totals)
    return FailureCounts(config.n_samples, n1, n2, n12)


# ---------------------------------------------------------------------------
# joint failure probability
# ---------------------------------------------------------------------------

def _importance_shift(b1: float, b2: float, rho_h: float):
    """Mean shift and log-likelihood-ratio callable for the tilted sampler."""
    if abs(rho_h) == 1.0:
        # singular covariance: tilt the common driver z1 only
        if rho_h > 0.0:
            m = max(b1, b2)
        else:
            # event is b1 < x1 < -b2; shift to its point nearest the origin
            m = min(max(0.0, b1), -b2) if b1 < -b2 else b1
        def log_lr(y1, y2):
            return -m * y1 + 0.5 * m * m
        return (m, rho_h * m), log_lr

    det = (1.0 - rho_h) * (1.0 + rho_h)
    # a = Sigma^{-1} mu
    a1 = (b1 - rho_h * b2) / det
    a2 = (b2 - rho_h * b1) / det
    half_quad = 0.5 * (a1 * b1 + a2 * b2)

    def log_lr(y1, y2):
        return -(a1 * y1 + a2 * y2) + half_quad
    return (b1, b2), log_lr


def _merge_moments(parts):
    """Chan's pairwise combination of (count, mean, M2), applied in order."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        if nb == 0:
            continue
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def estimate_joint_failure(b1: float, b2: float, rho_h: float, config: SimConfig) -> McEstimate:
    """Estimate P(x1 > b1, x2 > b2).

    ``plain``: hit fraction with binomial standard error.
    ``importance``: samples drawn with mean shifted to (b1, b2) and the same
    covariance, each hit weighted by the exact density ratio (computed in log
    space); standard error from the sample variance of the weighted hits.
    """
    b1, b2 = _finite(b1, "b1"), _finite(b2, "b2")
    rho_h = _check_rho(rho_h)
    n = config.n_samples

    if config.method is McMethod.PLAIN:
        totals, _, _ = _run_chunks(config, rho_h, _failure_stats(b1, b2))
        p = totals[2] / n
        return McEstimate(p, math.sqrt(p * (1.0 - p) / n), n, config.method)

    (m1, m2), log_lr = _importance_shift(b1, b2, rho_h)

    def weighted_hits(x1, x2):
        y1 = x1 + m1
        y2 = x2 + m2
        hit = (y1 > b1) & (y2 > b2)
        w = np.zeros_like(y1)
        w[hit] = np.exp(log_lr(y1[hit], y2[hit]))
        return w

    _, _, chunk_moments = _run_chunks(config, rho_h, weighted_hits)
    count, mean, m2sum = _merge_moments(chunk_moments)
    var = m2sum / (count - 1) if count > 1 else 0.0
    return McEstimate(mean, math.sqrt(var / count), count, config.method)


# ---------------------------------------------------------------------------
# event correlation
# ---------------------------------------------------------------------------

def _pearson(n: float, s1: float, s2: float, s12: float):
    p1, p2, p12 = s1 / n, s2 / n, s12 / n
    v1 = p1 - p1 * p1
    v2 = p2 - p2 * p2
    if v1 <= 0.0 or v2 <= 0.0:
        return None
    cov = p12 - p1 * p2
    return cov / math.sqrt(v1 * v2)


def estimate_event_correlation(b1: float, b2: float, rho_h: float, config: SimConfig) -> McEstimate:
    """Sample Pearson correlation of the two failure indicators.

    The standard error is computed by batch means over ``config.batch_count``
    contiguous batches (at least 2).  Raises InsufficientEventsError if
    either indicator is constant over the whole run or within any batch.
    """
    if config.method is not McMethod.PLAIN:
        raise ConfigError("event correlation is only estimated with plain sampling")
    if config.batch_count < 2:
        raise ConfigError("batch-means standard error needs batch_count >= 2")
    b1, b2 = _finite(b1, "b1"), _finite(b2, "b2")
    rho_h = _check_rho(rho_h)
    n = config.n_samples

    totals, batch_sums, _ = _run_chunks(config, rho_h, _failure_stats(b1, b2))
    n1, n2, n12 = (int(t) for t in totals)
    rho = _pearson(n, n1, n2, n12)
    if rho is None:
        raise InsufficientEventsError(
            "a failure indicator is constant over the run", n1, n2, n
        )

    edges = _batch_edges(n, config.batch_count)
    sizes = np.diff(edges)
    batch_rhos = []
    for size, (c1, c2, c12) in zip(sizes, batch_sums):
        r = _pearson(float(size), c1, c2, c12)
        if r is None:
            raise InsufficientEventsError(
                f"a failure indicator is constant within a batch of {int(size)} samples; "
                "increase n_samples or reduce batch_count",
                n1, n2, n,
            )
        batch_rhos.append(r)
    se = float(np.std(batch_rhos, ddof=1)) / math.sqrt(len(batch_rhos))
    return McEstimate(rho, se, n, config.method)
