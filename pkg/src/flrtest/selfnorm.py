"""Self-normalized tests: the normalizer, the pivot's quantiles, decisions.

The sequential distance path x -> D[x] is turned into a scale-free test
statistic by dividing by a normalizer built from the path itself,

    V = { sum_x nu(x) * x^4 * (D[x] - D[1])^2 }^(1/2),

where nu is a probability measure on prefix fractions. At the null
boundary the ratio (D[1] - Delta) / V converges to the pivot

    W = B(1) / { integral x^2 (B(x) - x B(1))^2 dnu(x) }^(1/2)

with B a standard Brownian motion, free of every nuisance parameter, so
its quantiles are obtained once by Monte Carlo and shared by the location,
prediction, change-point, and two-sample tests alike.

A note on scaling: some presentations carry a factor sqrt(N) on the
numerator and compensate inside the normalizer. The ratio implemented
here is the unique arrangement that is asymptotically pivotal as written;
both numerator and denominator are O(1/sqrt(N)) and the rates cancel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DegenerateNormalizerError
from .regression import Dataset, distance_path
from .space import KernelOp

__all__ = [
    "NuMeasure",
    "QuantileTable",
    "TestResult",
    "default_nu",
    "normalizer",
    "w_quantile",
    "test_location",
    "test_prediction",
    "DEFAULT_ALPHAS",
]

DEFAULT_ALPHAS = (0.5, 0.1, 0.05, 0.01)


@dataclass(frozen=True, eq=False)
class NuMeasure:
    """A probability measure on prefix fractions strictly inside (0, 1)."""

    support: tuple
    weights: tuple

    def __post_init__(self):
        support = tuple(float(v) for v in self.support)
        weights = tuple(float(v) for v in self.weights)
        if len(support) == 0 or len(support) != len(weights):
            raise ConfigError("nu needs equal-length nonempty support and weights")
        if any(not 0.0 < v < 1.0 for v in support):
            raise ConfigError("nu support must lie strictly inside (0, 1)")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise ConfigError("nu support must be strictly increasing")
        if any(w <= 0 for w in weights):
            raise ConfigError("nu weights must be positive")
        total = sum(weights)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"nu weights sum to {total}, expected 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", tuple(w / total for w in weights))

    def matches(self, other: "NuMeasure") -> bool:
        return self.support == other.support and self.weights == other.weights


def default_nu() -> NuMeasure:
    """Uniform measure on {1/5, 2/5, 3/5, 4/5}."""
    return NuMeasure((0.2, 0.4, 0.6, 0.8), (0.25, 0.25, 0.25, 0.25))


@dataclass(frozen=True, eq=False)
class QuantileTable:
    """Simulated quantiles of the pivot W for one nu measure.

    ``alphas`` maps a test level alpha to the (1 - alpha) empirical
    quantile of W. The simulation settings (replications, Brownian steps,
    seed) are carried along so a table is reproducible from its header.
    """

    nu: NuMeasure
    alphas: Mapping[float, float]
    replications: int
    steps: int
    seed: int
    degenerate: int = 0

    def __post_init__(self):
        pairs = sorted((float(a), float(q)) for a, q in dict(self.alphas).items())
        if not pairs:
            raise ConfigError("quantile table without levels")
        # quantiles must be non-decreasing in the level 1 - alpha
        qs = [q for _, q in reversed(pairs)]
        if any(b < a for a, b in zip(qs, qs[1:])):
            raise ConfigError("quantiles not monotone in the level")
        object.__setattr__(self, "alphas", MappingProxyType(dict(pairs)))

    def quantile(self, alpha: float) -> float:
        try:
            return self.alphas[float(alpha)]
        except KeyError:
            raise ConfigError(
                f"alpha={alpha} not in table (have {sorted(self.alphas)})"
            ) from None


def normalizer(path: Mapping[float, float], nu: NuMeasure) -> float:
    """Self-normalizer of a sequential path: weighted x^4 spread around D[1]."""
    if 1.0 not in path:
        raise ConfigError("path must contain x = 1")
    d1 = path[1.0]
    total = 0.0
    for x, weight in zip(nu.support, nu.weights):
        if x not in path:
            raise ConfigError(f"path missing nu support point x={x}")
        total += weight * x**4 * (path[x] - d1) ** 2
    return float(np.sqrt(total))


def _type1_quantile(sorted_vals: np.ndarray, level: float) -> float:
    n = len(sorted_vals)
    idx = int(np.ceil(level * n)) - 1
    return float(sorted_vals[min(max(idx, 0), n - 1)])


def w_quantile(
    nu: NuMeasure,
    alphas: float | Sequence[float] = DEFAULT_ALPHAS,
    replications: int = 100_000,
    steps: int = 1000,
    seed: int = 0,
) -> QuantileTable:
    """Monte Carlo quantiles of the pivot W.

    Simulates Brownian paths on {1/steps, ..., 1} from iid Gaussian
    increments of variance 1/steps and forms W per path. Every nu support
    point must land exactly on the step grid. Paths with a numerically
    zero denominator (below 1e-300, a probability-zero event) are redrawn
    and counted in the table's ``degenerate`` field.
    """
    if np.isscalar(alphas):
        alphas = (float(alphas),)
    alphas = tuple(float(a) for a in alphas)
    if any(not 0.0 < a < 1.0 for a in alphas):
        raise ConfigError("alphas must lie in (0, 1)")
    if replications < 10_000:
        raise ConfigError("need at least 10^4 replications for stable quantiles")
    if steps < 500:
        raise ConfigError("need at least 500 Brownian steps")
    idx = []
    for x in nu.support:
        pos = x * steps
        if abs(pos - round(pos)) > 1e-9:
            raise ConfigError(f"nu support point {x} not on the 1/{steps} grid")
        idx.append(int(round(pos)) - 1)
    idx = np.array(idx)
    xs = np.array(nu.support)
    nw = np.array(nu.weights)

    rng = np.random.default_rng(seed)
    scale = np.sqrt(1.0 / steps)
    out = np.empty(replications)
    degenerate = 0
    batch = min(20_000, replications)
    done = 0
    while done < replications:
        b = min(batch, replications - done)
        paths = np.cumsum(rng.standard_normal((b, steps)) * scale, axis=1)
        b1 = paths[:, -1]
        bx = paths[:, idx]
        den2 = ((bx - xs[None, :] * b1[:, None]) ** 2 * (xs**2) * nw).sum(axis=1)
        den = np.sqrt(den2)
        bad = den < 1e-300
        while np.any(bad):
            degenerate += int(bad.sum())
            nb = int(bad.sum())
            repl = np.cumsum(rng.standard_normal((nb, steps)) * scale, axis=1)
            b1[bad] = repl[:, -1]
            bx[bad] = repl[:, idx]
            den2 = ((bx - xs[None, :] * b1[:, None]) ** 2 * (xs**2) * nw).sum(axis=1)
            den = np.sqrt(den2)
            bad = den < 1e-300
        out[done : done + b] = b1 / den
        done += b
    out.sort()
    table = {a: _type1_quantile(out, 1.0 - a) for a in alphas}
    return QuantileTable(nu, table, replications, steps, seed, degenerate)


@dataclass(frozen=True, eq=False)
class TestResult:
    """Outcome of one self-normalized test."""

    statistic: float
    normalizer: float
    quantile: float
    reject: bool
    path: Mapping[float, float]
    delta: float
    alpha: float
    k: int
    theta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "path", MappingProxyType(dict(self.path)))
        object.__setattr__(self, "reject", bool(self.statistic > self.quantile))


def _decide(
    path: Mapping[float, float],
    delta: float,
    k: int,
    nu: NuMeasure,
    alpha: float,
    q: QuantileTable,
    theta: float | None = None,
) -> TestResult:
    if delta < 0:
        raise ConfigError("delta must be >= 0")
    if not nu.matches(q.nu):
        raise ConfigError("quantile table simulated under a different nu measure")
    quant = q.quantile(alpha)
    v = normalizer(path, nu)
    if v == 0.0:
        raise DegenerateNormalizerError(
            "sequential path is constant; the self-normalizer vanishes"
        )
    stat = (path[1.0] - delta) / v
    return TestResult(stat, v, quant, stat > quant, path, delta, alpha, k, theta)


def test_location(
    D: Dataset,
    S0: KernelOp,
    delta: float,
    k: int,
    nu: NuMeasure,
    alpha: float,
    q: QuantileTable,
    center: bool = True,
) -> TestResult:
    """Test of the relevant hypothesis ||| S - S0 |||^2 <= delta."""
    path = distance_path(D, S0, nu.support, k, pred=False, center=center)
    return _decide(path, delta, k, nu, alpha, q)


def test_prediction(
    D: Dataset,
    S0: KernelOp,
    delta: float,
    k: int,
    nu: NuMeasure,
    alpha: float,
    q: QuantileTable,
    center: bool = True,
) -> TestResult:
    """Test of the relevant prediction-error hypothesis E||SX - S0X||^2 <= delta."""
    path = distance_path(D, S0, nu.support, k, pred=True, center=center)
    return _decide(path, delta, k, nu, alpha, q)
