"""Change-point localization and relevant-change tests for the slope.

The split point is estimated by a CUSUM contrast on the cross-moment
operators Y_n (x) X_n: the objective

    f(M) = (M/N)(1 - M/N) ||| prefix mean - suffix mean |||^2

is maximized over M = 2..N-1 (smallest M on ties). Given a split,
estimated or fixed ahead of time for the two-sample problem, each
segment gets its own sequential slope estimate with the segment length as
divisor, and the test statistic compares the two estimates along the
sequential path, normalized exactly as in the one-sample tests and
compared against the same pivot quantiles.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import ConfigError, SpaceMismatchError
from .regression import Dataset, SlopeFit, _fit_arrays, slope_estimate
from .selfnorm import NuMeasure, QuantileTable, TestResult, _decide
from .spectral import EigenSystem

__all__ = [
    "ChangePointFit",
    "SplitPlan",
    "cusum_theta",
    "split_slope",
    "test_cp_location",
    "test_cp_prediction",
    "concat_datasets",
]


@dataclass(frozen=True, eq=False)
class ChangePointFit:
    """CUSUM objective values and the located split."""

    theta: float
    objective: Mapping[int, float]
    split_index: int

    def __post_init__(self):
        object.__setattr__(self, "objective", MappingProxyType(dict(self.objective)))


@dataclass(frozen=True, eq=False)
class SplitPlan:
    """How to split the sample: after ``boundary`` observations.

    ``mode`` records whether the boundary was estimated from the data or
    fixed in advance (the two-sample setting).
    """

    boundary: int
    mode: str = "estimated"

    def __post_init__(self):
        if self.mode not in ("estimated", "fixed"):
            raise ConfigError(f"unknown split mode {self.mode!r}")
        if self.boundary < 2:
            raise ConfigError("segment one needs at least 2 observations")

    def check(self, n: int):
        if n - self.boundary < 2:
            raise ConfigError("segment two needs at least 2 observations")


def cusum_theta(D: Dataset) -> ChangePointFit:
    """Locate a slope change by maximizing the weighted CUSUM contrast."""
    n = D.N
    if n < 4:
        raise ConfigError("change-point search needs at least 4 observations")
    w_cod = D.codomain_space.weights
    w_dom = D.domain_space.weights
    outers = D._ymat[:, :, None] * D._xmat[:, None, :]
    pref = np.cumsum(outers, axis=0)
    total = pref[-1]
    ms = np.arange(2, n)
    diffs = pref[ms - 1] / ms[:, None, None] - (total - pref[ms - 1]) / (n - ms)[
        :, None, None
    ]
    hs2 = np.einsum("mij,mij,i,j->m", diffs, diffs, w_cod, w_dom)
    fvals = (ms / n) * (1.0 - ms / n) * hs2
    best = int(ms[np.argmax(fvals)])  # argmax takes the first max: smallest M
    objective = dict(zip(ms.tolist(), fvals.tolist()))
    return ChangePointFit(best / n, objective, best)


def _segments(D: Dataset, plan: SplitPlan) -> tuple[Dataset, Dataset]:
    plan.check(D.N)
    return D.subset(0, plan.boundary), D.subset(plan.boundary, D.N)


def split_slope(
    D: Dataset,
    plan: SplitPlan,
    x: float,
    k: int,
    segment: str,
    center: bool = True,
    reference: EigenSystem | None = None,
) -> SlopeFit:
    """Sequential slope estimate on one segment of the split sample.

    Segment one covers observations 1..boundary, segment two the rest;
    each uses its own length as divisor, so the x-prefix of a segment is
    floor(x * segment length) observations deep.
    """
    one, two = _segments(D, plan)
    if segment == "one":
        return slope_estimate(one, x, k, center, reference)
    if segment == "two":
        return slope_estimate(two, x, k, center, reference)
    raise ConfigError(f"segment must be 'one' or 'two', got {segment!r}")


def _segment_diff_kernel(seg: Dataset, x: float, k: int, pred: bool, center: bool):
    w = seg.domain_space.weights
    _, lam, E, _, C = _fit_arrays(seg, x, k, center)
    shat = C @ (w[:, None] * ((E[:k].T * (1.0 / lam[:k])) @ E[:k]))
    if pred:
        root = (E.T * np.sqrt(lam)) @ E
        shat = shat @ (w[:, None] * root)
    return shat


def _cp_path(D: Dataset, plan: SplitPlan, k: int, xs, pred: bool, center: bool):
    one, two = _segments(D, plan)
    if not one.domain_space.matches(two.domain_space):
        raise SpaceMismatchError("segments on different spaces")
    w_cod = D.codomain_space.weights
    w_dom = D.domain_space.weights
    path = {}
    for x in sorted(set(float(v) for v in xs) | {1.0}):
        k1 = _segment_diff_kernel(one, x, k, pred, center)
        k2 = _segment_diff_kernel(two, x, k, pred, center)
        diff = k1 - k2
        path[x] = float(np.einsum("ij,ij,i,j->", diff, diff, w_cod, w_dom))
    return path


def test_cp_location(
    D: Dataset,
    delta: float,
    k: int,
    nu: NuMeasure,
    alpha: float,
    q: QuantileTable,
    plan: SplitPlan | None = None,
    center: bool = True,
) -> TestResult:
    """Test of the relevant-change hypothesis ||| S1 - S2 |||^2 <= delta.

    Without a plan the split is estimated by :func:`cusum_theta`.
    """
    if plan is None:
        plan = SplitPlan(cusum_theta(D).split_index, "estimated")
    path = _cp_path(D, plan, k, nu.support, pred=False, center=center)
    return _decide(path, delta, k, nu, alpha, q, theta=plan.boundary / D.N)


def test_cp_prediction(
    D: Dataset,
    delta: float,
    k: int,
    nu: NuMeasure,
    alpha: float,
    q: QuantileTable,
    plan: SplitPlan | None = None,
    center: bool = True,
) -> TestResult:
    """Relevant-change test on the prediction scale.

    Each segment's slope estimate is smoothed by the square root of that
    segment's own prefix covariance before the segments are compared.
    """
    if plan is None:
        plan = SplitPlan(cusum_theta(D).split_index, "estimated")
    path = _cp_path(D, plan, k, nu.support, pred=True, center=center)
    return _decide(path, delta, k, nu, alpha, q, theta=plan.boundary / D.N)


def concat_datasets(D1: Dataset, D2: Dataset) -> tuple[Dataset, SplitPlan]:
    """Stack two independent samples for the two-sample test.

    Returns the combined dataset and the fixed split plan at N1.
    """
    combined = Dataset(D1.X + D2.X, D1.Y + D2.Y)
    return combined, SplitPlan(D1.N, "fixed")
