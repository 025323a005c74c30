"""Sequential slope estimation and the distance statistics feeding the tests.

The slope estimate on the x-prefix composes the empirical cross-covariance
with the spectral cut-off inverse of the empirical covariance, both taken
over the first floor(x*N) observations but divided by the full N; the
sequential scaling the self-normalizer relies on. An empirical centering
(prefix means subtracted from both sides) is applied by default, since
observed regressors are generally not centered.

Two distance statistics are provided:

* ``distance_stat``: squared Hilbert–Schmidt distance between the slope
  estimate and the hypothesized operator projected onto the estimated
  eigenspace, ``||| S_hat[x] - S0 Pi_k[x] |||^2``.
* ``pred_distance_stat``: the same difference smoothed by the square root
  of the prefix covariance, whose x=1 value targets the mean squared
  prediction error ``E || S X - S0 X ||^2``.

``distance_path`` evaluates either statistic along a whole set of prefix
fractions at once, reusing the stacked data and the full-sample
eigensystem (the sign reference for every prefix).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InsufficientPrefixError, RankDeficiencyError, SpaceMismatchError
from .space import FuncObs, KernelOp, MeasureSpace, compose, hs_norm
from .spectral import (
    RANK_TOL,
    EigenSystem,
    _sign_align,
    _weighted_eigh,
    prefix_count,
    projection,
    regularized_inverse,
)

__all__ = [
    "Dataset",
    "SlopeFit",
    "center_prefix",
    "slope_estimate",
    "distance_stat",
    "pred_distance_stat",
    "distance_path",
]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Paired functional observations (X_n, Y_n), n = 1..N."""

    X: tuple
    Y: tuple
    _xmat: np.ndarray = field(init=False, repr=False, compare=False)
    _ymat: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        X = tuple(self.X)
        Y = tuple(self.Y)
        if len(X) != len(Y):
            raise SpaceMismatchError("X and Y must have equal lengths")
        if len(X) < 2:
            raise SpaceMismatchError("need at least two observations")
        dom = X[0].space
        cod = Y[0].space
        for f in X:
            if not f.space.matches(dom):
                raise SpaceMismatchError("regressors on different spaces")
        for g in Y:
            if not g.space.matches(cod):
                raise SpaceMismatchError("responses on different spaces")
        xmat = np.stack([f.values for f in X])
        ymat = np.stack([g.values for g in Y])
        xmat.setflags(write=False)
        ymat.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "_xmat", xmat)
        object.__setattr__(self, "_ymat", ymat)

    @property
    def N(self) -> int:
        return len(self.X)

    @property
    def domain_space(self) -> MeasureSpace:
        return self.X[0].space

    @property
    def codomain_space(self) -> MeasureSpace:
        return self.Y[0].space

    def subset(self, start: int, stop: int) -> "Dataset":
        """Observations start..stop-1 (0-based) as a standalone dataset."""
        return Dataset(self.X[start:stop], self.Y[start:stop])


@dataclass(frozen=True, eq=False)
class SlopeFit:
    """A fitted slope on one prefix: estimate, projection, and eigensystem."""

    slope: KernelOp
    projection: KernelOp
    eigs: EigenSystem
    x: float
    k: int


def center_prefix(D: Dataset, x: float = 1.0) -> Dataset:
    """The first floor(x*N) observations with their prefix means removed.

    Exactly invariant to adding any fixed function to all X_n or all Y_n.
    """
    m = prefix_count(D.N, x)
    if m < 2:
        raise InsufficientPrefixError(f"centering needs a prefix of >= 2, got {m}")
    Xc = D._xmat[:m] - D._xmat[:m].mean(axis=0)
    Yc = D._ymat[:m] - D._ymat[:m].mean(axis=0)
    dom, cod = D.domain_space, D.codomain_space
    return Dataset(
        tuple(FuncObs(dom, row) for row in Xc),
        tuple(FuncObs(cod, row) for row in Yc),
    )


def _prefix_mats(D: Dataset, x: float, center: bool):
    m = prefix_count(D.N, x)
    if m < 1:
        raise InsufficientPrefixError(f"empty prefix at x={x}")
    Xm = D._xmat[:m]
    Ym = D._ymat[:m]
    if center:
        if m < 2:
            raise InsufficientPrefixError(f"centering needs a prefix of >= 2, got {m}")
        Xm = Xm - Xm.mean(axis=0)
        Ym = Ym - Ym.mean(axis=0)
    return m, Xm, Ym


def _fit_arrays(D: Dataset, x: float, k: int, center: bool):
    """Raw pieces of the fit at prefix x: (m, lam, E, cov kernel, cross kernel)."""
    n = D.N
    m, Xm, Ym = _prefix_mats(D, x, center)
    if m < k:
        raise InsufficientPrefixError(f"prefix of {m} observations cannot support k={k}")
    G = (Xm.T @ Xm) / n
    lam, E = _weighted_eigh(G, D.domain_space)
    top = lam[0] if len(lam) else 0.0
    if k < 1 or k > len(lam) or lam[k - 1] <= RANK_TOL * top or lam[k - 1] <= 0.0:
        bad = float(lam[k - 1]) if 1 <= k <= len(lam) else float("nan")
        raise RankDeficiencyError(k, bad, prefix=m)
    C = (Ym.T @ Xm) / n
    return m, lam, E, G, C


def slope_estimate(
    D: Dataset,
    x: float = 1.0,
    k: int = 1,
    center: bool = True,
    reference: EigenSystem | None = None,
) -> SlopeFit:
    """Spectral cut-off slope estimate on the x-prefix with divisor N.

    Eigenfunction signs are aligned to ``reference`` when given, else to
    the full-sample (x=1) eigensystem so that fits along a sequential path
    share one orientation. The slope and projection kernels themselves are
    sign-invariant.
    """
    dom = D.domain_space
    _, lam, E, _, C = _fit_arrays(D, x, k, center)
    if reference is None and x < 1.0:
        _, lam1, E1, _, _ = _fit_arrays(D, 1.0, k, center)
        reference = EigenSystem(dom, lam1, _sign_align(E1, dom))
    E = _sign_align(E, dom, reference)
    eigs = EigenSystem(dom, lam, E)
    ginv = regularized_inverse(eigs, k)
    pi = projection(eigs, k)
    w = dom.weights
    slope = KernelOp(dom, D.codomain_space, C @ (w[:, None] * ginv.kernel))
    return SlopeFit(slope, pi, eigs, x, k)


def _hs2(K: np.ndarray, w_cod: np.ndarray, w_dom: np.ndarray) -> float:
    return float(np.einsum("ij,ij,i,j->", K, K, w_cod, w_dom))


def _distance_kernel(D: Dataset, S0: KernelOp, x: float, k: int, pred: bool, center: bool):
    dom = D.domain_space
    w = dom.weights
    _, lam, E, _, C = _fit_arrays(D, x, k, center)
    inv_k = (E[:k].T * (1.0 / lam[:k])) @ E[:k]
    pi_k = E[:k].T @ E[:k]
    diff = C @ (w[:, None] * inv_k) - S0.kernel @ (w[:, None] * pi_k)
    if pred:
        root = (E.T * np.sqrt(lam)) @ E
        diff = diff @ (w[:, None] * root)
    return diff


def distance_stat(
    D: Dataset, S0: KernelOp, x: float = 1.0, k: int = 1, center: bool = True
) -> float:
    """Squared HS distance ``||| S_hat[x] - S0 Pi_k[x] |||^2``."""
    _check_s0(D, S0)
    diff = _distance_kernel(D, S0, x, k, pred=False, center=center)
    return _hs2(diff, D.codomain_space.weights, D.domain_space.weights)


def pred_distance_stat(
    D: Dataset, S0: KernelOp, x: float = 1.0, k: int = 1, center: bool = True
) -> float:
    """Prediction-error distance: the slope difference smoothed by cov^(1/2)."""
    _check_s0(D, S0)
    diff = _distance_kernel(D, S0, x, k, pred=True, center=center)
    return _hs2(diff, D.codomain_space.weights, D.domain_space.weights)


def _check_s0(D: Dataset, S0: KernelOp):
    if not S0.domain.matches(D.domain_space) or not S0.codomain.matches(D.codomain_space):
        raise SpaceMismatchError("hypothesized operator not on the data's spaces")


def distance_path(
    D: Dataset,
    S0: KernelOp,
    xs: Iterable[float],
    k: int,
    pred: bool = False,
    center: bool = True,
) -> Mapping[float, float]:
    """Evaluate the chosen distance statistic at each prefix fraction.

    Returns a dict including x=1 whether or not it appears in ``xs``.
    """
    _check_s0(D, S0)
    w_cod = D.codomain_space.weights
    w_dom = D.domain_space.weights
    out = {}
    for x in sorted(set(float(v) for v in xs) | {1.0}):
        diff = _distance_kernel(D, S0, x, k, pred=pred, center=center)
        out[x] = _hs2(diff, w_cod, w_dom)
    return out
