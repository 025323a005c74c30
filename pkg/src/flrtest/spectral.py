"""Covariance estimation and spectral calculus in the weighted geometry.

The eigenproblem of a symmetric kernel operator on a weighted space is
solved through the symmetrization trick: with ``W = diag(w)`` the operator
action ``K W`` shares eigenvalues with the symmetric matrix
``W^(1/2) K W^(1/2)``, whose orthonormal eigenvectors ``v`` map back to
weighted-orthonormal eigenfunctions ``e = v / sqrt(w)``. Points of zero
mass are excluded from the symmetrization and their eigenfunction entries
set to zero, which preserves exact orthonormality in the weighted inner
product.

Eigenvalues within ``-1e-12 * lambda_1`` of zero are clamped to zero;
anything more negative raises, since every operator passed here is a
covariance or another positive semidefinite estimate whose negativity can
only be round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    InsufficientPrefixError,
    NonPsdError,
    RankDeficiencyError,
    SpaceMismatchError,
)
from .space import FuncObs, KernelOp, MeasureSpace

__all__ = [
    "EigenSystem",
    "covariance_prefix",
    "eigensystem",
    "regularized_inverse",
    "projection",
    "sqrt_op",
    "RANK_TOL",
]

# Relative eigenvalue threshold below which spectral inversion is refused.
# The asymptotic theory assumes strictly positive eigenvalues; at finite
# sample this cut distinguishes "numerically zero" from usable. Policy
# choice, not derived from any formula.
RANK_TOL = 1e-10

_CLAMP_REL = 1e-12
_SIGN_EPS = 1e-8


def prefix_count(n: int, x: float) -> int:
    """Number of observations in the x-prefix: floor(x*n), guarded.

    The tiny additive guard keeps products like 0.6*500 (which float
    arithmetic renders just below 300) on the intended side of the floor.
    """
    if not 0.0 < x <= 1.0:
        raise InsufficientPrefixError(f"prefix fraction {x} outside (0, 1]")
    return int(np.floor(x * n + 1e-9))


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Top eigenpairs of a symmetric PSD operator on a weighted space.

    ``eigenvalues`` are non-increasing and clamped at zero;
    ``funcs_matrix`` stores one eigenfunction per row, orthonormal in the
    weighted inner product and sign-aligned (against a caller-supplied
    reference system, else by making the first coordinate of magnitude
    above 1e-8 positive).
    """

    space: MeasureSpace
    eigenvalues: np.ndarray
    funcs_matrix: np.ndarray
    _funcs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ev = np.array(self.eigenvalues, dtype=float)
        fm = np.array(self.funcs_matrix, dtype=float)
        ev.setflags(write=False)
        fm.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "funcs_matrix", fm)
        object.__setattr__(
            self, "_funcs", tuple(FuncObs(self.space, row) for row in fm)
        )

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    @property
    def eigenfunctions(self) -> tuple:
        """Eigenfunctions as :class:`FuncObs`, in eigenvalue order."""
        return self._funcs


def _as_matrix(X: Sequence[FuncObs]) -> tuple[MeasureSpace, np.ndarray]:
    if len(X) == 0:
        raise InsufficientPrefixError("empty sample")
    space = X[0].space
    for f in X[1:]:
        if not f.space.matches(space):
            raise SpaceMismatchError("observations on different spaces")
    return space, np.stack([f.values for f in X])


def covariance_prefix(X: Sequence[FuncObs], x: float = 1.0) -> KernelOp:
    """Sequential covariance estimate over the x-prefix, divisor N.

    Returns ``(1/N) sum_{n <= floor(x N)} X_n (x) X_n``. The divisor is
    the full sample size N, not the prefix length; the sequential path
    scaling depends on it.
    """
    space, V = _as_matrix(X)
    n = len(X)
    m = prefix_count(n, x)
    if m < 1:
        raise InsufficientPrefixError(f"prefix floor({x}*{n}) holds no observations")
    Vm = V[:m]
    kernel = (Vm.T @ Vm) / n
    return KernelOp(space, space, kernel)


def _weighted_eigh(kernel: np.ndarray, space: MeasureSpace):
    """Raw eigensolve of a symmetric kernel on ``space``.

    Returns (eigenvalues desc, eigenfunction rows), full length over the
    positive-weight points, clamped per module policy.
    """
    w = space.weights
    pos = w > 0
    sw = space._sqrt_w[pos]
    M = sw[:, None] * kernel[np.ix_(pos, pos)] * sw[None, :]
    lam, V = np.linalg.eigh(M)
    lam = lam[::-1].copy()
    V = V[:, ::-1]
    top = lam[0] if len(lam) else 0.0
    floor = -_CLAMP_REL * max(top, 0.0)
    if np.any(lam < floor):
        raise NonPsdError(
            f"eigenvalue {lam.min():.3e} below clamp floor {floor:.3e}: input not PSD"
        )
    lam = np.where(lam < 0.0, 0.0, lam)
    E = np.zeros((len(lam), len(w)))
    E[:, pos] = (V / sw[:, None]).T
    # renormalize in the weighted norm (exact up to round-off already)
    norms = np.sqrt((E * E) @ w)
    E /= norms[:, None]
    return lam, E


def _sign_align(E: np.ndarray, space: MeasureSpace, reference=None) -> np.ndarray:
    w = space.weights
    if reference is not None:
        R = reference.funcs_matrix
        m = min(len(E), len(R))
        dots = (E[:m] * R[:m]) @ w
        flip = np.ones(len(E))
        flip[:m] = np.where(dots < 0, -1.0, 1.0)
        # a zero projection on the reference falls back to the default rule
        undecided = np.zeros(len(E), dtype=bool)
        undecided[:m] = dots == 0
        undecided[m:] = True
    else:
        flip = np.ones(len(E))
        undecided = np.ones(len(E), dtype=bool)
    for i in np.nonzero(undecided)[0]:
        big = np.nonzero(np.abs(E[i]) > _SIGN_EPS)[0]
        if len(big) and E[i, big[0]] < 0:
            flip[i] = -1.0
    return E * flip[:, None]


def eigensystem(
    C: KernelOp, m: int | None = None, reference: EigenSystem | None = None
) -> EigenSystem:
    """Top-m eigenpairs of a symmetric PSD kernel operator.

    ``m`` defaults to everything available (one pair per positive-weight
    grid point). ``reference`` fixes eigenfunction signs by nonnegative
    inner product against the reference system, index by index.
    """
    if not C.domain.matches(C.codomain):
        raise SpaceMismatchError("eigensystem needs an operator on a single space")
    K = C.kernel
    scale = max(float(np.abs(K).max()), 1.0)
    if float(np.abs(K - K.T).max()) > 1e-10 * scale:
        raise NonPsdError("kernel not symmetric within tolerance")
    Ksym = 0.5 * (K + K.T)
    lam, E = _weighted_eigh(Ksym, C.domain)
    avail = len(lam)
    if m is None:
        m = avail
    if not 0 <= m <= avail:
        raise ConfigError(f"requested {m} eigenpairs, only {avail} available")
    E = _sign_align(E[:m], C.domain, reference)
    return EigenSystem(C.domain, lam[:m], E)


def regularized_inverse(E: EigenSystem, k: int, tol: float = RANK_TOL) -> KernelOp:
    """Spectral cut-off inverse: ``sum_{i<=k} (1/lambda_i) e_i (x) e_i``.

    Raises :class:`RankDeficiencyError` naming the first index whose
    eigenvalue sits at or below ``tol`` relative to the largest; the
    signal that k is too large for the observations behind ``E``.
    """
    if not 1 <= k <= E.count:
        raise ConfigError(f"cut-off level {k} outside 1..{E.count}")
    lam = E.eigenvalues
    top = lam[0] if E.count else 0.0
    if lam[k - 1] <= tol * top or lam[k - 1] <= 0.0:
        raise RankDeficiencyError(k, float(lam[k - 1]))
    F = E.funcs_matrix[:k]
    kernel = (F.T * (1.0 / lam[:k])) @ F
    return KernelOp(E.space, E.space, kernel)


def projection(E: EigenSystem, k: int) -> KernelOp:
    """Orthogonal projection onto the span of the first k eigenfunctions."""
    if not 0 <= k <= E.count:
        raise ConfigError(f"projection level {k} outside 0..{E.count}")
    F = E.funcs_matrix[:k]
    return KernelOp(E.space, E.space, F.T @ F)


def sqrt_op(C: KernelOp) -> KernelOp:
    """Positive semidefinite square root via full eigendecomposition."""
    E = eigensystem(C)
    F = E.funcs_matrix
    kernel = (F.T * np.sqrt(E.eigenvalues)) @ F
    return KernelOp(C.domain, C.domain, kernel)
