"""Discretized weighted function spaces and the operator algebra on them.

A function space is a finite grid of points together with nonnegative
measure weights, standing in for L2 of an interval with respect to a
discrete measure. Everything downstream (covariance operators, slope
estimators, test statistics) is expressed through the weighted inner
product defined here, so this module fixes the geometry once:

* ``inner(f, g)`` is the weighted sum ``sum_j f_j g_j w_j``.
* A kernel operator acts by ``(A f)(t_i) = sum_j K[i, j] f(t_j) w_j``,
  the discretization of an integral operator.
* The Hilbert–Schmidt inner product weighs kernel entries by both the
  codomain and domain masses, making ``hs_norm`` the weighted Frobenius
  norm and ``op_norm`` the largest singular value of the symmetrized
  matrix ``diag(sqrt(w_cod)) K diag(sqrt(w_dom))``.

All types are immutable: arrays are copied on construction and marked
read-only, so values can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SpaceMismatchError

__all__ = [
    "MeasureSpace",
    "FuncObs",
    "KernelOp",
    "uniform_grid_space",
    "func",
    "inner",
    "norm",
    "outer",
    "apply_op",
    "compose",
    "hs_inner",
    "hs_norm",
    "op_norm",
    "identity_op",
]


def _readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    """A finite measure space: strictly increasing grid points with masses.

    Parameters
    ----------
    points : array_like
        Strictly increasing real grid values.
    weights : array_like
        Nonnegative measure mass at each point; at least one positive.
    """

    points: np.ndarray
    weights: np.ndarray
    _sqrt_w: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        points = _readonly(self.points)
        weights = _readonly(self.weights)
        if points.ndim != 1 or weights.ndim != 1 or len(points) != len(weights):
            raise SpaceMismatchError("points and weights must be 1-d of equal length")
        if len(points) == 0:
            raise SpaceMismatchError("empty grid")
        if not np.all(np.isfinite(points)) or not np.all(np.isfinite(weights)):
            raise SpaceMismatchError("non-finite grid or weights")
        if np.any(np.diff(points) <= 0):
            raise SpaceMismatchError("grid points must be strictly increasing")
        if np.any(weights < 0) or not np.any(weights > 0):
            raise SpaceMismatchError("weights must be >= 0 with at least one > 0")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_sqrt_w", _readonly(np.sqrt(weights)))

    @property
    def size(self) -> int:
        return len(self.points)

    def matches(self, other: "MeasureSpace") -> bool:
        """Exact equality of grids and weights."""
        return (
            self is other
            or (
                np.array_equal(self.points, other.points)
                and np.array_equal(self.weights, other.weights)
            )
        )


def uniform_grid_space(n: int = 51, start: float = 0.0, stop: float = 1.0) -> MeasureSpace:
    """Equispaced grid carrying the uniform probability measure (mass 1/n each)."""
    if n < 1:
        raise SpaceMismatchError("need at least one grid point")
    return MeasureSpace(np.linspace(start, stop, n), np.full(n, 1.0 / n))


@dataclass(frozen=True, eq=False)
class FuncObs:
    """One observed function: its values on the grid of a measure space."""

    space: MeasureSpace
    values: np.ndarray

    def __post_init__(self):
        values = _readonly(self.values)
        if values.ndim != 1 or len(values) != self.space.size:
            raise SpaceMismatchError(
                f"expected {self.space.size} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise SpaceMismatchError("non-finite function values")
        object.__setattr__(self, "values", values)


def func(space: MeasureSpace, values) -> FuncObs:
    """Convenience constructor for :class:`FuncObs`."""
    return FuncObs(space, values)


@dataclass(frozen=True, eq=False)
class KernelOp:
    """A Hilbert–Schmidt operator represented by kernel values.

    ``kernel[i, j]`` is indexed (codomain point i, domain point j); the
    action on ``f`` is ``(A f)(t_i) = sum_j kernel[i, j] f(t_j) w_dom[j]``.
    """

    domain: MeasureSpace
    codomain: MeasureSpace
    kernel: np.ndarray

    def __post_init__(self):
        kernel = _readonly(self.kernel)
        if kernel.shape != (self.codomain.size, self.domain.size):
            raise SpaceMismatchError(
                f"kernel shape {kernel.shape} does not match "
                f"(codomain {self.codomain.size}, domain {self.domain.size})"
            )
        if not np.all(np.isfinite(kernel)):
            raise SpaceMismatchError("non-finite kernel values")
        object.__setattr__(self, "kernel", kernel)


def _require_same(a: MeasureSpace, b: MeasureSpace, what: str):
    if not a.matches(b):
        raise SpaceMismatchError(f"{what}: spaces differ")


def inner(f: FuncObs, g: FuncObs) -> float:
    """Weighted inner product ``sum_j f_j g_j w_j``."""
    _require_same(f.space, g.space, "inner")
    return float(np.sum(f.values * g.values * f.space.weights))


def norm(f: FuncObs) -> float:
    """Weighted norm ``sqrt(inner(f, f))``."""
    return float(np.sqrt(max(inner(f, f), 0.0)))


def outer(g: FuncObs, f: FuncObs) -> KernelOp:
    """Rank-one operator ``g (x) f`` with kernel ``g_i f_j``.

    Satisfies ``apply_op(outer(g, f), h) = g * inner(f, h)`` exactly.
    """
    return KernelOp(f.space, g.space, np.multiply.outer(g.values, f.values))


def apply_op(A: KernelOp, f: FuncObs) -> FuncObs:
    """Apply the weighted integral action of ``A`` to ``f``."""
    _require_same(A.domain, f.space, "apply_op")
    vals = A.kernel @ (f.values * A.domain.weights)
    return FuncObs(A.codomain, vals)


def compose(A: KernelOp, B: KernelOp) -> KernelOp:
    """Operator product ``A o B``; kernel ``K_A diag(w) K_B`` with w = A's domain masses."""
    _require_same(B.codomain, A.domain, "compose")
    kernel = A.kernel @ (A.domain.weights[:, None] * B.kernel)
    return KernelOp(B.domain, A.codomain, kernel)


def hs_inner(A: KernelOp, B: KernelOp) -> float:
    """Hilbert–Schmidt inner product ``sum_ij A_ij B_ij w_cod[i] w_dom[j]``."""
    _require_same(A.domain, B.domain, "hs_inner")
    _require_same(A.codomain, B.codomain, "hs_inner")
    wc = A.codomain.weights
    wd = A.domain.weights
    return float(np.einsum("ij,ij,i,j->", A.kernel, B.kernel, wc, wd))


def hs_norm(A: KernelOp) -> float:
    """Hilbert–Schmidt norm, the weighted Frobenius norm of the kernel."""
    return float(np.sqrt(max(hs_inner(A, A), 0.0)))


def op_norm(A: KernelOp) -> float:
    """Operator (spectral) norm: top singular value of the weighted symmetrization."""
    M = A.codomain._sqrt_w[:, None] * A.kernel * A.domain._sqrt_w[None, :]
    return float(np.linalg.norm(M, ord=2))


def identity_op(space: MeasureSpace) -> KernelOp:
    """Identity for the weighted action: kernel ``delta_ij / w_j``.

    Points of zero mass are invisible to the measure, so the identity
    cannot reproduce values there; their diagonal entries are set to 0.
    """
    w = space.weights
    diag = np.where(w > 0, 1.0 / np.where(w > 0, w, 1.0), 0.0)
    return KernelOp(space, space, np.diag(diag))
