"""Shared fixtures and randomized-instance builders for the test suite."""

import os

import numpy as np
import pytest

import flrtest as f
from flrtest.dataio import read_quantile_table, write_quantile_table

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
TABLE_PATH = os.path.join(DATA_DIR, "qtable_default.txt")


@pytest.fixture(scope="session")
def space51():
    return f.benchmark_space()


@pytest.fixture(scope="session")
def null_slope():
    return f.benchmark_null_slope()


@pytest.fixture(scope="session")
def true_slope():
    return f.benchmark_true_slope()


@pytest.fixture(scope="session")
def default_table():
    """The committed default quantile table; regenerated if absent."""
    if os.path.exists(TABLE_PATH):
        return read_quantile_table(TABLE_PATH)
    table = f.w_quantile(f.default_nu(), (0.5, 0.1, 0.05, 0.01), 100_000, 1000, 0)
    os.makedirs(DATA_DIR, exist_ok=True)
    write_quantile_table(TABLE_PATH, table)
    return table


@pytest.fixture(scope="session")
def gamma_iid():
    return f.gamma_oracle()


def rand_space(rng, size=None, zero_weight=False):
    """Random strictly increasing grid with positive quadrature weights."""
    n = int(size if size is not None else rng.integers(3, 9))
    gaps = rng.uniform(0.1, 1.0, n)
    points = np.cumsum(gaps)
    points /= points[-1]
    weights = rng.uniform(0.2, 1.0, n)
    if zero_weight:
        weights[int(rng.integers(0, n))] = 0.0
    return f.MeasureSpace(points, weights)


def rand_func(rng, space):
    return f.func(space, rng.standard_normal(space.size))


def rand_op(rng, domain, codomain):
    return f.KernelOp(domain, codomain, rng.standard_normal((codomain.size, domain.size)))


def rand_psd(rng, space, eigenvalues=None):
    """PSD operator with known spectrum in the weighted geometry.

    Returns (op, eigenvalues sorted non-increasing, orthonormal funcs
    matrix with rows e_i).
    """
    n = space.size
    if eigenvalues is None:
        eigenvalues = np.sort(rng.uniform(0.1, 2.0, n))[::-1]
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    sw = np.sqrt(space.weights)
    funcs = q.T / sw[None, :]
    kernel = (q * eigenvalues[None, :]) @ q.T
    kernel = kernel / sw[:, None] / sw[None, :]
    kernel = 0.5 * (kernel + kernel.T)
    return f.KernelOp(space, space, kernel), eigenvalues, funcs


def rand_dataset(rng, space, n, slope=None, noise=1.0):
    """Random regression sample Y = slope X + noise on a given space."""
    if slope is None:
        slope = rand_op(rng, space, space)
    xmat = rng.standard_normal((n, space.size))
    ymat = (xmat * space.weights[None, :]) @ slope.kernel.T
    if noise:
        ymat = ymat + noise * rng.standard_normal((n, space.size))
    X = tuple(f.func(space, row) for row in xmat)
    Y = tuple(f.func(space, row) for row in ymat)
    return f.Dataset(X, Y), slope
