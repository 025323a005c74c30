"""File formats: gridded curves and kernels as CSV, tables and reports as text.

Conventions:
  * data CSV: first row is the grid, each later row one observation; the
    parsed grid carries uniform weights 1/(number of points).
  * kernel CSV: two header rows (codomain grid, then domain grid)
    followed by the matrix, one codomain point per row.
  * quantile tables and test reports are line-oriented ``key = value``
    text; floats are written with ``repr`` so round-trips are exact.

All writers emit ``\n`` newlines and fixed field order, so identical
inputs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
from typing import Sequence

import numpy as np

from .errors import FormatError
from .selfnorm import NuMeasure, QuantileTable, TestResult
from .simulate import RejectionCurve
from .space import FuncObs, KernelOp, MeasureSpace

__all__ = [
    "read_data_csv",
    "write_data_csv",
    "read_kernel_csv",
    "write_kernel_csv",
    "read_quantile_table",
    "write_quantile_table",
    "format_test_result",
    "format_curve_csv",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_row(row: Sequence[str], path: str, lineno: int) -> np.ndarray:
    try:
        return np.array([float(c) for c in row], dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}:{lineno}: non-numeric entry ({exc})") from None


def _uniform_space(points: np.ndarray) -> MeasureSpace:
    n = len(points)
    return MeasureSpace(points, np.full(n, 1.0 / n))


def read_data_csv(path: str) -> list:
    """Parse observations; the grid row defines a uniform-weight space."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise FormatError(f"{path}: need a grid row and at least one observation")
    grid = _parse_row(rows[0], path, 1)
    if len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise FormatError(f"{path}: grid row must be strictly increasing")
    space = _uniform_space(grid)
    obs = []
    for i, row in enumerate(rows[1:], start=2):
        vals = _parse_row(row, path, i)
        if len(vals) != len(grid):
            raise FormatError(
                f"{path}:{i}: row has {len(vals)} entries, grid has {len(grid)}"
            )
        obs.append(FuncObs(space, vals))
    return obs


def write_data_csv(path: str, obs: Sequence[FuncObs]) -> None:
    if not obs:
        raise FormatError("cannot write an empty observation list")
    space = obs[0].space
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([_fmt(p) for p in space.points])
    for f in obs:
        if not f.space.matches(space):
            raise FormatError("observations live on different grids")
        writer.writerow([_fmt(v) for v in f.values])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def read_kernel_csv(path: str) -> KernelOp:
    """Parse a kernel matrix under the two-grid header convention."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 3:
        raise FormatError(f"{path}: need two grid rows and a matrix")
    cod = _parse_row(rows[0], path, 1)
    dom = _parse_row(rows[1], path, 2)
    for grid, name in ((cod, "codomain"), (dom, "domain")):
        if len(grid) < 2 or np.any(np.diff(grid) <= 0):
            raise FormatError(f"{path}: {name} grid must be strictly increasing")
    mat = []
    for i, row in enumerate(rows[2:], start=3):
        vals = _parse_row(row, path, i)
        if len(vals) != len(dom):
            raise FormatError(
                f"{path}:{i}: row has {len(vals)} entries, domain grid has {len(dom)}"
            )
        mat.append(vals)
    if len(mat) != len(cod):
        raise FormatError(
            f"{path}: {len(mat)} matrix rows, codomain grid has {len(cod)}"
        )
    return KernelOp(_uniform_space(dom), _uniform_space(cod), np.array(mat))


def write_kernel_csv(path: str, op: KernelOp) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([_fmt(p) for p in op.codomain.points])
    writer.writerow([_fmt(p) for p in op.domain.points])
    for row in op.kernel:
        writer.writerow([_fmt(v) for v in row])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def write_quantile_table(path: str, q: QuantileTable) -> None:
    lines = [
        "# limit-pivot quantile table",
        "nu_support = " + " ".join(_fmt(v) for v in q.nu.support),
        "nu_weights = " + " ".join(_fmt(v) for v in q.nu.weights),
        f"steps = {q.steps}",
        f"replications = {q.replications}",
        f"seed = {q.seed}",
        f"degenerate = {q.degenerate}",
        "alpha quantile",
    ]
    for alpha in sorted(q.alphas):
        lines.append(f"{_fmt(alpha)} {_fmt(q.alphas[alpha])}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_quantile_table(path: str) -> QuantileTable:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    fields = {}
    rows = []
    in_rows = False
    for ln in lines:
        if ln == "alpha quantile":
            in_rows = True
            continue
        if in_rows:
            parts = ln.split()
            if len(parts) != 2:
                raise FormatError(f"{path}: bad quantile row {ln!r}")
            rows.append(_parse_row(parts, path, 0))
        elif " = " in ln:
            key, val = ln.split(" = ", 1)
            fields[key] = val
        else:
            raise FormatError(f"{path}: unrecognized line {ln!r}")
    if not rows:
        raise FormatError(f"{path}: table holds no quantile rows")
    try:
        nu = NuMeasure(
            tuple(float(v) for v in fields["nu_support"].split()),
            tuple(float(v) for v in fields["nu_weights"].split()),
        )
        table = QuantileTable(
            nu,
            {float(a): float(v) for a, v in rows},
            int(fields["replications"]),
            int(fields["steps"]),
            int(fields["seed"]),
            int(fields.get("degenerate", "0")),
        )
    except KeyError as exc:
        raise FormatError(f"{path}: missing field {exc.args[0]}") from None
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return table


def format_test_result(res: TestResult, which: str) -> str:
    """Render a test outcome as a line-oriented report."""
    lines = [
        f"test = {which}",
        f"statistic = {_fmt(res.statistic)}",
        f"normalizer = {_fmt(res.normalizer)}",
        f"quantile = {_fmt(res.quantile)}",
        f"alpha = {_fmt(res.alpha)}",
        f"delta = {_fmt(res.delta)}",
        f"k = {res.k}",
    ]
    if res.theta is not None:
        lines.append(f"theta = {_fmt(res.theta)}")
    lines.append("decision = " + ("reject" if res.reject else "no rejection"))
    lines.append("path:")
    for x in sorted(res.path):
        lines.append(f"{_fmt(x)} {_fmt(res.path[x])}")
    return "\n".join(lines) + "\n"


def format_curve_csv(curve: RejectionCurve) -> str:
    """Render a rejection curve as CSV with the configuration echoed."""
    lines = [f"# {key} = {val}" for key, val in curve.config_echo.items()]
    lines.append("delta,rejection_rate,mc_se,n_fail")
    for d, r, s in zip(curve.deltas, curve.rates, curve.mc_se):
        lines.append(f"{_fmt(d)},{_fmt(r)},{_fmt(s)},{curve.failures}")
    return "\n".join(lines) + "\n"
