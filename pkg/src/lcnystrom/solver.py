"""Dense solves, interior field evaluation and Bezier result interpolation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import AssemblyConfig, SystemMatrices, _RowEngine, _bernstein_rows
from .errors import ConditionWarning, SolveError
from .kernels import KernelSet
from .quadrature import QuadraturePointSet

__all__ = [
    "Solution",
    "BezierInterpolant",
    "solve_dense",
    "solve_system",
    "interior_eval",
    "interpolate_results",
    "eval_interpolant",
]


def solve_dense(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a dense system by LU (square) or least squares (overdetermined).

    One step of iterative refinement keeps the residual near machine
    precision for well-conditioned systems.  A `ConditionWarning` is
    emitted when the estimated 1-norm condition number exceeds 1e12.
    """
    a = np.asarray(matrix, float)
    b = np.asarray(rhs, float)
    if a.ndim != 2:
        raise SolveError("matrix must be 2-dimensional")
    if a.shape[0] < a.shape[1]:
        raise SolveError("underdetermined systems are not supported")
    if a.shape[0] > a.shape[1]:
        x, *_ = np.linalg.lstsq(a, b, rcond=None)
        return x
    try:
        lu, piv = scipy.linalg.lu_factor(a)
    except scipy.linalg.LinAlgError as exc:
        raise SolveError(f"LU factorization failed: {exc}") from exc
    if not np.all(np.isfinite(lu)):
        raise SolveError("LU factorization produced non-finite factors")
    anorm = np.linalg.norm(a, 1)
    rcond, info = scipy.linalg.lapack.dgecon(lu, anorm)
    if info == 0 and rcond > 0 and 1.0 / rcond > 1e12:
        warnings.warn(
            f"estimated condition number {1.0 / rcond:.2e} exceeds 1e12",
            ConditionWarning,
            stacklevel=2,
        )
    if rcond == 0.0:
        raise SolveError("matrix is numerically singular")
    x = scipy.linalg.lu_solve((lu, piv), b)
    x = x + scipy.linalg.lu_solve((lu, piv), b - a @ x)
    return x


@dataclass
class Solution:
    """Density (or Cauchy data) values at the quadrature points."""

    values: np.ndarray
    formulation: str
    points: QuadraturePointSet
    kernels: KernelSet
    config: AssemblyConfig
    engine: object = None

    @property
    def ncomp(self) -> int:
        return self.kernels.ncomp

    def per_point(self) -> np.ndarray:
        """Values reshaped to (num_points, ncomp)."""
        return self.values.reshape(self.points.num_points, self.ncomp)


def solve_system(mats: SystemMatrices, rhs: np.ndarray) -> Solution:
    """Solve the configured formulation for the boundary density."""
    form = mats.config.formulation
    if form == "slp":
        matrix = mats.V
    elif form == "dlp":
        matrix = mats.K
    else:
        raise SolveError("direct systems are solved via build_direct_system")
    values = solve_dense(matrix, np.asarray(rhs, float))
    return Solution(
        values=values,
        formulation=form,
        points=mats.points,
        kernels=mats.kernels,
        config=mats.config,
        engine=mats.engine,
    )


def interior_eval(solution: Solution, x_hat) -> np.ndarray | float:
    """Field value at an interior point via the representation formula.

    The quadrature sum uses the same admissibility machinery as assembly:
    leaves too close to ``x_hat`` contribute through corrected weights, so
    evaluation stays accurate near the boundary.
    """
    x = np.asarray(x_hat, float)
    engine = solution.engine
    if engine is None:
        engine = _RowEngine(solution.points, solution.kernels, solution.config)
        solution.engine = engine
    kind = "slp" if solution.formulation == "slp" else "dlp"
    rows = engine.row(x, (kind,), self_index=None)
    nc = solution.ncomp
    blocks = rows[kind].reshape(solution.points.num_points, nc, nc)
    vals = np.einsum("nab,nb->a", blocks, solution.per_point())
    return float(vals[0]) if nc == 1 else vals


@dataclass
class BezierInterpolant:
    """Per-leaf Bezier coefficients interpolating point data."""

    leaf_index: int
    coefficients: np.ndarray
    degree: int
    pdim: int
    residual: float


def interpolate_results(solution_or_values, points: QuadraturePointSet | None = None, leaf_index: int = 0):
    """Interpolate per-point data on one leaf with its Bezier basis.

    Accepts either a `Solution` or a plain array of per-point values
    (shape (num_points,) or (num_points, k)).  The spline collocation
    matrix C[k, t] = B_t(xi_k) is solved directly (or in a least squares
    sense when the test space is larger than the point count).
    """
    if isinstance(solution_or_values, Solution):
        points = solution_or_values.points
        data = solution_or_values.per_point()
    else:
        if points is None:
            raise ValueError("points required when passing raw values")
        data = np.asarray(solution_or_values, float)
        if data.ndim == 1:
            data = data[:, None]
    leaf = points.leaves[leaf_index]
    if leaf.count < 1:
        raise SolveError("leaf carries no quadrature points")
    local = data[leaf.point_slice]
    xi = points.ref[leaf.point_slice]
    degree = points.rule.n - 1
    c = _bernstein_rows(degree, xi)
    if c.shape[0] == c.shape[1]:
        try:
            coef = scipy.linalg.solve(c, local)
        except scipy.linalg.LinAlgError as exc:
            raise SolveError(f"degenerate collocation matrix: {exc}") from exc
    else:
        coef, *_ = np.linalg.lstsq(c, local, rcond=None)
    residual = float(np.max(np.abs(c @ coef - local)))
    return BezierInterpolant(
        leaf_index=leaf_index,
        coefficients=coef,
        degree=degree,
        pdim=points.pdim,
        residual=residual,
    )


def eval_interpolant(interp: BezierInterpolant, xi) -> np.ndarray | float:
    """Evaluate a Bezier interpolant at reference coordinates in [-1, 1]^k."""
    xi = np.atleast_2d(np.asarray(xi, float))
    b = _bernstein_rows(interp.degree, xi)
    vals = b @ interp.coefficients
    if vals.shape == (1, 1):
        return float(vals[0, 0])
    return vals[0] if vals.shape[0] == 1 else vals
