"""Knot vectors and B-spline basis evaluation.

Basis functions are evaluated with the Cox-de Boor recursion where 0/0
terms are defined as zero.  Evaluation is supported on any non-decreasing
knot vector; the classical partition-of-unity and derivative-sum
properties hold on open (clamped) knot vectors.

The batch routines (`eval_basis_batch`, `eval_basis_deriv_batch`) are the
performance path used by the geometry evaluators and require an open knot
vector.  The scalar routines work on arbitrary knot vectors and are the
reference implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

MAX_DEGREE = 10

__all__ = [
    "MAX_DEGREE",
    "KnotVector",
    "BasisSpan",
    "find_span",
    "eval_basis",
    "eval_basis_derivatives",
    "eval_basis_batch",
    "eval_basis_deriv_batch",
    "bezier_knot_vector",
    "bernstein_values",
]


@dataclass(frozen=True)
class KnotVector:
    """Non-decreasing sequence of parametric coordinates with a polynomial degree.

    Attributes
    ----------
    knots : np.ndarray
        The knot coordinates, non-decreasing, multiplicity of any value
        at most ``degree + 1``.
    degree : int
        Polynomial degree p, ``0 <= p <= MAX_DEGREE``.
    """

    knots: np.ndarray
    degree: int

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        if knots.ndim != 1:
            raise ValueError("knots must be a 1-d sequence")
        if not (0 <= self.degree <= MAX_DEGREE):
            raise ValueError(f"degree must be in [0, {MAX_DEGREE}], got {self.degree}")
        if knots.size < self.degree + 2:
            raise ValueError("need at least degree + 2 knots")
        if np.any(np.diff(knots) < 0.0):
            raise ValueError("knot vector must be non-decreasing")
        _, counts = np.unique(knots, return_counts=True)
        if np.any(counts > self.degree + 1):
            raise ValueError("knot multiplicity exceeds degree + 1")

    @property
    def num_basis(self) -> int:
        """Number of basis functions defined by this knot vector."""
        return self.knots.size - self.degree - 1

    @property
    def is_open(self) -> bool:
        """True when first and last knots both have multiplicity degree + 1."""
        p = self.degree
        return bool(
            np.sum(self.knots == self.knots[0]) == p + 1
            and np.sum(self.knots == self.knots[-1]) == p + 1
        )

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def nonzero_spans(self) -> np.ndarray:
        """Indices i of all spans with ``knots[i] < knots[i+1]``."""
        return np.nonzero(np.diff(self.knots) > 0.0)[0]


@dataclass
class BasisSpan:
    """The p + 1 (possibly) non-vanishing basis functions at one coordinate.

    ``values[j]`` holds the value of basis function ``first_index + j``;
    entries whose index falls outside ``[0, num_basis)`` are zero.
    """

    span_index: int
    values: np.ndarray
    derivatives: np.ndarray | None = None

    @property
    def first_index(self) -> int:
        return self.span_index - (len(self.values) - 1)

    def value_of(self, basis_index: int) -> float:
        """Value of basis function ``basis_index`` (0 outside the span)."""
        j = basis_index - self.first_index
        if 0 <= j < len(self.values):
            return float(self.values[j])
        return 0.0


def find_span(kv: KnotVector, u: float) -> int:
    """Index i of the knot span containing u: ``knots[i] <= u < knots[i+1]``.

    For u equal to the last knot the last non-zero span is returned.

    Raises
    ------
    DomainError
        If u lies outside ``[knots[0], knots[-1]]``.
    """
    knots = kv.knots
    if not (knots[0] <= u <= knots[-1]):
        raise DomainError(f"u={u} outside knot range [{knots[0]}, {knots[-1]}]")
    if u >= knots[-1]:
        return int(np.searchsorted(knots, knots[-1], side="left")) - 1
    return int(np.searchsorted(knots, u, side="right")) - 1


def _basis_triangle(knots: np.ndarray, p: int, span: int, u: float) -> list[np.ndarray]:
    """All recursion levels of the non-vanishing basis values at u.

    Level k (0 <= k <= p) is an array of length k + 1 holding
    N_{span-k+j, k}(u) for j = 0..k.  Terms whose knot indices fall
    outside the knot vector are zero, as are 0/0 terms.
    """
    m = knots.size - 1
    levels = [np.array([1.0])]
    for k in range(1, p + 1):
        prev = levels[-1]
        cur = np.zeros(k + 1)
        for j in range(k + 1):
            idx = span - k + j
            if idx < 0 or idx + k + 1 > m:
                continue
            acc = 0.0
            # left term: (u - u_idx) / (u_{idx+k} - u_idx) * N_{idx, k-1}
            jl = j - 1  # position of N_{idx, k-1} in prev
            if 0 <= jl < k:
                den = knots[idx + k] - knots[idx]
                if den > 0.0:
                    acc += (u - knots[idx]) / den * prev[jl]
            # right term: (u_{idx+k+1} - u) / (u_{idx+k+1} - u_{idx+1}) * N_{idx+1, k-1}
            if 0 <= j < k:
                den = knots[idx + k + 1] - knots[idx + 1]
                if den > 0.0:
                    acc += (knots[idx + k + 1] - u) / den * prev[j]
            cur[j] = acc
        levels.append(cur)
    return levels


def eval_basis(kv: KnotVector, u: float) -> BasisSpan:
    """Evaluate the p + 1 non-vanishing basis functions at u."""
    span = find_span(kv, u)
    levels = _basis_triangle(kv.knots, kv.degree, span, u)
    return BasisSpan(span_index=span, values=levels[kv.degree])


def eval_basis_derivatives(kv: KnotVector, u: float) -> BasisSpan:
    """Evaluate basis values and first derivatives at u."""
    span = find_span(kv, u)
    p = kv.degree
    knots = kv.knots
    m = knots.size - 1
    levels = _basis_triangle(knots, p, span, u)
    ders = np.zeros(p + 1)
    if p > 0:
        low = levels[p - 1]
        for j in range(p + 1):
            idx = span - p + j
            if idx < 0 or idx + p + 1 > m:
                continue
            d = 0.0
            jl = j - 1
            if 0 <= jl < p:
                den = knots[idx + p] - knots[idx]
                if den > 0.0:
                    d += p / den * low[jl]
            if 0 <= j < p:
                den = knots[idx + p + 1] - knots[idx + 1]
                if den > 0.0:
                    d -= p / den * low[j]
            ders[j] = d
    return BasisSpan(span_index=span, values=levels[p], derivatives=ders)


def _find_span_batch(kv: KnotVector, us: np.ndarray) -> np.ndarray:
    knots = kv.knots
    us = np.asarray(us, dtype=float)
    if np.any(us < knots[0]) or np.any(us > knots[-1]):
        bad = us[(us < knots[0]) | (us > knots[-1])][0]
        raise DomainError(f"u={bad} outside knot range [{knots[0]}, {knots[-1]}]")
    spans = np.searchsorted(knots, us, side="right") - 1
    last = int(np.searchsorted(knots, knots[-1], side="left")) - 1
    spans[us >= knots[-1]] = last
    return spans


def eval_basis_batch(kv: KnotVector, us: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized basis evaluation on an open knot vector.

    Returns ``(spans, values)`` with ``values[q, j]`` the value of basis
    function ``spans[q] - p + j`` at ``us[q]``.
    """
    if not kv.is_open:
        # generic fallback, correctness over speed
        spans = _find_span_batch(kv, np.asarray(us, dtype=float))
        vals = np.empty((spans.size, kv.degree + 1))
        for q, (s, u) in enumerate(zip(spans, np.asarray(us, dtype=float))):
            vals[q] = _basis_triangle(kv.knots, kv.degree, int(s), float(u))[kv.degree]
        return spans, vals
    knots = kv.knots
    p = kv.degree
    us = np.asarray(us, dtype=float)
    spans = _find_span_batch(kv, us)
    npts = us.size
    values = np.zeros((npts, p + 1))
    values[:, 0] = 1.0
    left = np.zeros((npts, p + 1))
    right = np.zeros((npts, p + 1))
    for j in range(1, p + 1):
        left[:, j] = us - knots[spans + 1 - j]
        right[:, j] = knots[spans + j] - us
        saved = np.zeros(npts)
        for r in range(j):
            den = right[:, r + 1] + left[:, j - r]
            temp = np.where(den != 0.0, values[:, r] / np.where(den == 0.0, 1.0, den), 0.0)
            values[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        values[:, j] = saved
    return spans, values


def eval_basis_deriv_batch(
    kv: KnotVector, us: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized values and first derivatives on an open knot vector."""
    if not kv.is_open:
        spans = _find_span_batch(kv, np.asarray(us, dtype=float))
        p = kv.degree
        vals = np.empty((spans.size, p + 1))
        ders = np.empty((spans.size, p + 1))
        for q, (s, u) in enumerate(zip(spans, np.asarray(us, dtype=float))):
            bs = eval_basis_derivatives(kv, float(u))
            vals[q], ders[q] = bs.values, bs.derivatives
        return spans, vals, ders
    knots = kv.knots
    p = kv.degree
    us = np.asarray(us, dtype=float)
    spans = _find_span_batch(kv, us)
    npts = us.size
    ndu = np.zeros((npts, p + 1, p + 1))
    ndu[:, 0, 0] = 1.0
    left = np.zeros((npts, p + 1))
    right = np.zeros((npts, p + 1))
    for j in range(1, p + 1):
        left[:, j] = us - knots[spans + 1 - j]
        right[:, j] = knots[spans + j] - us
        saved = np.zeros(npts)
        for r in range(j):
            den = right[:, r + 1] + left[:, j - r]
            safe = np.where(den == 0.0, 1.0, den)
            temp = np.where(den != 0.0, ndu[:, r, j - 1] / safe, 0.0)
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved
    values = ndu[:, :, p].copy()
    ders = np.zeros((npts, p + 1))
    if p > 0:
        for j in range(p + 1):
            d = np.zeros(npts)
            if j >= 1:
                den = knots[spans + j] - knots[spans + j - p]
                safe = np.where(den == 0.0, 1.0, den)
                d += np.where(den != 0.0, p * ndu[:, j - 1, p - 1] / safe, 0.0)
            if j <= p - 1:
                den = knots[spans + j + 1] - knots[spans + j + 1 - p]
                safe = np.where(den == 0.0, 1.0, den)
                d -= np.where(den != 0.0, p * ndu[:, j, p - 1] / safe, 0.0)
            ders[:, j] = d
    return spans, values, ders


def bezier_knot_vector(multiplicity: int, lo: float = -1.0, hi: float = 1.0) -> KnotVector:
    """Knot vector {lo,...,lo, hi,...,hi} whose basis is the Bernstein basis.

    ``multiplicity`` copies of each end knot give degree ``multiplicity - 1``
    and exactly ``multiplicity`` basis functions on the single span.
    """
    if multiplicity < 1:
        raise ValueError("multiplicity must be >= 1")
    knots = np.r_[np.full(multiplicity, lo), np.full(multiplicity, hi)]
    return KnotVector(knots, multiplicity - 1)


def bernstein_values(degree: int, xi: np.ndarray) -> np.ndarray:
    """Bernstein polynomials of the given degree on [-1, 1].

    Returns an array of shape ``(len(xi), degree + 1)``.  Closed form,
    consistent with `eval_basis` on `bezier_knot_vector(degree + 1)`.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    t = 0.5 * (xi + 1.0)
    out = np.empty((xi.size, degree + 1))
    for k in range(degree + 1):
        out[:, k] = math.comb(degree, k) * t**k * (1.0 - t) ** (degree - k)
    return out
