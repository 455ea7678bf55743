"""Quadrature rules, global point distribution and special integrators.

`distribute_points` places a tensor-product Gauss-Legendre rule on every
leaf of the element partition and assembles the global quadrature point
set: parametric, reference and physical coordinates, unit normals and the
combined weights ``w * J_ref * G`` that appear in the discrete boundary
integral operators.  Gauss rules are of open type, so points never sit on
element boundaries.

Three integrators back the locally corrected entries:

* `adaptive_integrate`: worst-first bisection with an embedded Gauss pair,
  for regular and nearly singular integrands (vector valued).
* `log_singular_integrate_1d`: interval with an interior logarithmic
  singularity; each side is smoothed with a cubic clustering substitution.
  Integrands receive both the coordinate and its exact distance to the
  singular point, which keeps the logarithm accurate arbitrarily close
  to the singularity.
* `duffy_integrate`: 1/r-type singularity on a 2d parameter box; the box
  is fanned into triangles around the singular point and the Duffy map
  cancels the singularity, with escalating Gauss orders until the
  tolerance is certified.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import AccuracyError
from .geometry import eval_point_batch
from .partition import ElementPartition

__all__ = [
    "QuadratureRule",
    "gauss_legendre",
    "Leaf",
    "QuadraturePointSet",
    "distribute_points",
    "adaptive_integrate",
    "log_singular_integrate_1d",
    "duffy_integrate",
]

MAX_RULE_POINTS = 64


@dataclass(frozen=True)
class QuadratureRule:
    """1d Gauss-Legendre nodes and weights on [-1, 1].

    ``order`` is the convergence-order model used throughout this
    artifact: an n-point rule is assigned order n.
    """

    n: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return self.n


@lru_cache(maxsize=None)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n_points: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``1 <= n_points <= MAX_RULE_POINTS``."""
    if not (1 <= n_points <= MAX_RULE_POINTS):
        raise ValueError(f"rule size must be in [1, {MAX_RULE_POINTS}], got {n_points}")
    x, w = _leggauss(n_points)
    return QuadratureRule(n=n_points, nodes=x, weights=w)


# ---------------------------------------------------------------------------
# global point distribution
# ---------------------------------------------------------------------------


@dataclass
class Leaf:
    """One integration element with its share of the global point list."""

    patch_index: int
    element_index: int
    box: np.ndarray
    level: int
    transform: np.ndarray
    start: int = 0
    count: int = 0
    samples: np.ndarray | None = None
    diam: float = 0.0

    @property
    def pdim(self) -> int:
        return self.box.shape[0]

    @property
    def point_slice(self) -> slice:
        return slice(self.start, self.start + self.count)


@dataclass
class QuadraturePointSet:
    """Global quadrature/collocation points of a discretization."""

    patches: list
    rule: QuadratureRule
    leaves: list
    param: np.ndarray
    ref: np.ndarray
    phys: np.ndarray
    normal: np.ndarray
    weight: np.ndarray
    leaf_of_point: np.ndarray
    patch_of_point: np.ndarray

    @property
    def num_points(self) -> int:
        return self.phys.shape[0]

    @property
    def dim(self) -> int:
        return self.phys.shape[1]

    @property
    def pdim(self) -> int:
        return self.param.shape[1]


def _leaf_sample_params(box: np.ndarray) -> np.ndarray:
    """Parametric probe locations for physical extent estimates.

    3 points (ends and middle) for intervals, a 3 x 3 grid (corners, edge
    midpoints, centre) for boxes.
    """
    if box.shape[0] == 1:
        lo, hi = box[0]
        return np.array([[lo], [0.5 * (lo + hi)], [hi]])
    g1 = np.array([box[0, 0], 0.5 * (box[0, 0] + box[0, 1]), box[0, 1]])
    g2 = np.array([box[1, 0], 0.5 * (box[1, 0] + box[1, 1]), box[1, 1]])
    a, b = np.meshgrid(g1, g2, indexing="ij")
    return np.c_[a.ravel(), b.ravel()]


def distribute_points(partitions, rule: QuadratureRule) -> QuadraturePointSet:
    """Distribute the tensor rule over all leaves of the partitions.

    ``partitions`` is one `ElementPartition` or a list of them, one per
    patch.  Curve leaves get n points, surface leaves n^2 (direction-1
    nodes vary fastest).  The output is deterministic: identical inputs
    produce bit-identical point sets.
    """
    if isinstance(partitions, ElementPartition):
        partitions = [partitions]
    patches = [p.patch for p in partitions]
    pdim = patches[0].parametric_dim
    if any(p.parametric_dim != pdim for p in patches):
        raise ValueError("all patches must share the parametric dimension")

    xi1 = rule.nodes
    if pdim == 1:
        ref_local = xi1[:, None]
        w_local = rule.weights
    else:
        # tensor grid, direction-1 nodes vary fastest
        r1 = np.tile(xi1, rule.n)
        r2 = np.repeat(xi1, rule.n)
        ref_local = np.c_[r1, r2]
        w_local = np.tile(rule.weights, rule.n) * np.repeat(rule.weights, rule.n)

    leaves: list[Leaf] = []
    all_param = []
    all_ref = []
    all_weight = []
    leaf_of_point = []
    patch_of_point = []
    start = 0
    for pi, part in enumerate(partitions):
        for ei, node in part.leaves():
            box = node.box
            lo = box[:, 0]
            hi = box[:, 1]
            u = lo[None, :] + 0.5 * (ref_local + 1.0) * (hi - lo)[None, :]
            j_ref = float(np.prod(0.5 * (hi - lo)))
            leaf = Leaf(
                patch_index=pi,
                element_index=ei,
                box=box.copy(),
                level=node.level,
                transform=node.accumulated_transform(),
                start=start,
                count=u.shape[0],
            )
            leaves.append(leaf)
            all_param.append(u)
            all_ref.append(ref_local)
            all_weight.append(w_local * j_ref)
            leaf_of_point.extend([len(leaves) - 1] * u.shape[0])
            patch_of_point.extend([pi] * u.shape[0])
            start += u.shape[0]

    param = np.vstack(all_param)
    ref = np.vstack(all_ref)
    weight = np.concatenate(all_weight)
    leaf_of_point = np.asarray(leaf_of_point, dtype=int)
    patch_of_point = np.asarray(patch_of_point, dtype=int)

    dim = patches[0].dim
    phys = np.empty((param.shape[0], dim))
    normal = np.empty((param.shape[0], dim))
    gram = np.empty(param.shape[0])
    for pi, patch in enumerate(patches):
        sel = patch_of_point == pi
        if not np.any(sel):
            continue
        x, nrm, g = eval_point_batch(patch, param[sel])
        phys[sel] = x
        normal[sel] = nrm
        gram[sel] = g
    weight = weight * gram

    # physical extent probes per leaf
    for leaf in leaves:
        probes = _leaf_sample_params(leaf.box)
        x, _, _ = eval_point_batch(patches[leaf.patch_index], probes)
        leaf.samples = x
        diff = x[:, None, :] - x[None, :, :]
        leaf.diam = float(np.sqrt((diff**2).sum(-1)).max())

    return QuadraturePointSet(
        patches=patches,
        rule=rule,
        leaves=leaves,
        param=param,
        ref=ref,
        phys=phys,
        normal=normal,
        weight=weight,
        leaf_of_point=leaf_of_point,
        patch_of_point=patch_of_point,
    )


# ---------------------------------------------------------------------------
# adaptive integration
# ---------------------------------------------------------------------------

_RULE_LO = 8
_RULE_HI = 12


def _as_box(box) -> np.ndarray:
    box = np.asarray(box, float)
    if box.ndim == 1:
        box = box[None, :]
    return box


def _box_nodes(box: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss nodes/weights of a (k, 2) box; 1d boxes give (m,) points."""
    x, w = _leggauss(n)
    k = box.shape[0]
    if k == 1:
        lo, hi = box[0]
        pts = lo + 0.5 * (x + 1.0) * (hi - lo)
        return pts, w * 0.5 * (hi - lo)
    p1 = box[0, 0] + 0.5 * (x + 1.0) * (box[0, 1] - box[0, 0])
    p2 = box[1, 0] + 0.5 * (x + 1.0) * (box[1, 1] - box[1, 0])
    a = np.tile(p1, n)
    b = np.repeat(p2, n)
    ww = np.tile(w, n) * np.repeat(w, n)
    scale = 0.25 * (box[0, 1] - box[0, 0]) * (box[1, 1] - box[1, 0])
    return np.c_[a, b], ww * scale


def _columns(vals) -> np.ndarray:
    vals = np.asarray(vals, float)
    return vals[:, None] if vals.ndim == 1 else vals


def _eval_panel(f, box: np.ndarray) -> tuple[np.ndarray, float, bool]:
    """Embedded-pair estimate on one box: (fine value, error estimate, scalar?)."""
    pts_lo, w_lo = _box_nodes(box, _RULE_LO)
    pts_hi, w_hi = _box_nodes(box, _RULE_HI)
    raw = np.asarray(f(pts_lo), float)
    scalar = raw.ndim == 1
    i_lo = w_lo @ _columns(raw)
    i_hi = w_hi @ _columns(f(pts_hi))
    return i_hi, float(np.max(np.abs(i_hi - i_lo))), scalar


def _split_box(box: np.ndarray) -> list[np.ndarray]:
    k = box.shape[0]
    halves = []
    for d in range(k):
        lo, hi = box[d]
        mid = 0.5 * (lo + hi)
        halves.append([(lo, mid), (mid, hi)])
    if k == 1:
        return [np.array([h]) for h in halves[0]]
    return [np.array([h1, h2]) for h2 in halves[1] for h1 in halves[0]]


def adaptive_integrate(
    f,
    box,
    tol: float,
    *,
    max_depth: int = 30,
    max_panels: int = 4096,
    abs_floor: float = 0.0,
) -> tuple[np.ndarray | float, float]:
    """Adaptive panel integration of a (vector-valued) integrand over a box.

    ``f(points)`` receives an array of coordinates ((m,) for intervals,
    (m, 2) for boxes) and returns (m,) or (m, ncomp) values.  Panels are
    bisected worst-first until the summed error estimate drops below
    ``max(tol * max|integral|, abs_floor)``; the absolute floor guards
    against endless refinement when components cancel to nearly zero.
    Returns ``(value, error_estimate)``.

    Raises
    ------
    AccuracyError
        If the subdivision depth or panel budget is exhausted; the error
        carries the best estimate.
    """
    box = _as_box(box)
    value, err, scalar_out = _eval_panel(f, box)
    heap = [(-err, 0, 0)]
    panels = {0: (box, value, err, 0)}
    counter = 1
    total = value.copy()
    total_err = err

    def _threshold() -> float:
        return max(tol * max(float(np.max(np.abs(total))), 1e-300), abs_floor)

    while total_err > _threshold():
        if len(panels) >= max_panels:
            raise AccuracyError(
                "panel budget exhausted in adaptive integration",
                best_estimate=_maybe_scalar(total, scalar_out),
                error_estimate=total_err,
            )
        neg_err, _, key = heapq.heappop(heap)
        if key not in panels:
            continue
        pbox, pval, perr, pdepth = panels.pop(key)
        if pdepth >= max_depth:
            raise AccuracyError(
                "subdivision depth exhausted in adaptive integration",
                best_estimate=_maybe_scalar(total, scalar_out),
                error_estimate=total_err,
            )
        total = total - pval
        total_err -= perr
        for child in _split_box(pbox):
            cval, cerr, _ = _eval_panel(f, child)
            panels[counter] = (child, cval, cerr, pdepth + 1)
            heapq.heappush(heap, (-cerr, counter, counter))
            counter += 1
            total = total + cval
            total_err += cerr
    return _maybe_scalar(total, scalar_out), total_err


def _maybe_scalar(value: np.ndarray, scalar_out: bool):
    value = np.asarray(value).ravel()
    if scalar_out and value.size == 1:
        return float(value[0])
    return value


def log_singular_integrate_1d(f, u0: float, a: float, b: float, tol: float, *, abs_floor: float = 0.0):
    """Integral over [a, b] of an integrand with a log singularity at u0.

    The integrand is called as ``f(us, ts)`` where ``ts`` holds the exact
    positive offsets ``|us - u0|``; a logarithmic factor should be
    computed from ``ts`` (``np.log(ts)``), everything else from ``us``.
    Each side of u0 is transformed with the clustering substitution
    t = L s^3 before adaptive integration, which makes the integrand
    bounded and integrable to high accuracy.

    Returns the integral value (scalar or vector following f's output).
    """
    if not (a <= u0 <= b):
        raise ValueError("singular point must lie inside the interval")
    pieces = []
    for sign, length in ((-1.0, u0 - a), (1.0, b - u0)):
        if length <= 0.0:
            continue

        def side(ss, sign=sign, length=length):
            ts = length * ss**3
            us = u0 + sign * ts
            vals = np.asarray(f(us, ts), float)
            jac = 3.0 * length * ss**2
            if vals.ndim == 1:
                return vals * jac
            return vals * jac[:, None]

        val, _ = adaptive_integrate(side, np.array([0.0, 1.0]), tol, abs_floor=abs_floor)
        pieces.append(np.atleast_1d(np.asarray(val, float)))
    total = np.sum(pieces, axis=0)
    if total.size == 1:
        return float(total[0])
    return total


_DUFFY_ORDERS = (4, 6, 8, 12, 16, 24, 32, 48)


def duffy_integrate(
    f, box, singular_point, tol: float, *, abs_floor: float = 0.0, return_parts: bool = False
):
    """Integrate a 1/r-singular function over a 2d box.

    The box is fanned into triangles around ``singular_point`` (inside or
    on the closed box); each triangle is mapped from the unit square by
    the Duffy transformation whose Jacobian cancels the 1/r singularity.
    Gauss orders escalate until two successive estimates agree within
    ``tol`` relative to the result; if the order ladder is exhausted (large
    strongly curved elements), the transformed and now regular integrand
    is handed to adaptive panel subdivision instead.

    ``f(points)`` receives (m, 2) coordinates, never equal to the
    singular point itself, and returns (m,) or (m, ncomp).
    """
    box = _as_box(box)
    x0 = np.asarray(singular_point, float)
    if np.any(x0 < box[:, 0] - 1e-12) or np.any(x0 > box[:, 1] + 1e-12):
        raise ValueError("singular point must lie in the closed box")
    corners = np.array(
        [
            [box[0, 0], box[1, 0]],
            [box[0, 1], box[1, 0]],
            [box[0, 1], box[1, 1]],
            [box[0, 0], box[1, 1]],
        ]
    )
    tris = []
    for i in range(4):
        v1 = corners[i]
        v2 = corners[(i + 1) % 4]
        det = (v1[0] - x0[0]) * (v2[1] - x0[1]) - (v1[1] - x0[1]) * (v2[0] - x0[0])
        if abs(det) > 1e-14 * max(1.0, float(np.max(box[:, 1] - box[:, 0])) ** 2):
            tris.append((v1, v2, det))

    def estimate(order):
        x, w = _leggauss(order)
        s = 0.5 * (x + 1.0)
        ws = 0.5 * w
        as_ = np.tile(s, order)
        bs_ = np.repeat(s, order)
        wq = np.tile(ws, order) * np.repeat(ws, order)
        parts = []
        for v1, v2, det in tris:
            d1 = v1 - x0
            d2 = v2 - x0
            dirs = (1.0 - bs_)[:, None] * d1[None, :] + bs_[:, None] * d2[None, :]
            pts = x0[None, :] + as_[:, None] * dirs
            jac = as_ * abs(det)
            vals = np.asarray(f(pts), float)
            if vals.ndim == 1:
                parts.append((wq * jac) @ vals[:, None])
            else:
                parts.append((wq * jac) @ vals)
        return parts

    prev = None
    for order in _DUFFY_ORDERS:
        parts = estimate(order)
        total = np.sum(parts, axis=0)
        if prev is not None:
            err = float(np.max(np.abs(total - prev)))
            scale = max(float(np.max(np.abs(total))), 1e-300)
            if err <= max(tol * scale, abs_floor):
                result = _maybe_scalar(total, total.size == 1)
                if return_parts:
                    return result, [
                        _maybe_scalar(p, p.size == 1) for p in parts
                    ]
                return result
        prev = total

    # order ladder exhausted: subdivide the transformed square adaptively
    parts = []
    for v1, v2, det in tris:
        d1 = v1 - x0
        d2 = v2 - x0

        def transformed(st, d1=d1, d2=d2, det=det):
            s, t = st[:, 0], st[:, 1]
            dirs = (1.0 - t)[:, None] * d1[None, :] + t[:, None] * d2[None, :]
            pts = x0[None, :] + s[:, None] * dirs
            vals = _columns(f(pts))
            return vals * (s * abs(det))[:, None]

        val, _ = adaptive_integrate(
            transformed,
            np.array([[0.0, 1.0], [0.0, 1.0]]),
            tol,
            abs_floor=max(abs_floor, 0.25 * tol * float(np.max(np.abs(prev)))),
        )
        parts.append(np.atleast_1d(val))
    total = np.sum(parts, axis=0)
    result = _maybe_scalar(total, total.size == 1)
    if return_parts:
        return result, [_maybe_scalar(p, p.size == 1) for p in parts]
    return result
