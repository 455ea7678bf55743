"""NURBS curves and tensor-product surfaces.

Control points are stored in homogeneous form (w * P, w); evaluation maps
the homogeneous B-spline point back to physical space through the
perspective map x = x^w / w.  All evaluators come in a scalar flavour
(one parametric point) and a batch flavour operating on arrays, which is
the path used by quadrature and assembly.

The boundary normal convention: for plane curves the normal is the unit
tangent rotated by -90 degrees (outward for a counterclockwise boundary);
for surfaces it is the normalized cross product of the Jacobian columns.
A per-patch ``orientation`` flag of -1 reverses either.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GeometryError
from .splines import KnotVector, eval_basis_batch, eval_basis_deriv_batch

__all__ = [
    "ControlPointH",
    "NurbsPatch",
    "perspective_map",
    "eval_curve",
    "eval_curve_jacobian",
    "eval_surface",
    "eval_surface_jacobian",
    "gram_det",
    "unit_normal",
    "curve_frame",
    "surface_frame",
    "eval_point",
    "eval_point_batch",
]


@dataclass(frozen=True)
class ControlPointH:
    """A control point in homogeneous form: weighted coordinates and weight."""

    weighted_coords: np.ndarray
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "weighted_coords", np.asarray(self.weighted_coords, float))
        if self.weight <= 0.0:
            raise GeometryError("control point weight must be positive")

    @property
    def position(self) -> np.ndarray:
        return self.weighted_coords / self.weight


@dataclass(frozen=True)
class NurbsPatch:
    """A NURBS curve (parametric_dim 1) or tensor-product surface (2).

    Attributes
    ----------
    dim : int
        Spatial dimension, 2 or 3.
    knot_vectors : tuple of KnotVector
        One per parametric direction.
    control_points_w : np.ndarray
        Weighted control coordinates w * P, shape ``(n1, dim)`` for curves
        and ``(n1, n2, dim)`` for surfaces (direction 1 is the first axis).
    weights : np.ndarray
        Positive weights, shape ``(n1,)`` or ``(n1, n2)``.
    boundary_condition : str
        ``"dirichlet"`` or ``"neumann"`` tag used by the direct formulation.
    orientation : int
        +1 or -1, flips the boundary normal.
    """

    dim: int
    knot_vectors: tuple
    control_points_w: np.ndarray
    weights: np.ndarray
    boundary_condition: str = "dirichlet"
    orientation: int = 1

    def __post_init__(self):
        object.__setattr__(self, "knot_vectors", tuple(self.knot_vectors))
        cp = np.asarray(self.control_points_w, float)
        w = np.asarray(self.weights, float)
        object.__setattr__(self, "control_points_w", cp)
        object.__setattr__(self, "weights", w)
        if self.dim not in (2, 3):
            raise GeometryError(f"spatial dimension must be 2 or 3, got {self.dim}")
        pdim = len(self.knot_vectors)
        if pdim not in (1, 2):
            raise GeometryError("only curves and surfaces are supported")
        expected = tuple(kv.num_basis for kv in self.knot_vectors)
        if cp.shape != expected + (self.dim,):
            raise GeometryError(
                f"control net shape {cp.shape} does not match knot vectors "
                f"(expected {expected + (self.dim,)})"
            )
        if w.shape != expected:
            raise GeometryError(f"weights shape {w.shape} does not match net {expected}")
        if np.any(w <= 0.0):
            raise GeometryError("all weights must be positive")
        if self.boundary_condition not in ("dirichlet", "neumann"):
            raise GeometryError(f"unknown boundary condition {self.boundary_condition!r}")
        if self.orientation not in (-1, 1):
            raise GeometryError("orientation must be +1 or -1")

    @classmethod
    def from_points(
        cls,
        points,
        weights,
        knot_vectors,
        dim=None,
        boundary_condition="dirichlet",
        orientation=1,
    ) -> "NurbsPatch":
        """Build a patch from unweighted control points."""
        points = np.asarray(points, float)
        weights = np.asarray(weights, float)
        if dim is None:
            dim = points.shape[-1]
        cp_w = points * weights[..., None]
        return cls(
            dim=dim,
            knot_vectors=tuple(knot_vectors),
            control_points_w=cp_w,
            weights=weights,
            boundary_condition=boundary_condition,
            orientation=orientation,
        )

    @property
    def parametric_dim(self) -> int:
        return len(self.knot_vectors)

    @property
    def domain(self) -> list[tuple[float, float]]:
        return [kv.domain for kv in self.knot_vectors]

    def control_point(self, *indices) -> ControlPointH:
        return ControlPointH(self.control_points_w[indices], float(self.weights[indices]))

    def control_positions(self) -> np.ndarray:
        """Projected (physical) control point positions."""
        return self.control_points_w / self.weights[..., None]


def perspective_map(xh: np.ndarray) -> np.ndarray:
    """Project a homogeneous point (x^w, w) in R^{d+1} to x = x^w / w in R^d."""
    xh = np.asarray(xh, float)
    w = xh[..., -1]
    if np.any(w == 0.0):
        raise GeometryError("perspective map undefined for zero weight")
    return xh[..., :-1] / w[..., None]


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------


def curve_frame(patch: NurbsPatch, us) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Points, tangents, unit normals and speeds of a plane curve, batched.

    Returns ``(x, jac, normal, speed)`` with shapes (n, d), (n, d), (n, d), (n,).
    For d=3 curves the normal entries are NaN (undefined without a surface).
    """
    if patch.parametric_dim != 1:
        raise GeometryError("curve_frame requires a curve patch")
    kv = patch.knot_vectors[0]
    us = np.atleast_1d(np.asarray(us, float))
    spans, vals, ders = eval_basis_deriv_batch(kv, us)
    p = kv.degree
    idx = spans[:, None] - p + np.arange(p + 1)[None, :]
    cw = patch.control_points_w[idx]  # (n, p+1, d)
    ww = patch.weights[idx]  # (n, p+1)
    xw = np.einsum("nj,njd->nd", vals, cw)
    w = np.einsum("nj,nj->n", vals, ww)
    dxw = np.einsum("nj,njd->nd", ders, cw)
    dw = np.einsum("nj,nj->n", ders, ww)
    if np.any(w == 0.0):
        raise GeometryError("zero homogeneous weight on curve")
    x = xw / w[:, None]
    jac = (dxw * w[:, None] - xw * dw[:, None]) / (w**2)[:, None]
    speed = np.linalg.norm(jac, axis=1)
    if np.any(speed <= 0.0):
        raise GeometryError("vanishing curve Jacobian (invalid mapping)")
    if patch.dim == 2:
        tangent = jac / speed[:, None]
        normal = patch.orientation * np.c_[tangent[:, 1], -tangent[:, 0]]
    else:
        normal = np.full_like(jac, np.nan)
    return x, jac, normal, speed


def eval_curve(patch: NurbsPatch, u: float) -> np.ndarray:
    """Physical point of a NURBS curve at parameter u."""
    x, _, _, _ = curve_frame(patch, [u])
    return x[0]


def eval_curve_jacobian(patch: NurbsPatch, u: float) -> np.ndarray:
    """Tangent vector d(chi)/du of a NURBS curve at u."""
    _, jac, _, _ = curve_frame(patch, [u])
    return jac[0]


# ---------------------------------------------------------------------------
# surfaces
# ---------------------------------------------------------------------------


def surface_frame(
    patch: NurbsPatch, u1s, u2s
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Points, Jacobians, unit normals and Gram determinants, batched.

    ``u1s`` and ``u2s`` are equally long arrays of parametric coordinates.
    Returns ``(x, jac, normal, gram)`` with shapes (n, d), (n, d, 2),
    (n, d) and (n,); ``gram`` is sqrt(det(J^T J)).
    """
    if patch.parametric_dim != 2:
        raise GeometryError("surface_frame requires a surface patch")
    kv1, kv2 = patch.knot_vectors
    u1s = np.atleast_1d(np.asarray(u1s, float))
    u2s = np.atleast_1d(np.asarray(u2s, float))
    s1, v1, d1 = eval_basis_deriv_batch(kv1, u1s)
    s2, v2, d2 = eval_basis_deriv_batch(kv2, u2s)
    p1, p2 = kv1.degree, kv2.degree
    i1 = s1[:, None] - p1 + np.arange(p1 + 1)[None, :]
    i2 = s2[:, None] - p2 + np.arange(p2 + 1)[None, :]
    cw = patch.control_points_w[i1[:, :, None], i2[:, None, :]]  # (n, p1+1, p2+1, d)
    ww = patch.weights[i1[:, :, None], i2[:, None, :]]  # (n, p1+1, p2+1)

    xw = np.einsum("na,nb,nabd->nd", v1, v2, cw)
    w = np.einsum("na,nb,nab->n", v1, v2, ww)
    dxw1 = np.einsum("na,nb,nabd->nd", d1, v2, cw)
    dw1 = np.einsum("na,nb,nab->n", d1, v2, ww)
    dxw2 = np.einsum("na,nb,nabd->nd", v1, d2, cw)
    dw2 = np.einsum("na,nb,nab->n", v1, d2, ww)
    if np.any(w == 0.0):
        raise GeometryError("zero homogeneous weight on surface")
    x = xw / w[:, None]
    j1 = (dxw1 * w[:, None] - xw * dw1[:, None]) / (w**2)[:, None]
    j2 = (dxw2 * w[:, None] - xw * dw2[:, None]) / (w**2)[:, None]
    jac = np.stack([j1, j2], axis=2)
    if patch.dim == 3:
        cross = np.cross(j1, j2)
        gram = np.linalg.norm(cross, axis=1)
        if np.any(gram <= 0.0):
            raise GeometryError("non-positive Gram determinant (invalid mapping)")
        normal = patch.orientation * cross / gram[:, None]
    else:
        g = np.einsum("ndi,ndj->nij", jac, jac)
        det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]
        if np.any(det <= 0.0):
            raise GeometryError("non-positive Gram determinant (invalid mapping)")
        gram = np.sqrt(det)
        normal = np.full_like(x, np.nan)
    return x, jac, normal, gram


def eval_surface(patch: NurbsPatch, u) -> np.ndarray:
    """Physical point of a NURBS surface at parameters (u1, u2)."""
    x, _, _, _ = surface_frame(patch, [u[0]], [u[1]])
    return x[0]


def eval_surface_jacobian(patch: NurbsPatch, u) -> np.ndarray:
    """d x 2 Jacobian; columns are the partial derivatives."""
    _, jac, _, _ = surface_frame(patch, [u[0]], [u[1]])
    return jac[0]


# ---------------------------------------------------------------------------
# generic dispatch
# ---------------------------------------------------------------------------


def gram_det(patch: NurbsPatch, u) -> float:
    """sqrt(det(J^T J)) at u; for curves this is the parametric speed |dchi/du|."""
    if patch.parametric_dim == 1:
        u = np.atleast_1d(np.asarray(u, float))
        _, _, _, speed = curve_frame(patch, u)
        return float(speed[0])
    _, _, _, gram = surface_frame(patch, [u[0]], [u[1]])
    return float(gram[0])


def unit_normal(patch: NurbsPatch, u) -> np.ndarray:
    """Outward unit normal at u (honours the patch orientation flag)."""
    if patch.parametric_dim == 1:
        _, _, normal, _ = curve_frame(patch, np.atleast_1d(np.asarray(u, float)))
    else:
        _, _, normal, _ = surface_frame(patch, [u[0]], [u[1]])
    return normal[0]


def eval_point(patch: NurbsPatch, u) -> np.ndarray:
    """Physical point for either parametric dimension (u scalar or pair)."""
    if patch.parametric_dim == 1:
        return eval_curve(patch, float(np.atleast_1d(u)[0]))
    u = np.asarray(u, float).reshape(-1)
    return eval_surface(patch, (u[0], u[1]))


def eval_point_batch(patch: NurbsPatch, us: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched (points, normals, gram) for parametric coordinates ``us``.

    ``us`` has shape (n, parametric_dim).
    """
    us = np.asarray(us, float)
    if patch.parametric_dim == 1:
        x, _, normal, speed = curve_frame(patch, us[:, 0])
        return x, normal, speed
    x, _, normal, gram = surface_frame(patch, us[:, 0], us[:, 1])
    return x, normal, gram
