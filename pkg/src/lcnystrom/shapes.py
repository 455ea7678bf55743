"""Builders for the geometries shipped with the package.

All builders return `NurbsPatch` objects (or lists of them) with open
clamped knot vectors:

* ``unit_circle`` / ``circle``: exact rational quadratic circle from four
  90-degree arcs (nine control points).
* ``flower``: smooth closed quartic B-spline with a five-lobed radial
  perturbation, fitted by constrained least squares so that position and
  the first three derivatives match at the seam.
* ``teardrop``: closed cubic with a single 90-degree corner at the seam.
* ``torus``: exact rational biquadratic torus of revolution.
* ``quarter_circle_arc``, ``straight_segment``, ``flat_square``: small
  primitives used mostly by the test-suite.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import BSpline

from .geometry import NurbsPatch
from .splines import KnotVector

__all__ = [
    "straight_segment",
    "quarter_circle_arc",
    "unit_circle",
    "circle",
    "flat_square",
    "flower",
    "teardrop",
    "torus",
    "write_geometry_file",
]

_SQ2 = np.sqrt(2.0) / 2.0


def straight_segment(a=(0.0, 0.0), b=(2.0, 0.0), bc="dirichlet") -> NurbsPatch:
    """Degree-1 line segment from a to b over the knot domain [0, 1]."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    kv = KnotVector([0.0, 0.0, 1.0, 1.0], 1)
    return NurbsPatch.from_points(
        np.array([a, b]), np.array([1.0, 1.0]), (kv,), boundary_condition=bc
    )


def quarter_circle_arc() -> NurbsPatch:
    """Rational quadratic quarter of the unit circle from (1,0) to (0,1)."""
    kv = KnotVector([0, 0, 0, 1, 1, 1], 2)
    pts = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    w = np.array([1.0, _SQ2, 1.0])
    return NurbsPatch.from_points(pts, w, (kv,))


def circle(radius=1.0, center=(0.0, 0.0), bc="dirichlet") -> NurbsPatch:
    """Exact full circle, counterclockwise, as one rational quadratic patch."""
    cx, cy = center
    kv = KnotVector([0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 4], 2)
    ring = np.array(
        [
            [1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0],
            [-1, -1], [0, -1], [1, -1], [1, 0],
        ],
        dtype=float,
    )
    pts = ring * radius + np.array([cx, cy])
    w = np.array([1, _SQ2, 1, _SQ2, 1, _SQ2, 1, _SQ2, 1], dtype=float)
    return NurbsPatch.from_points(pts, w, (kv,), boundary_condition=bc)


def unit_circle() -> NurbsPatch:
    return circle(1.0)


def flat_square() -> NurbsPatch:
    """Bilinear unit square surface embedded in the plane z = 0 (d = 3)."""
    kv = KnotVector([0.0, 0.0, 1.0, 1.0], 1)
    pts = np.array(
        [[[0, 0, 0], [0, 1, 0]], [[1, 0, 0], [1, 1, 0]]], dtype=float
    )
    w = np.ones((2, 2))
    return NurbsPatch.from_points(pts, w, (kv, kv))


def _closed_fit(samples_fn, degree, num_ctrl, num_samples=600):
    """Least-squares fit of a closed curve with C^{degree-1} seam continuity.

    ``samples_fn(t)`` maps parameters in [0, 1) to points.  The last
    control point is identified with the first one, and derivatives of
    order 1..degree-1 are constrained to match at the seam.
    """
    n_interior = num_ctrl + degree + 1 - 2 * (degree + 1)
    t = np.r_[
        np.zeros(degree + 1),
        np.arange(1, n_interior + 1) / (n_interior + 1),
        np.ones(degree + 1),
    ]

    def design(us, nu=0):
        a = np.zeros((len(us), num_ctrl))
        for i in range(num_ctrl):
            coef = np.zeros(num_ctrl)
            coef[i] = 1.0
            a[:, i] = BSpline(t, coef, degree)(us, nu=nu)
        return a

    uu = (np.arange(num_samples) + 0.5) / num_samples
    target = samples_fn(uu)
    a_full = design(uu)
    # identify last control point with the first
    a = a_full[:, :-1].copy()
    a[:, 0] += a_full[:, -1]
    rows = []
    for nu in range(1, degree):
        r_full = design(np.array([0.0]), nu)[0] - design(np.array([1.0]), nu)[0]
        r = r_full[:-1].copy()
        r[0] += r_full[-1]
        rows.append(r)
    c = np.array(rows)
    n = num_ctrl - 1
    kkt = np.block([[a.T @ a, c.T], [c, np.zeros((c.shape[0], c.shape[0]))]])
    rhs = np.r_[a.T @ target, np.zeros((c.shape[0], target.shape[1]))]
    sol = np.linalg.solve(kkt, rhs)
    ctrl = np.vstack([sol[:n], sol[:1]])
    return t, ctrl


def flower(scale=1.5, lobes=5, amplitude=0.2, num_ctrl=20) -> NurbsPatch:
    """Smooth closed quartic curve with radius ~ scale * (1 + amplitude*cos(lobes*theta)).

    Counterclockwise; the seam is C^3 so there is no corner anywhere on
    the boundary.  The default scale keeps the logarithmic capacity of
    the contour away from one, which matters for first-kind systems.
    """
    degree = 4

    def samples(uu):
        th = 2.0 * np.pi * uu
        r = scale * (1.0 + amplitude * np.cos(lobes * th))
        return np.c_[r * np.cos(th), r * np.sin(th)]

    knots, ctrl = _closed_fit(samples, degree, num_ctrl)
    kv = KnotVector(knots, degree)
    return NurbsPatch.from_points(ctrl, np.ones(len(ctrl)), (kv,))


def teardrop(size=1.0) -> NurbsPatch:
    """Closed cubic with one corner of opening angle 90 degrees.

    The corner sits at (0, size); the bulb hangs below it.  The curve is
    C^2 everywhere except at the seam, where the two tangents enclose 90
    degrees measured inside the domain.  Counterclockwise.
    """
    s = np.sqrt(2.0) / 2.0
    c = 0.55 * size
    p0 = np.array([0.0, size])
    pts = np.array(
        [
            p0,
            p0 + c * np.array([-s, -s]),
            [-0.85 * size, -0.10 * size],
            [0.0, -0.75 * size],
            [0.85 * size, -0.10 * size],
            p0 + c * np.array([s, -s]),
            p0,
        ]
    )
    kv = KnotVector([0, 0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1, 1], 3)
    return NurbsPatch.from_points(pts, np.ones(7), (kv,))


def torus(r1=0.9, r2=0.2) -> NurbsPatch:
    """Exact NURBS torus; r1 is the centerline radius, r2 the tube radius.

    Parametric direction 1 runs around the tube (minor circle), direction
    2 around the axis (major circle).  With that ordering the raw cross
    product of the Jacobian columns points inward, so the patch carries
    orientation -1 to make the stored normal outward.
    """
    kv = KnotVector([0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 4], 2)
    # generatrix circle in the (rho, z) half-plane, centered at (r1, 0)
    rho = r1 + r2 * np.array([1, 1, 0, -1, -1, -1, 0, 1, 1], dtype=float)
    zz = r2 * np.array([0, 1, 1, 1, 0, -1, -1, -1, 0], dtype=float)
    wmin = np.array([1, _SQ2, 1, _SQ2, 1, _SQ2, 1, _SQ2, 1], dtype=float)
    # unit circle template for the revolution
    cx = np.array([1, 1, 0, -1, -1, -1, 0, 1, 1], dtype=float)
    cy = np.array([0, 1, 1, 1, 0, -1, -1, -1, 0], dtype=float)
    wmaj = wmin.copy()
    pts = np.empty((9, 9, 3))
    w = np.empty((9, 9))
    for i in range(9):
        for j in range(9):
            pts[i, j] = (rho[i] * cx[j], rho[i] * cy[j], zz[i])
            w[i, j] = wmin[i] * wmaj[j]
    return NurbsPatch.from_points(pts, w, (kv, kv), orientation=-1)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_geometry_file(path, patches) -> None:
    """Write patches in the plain-text geometry schema read by the harness."""
    if isinstance(patches, NurbsPatch):
        patches = [patches]
    lines = []
    for patch in patches:
        lines.append("patch")
        lines.append(f"dim {patch.dim}")
        lines.append(f"pdim {patch.parametric_dim}")
        lines.append("degree " + " ".join(str(kv.degree) for kv in patch.knot_vectors))
        for kv in patch.knot_vectors:
            lines.append("knots " + " ".join(_fmt(k) for k in kv.knots))
        weights = patch.weights.reshape(-1, order="C")
        lines.append("weights " + " ".join(_fmt(v) for v in weights))
        pos = patch.control_positions().reshape(-1, patch.dim, order="C")
        lines.append(
            "control_points "
            + "  ".join(" ".join(_fmt(v) for v in row) for row in pos)
        )
        lines.append(f"bc {patch.boundary_condition}")
        lines.append(f"orientation {patch.orientation:+d}")
        lines.append("end")
        lines.append("")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
