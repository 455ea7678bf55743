"""Dense Nystrom system matrices with locally corrected near-field entries.

Far-field entries are plain point evaluations, kernel(x_i, y_j) times the
combined quadrature weight.  Whenever the admissibility criterion
diam(leaf) <= eta * dist(x_i, leaf) fails, all entries of that row
belonging to the leaf are replaced by corrected weights: the solution of
a moment system that forces the quadrature to reproduce the integrals of
the true (singular) kernel against the leaf's Bezier test functions.

Moment integrals are routed by singularity type:

* collocation point on the leaf, single layer: logarithmic kernel
  splitting in 2d, Duffy transformation in 3d;
* collocation point on the leaf, double layer: in 2d the strongly
  singular (CPV) part is recovered from the rigid-body identity -- the
  constant-density integral over the whole boundary equals one half --
  while the bounded fluctuation part is integrated adaptively; 3d uses
  the Duffy transformation (the kernel is weakly singular there);
* collocation point off the leaf: two fixed-order estimates certify the
  tolerance, otherwise adaptive subdivision takes over.

Rows are independent: each row is a pure function of the immutable point
set, so assembling in any order (or in parallel) yields identical
matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import AccuracyError
from .geometry import eval_point_batch
from .kernels import KernelSet
from .quadrature import (
    QuadraturePointSet,
    _leggauss,
    adaptive_integrate,
    duffy_integrate,
    log_singular_integrate_1d,
)
from .splines import bernstein_values, bezier_knot_vector

__all__ = [
    "AssemblyConfig",
    "LocalCorrectionProblem",
    "SystemMatrices",
    "classify",
    "far_entry",
    "local_correction",
    "singular_moment",
    "assemble",
    "assemble_row",
    "corrected_row",
    "build_direct_system",
]


@dataclass(frozen=True)
class AssemblyConfig:
    """Knobs of the assembly stage.

    ``eta`` is the admissibility factor (far field iff
    diam <= eta * dist); ``moment_tol`` the relative tolerance of the
    singular/near-singular moment integrals; ``formulation`` selects
    which operators are built: ``"slp"`` (V), ``"dlp"`` (K) or
    ``"direct"`` (both).  ``correction_multiplicity`` overrides the knot
    multiplicity of the Bezier test space (default: the per-direction
    rule size, giving a square moment system).
    """

    eta: float = 2.0
    moment_tol: float = 1e-12
    formulation: str = "dlp"
    correction_multiplicity: int | None = None

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if self.moment_tol <= 0.0:
            raise ValueError("moment_tol must be positive")
        if self.formulation not in ("slp", "dlp", "direct"):
            raise ValueError(f"unknown formulation {self.formulation!r}")


@dataclass
class LocalCorrectionProblem:
    """One solved moment system: N w = g on a single leaf."""

    collocation_point: np.ndarray
    leaf_index: int
    test_knots: tuple
    matrix: np.ndarray
    moments: np.ndarray
    weights: np.ndarray
    residual: float


@dataclass
class SystemMatrices:
    """Dense operators of one discretization.

    ``K`` includes the integral-free jump term c = 1/2 on its diagonal
    blocks.  ``correction_residuals`` holds the max-norm residuals of all
    moment systems solved during assembly.
    """

    points: QuadraturePointSet
    kernels: KernelSet
    config: AssemblyConfig
    V: np.ndarray | None = None
    K: np.ndarray | None = None
    correction_residuals: np.ndarray | None = None
    near_pairs: int = 0
    engine: object = None

    @property
    def ncomp(self) -> int:
        return self.kernels.ncomp

    @property
    def ndof(self) -> int:
        return self.points.num_points * self.ncomp

    def dof_index(self, point_index: int, component: int = 0) -> int:
        """Row/column of a quadrature point (and component) in the system."""
        return point_index * self.ncomp + component


def classify(x, leaf, eta: float, *, is_self: bool = False) -> str:
    """Admissibility of one (collocation point, leaf) pair: "far" or "near".

    A pair is near (locally corrected) when dist(x, leaf) < eta * diam(leaf),
    so increasing eta never shrinks the corrected region and eta -> infinity
    corrects every element, while eta -> 0 leaves pure point evaluation.
    ``dist`` is measured to the leaf's physical probe samples; a leaf
    containing the collocation point itself (``is_self``) is always near.
    """
    if is_self:
        return "near"
    x = np.asarray(x, float)
    dist = float(np.min(np.linalg.norm(leaf.samples - x[None, :], axis=1)))
    return "near" if dist < eta * leaf.diam else "far"


def far_entry(kernels: KernelSet, kind: str, x, y, weight: float, normal_y=None):
    """Far-field matrix entry: kernel value times combined weight."""
    if kind == "slp":
        val = kernels.slp(np.asarray(x, float), np.asarray(y, float))
    else:
        val = kernels.dlp(np.asarray(x, float), np.asarray(y, float), np.asarray(normal_y, float))
    return val * weight


def _bernstein_rows(bdeg: int, xi: np.ndarray) -> np.ndarray:
    """Tensor Bernstein rows; xi has shape (m, pdim), output (m, nb)."""
    xi = np.atleast_2d(np.asarray(xi, float))
    b1 = bernstein_values(bdeg, xi[:, 0])
    if xi.shape[1] == 1:
        return b1
    b2 = bernstein_values(bdeg, xi[:, 1])
    m = xi.shape[0]
    return (b2[:, :, None] * b1[:, None, :]).reshape(m, -1)


class _RowEngine:
    """Shared immutable state and scratch caches for row-wise assembly."""

    def __init__(self, points: QuadraturePointSet, kernels: KernelSet, config: AssemblyConfig):
        self.points = points
        self.ks = kernels
        self.config = config
        self.ncomp = kernels.ncomp
        self.nc2 = self.ncomp * self.ncomp
        self.pdim = points.pdim
        n = points.rule.n
        self.mult = config.correction_multiplicity or n
        if self.mult < n:
            raise ValueError(
                "correction multiplicity must provide at least as many test "
                "functions per direction as quadrature points"
            )
        self.bdeg = self.mult - 1
        self.nb = self.mult**self.pdim

        # reference coordinates of the per-leaf rule (identical on every leaf)
        if self.pdim == 1:
            self.ref_local = points.rule.nodes[:, None]
        else:
            r1 = np.tile(points.rule.nodes, n)
            r2 = np.repeat(points.rule.nodes, n)
            self.ref_local = np.c_[r1, r2]
        self.pts_per_leaf = self.ref_local.shape[0]
        b_points = _bernstein_rows(self.bdeg, self.ref_local)
        self.nmat = b_points.T.copy()  # (nb, pts_per_leaf)
        self.square = self.nmat.shape[0] == self.nmat.shape[1]
        if self.square:
            try:
                self._lu = scipy.linalg.lu_factor(self.nmat)
            except scipy.linalg.LinAlgError:
                self.square = False
                self._lu = None
        else:
            self._lu = None
        self.test_knots = tuple(
            bezier_knot_vector(self.mult) for _ in range(self.pdim)
        )

        leaves = points.leaves
        self.nleaf = len(leaves)
        self.leaf_samples = np.stack([l.samples for l in leaves])  # (nleaf, ns, d)
        self.leaf_diam = np.array([l.diam for l in leaves])
        self.leaf_start = np.array([l.start for l in leaves])
        self.leaf_count = np.array([l.count for l in leaves])
        # smooth-moment order ladder (nodes cached per leaf and shared by
        # every collocation row); escalation certifies the tolerance and
        # only genuinely close pairs fall through to adaptive subdivision
        if self.pdim == 1:
            base = max(12, 2 * self.mult)
            self.orders = (base, base + 6, base + 14, base + 26)
        else:
            base = max(6, self.mult + 3)
            self.orders = (base, base + 3, base + 7, base + 13, base + 21)
        self._node_cache: dict[tuple[int, int], dict] = {}
        self._op_scale_cache: dict[str, float] = {}
        self.residuals: list[float] = []
        self.near_pairs = 0
        self.tier2_count = 0

    def op_scale(self, kind: str) -> float:
        """Magnitude of one uncorrected operator row, |kernel| . |weights|.

        Moment tolerances are taken relative to max(moment, op_scale): the
        effect of a moment error on the solution is bounded by its
        absolute size against the row scale, so tiny moments on tiny
        leaves do not demand impossible relative accuracy.
        """
        cached = self._op_scale_cache.get(kind)
        if cached is None:
            row = np.abs(self.base_row(self.points.phys[0], kind, 0))
            cached = max(float(row.sum() / self.nc2), 1e-30)
            self._op_scale_cache[kind] = cached
        return cached

    # -- cached per-leaf quadrature nodes for smooth moments ---------------

    def _leaf_nodes(self, li: int, order: int) -> dict:
        key = (li, order)
        cached = self._node_cache.get(key)
        if cached is not None:
            return cached
        leaf = self.points.leaves[li]
        box = leaf.box
        x1, w1 = _leggauss(order)
        if self.pdim == 1:
            lo, hi = box[0]
            u = (lo + 0.5 * (x1 + 1.0) * (hi - lo))[:, None]
            wp = w1 * 0.5 * (hi - lo)
        else:
            g1 = box[0, 0] + 0.5 * (x1 + 1.0) * (box[0, 1] - box[0, 0])
            g2 = box[1, 0] + 0.5 * (x1 + 1.0) * (box[1, 1] - box[1, 0])
            u = np.c_[np.tile(g1, order), np.repeat(g2, order)]
            wp = (
                np.tile(w1, order)
                * np.repeat(w1, order)
                * 0.25
                * (box[0, 1] - box[0, 0])
                * (box[1, 1] - box[1, 0])
            )
        patch = self.points.patches[leaf.patch_index]
        phys, normal, gram = eval_point_batch(patch, u)
        xi = self._to_ref(leaf, u)
        data = {
            "u": u,
            "w": wp * gram,
            "phys": phys,
            "normal": normal,
            "B": _bernstein_rows(self.bdeg, xi),
        }
        self._node_cache[key] = data
        return data

    def _to_ref(self, leaf, u: np.ndarray) -> np.ndarray:
        lo = leaf.box[:, 0]
        hi = leaf.box[:, 1]
        return 2.0 * (u - lo[None, :]) / (hi - lo)[None, :] - 1.0

    def _kernel_flat(self, kind: str, x: np.ndarray, phys: np.ndarray, normal: np.ndarray):
        if kind == "slp":
            vals = self.ks.slp(x, phys)
        else:
            vals = self.ks.dlp(x, phys, normal)
        return np.asarray(vals, float).reshape(phys.shape[0], self.nc2)

    # -- moment integrals ---------------------------------------------------

    def smooth_moments(self, x: np.ndarray, li: int, kind: str) -> np.ndarray:
        """Moments of a kernel that is regular on the leaf; (nb, nc2)."""
        tol = self.config.moment_tol
        prev = None
        for order in self.orders:
            data = self._leaf_nodes(li, order)
            cur = np.einsum(
                "m,mt,mc->tc",
                data["w"],
                data["B"],
                self._kernel_flat(kind, x, data["phys"], data["normal"]),
            )
            if prev is not None:
                scale = max(float(np.max(np.abs(cur))), self.op_scale(kind))
                if float(np.max(np.abs(cur - prev))) <= tol * scale:
                    return cur
            prev = cur
        i_hi = prev
        scale = max(float(np.max(np.abs(i_hi))), self.op_scale(kind))
        # adaptive fallback
        self.tier2_count += 1
        leaf = self.points.leaves[li]
        patch = self.points.patches[leaf.patch_index]

        def integrand(us):
            us2 = us[:, None] if us.ndim == 1 else us
            phys, normal, gram = eval_point_batch(patch, us2)
            ker = self._kernel_flat(kind, x, phys, normal)
            b = _bernstein_rows(self.bdeg, self._to_ref(leaf, us2))
            vals = b[:, :, None] * ker[:, None, :] * gram[:, None, None]
            return vals.reshape(us2.shape[0], self.nb * self.nc2)

        box = leaf.box if self.pdim > 1 else leaf.box[0]
        val, _ = adaptive_integrate(
            integrand, box, tol, abs_floor=tol * scale
        )
        return np.asarray(val).reshape(self.nb, self.nc2)

    def self_moments_slp(self, x: np.ndarray, li: int, point_index: int) -> np.ndarray:
        """Single layer moments with the singularity on the leaf."""
        tol = self.config.moment_tol
        leaf = self.points.leaves[li]
        patch = self.points.patches[leaf.patch_index]
        u0 = self.points.param[point_index]
        if self.ks.slp_singularity == "duffy":

            def integrand(us):
                phys, normal, gram = eval_point_batch(patch, us)
                ker = self._kernel_flat("slp", x, phys, normal)
                b = _bernstein_rows(self.bdeg, self._to_ref(leaf, us))
                vals = b[:, :, None] * ker[:, None, :] * gram[:, None, None]
                return vals.reshape(us.shape[0], self.nb * self.nc2)

            val = duffy_integrate(
                integrand, leaf.box, u0, tol, abs_floor=tol * self.op_scale("slp")
            )
            return np.asarray(val).reshape(self.nb, self.nc2)

        # 2d: split the logarithm off and integrate it against exact offsets
        a, b_end = leaf.box[0]
        u0s = float(u0[0])

        def smooth_part(us):
            us2 = us[:, None]
            phys, _, gram = eval_point_batch(patch, us2)
            ts = np.abs(us - u0s)
            smooth, _ = self.ks.slp_log_split(x, phys, ts)
            smooth = np.asarray(smooth, float).reshape(us.size, self.nc2)
            bb = _bernstein_rows(self.bdeg, self._to_ref(leaf, us2))
            vals = bb[:, :, None] * smooth[:, None, :] * gram[:, None, None]
            return vals.reshape(us.size, self.nb * self.nc2)

        def log_part(us, ts):
            us2 = us[:, None]
            phys, _, gram = eval_point_batch(patch, us2)
            _, logc = self.ks.slp_log_split(x, phys, ts)
            logc = np.asarray(logc, float).reshape(us.size, self.nc2)
            bb = _bernstein_rows(self.bdeg, self._to_ref(leaf, us2))
            vals = bb[:, :, None] * logc[:, None, :] * (gram * np.log(ts))[:, None, None]
            return vals.reshape(us.size, self.nb * self.nc2)

        floor = tol * self.op_scale("slp")
        total = np.zeros(self.nb * self.nc2)
        for lo_u, hi_u in ((a, u0s), (u0s, b_end)):
            if hi_u - lo_u <= 0.0:
                continue
            val, _ = adaptive_integrate(
                smooth_part, np.array([lo_u, hi_u]), tol, abs_floor=floor
            )
            total = total + np.atleast_1d(val)
        total = total + np.atleast_1d(
            log_singular_integrate_1d(log_part, u0s, a, b_end, tol, abs_floor=floor)
        )
        return total.reshape(self.nb, self.nc2)

    def self_moments_dlp(
        self, x: np.ndarray, li: int, point_index: int, q_block: np.ndarray
    ) -> np.ndarray:
        """Double layer moments with the singularity on the leaf.

        ``q_block`` is the CPV integral of the kernel over this leaf,
        recovered from the rigid-body identity (1/2 identity minus the
        already assembled contributions of every other leaf).
        """
        tol = self.config.moment_tol
        leaf = self.points.leaves[li]
        patch = self.points.patches[leaf.patch_index]
        u0 = self.points.param[point_index]
        if self.ks.dlp_singularity == "duffy":

            def integrand(us):
                phys, normal, gram = eval_point_batch(patch, us)
                ker = self._kernel_flat("dlp", x, phys, normal)
                b = _bernstein_rows(self.bdeg, self._to_ref(leaf, us))
                vals = b[:, :, None] * ker[:, None, :] * gram[:, None, None]
                return vals.reshape(us.shape[0], self.nb * self.nc2)

            val = duffy_integrate(
                integrand, leaf.box, u0, tol, abs_floor=tol * self.op_scale("dlp")
            )
            return np.asarray(val).reshape(self.nb, self.nc2)

        # 2d rigid-body route: integrate kernel * (B_t - B_t(xi0)) adaptively,
        # then add B_t(xi0) * q_block for the CPV constant part.
        a, b_end = leaf.box[0]
        u0s = float(u0[0])
        xi0 = self._to_ref(leaf, u0[None, :])
        b0 = _bernstein_rows(self.bdeg, xi0)[0]  # (nb,)

        def fluct(us):
            us2 = us[:, None]
            phys, normal, gram = eval_point_batch(patch, us2)
            ker = self._kernel_flat("dlp", x, phys, normal)
            bb = _bernstein_rows(self.bdeg, self._to_ref(leaf, us2)) - b0[None, :]
            vals = bb[:, :, None] * ker[:, None, :] * gram[:, None, None]
            return vals.reshape(us.size, self.nb * self.nc2)

        scale = max(float(np.max(np.abs(q_block))), self.op_scale("dlp"))
        total = np.zeros(self.nb * self.nc2)
        for lo_u, hi_u in ((a, u0s), (u0s, b_end)):
            if hi_u - lo_u <= 0.0:
                continue
            val, _ = adaptive_integrate(
                fluct, np.array([lo_u, hi_u]), tol, abs_floor=tol * scale
            )
            total = total + np.atleast_1d(val)
        g = total.reshape(self.nb, self.nc2)
        g = g + b0[:, None] * q_block[None, :]
        return g

    # -- corrected weights ----------------------------------------------------

    def solve_moments(self, g: np.ndarray) -> tuple[np.ndarray, float]:
        """Solve N w = g (columns of g independently); returns (w, residual)."""
        if self.square and self._lu is not None:
            w = scipy.linalg.lu_solve(self._lu, g)
        else:
            w, *_ = np.linalg.lstsq(self.nmat, g, rcond=None)
        residual = float(np.max(np.abs(self.nmat @ w - g)))
        return w, residual

    # -- full row -------------------------------------------------------------

    def base_row(self, x: np.ndarray, kind: str, self_index: int | None) -> np.ndarray:
        """Uncorrected point-evaluation row, (num_points, nc2)."""
        pts = self.points
        ys = pts.phys
        if self_index is not None:
            ys = ys.copy()
            ys[self_index] += 2.0 * (1.0 + self.leaf_diam[pts.leaf_of_point[self_index]])
        flat = self._kernel_flat(kind, x, ys, pts.normal)
        row = flat * pts.weight[:, None]
        if self_index is not None:
            row[self_index] = 0.0
        return row

    def near_mask(self, x: np.ndarray, self_leaf: int | None) -> np.ndarray:
        d = self.leaf_samples - x[None, None, :]
        dist = np.sqrt((d**2).sum(-1)).min(axis=1)
        near = dist < self.config.eta * self.leaf_diam
        if self_leaf is not None:
            near[self_leaf] = True
        return near

    def row(self, x, kinds, self_index: int | None = None) -> dict:
        """Corrected operator rows at one collocation/evaluation point.

        Returns ``{kind: blocks}`` with blocks of shape (num_points, nc2).
        """
        x = np.asarray(x, float)
        pts = self.points
        self_leaf = int(pts.leaf_of_point[self_index]) if self_index is not None else None
        near = self.near_mask(x, self_leaf)
        rows = {kind: self.base_row(x, kind, self_index) for kind in kinds}
        near_indices = np.nonzero(near)[0]
        for kind in kinds:
            row = rows[kind]
            for li in near_indices:
                if self_leaf is not None and li == self_leaf:
                    continue
                g = self.smooth_moments(x, int(li), kind)
                w, res = self.solve_moments(g)
                sl = pts.leaves[li].point_slice
                row[sl] = w
                self.residuals.append(res)
                self.near_pairs += 1
            if self_leaf is not None:
                li = self_leaf
                if kind == "slp":
                    g = self.self_moments_slp(x, li, self_index)
                elif self.ks.dlp_singularity == "duffy":
                    g = self.self_moments_dlp(x, li, self_index, None)
                else:
                    sl = pts.leaves[li].point_slice
                    outside = row.sum(axis=0) - row[sl].sum(axis=0)
                    q_block = 0.5 * np.eye(self.ncomp).reshape(self.nc2) - outside
                    g = self.self_moments_dlp(x, li, self_index, q_block)
                w, res = self.solve_moments(g)
                row[pts.leaves[li].point_slice] = w
                self.residuals.append(res)
                self.near_pairs += 1
        return rows


def local_correction(
    x,
    leaf_index: int,
    kind: str,
    points: QuadraturePointSet,
    kernels: KernelSet,
    config: AssemblyConfig,
    collocation_index: int | None = None,
) -> LocalCorrectionProblem:
    """Build and solve the moment system of one near (point, leaf) pair.

    ``collocation_index`` identifies x with a quadrature point when the
    singularity lies on the leaf itself.
    """
    engine = _RowEngine(points, kernels, config)
    x = np.asarray(x, float)
    if collocation_index is not None and int(points.leaf_of_point[collocation_index]) == leaf_index:
        if kind == "slp":
            g = engine.self_moments_slp(x, leaf_index, collocation_index)
        elif kernels.dlp_singularity == "duffy":
            g = engine.self_moments_dlp(x, leaf_index, collocation_index, None)
        else:
            kinds = (kind,)
            rows = engine.row(x, kinds, self_index=collocation_index)
            sl = points.leaves[leaf_index].point_slice
            w = rows[kind][sl]
            res = engine.residuals[-1] if engine.residuals else 0.0
            g = engine.nmat @ w
            return LocalCorrectionProblem(
                collocation_point=x,
                leaf_index=leaf_index,
                test_knots=engine.test_knots,
                matrix=engine.nmat,
                moments=g,
                weights=w,
                residual=res,
            )
    else:
        g = engine.smooth_moments(x, leaf_index, kind)
    w, res = engine.solve_moments(g)
    return LocalCorrectionProblem(
        collocation_point=x,
        leaf_index=leaf_index,
        test_knots=engine.test_knots,
        matrix=engine.nmat,
        moments=g,
        weights=w,
        residual=res,
    )


def singular_moment(
    x,
    leaf_index: int,
    kind: str,
    test_index: int,
    tol: float,
    points: QuadraturePointSet,
    kernels: KernelSet,
    collocation_index: int | None = None,
):
    """Integral of kernel(x, .) against one Bezier test function on a leaf."""
    config = AssemblyConfig(moment_tol=tol, formulation="direct" if kind == "slp" else "dlp")
    problem = local_correction(
        x, leaf_index, kind, points, kernels, config, collocation_index
    )
    moment = problem.moments[test_index]
    return float(moment[0]) if moment.size == 1 else moment.reshape(kernels.ncomp, kernels.ncomp)


def corrected_row(
    points: QuadraturePointSet,
    kernels: KernelSet,
    config: AssemblyConfig,
    x,
    kinds=("dlp",),
    self_index: int | None = None,
    engine: _RowEngine | None = None,
) -> dict:
    """Operator rows (blocks of shape (num_points, ncomp, ncomp)) at x."""
    engine = engine or _RowEngine(points, kernels, config)
    rows = engine.row(np.asarray(x, float), kinds, self_index)
    nc = kernels.ncomp
    return {k: v.reshape(points.num_points, nc, nc) for k, v in rows.items()}


def _scatter_row(matrix: np.ndarray, blocks: np.ndarray, i: int, ncomp: int) -> None:
    n = blocks.shape[0]
    matrix[i * ncomp : (i + 1) * ncomp, :] = blocks.reshape(n, ncomp, ncomp).transpose(
        1, 0, 2
    ).reshape(ncomp, n * ncomp)


def assemble(
    points: QuadraturePointSet, kernels: KernelSet, config: AssemblyConfig
) -> SystemMatrices:
    """Assemble the dense operators required by the configured formulation.

    Collocation points are exactly the quadrature points.  The returned
    ``K`` contains the jump term 1/2 on its diagonal blocks.
    """
    engine = _RowEngine(points, kernels, config)
    kinds = {"slp": ("slp",), "dlp": ("dlp",), "direct": ("slp", "dlp")}[config.formulation]
    n = points.num_points
    nc = kernels.ncomp
    ndof = n * nc
    mats = {kind: np.empty((ndof, ndof)) for kind in kinds}
    for i in range(n):
        rows = engine.row(points.phys[i], kinds, self_index=i)
        for kind in kinds:
            _scatter_row(mats[kind], rows[kind], i, nc)
    if "dlp" in kinds:
        idx = np.arange(ndof)
        mats["dlp"][idx, idx] += 0.5
    return SystemMatrices(
        points=points,
        kernels=kernels,
        config=config,
        V=mats.get("slp"),
        K=mats.get("dlp"),
        correction_residuals=np.asarray(engine.residuals),
        near_pairs=engine.near_pairs,
        engine=engine,
    )


def assemble_row(
    points: QuadraturePointSet,
    kernels: KernelSet,
    config: AssemblyConfig,
    i: int,
) -> dict:
    """Single matrix row (as dof-indexed vectors), for tests and diagnostics."""
    engine = _RowEngine(points, kernels, config)
    kinds = {"slp": ("slp",), "dlp": ("dlp",), "direct": ("slp", "dlp")}[config.formulation]
    rows = engine.row(points.phys[i], kinds, self_index=i)
    nc = kernels.ncomp
    out = {}
    for kind in kinds:
        mat = np.empty((nc, points.num_points * nc))
        _scatter_row(mat, rows[kind], 0, nc)
        if kind == "dlp":
            for a in range(nc):
                mat[a, i * nc + a] += 0.5
        out[kind] = mat
    return out


def build_direct_system(mats: SystemMatrices, dirichlet_data, neumann_data):
    """Block system of the direct formulation with mixed boundary conditions.

    Unknowns are the conormal data on Dirichlet patches and the primary
    field on Neumann patches.  Given prescribed ``g_D``/``g_N`` (indexed
    by dof, zero outside their part), returns (A, b, unknown_masks).
    """
    if mats.V is None or mats.K is None:
        raise ValueError("direct formulation requires both V and K")
    pts = mats.points
    nc = mats.ncomp
    bc = np.array(
        [pts.patches[pi].boundary_condition == "dirichlet" for pi in pts.patch_of_point]
    )
    d_mask = np.repeat(bc, nc)
    n_mask = ~d_mask
    kj = -mats.K.copy()
    idx = np.arange(mats.ndof)
    kj[idx, idx] += 1.0  # I - K, the jump-included direct double layer
    g_d = np.asarray(dirichlet_data, float)
    g_n = np.asarray(neumann_data, float)
    a = np.hstack([mats.V[:, d_mask], -kj[:, n_mask]])
    b = kj[:, d_mask] @ g_d[d_mask] - mats.V[:, n_mask] @ g_n[n_mask]
    return a, b, (d_mask, n_mask)
