"""Partition of patches into integration elements.

Each patch carries one artificial knot vector per parametric direction;
its non-zero spans (span pairs for surfaces) are the *global elements*.
The artificial knots always contain the geometry knots, so element
boundaries never cross a continuity-reducing knot, and refinement is
performed purely in parameter space: the geometry is never modified.

Global elements can be subdivided further into *local elements* by
refinement points.  A refinement point inside an element spawns a
2 x 2 cross of children, a point on an edge splits the element in two,
and several points at one level produce a local grid.  Local elements
form a tree; every node stores the affine transformation from its parent,
and the accumulated transformation of a leaf maps the root element onto
the leaf.  Transformations use homogeneous (k+1) x (k+1) matrices so that
accumulation is a plain matrix product.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import RefinementError
from .geometry import NurbsPatch

__all__ = [
    "RefinementPoint",
    "LocalElement",
    "LocalElementTree",
    "ElementPartition",
    "init_partition",
    "insert_knots",
    "grade_towards",
    "grading_values",
    "add_refinement_point",
    "build_transformations",
    "accumulate",
    "map_ref_to_param",
    "node_matrix",
]

_TOL = 1e-12


@dataclass(frozen=True)
class RefinementPoint:
    """A parametric point that subdivides one local element of level - 1."""

    coords: np.ndarray
    level: int

    def __post_init__(self):
        object.__setattr__(self, "coords", np.atleast_1d(np.asarray(self.coords, float)))
        if self.level < 1:
            raise RefinementError("refinement level must be >= 1")


def node_matrix(box: np.ndarray) -> np.ndarray:
    """Homogeneous corner-node matrix of a parameter box.

    For a surface box the columns are the corners (lo1,lo2), (hi1,hi2),
    (lo1,hi2), (hi1,lo2); for a curve interval the columns are lo, hi.
    """
    box = np.asarray(box, float)
    k = box.shape[0]
    if k == 1:
        a = np.array([[box[0, 0], box[0, 1]], [1.0, 1.0]])
    else:
        lo1, hi1 = box[0]
        lo2, hi2 = box[1]
        a = np.array(
            [[lo1, hi1, lo1, hi1], [lo2, hi2, hi2, lo2], [1.0, 1.0, 1.0, 1.0]]
        )
    return a


def build_transformations(node_mat: np.ndarray, points) -> list[np.ndarray]:
    """Transformation matrices of the children cut out by refinement points.

    ``node_mat`` is the homogeneous corner matrix of the parent box and
    ``points`` an iterable of parametric coordinates inside it.  Children
    are returned row by row (direction 2 outer, direction 1 inner), each
    as a homogeneous matrix T with ``A_child = T @ node_mat``.  Without
    points a single identity transformation is returned.
    """
    a = np.asarray(node_mat, float)
    k = a.shape[0] - 1
    lo = a[:k, 0]
    hi = a[:k, 1]
    lengths_total = hi - lo
    # temporary knot vectors: box bounds plus all point coordinates
    axes = []
    for d in range(k):
        vals = [lo[d], hi[d]]
        for p in points:
            vals.append(float(np.atleast_1d(p)[d]))
        vals = np.unique(np.asarray(vals))
        vals = vals[(vals >= lo[d] - _TOL) & (vals <= hi[d] + _TOL)]
        axes.append(np.diff(vals))  # non-zero span lengths
    transforms = []
    outer = axes[1] if k == 2 else np.array([1.0])
    t2 = 0.0
    for l2 in outer:
        t1 = 0.0
        for l1 in axes[0]:
            t = np.eye(k + 1)
            t[0, 0] = l1 / lengths_total[0]
            t[0, k] = lo[0] * (1.0 - t[0, 0]) + t1
            if k == 2:
                t[1, 1] = l2 / lengths_total[1]
                t[1, k] = lo[1] * (1.0 - t[1, 1]) + t2
            transforms.append(t)
            t1 += l1
        t2 += l2
    return transforms


@dataclass
class LocalElement:
    """Node of a local-element tree.

    ``step_transform`` maps the parent box onto this node's box (identity
    at the root); the accumulated transformation is the ordered product
    over the ancestry and maps the root box onto this node's box.
    """

    box: np.ndarray
    level: int
    step_transform: np.ndarray
    parent: "LocalElement | None" = None
    children: list = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def pdim(self) -> int:
        return self.box.shape[0]

    def accumulated_transform(self) -> np.ndarray:
        # ordered product T_l @ T_{l-1} @ ... @ T_1 over the ancestry
        acc = np.eye(self.pdim + 1)
        node = self
        while node is not None:
            acc = acc @ node.step_transform
            node = node.parent
        return acc

    def contains(self, point: np.ndarray, root_box: np.ndarray) -> bool:
        """Half-open membership (lower edges closed); upper edges are
        closed only where they coincide with the root box boundary."""
        point = np.atleast_1d(np.asarray(point, float))
        for d in range(self.pdim):
            lo, hi = self.box[d]
            x = point[d]
            if x < lo - _TOL:
                return False
            if x > hi + _TOL:
                return False
            if x >= hi - _TOL and hi < root_box[d, 1] - _TOL:
                return False
        return True


class LocalElementTree:
    """Hierarchical subdivision of one global element by refinement points."""

    def __init__(self, box, refinement_points=()):
        self.root_box = np.asarray(box, float).reshape(-1, 2)
        self.refinement_points = list(refinement_points)
        self.root: LocalElement = None  # type: ignore[assignment]
        self._leaves: list[LocalElement] = []
        self._build()

    @property
    def pdim(self) -> int:
        return self.root_box.shape[0]

    def leaves(self) -> list[LocalElement]:
        return self._leaves

    def max_level(self) -> int:
        return max((p.level for p in self.refinement_points), default=0)

    def _build(self) -> None:
        k = self.pdim
        self.root = LocalElement(
            box=self.root_box.copy(), level=0, step_transform=np.eye(k + 1)
        )
        current = [self.root]
        by_level: dict[int, list[RefinementPoint]] = {}
        for p in self.refinement_points:
            if p.coords.size != k:
                raise RefinementError("refinement point dimension does not match element")
            by_level.setdefault(p.level, []).append(p)
        for level in range(1, self.max_level() + 1):
            points = by_level.get(level, [])
            placed = [False] * len(points)
            nxt: list[LocalElement] = []
            for node in current:
                mine = []
                for i, p in enumerate(points):
                    if node.contains(p.coords, self.root_box):
                        if placed[i]:
                            raise RefinementError(
                                "refinement point contained in two elements"
                            )
                        placed[i] = True
                        mine.append(p.coords)
                if not mine:
                    nxt.append(node)
                    continue
                for t in build_transformations(node_matrix(node.box), mine):
                    child_a = t @ node_matrix(node.box)
                    child_box = np.stack([child_a[:k, 0], child_a[:k, 1]], axis=1)
                    child = LocalElement(
                        box=child_box, level=level, step_transform=t, parent=node
                    )
                    node.children.append(child)
                nxt.extend(node.children)
            if not all(placed):
                bad = points[placed.index(False)]
                raise RefinementError(
                    f"refinement point {bad.coords.tolist()} (level {bad.level}) "
                    "lies outside every local element at that level"
                )
            current = nxt
        self._leaves = current


def add_refinement_point(tree: LocalElementTree, point: RefinementPoint) -> LocalElementTree:
    """Return a new tree with one more refinement point (placement validated)."""
    return LocalElementTree(tree.root_box, tree.refinement_points + [point])


def accumulate(tree: LocalElementTree, leaf: LocalElement) -> tuple[np.ndarray, np.ndarray]:
    """Accumulated transformation of a leaf and the leaf's node matrix."""
    t_hat = leaf.accumulated_transform()
    return t_hat, t_hat @ node_matrix(tree.root_box)


def map_ref_to_param(leaf: LocalElement, xi) -> tuple[np.ndarray, float]:
    """Map reference coordinates in [-1, 1]^k onto the leaf's parameter box.

    Returns the parametric point and the (constant) Jacobian of the map,
    i.e. the product of half side lengths.
    """
    xi = np.atleast_1d(np.asarray(xi, float))
    lo = leaf.box[:, 0]
    hi = leaf.box[:, 1]
    u = lo + 0.5 * (xi + 1.0) * (hi - lo)
    jac = float(np.prod(0.5 * (hi - lo)))
    return u, jac


# ---------------------------------------------------------------------------
# element partition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ElementPartition:
    """Artificial knot vectors plus local-element trees of one patch."""

    patch: NurbsPatch
    artificial_knots: tuple
    refinement_points: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self,
            "artificial_knots",
            tuple(np.asarray(a, float) for a in self.artificial_knots),
        )
        object.__setattr__(self, "refinement_points", tuple(self.refinement_points))
        for kv, art in zip(self.patch.knot_vectors, self.artificial_knots):
            if np.any(np.diff(art) < 0):
                raise RefinementError("artificial knots must be non-decreasing")
            # geometry knots (with multiplicity) must be preserved
            geo = kv.knots
            j = np.searchsorted(art, geo)
            if not np.all((j < art.size) & np.isclose(art[np.minimum(j, art.size - 1)], geo)):
                raise RefinementError("artificial knot vector must contain geometry knots")
        object.__setattr__(self, "_trees", None)

    @property
    def pdim(self) -> int:
        return self.patch.parametric_dim

    def spans(self, direction: int) -> np.ndarray:
        """(n, 2) array of non-zero spans [lo, hi) in one direction."""
        art = self.artificial_knots[direction]
        keep = np.diff(art) > 0
        return np.c_[art[:-1][keep], art[1:][keep]]

    def element_boxes(self) -> np.ndarray:
        """All global elements as (n, pdim, 2) boxes, direction-1 fastest."""
        s1 = self.spans(0)
        if self.pdim == 1:
            return s1[:, None, :]
        s2 = self.spans(1)
        boxes = np.empty((s2.shape[0] * s1.shape[0], 2, 2))
        idx = 0
        for b in s2:
            for a in s1:
                boxes[idx, 0] = a
                boxes[idx, 1] = b
                idx += 1
        return boxes

    @property
    def num_elements(self) -> int:
        return self.element_boxes().shape[0]

    def trees(self) -> list[LocalElementTree]:
        """One local-element tree per global element (built lazily, cached)."""
        cached = object.__getattribute__(self, "_trees")
        if cached is not None:
            return cached
        boxes = self.element_boxes()
        trees = []
        used = [False] * len(self.refinement_points)
        for box in boxes:
            mine = []
            for i, p in enumerate(self.refinement_points):
                if _box_contains(box, p.coords, self._domain_box()):
                    if used[i]:
                        raise RefinementError("refinement point in two global elements")
                    used[i] = True
                    mine.append(p)
            trees.append(LocalElementTree(box, mine))
        if not all(used):
            bad = self.refinement_points[used.index(False)]
            raise RefinementError(
                f"refinement point {bad.coords.tolist()} outside every global element"
            )
        object.__setattr__(self, "_trees", trees)
        return trees

    def _domain_box(self) -> np.ndarray:
        return np.array([kv.domain for kv in self.patch.knot_vectors])

    def leaves(self) -> list[tuple[int, LocalElement]]:
        """(element_index, leaf) pairs in deterministic order."""
        out = []
        for ei, tree in enumerate(self.trees()):
            for leaf in tree.leaves():
                out.append((ei, leaf))
        return out


def _box_contains(box: np.ndarray, point: np.ndarray, domain: np.ndarray) -> bool:
    point = np.atleast_1d(np.asarray(point, float))
    for d in range(box.shape[0]):
        lo, hi = box[d]
        x = point[d]
        if x < lo - _TOL or x > hi + _TOL:
            return False
        if x >= hi - _TOL and hi < domain[d, 1] - _TOL:
            return False
    return True


def init_partition(patch: NurbsPatch) -> ElementPartition:
    """Initial partition: artificial knots equal the geometry knots."""
    return ElementPartition(
        patch=patch,
        artificial_knots=tuple(kv.knots.copy() for kv in patch.knot_vectors),
    )


def insert_knots(partition: ElementPartition, direction: int, values) -> ElementPartition:
    """Insert unique knots into one direction of the artificial knot vector.

    Every value must lie strictly inside an existing non-zero span and
    must not coincide with an existing knot.
    """
    art = partition.artificial_knots[direction]
    values = np.atleast_1d(np.asarray(values, float))
    if np.unique(values).size != values.size:
        raise RefinementError("duplicate values in one insertion")
    for v in values:
        if np.any(np.isclose(art, v, atol=_TOL)):
            raise RefinementError(f"knot {v} already present")
        if not (art[0] < v < art[-1]):
            raise RefinementError(f"knot {v} outside the parametric domain")
    new = np.sort(np.r_[art, values])
    arts = list(partition.artificial_knots)
    arts[direction] = new
    return ElementPartition(
        patch=partition.patch,
        artificial_knots=tuple(arts),
        refinement_points=partition.refinement_points,
    )


def grading_values(lo: float, hi: float, n: int, q: float, end: str) -> np.ndarray:
    """Interior knots that grade a span into n sub-elements.

    Left grading clusters towards ``lo`` with values
    ``lo + (hi - lo) * (i / n)**q``, i = 1..n-1; right grading mirrors.
    """
    if n < 2:
        raise RefinementError("grading needs n >= 2 sub-elements")
    if q < 1.0:
        raise RefinementError("grading exponent q must be >= 1")
    i = np.arange(1, n)
    frac = (i / n) ** q
    if end == "left":
        vals = lo + (hi - lo) * frac
    elif end == "right":
        vals = np.sort(hi - (hi - lo) * frac)
    else:
        raise RefinementError(f"grading end must be 'left' or 'right', got {end!r}")
    return vals


def grade_towards(
    partition: ElementPartition,
    span: int,
    n: int,
    q: float,
    end: str,
    direction: int = 0,
) -> ElementPartition:
    """Grade one non-zero span of the artificial knot vector into n elements.

    ``span`` is the index i of the span [art[i], art[i+1]).  ``end="left"``
    clusters the new knots towards art[i], ``"right"`` towards art[i+1].
    """
    art = partition.artificial_knots[direction]
    if not (0 <= span < art.size - 1) or art[span + 1] <= art[span]:
        raise RefinementError(f"index {span} is not a non-zero span")
    vals = grading_values(float(art[span]), float(art[span + 1]), n, q, end)
    return insert_knots(partition, direction, vals)
