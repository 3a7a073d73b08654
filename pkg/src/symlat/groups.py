"""Group elements, descriptors, actions on feature vectors, and samplers.

Finite groups are stored as explicit Cayley tables with labelled elements;
subgroups of a finite group are index sets into the ambient table.  Rotations
are kept in axis/planar form while possible and normalised to matrices on the
first mixed composition, with re-orthonormalisation once numerical drift
exceeds ``ORTHO_TOL``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatchError,
    IncompatibleElementsError,
    InvalidGroupError,
    NotFiniteError,
)

ORTHO_TOL = 1e-9
DET_TOL = 1e-9
AXIS_TOL = 1e-12
MEMBERSHIP_TOL = 1e-9
TWO_PI = 2.0 * math.pi

# An irrational fraction of the circle; powers of this rotation are dense, so
# it topologically generates the circle group it lives in.
IRRATIONAL_ANGLE = TWO_PI * (math.sqrt(2.0) - 1.0)


# ---------------------------------------------------------------------------
# Cayley tables
# ---------------------------------------------------------------------------

class CayleyTable:
    """A finite group as an ``N x N`` index table with labelled elements.

    ``table[i, j]`` is the index of the product ``g_i g_j``.  Validation
    checks the identity row/column, that every row and column is a
    permutation, and (exhaustively, for ``N <= 64``) associativity.
    """

    def __init__(self, table: np.ndarray, labels: Sequence[str] | None = None):
        table = np.asarray(table, dtype=np.int64)
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise InvalidGroupError(f"Cayley table must be square, got {table.shape}")
        n = table.shape[0]
        if n == 0:
            raise InvalidGroupError("empty Cayley table")
        if table.min() < 0 or table.max() >= n:
            raise InvalidGroupError("Cayley table entries out of range")
        if labels is None:
            labels = tuple(f"g{i}" for i in range(n))
        labels = tuple(str(s) for s in labels)
        if len(labels) != n:
            raise InvalidGroupError("label count does not match table size")
        self.table = table
        self.table.setflags(write=False)
        self.labels = labels
        self.size = n
        self.identity = self._find_identity()
        self._validate_latin_square()
        if n <= 64:
            self._validate_associativity()

    def _find_identity(self) -> int:
        rng = np.arange(self.size)
        hits = [e for e in range(self.size)
                if np.array_equal(self.table[e], rng) and np.array_equal(self.table[:, e], rng)]
        if len(hits) != 1:
            raise InvalidGroupError(f"table has {len(hits)} identity candidates")
        return hits[0]

    def _validate_latin_square(self) -> None:
        rng = np.arange(self.size)
        if not (np.array_equal(np.sort(self.table, axis=1), np.tile(rng, (self.size, 1)))
                and np.array_equal(np.sort(self.table, axis=0), np.tile(rng[:, None], (1, self.size)))):
            raise InvalidGroupError("each Cayley-table row/column must be a permutation")

    def _validate_associativity(self) -> None:
        t = self.table
        left = t[t]                    # left[i, j, k] = t[t[i, j], k]
        right = t[:, t]                # right[i, j, k] = t[i, t[j, k]]
        if not np.array_equal(left, right):
            raise InvalidGroupError("Cayley table is not associative")

    def product(self, i: int, j: int) -> int:
        return int(self.table[i, j])

    def inverse(self, i: int) -> int:
        return int(np.flatnonzero(self.table[i] == self.identity)[0])

    def closure(self, seed: Iterable[int]) -> frozenset[int]:
        """Smallest subgroup containing ``seed`` (closure under products).

        For finite groups closure under the product alone already yields a
        subgroup, since powers of each element cycle through its inverse.
        """
        members = set(seed)
        members.add(self.identity)
        while True:
            idx = np.fromiter(members, dtype=np.int64)
            prods = set(self.table[np.ix_(idx, idx)].ravel().tolist())
            if prods <= members:
                return frozenset(members)
            members |= prods

    def is_subgroup(self, members: Iterable[int]) -> bool:
        ms = frozenset(members)
        return bool(ms) and self.closure(ms) == ms

    def subgroups(self) -> list[frozenset[int]]:
        """All subgroups, by incremental closure (intended for ``N <= 64``)."""
        if self.size > 64:
            raise NotFiniteError("brute-force subgroup enumeration is limited to order <= 64")
        trivial = frozenset({self.identity})
        known = {trivial}
        frontier = [trivial]
        while frontier:
            sub = frontier.pop()
            for g in range(self.size):
                if g in sub:
                    continue
                bigger = self.closure(sub | {g})
                if bigger not in known:
                    known.add(bigger)
                    frontier.append(bigger)
        return sorted(known, key=lambda s: (len(s), sorted(s)))


def cyclic_table(n: int, labels: Sequence[str] | None = None) -> CayleyTable:
    """Cyclic group of order ``n``: element ``i`` is the i-th power of the generator."""
    if n < 1:
        raise InvalidGroupError("cyclic group order must be >= 1")
    idx = np.arange(n)
    table = (idx[:, None] + idx[None, :]) % n
    if labels is None:
        labels = ["e"] + [f"r{i}" for i in range(1, n)]
    return CayleyTable(table, labels)


def direct_product_table(a: CayleyTable, b: CayleyTable) -> CayleyTable:
    """Direct product; element ``i * |b| + j`` is the pair ``(a_i, b_j)``."""
    na, nb = a.size, b.size
    table = np.empty((na * nb, na * nb), dtype=np.int64)
    for i in range(na):
        for j in range(nb):
            row = a.table[i][:, None] * nb + b.table[j][None, :]
            table[i * nb + j] = row.ravel()
    labels = [f"({la},{lb})" for la in a.labels for lb in b.labels]
    return CayleyTable(table, labels)


# ---------------------------------------------------------------------------
# Group elements
# ---------------------------------------------------------------------------

def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class FiniteElement:
    """An element of a finite group, identified by its Cayley-table index."""
    table: CayleyTable
    index: int

    def __post_init__(self):
        if not 0 <= self.index < self.table.size:
            raise InvalidGroupError(f"element index {self.index} out of range")

    @property
    def label(self) -> str:
        return self.table.labels[self.index]

    def __repr__(self) -> str:
        return f"FiniteElement({self.label!r})"


@dataclass(frozen=True, eq=False)
class PlanarRotation:
    """Rotation by ``angle`` radians in the coordinate plane ``(i, j)``."""
    angle: float
    plane: tuple[int, int]

    def __post_init__(self):
        i, j = self.plane
        if i == j or i < 0 or j < 0:
            raise InvalidGroupError(f"invalid coordinate plane {self.plane}")


@dataclass(frozen=True, eq=False)
class AxisRotation:
    """Rotation in R^3 about a unit ``axis`` by ``angle`` radians."""
    axis: np.ndarray
    angle: float

    def __post_init__(self):
        axis = _readonly(self.axis)
        if axis.shape != (3,):
            raise InvalidGroupError("rotation axis must be a 3-vector")
        if abs(np.linalg.norm(axis) - 1.0) > AXIS_TOL:
            raise InvalidGroupError("rotation axis must be a unit vector")
        object.__setattr__(self, "axis", axis)

    def matrix(self) -> np.ndarray:
        return rotation_about_axis(self.axis, self.angle)


@dataclass(frozen=True, eq=False)
class RotationMatrix:
    """A 3x3 rotation matrix (orthogonal with determinant 1)."""
    matrix: np.ndarray

    def __post_init__(self):
        m = _readonly(self.matrix)
        if m.shape != (3, 3):
            raise InvalidGroupError("rotation matrix must be 3x3")
        if np.max(np.abs(m.T @ m - np.eye(3))) > ORTHO_TOL:
            raise InvalidGroupError("matrix is not orthogonal within tolerance")
        if abs(np.linalg.det(m) - 1.0) > DET_TOL:
            raise InvalidGroupError("matrix determinant must be 1")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class SpecialLinear:
    """A 3x3 real matrix with determinant 1."""
    matrix: np.ndarray

    def __post_init__(self):
        m = _readonly(self.matrix)
        if m.shape != (3, 3):
            raise InvalidGroupError("special-linear matrix must be 3x3")
        if abs(np.linalg.det(m) - 1.0) > DET_TOL:
            raise InvalidGroupError("special-linear matrix must have determinant 1")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class Translation:
    """Translation of R^d by ``vector``."""
    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vector", _readonly(self.vector))


@dataclass(frozen=True, eq=False)
class Permutation:
    """Coordinate permutation: ``(g . x)_i = x_{perm[i]}``."""
    perm: tuple[int, ...]

    def __post_init__(self):
        p = tuple(int(i) for i in self.perm)
        if sorted(p) != list(range(len(p))):
            raise InvalidGroupError(f"{p} is not a bijection on 0..{len(p) - 1}")
        object.__setattr__(self, "perm", p)


GroupElement = Union[FiniteElement, PlanarRotation, AxisRotation,
                     RotationMatrix, SpecialLinear, Translation, Permutation]


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues' formula."""
    ux, uy, uz = axis
    k = np.array([[0.0, -uz, uy], [uz, 0.0, -ux], [-uy, ux, 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def planar_rotation_matrix(angle: float, plane: tuple[int, int], dim: int) -> np.ndarray:
    i, j = plane
    if max(i, j) >= dim:
        raise DimensionMismatchError(f"plane {plane} does not fit in dimension {dim}")
    m = np.eye(dim)
    c, s = math.cos(angle), math.sin(angle)
    m[i, i] = c
    m[i, j] = -s
    m[j, i] = s
    m[j, j] = c
    return m


def _reorthonormalize(m: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (polar factor via SVD)."""
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


def _renormalize_det(m: np.ndarray) -> np.ndarray:
    d = np.linalg.det(m)
    if d <= 0:
        raise InvalidGroupError("special-linear product drifted to non-positive determinant")
    return m / np.cbrt(d)


def _as_rotation_matrix(g: GroupElement) -> np.ndarray:
    if isinstance(g, AxisRotation):
        return g.matrix()
    if isinstance(g, RotationMatrix):
        return g.matrix
    raise IncompatibleElementsError(f"cannot view {type(g).__name__} as a 3x3 rotation")


def compose(a: GroupElement, b: GroupElement) -> GroupElement:
    """Group product ``ab``.

    Same-form rotations stay in their cheap parametric form; mixed rotation
    forms normalise to matrices.  Matrix products are re-orthonormalised (or
    det-renormalised for SL(3)) once drift exceeds tolerance.
    """
    if isinstance(a, FiniteElement) and isinstance(b, FiniteElement):
        if a.table is not b.table:
            raise IncompatibleElementsError("finite elements from different Cayley tables")
        return FiniteElement(a.table, a.table.product(a.index, b.index))
    if isinstance(a, PlanarRotation) and isinstance(b, PlanarRotation):
        if a.plane != b.plane:
            raise IncompatibleElementsError("planar rotations in different coordinate planes")
        return PlanarRotation((a.angle + b.angle) % TWO_PI, a.plane)
    if isinstance(a, AxisRotation) and isinstance(b, AxisRotation):
        dot = float(np.dot(a.axis, b.axis))
        if abs(dot - 1.0) <= AXIS_TOL:
            return AxisRotation(a.axis, a.angle + b.angle)
        if abs(dot + 1.0) <= AXIS_TOL:
            return AxisRotation(a.axis, a.angle - b.angle)
        # distinct axes: fall through to the matrix path
    if isinstance(a, (AxisRotation, RotationMatrix)) and isinstance(b, (AxisRotation, RotationMatrix)):
        m = _as_rotation_matrix(a) @ _as_rotation_matrix(b)
        if np.max(np.abs(m.T @ m - np.eye(3))) > ORTHO_TOL:
            m = _reorthonormalize(m)
        return RotationMatrix(m)
    if isinstance(a, (SpecialLinear, RotationMatrix, AxisRotation)) and \
            isinstance(b, (SpecialLinear, RotationMatrix, AxisRotation)):
        ma = a.matrix if isinstance(a, SpecialLinear) else _as_rotation_matrix(a)
        mb = b.matrix if isinstance(b, SpecialLinear) else _as_rotation_matrix(b)
        m = ma @ mb
        if abs(np.linalg.det(m) - 1.0) > DET_TOL:
            m = _renormalize_det(m)
        return SpecialLinear(m)
    if isinstance(a, Translation) and isinstance(b, Translation):
        if a.vector.shape != b.vector.shape:
            raise DimensionMismatchError("translations of different dimensions")
        return Translation(a.vector + b.vector)
    if isinstance(a, Permutation) and isinstance(b, Permutation):
        if len(a.perm) != len(b.perm):
            raise DimensionMismatchError("permutations of different lengths")
        # (ab) . x first applies b then a, and (g . x)_i = x_{g[i]},
        # so (ab)[i] = b[a[i]].
        return Permutation(tuple(b.perm[a.perm[i]] for i in range(len(a.perm))))
    raise IncompatibleElementsError(
        f"cannot compose {type(a).__name__} with {type(b).__name__}")


def inverse(g: GroupElement) -> GroupElement:
    if isinstance(g, FiniteElement):
        return FiniteElement(g.table, g.table.inverse(g.index))
    if isinstance(g, PlanarRotation):
        return PlanarRotation((-g.angle) % TWO_PI, g.plane)
    if isinstance(g, AxisRotation):
        return AxisRotation(g.axis, -g.angle)
    if isinstance(g, RotationMatrix):
        return RotationMatrix(g.matrix.T)
    if isinstance(g, SpecialLinear):
        return SpecialLinear(np.linalg.inv(g.matrix))
    if isinstance(g, Translation):
        return Translation(-g.vector)
    if isinstance(g, Permutation):
        inv = [0] * len(g.perm)
        for i, p in enumerate(g.perm):
            inv[p] = i
        return Permutation(tuple(inv))
    raise IncompatibleElementsError(f"unknown element type {type(g).__name__}")


def _angle_distance(a: float, b: float) -> float:
    d = (a - b) % TWO_PI
    return min(d, TWO_PI - d)


def elements_equal(a: GroupElement, b: GroupElement, tol: float = MEMBERSHIP_TOL) -> bool:
    if isinstance(a, FiniteElement) and isinstance(b, FiniteElement):
        return a.table is b.table and a.index == b.index
    if isinstance(a, PlanarRotation) and isinstance(b, PlanarRotation):
        return a.plane == b.plane and _angle_distance(a.angle, b.angle) <= tol
    if isinstance(a, (AxisRotation, RotationMatrix)) and isinstance(b, (AxisRotation, RotationMatrix)):
        return bool(np.max(np.abs(_as_rotation_matrix(a) - _as_rotation_matrix(b))) <= tol)
    if isinstance(a, SpecialLinear) and isinstance(b, SpecialLinear):
        return bool(np.max(np.abs(a.matrix - b.matrix)) <= tol)
    if isinstance(a, Translation) and isinstance(b, Translation):
        return a.vector.shape == b.vector.shape and bool(np.max(np.abs(a.vector - b.vector)) <= tol)
    if isinstance(a, Permutation) and isinstance(b, Permutation):
        return a.perm == b.perm
    return False


# ---------------------------------------------------------------------------
# Group descriptors
# ---------------------------------------------------------------------------

FINITE = "finite"
S1_AXIS = "s1-axis"
S1_PLANE = "s1-plane"
SO3 = "so3"
SL3 = "sl3"
TRANSLATION = "translation"
PERMUTATION_GROUP = "permutation"

_CONTINUOUS_KINDS = (S1_AXIS, S1_PLANE, SO3, SL3, TRANSLATION)


@dataclass(frozen=True, eq=False)
class GroupDescriptor:
    """A (sub)group: either a member set of a Cayley table or a parametrised
    continuous family (circle group about an axis or in a coordinate plane,
    SO(3), SL(3), translation or permutation groups given by generators)."""

    kind: str
    label: str
    table: CayleyTable | None = None
    members: frozenset[int] | None = None
    axis: np.ndarray | None = None
    plane: tuple[int, int] | None = None
    generator_elements: tuple[GroupElement, ...] = ()

    def __post_init__(self):
        if self.kind == FINITE:
            if self.table is None:
                raise InvalidGroupError("finite descriptor requires a Cayley table")
            members = self.members
            if members is None:
                members = frozenset(range(self.table.size))
            else:
                members = frozenset(int(i) for i in members)
                if not self.table.is_subgroup(members):
                    raise InvalidGroupError(
                        f"member set {sorted(members)} is not a subgroup of {self.label!r}")
            object.__setattr__(self, "members", members)
        elif self.kind in (S1_AXIS,):
            if self.axis is None:
                raise InvalidGroupError("s1-axis descriptor requires an axis")
            axis = _readonly(self.axis)
            if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
                raise InvalidGroupError("circle-group axis must be a unit vector")
            object.__setattr__(self, "axis", axis)
        elif self.kind in (S1_PLANE,):
            if self.plane is None:
                raise InvalidGroupError("s1-plane descriptor requires a coordinate plane")
        elif self.kind in (SO3, SL3):
            pass
        elif self.kind in (TRANSLATION, PERMUTATION_GROUP):
            if not self.generator_elements:
                raise InvalidGroupError(f"{self.kind} descriptor requires explicit generators")
        else:
            raise InvalidGroupError(f"unknown group kind {self.kind!r}")
        if self.generator_elements and self.kind == FINITE:
            for g in self.generator_elements:
                if not (isinstance(g, FiniteElement) and g.table is self.table
                        and g.index in self.members):
                    raise InvalidGroupError(
                        f"generator {g!r} lies outside {self.label!r}")
        elif self.generator_elements and self.kind in (S1_AXIS, S1_PLANE, SO3, SL3):
            for g in self.generator_elements:
                if not self.contains(g):
                    raise InvalidGroupError(
                        f"generator {g!r} lies outside {self.label!r}")

    # -- basic structure ----------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return self.kind == FINITE

    @property
    def order(self) -> int:
        if not self.is_finite:
            raise NotFiniteError(f"{self.label!r} is not a finite group")
        return len(self.members)

    def identity_element(self) -> GroupElement:
        if self.is_finite:
            return FiniteElement(self.table, self.table.identity)
        if self.kind == S1_AXIS:
            return AxisRotation(self.axis, 0.0)
        if self.kind == S1_PLANE:
            return PlanarRotation(0.0, self.plane)
        if self.kind == SO3:
            return RotationMatrix(np.eye(3))
        if self.kind == SL3:
            return SpecialLinear(np.eye(3))
        g0 = self.generator_elements[0]
        if isinstance(g0, Translation):
            return Translation(np.zeros_like(g0.vector))
        if isinstance(g0, Permutation):
            return Permutation(tuple(range(len(g0.perm))))
        raise InvalidGroupError("cannot build identity element")

    @property
    def generators(self) -> tuple[GroupElement, ...]:
        """A non-empty generating set.

        Finite groups default to all non-identity members (the trivial group
        generates itself via its identity); circle groups use a single
        irrational-angle rotation, which topologically generates them; SO(3)
        uses two irrational rotations about distinct coordinate axes.
        """
        if self.generator_elements:
            return self.generator_elements
        if self.is_finite:
            non_identity = [i for i in sorted(self.members) if i != self.table.identity]
            if not non_identity:
                return (self.identity_element(),)
            return tuple(FiniteElement(self.table, i) for i in non_identity)
        if self.kind == S1_AXIS:
            return (AxisRotation(self.axis, IRRATIONAL_ANGLE),)
        if self.kind == S1_PLANE:
            return (PlanarRotation(IRRATIONAL_ANGLE, self.plane),)
        if self.kind == SO3:
            return (AxisRotation(np.array([0.0, 0.0, 1.0]), IRRATIONAL_ANGLE),
                    AxisRotation(np.array([1.0, 0.0, 0.0]), IRRATIONAL_ANGLE))
        if self.kind == SL3:
            return default_sl3_generators()
        raise InvalidGroupError(f"no generator rule for kind {self.kind!r}")

    # -- membership ----------------------------------------------------------

    def contains(self, g: GroupElement, action: "GroupAction | None" = None,
                 tol: float = MEMBERSHIP_TOL) -> bool:
        """Whether a sampled element lies in this subgroup.

        Finite elements of the same table are decided by index-set inclusion;
        cross-kind checks compare realised transformations within ``tol``
        (e.g. a sampled planar-rotation angle against each finite member, or
        whether a 3x3 rotation fixes the circle group's axis).
        """
        if self.kind == FINITE:
            if isinstance(g, FiniteElement) and g.table is self.table:
                return g.index in self.members
            if action is not None:
                for i in sorted(self.members):
                    if _realizations_match(action, FiniteElement(self.table, i), g, tol):
                        return True
                return False
            raise IncompatibleElementsError(
                "membership of a non-table element in a finite group needs the ambient action")
        if self.kind == S1_AXIS:
            if isinstance(g, AxisRotation):
                if _angle_distance(g.angle, 0.0) <= tol:
                    return True
                return abs(abs(float(np.dot(g.axis, self.axis))) - 1.0) <= 1e-9
            if isinstance(g, (RotationMatrix, SpecialLinear)):
                m = g.matrix if isinstance(g, SpecialLinear) else g.matrix
                if np.max(np.abs(m.T @ m - np.eye(3))) > tol or abs(np.linalg.det(m) - 1.0) > tol:
                    return False
                return bool(np.linalg.norm(m @ self.axis - self.axis) <= tol)
            return False
        if self.kind == S1_PLANE:
            if isinstance(g, PlanarRotation):
                return g.plane == self.plane or _angle_distance(g.angle, 0.0) <= tol
            return False
        if self.kind == SO3:
            if isinstance(g, (AxisRotation, RotationMatrix)):
                return True
            if isinstance(g, SpecialLinear):
                m = g.matrix
                return bool(np.max(np.abs(m.T @ m - np.eye(3))) <= tol)
            return False
        if self.kind == SL3:
            if isinstance(g, (AxisRotation, RotationMatrix, SpecialLinear)):
                return True
            return False
        if self.kind == PERMUTATION_GROUP:
            if not isinstance(g, Permutation):
                return False
            return _in_generated_finite(self, g)
        if self.kind == TRANSLATION:
            return isinstance(g, Translation)
        return False


def _in_generated_finite(desc: GroupDescriptor, g: Permutation) -> bool:
    seen = {desc.identity_element().perm}
    frontier = [desc.identity_element()]
    while frontier:
        h = frontier.pop()
        for gen in desc.generator_elements:
            nxt = compose(h, gen)
            if nxt.perm not in seen:
                seen.add(nxt.perm)
                frontier.append(nxt)
    return g.perm in seen


def default_sl3_generators() -> tuple[GroupElement, ...]:
    """Fixed volume-preserving squeezes and a shear.

    Together with their inverses these generate a dense subgroup of SL(3);
    uniform sampling over them is the usual generator-set sampling strategy
    for a group with no invariant probability measure.
    """
    return (
        SpecialLinear(np.diag([1.5, 1.0 / 1.5, 1.0])),
        SpecialLinear(np.diag([1.0, 1.5, 1.0 / 1.5])),
        SpecialLinear(np.array([[1.0, 0.75, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])),
        SpecialLinear(np.diag([1.0 / 1.5, 1.5, 1.0])),
        SpecialLinear(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, -0.75], [0.0, 0.0, 1.0]])),
    )


def elements_of(group: GroupDescriptor) -> list[GroupElement]:
    """All elements of a finite group, each exactly once, in index order."""
    if not group.is_finite:
        raise NotFiniteError(f"{group.label!r} has infinitely many elements")
    return [FiniteElement(group.table, i) for i in sorted(group.members)]


# ---------------------------------------------------------------------------
# Actions
# ---------------------------------------------------------------------------

ACTION_MATRIX = "matrix"
ACTION_PLANAR = "planar"
ACTION_PERMUTATION = "permutation"
ACTION_TRANSLATION = "translation"
ACTION_TRIVIAL = "trivial"


@dataclass(frozen=True, eq=False)
class GroupAction:
    """How group elements transform feature vectors in R^dim.

    Finite elements are realised through per-element tables (``matrices``,
    ``angles`` + ``plane``, or ``perms``); continuous elements carry their own
    parameters.  Distinct actions of the same abstract group are just distinct
    realisation tables.
    """

    group: GroupDescriptor
    dim: int
    kind: str
    matrices: np.ndarray | None = None      # (N, dim, dim), indexed by table index
    angles: np.ndarray | None = None        # (N,), planar kind
    plane: tuple[int, int] | None = None    # planar kind
    perms: np.ndarray | None = None         # (N, dim) int, permutation kind

    def __post_init__(self):
        if self.kind == ACTION_MATRIX and self.matrices is not None:
            m = np.array(self.matrices, dtype=float)
            if m.shape != (self.group.table.size, self.dim, self.dim):
                raise DimensionMismatchError("matrix realisation has wrong shape")
            m.setflags(write=False)
            object.__setattr__(self, "matrices", m)
        if self.kind == ACTION_PLANAR:
            if self.plane is None:
                raise InvalidGroupError("planar action requires a coordinate plane")
            if max(self.plane) >= self.dim:
                raise DimensionMismatchError(f"plane {self.plane} exceeds dimension {self.dim}")
            if self.angles is not None:
                a = np.array(self.angles, dtype=float)
                if a.shape != (self.group.table.size,):
                    raise DimensionMismatchError("angle realisation has wrong shape")
                a.setflags(write=False)
                object.__setattr__(self, "angles", a)
        if self.kind == ACTION_PERMUTATION and self.perms is not None:
            p = np.array(self.perms, dtype=np.int64)
            if p.shape != (self.group.table.size, self.dim):
                raise DimensionMismatchError("permutation realisation has wrong shape")
            p.setflags(write=False)
            object.__setattr__(self, "perms", p)


def _realize_matrix(action: GroupAction, g: GroupElement) -> np.ndarray:
    """The dim x dim matrix by which ``g`` acts (matrix/planar kinds)."""
    d = action.dim
    if isinstance(g, FiniteElement):
        if g.table.size == 1:
            return np.eye(d)
        if action.kind == ACTION_MATRIX and action.matrices is not None \
                and g.table is action.group.table:
            return action.matrices[g.index]
        if action.kind == ACTION_PLANAR and action.angles is not None \
                and g.table is action.group.table:
            return planar_rotation_matrix(float(action.angles[g.index]), action.plane, d)
        raise IncompatibleElementsError(
            f"finite element {g!r} has no realisation under this action")
    if isinstance(g, PlanarRotation):
        return planar_rotation_matrix(g.angle, g.plane, d)
    if isinstance(g, (AxisRotation, RotationMatrix, SpecialLinear)):
        m = g.matrix if isinstance(g, (RotationMatrix, SpecialLinear)) else g.matrix()
        if d != 3:
            raise DimensionMismatchError("3x3 matrix element in a non-3d action")
        return m
    raise IncompatibleElementsError(f"{type(g).__name__} is not matrix-realisable")


def _realizations_match(action: GroupAction, a: GroupElement, b: GroupElement,
                        tol: float) -> bool:
    if action.kind in (ACTION_MATRIX, ACTION_PLANAR):
        try:
            ma = _realize_matrix(action, a)
            mb = _realize_matrix(action, b)
        except (IncompatibleElementsError, DimensionMismatchError):
            return False
        return bool(np.max(np.abs(ma - mb)) <= tol)
    if action.kind == ACTION_PERMUTATION:
        pa = _realize_perm(action, a)
        pb = _realize_perm(action, b)
        return pa is not None and pb is not None and np.array_equal(pa, pb)
    if action.kind == ACTION_TRIVIAL:
        return True
    return False


def _realize_perm(action: GroupAction, g: GroupElement) -> np.ndarray | None:
    if isinstance(g, FiniteElement):
        if g.table.size == 1:
            return np.arange(action.dim)
        if action.perms is not None and g.table is action.group.table:
            return action.perms[g.index]
        return None
    if isinstance(g, Permutation):
        if len(g.perm) != action.dim:
            raise DimensionMismatchError("permutation length does not match action dimension")
        return np.asarray(g.perm, dtype=np.int64)
    return None


def act(action: GroupAction, g: GroupElement, x: np.ndarray) -> np.ndarray:
    """Apply ``g`` to a single feature vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (action.dim,):
        raise DimensionMismatchError(f"expected vector of dimension {action.dim}, got {x.shape}")
    return apply_to_rows(action, g, x[None, :])[0]


def apply_to_rows(action: GroupAction, g: GroupElement, rows: np.ndarray) -> np.ndarray:
    """Apply one element to every row of an (m, dim) array."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != action.dim:
        raise DimensionMismatchError(f"expected rows of dimension {action.dim}")
    if action.kind == ACTION_TRIVIAL:
        return rows.copy()
    if action.kind == ACTION_TRANSLATION:
        if isinstance(g, Translation):
            if g.vector.shape != (action.dim,):
                raise DimensionMismatchError("translation dimension mismatch")
            return rows + g.vector
        if isinstance(g, FiniteElement) and g.table.size == 1:
            return rows.copy()
        raise IncompatibleElementsError("translation action needs translation elements")
    if action.kind == ACTION_PERMUTATION:
        p = _realize_perm(action, g)
        if p is None:
            raise IncompatibleElementsError(f"{g!r} has no permutation realisation")
        return rows[:, p]
    if action.kind == ACTION_PLANAR and isinstance(g, (PlanarRotation, FiniteElement)):
        if isinstance(g, PlanarRotation):
            angle, plane = g.angle, g.plane
        else:
            if g.table.size == 1:
                return rows.copy()
            if action.angles is None or g.table is not action.group.table:
                raise IncompatibleElementsError(f"{g!r} has no angle realisation")
            angle, plane = float(action.angles[g.index]), action.plane
        if plane != action.plane:
            raise IncompatibleElementsError("planar element outside the action's plane")
        return _rotate_plane(rows, angle, plane)
    m = _realize_matrix(action, g)
    return rows @ m.T


def _rotate_plane(rows: np.ndarray, angle: float, plane: tuple[int, int]) -> np.ndarray:
    i, j = plane
    out = rows.copy()
    c, s = math.cos(angle), math.sin(angle)
    out[:, i] = c * rows[:, i] - s * rows[:, j]
    out[:, j] = s * rows[:, i] + c * rows[:, j]
    return out


def apply_elements(action: GroupAction, elements: Sequence[GroupElement],
                   rows: np.ndarray) -> np.ndarray:
    """Apply ``elements[k]`` to ``rows[k]`` for each k (the sampling hot path)."""
    rows = np.asarray(rows, dtype=float)
    m = len(elements)
    if rows.shape[0] != m:
        raise DimensionMismatchError("one element per row is required")
    if m == 0:
        return rows.copy()
    if all(isinstance(g, FiniteElement) for g in elements):
        out = np.empty_like(rows)
        idx = np.fromiter((g.index for g in elements), dtype=np.int64, count=m)
        for k in np.unique(idx):
            sel = idx == k
            out[sel] = apply_to_rows(action, elements[int(np.flatnonzero(sel)[0])], rows[sel])
        return out
    if all(isinstance(g, PlanarRotation) for g in elements):
        plane = elements[0].plane
        if any(g.plane != plane for g in elements):
            raise IncompatibleElementsError("mixed coordinate planes in one batch")
        i, j = plane
        ang = np.fromiter((g.angle for g in elements), dtype=float, count=m)
        c, s = np.cos(ang), np.sin(ang)
        out = rows.copy()
        out[:, i] = c * rows[:, i] - s * rows[:, j]
        out[:, j] = s * rows[:, i] + c * rows[:, j]
        return out
    if all(isinstance(g, (AxisRotation, RotationMatrix, SpecialLinear)) for g in elements) \
            and action.dim == 3:
        mats = np.stack([_realize_matrix(action, g) for g in elements])
        return np.einsum("kij,kj->ki", mats, rows)
    out = np.empty_like(rows)
    for k, g in enumerate(elements):
        out[k] = apply_to_rows(action, g, rows[k:k + 1])[0]
    return out


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

UNIFORM = "uniform"
HAAR_CIRCLE = "haar-circle"
HAAR_SO3 = "haar-so3"
GAUSSIAN_ANGLE = "gaussian-angle"
POINT_MASS = "point-mass"


@dataclass(frozen=True, eq=False)
class SamplerSpec:
    """A distribution over group elements; the random source is caller-owned."""

    kind: str
    elements: tuple[GroupElement, ...] = ()
    element: GroupElement | None = None
    axis: np.ndarray | None = None
    plane: tuple[int, int] | None = None
    std: float = 0.0

    def __post_init__(self):
        if self.kind == UNIFORM:
            if not self.elements:
                raise InvalidGroupError("uniform sampler needs a non-empty element list")
        elif self.kind == POINT_MASS:
            if self.element is None:
                raise InvalidGroupError("point-mass sampler needs an element")
        elif self.kind in (HAAR_CIRCLE, GAUSSIAN_ANGLE):
            if self.axis is None and self.plane is None:
                raise InvalidGroupError(f"{self.kind} sampler needs an axis or a plane")
            if self.axis is not None:
                axis = _readonly(self.axis)
                if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
                    raise InvalidGroupError("sampler axis must be a unit vector")
                object.__setattr__(self, "axis", axis)
            if self.kind == GAUSSIAN_ANGLE and not self.std > 0:
                raise InvalidGroupError("gaussian-angle sampler needs std > 0")
        elif self.kind == HAAR_SO3:
            pass
        else:
            raise InvalidGroupError(f"unknown sampler kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class MixtureSampler:
    """Uniform mixture over component samplers: pick one, then draw from it.

    This realises a distribution supported on the join of the components'
    groups, which is what shared-stream batch testing over a lattice level
    needs when the level contains continuous subgroups.
    """

    components: tuple[SamplerSpec, ...]

    def __post_init__(self):
        if not self.components:
            raise InvalidGroupError("mixture sampler needs at least one component")


def uniform_sampler(elements: Iterable[GroupElement]) -> SamplerSpec:
    return SamplerSpec(UNIFORM, elements=tuple(elements))


def point_mass_sampler(g: GroupElement) -> SamplerSpec:
    return SamplerSpec(POINT_MASS, element=g)


def non_identity_sampler(group: GroupDescriptor) -> SamplerSpec:
    """Uniform over the non-identity elements of a finite group."""
    els = [g for g in elements_of(group) if g.index != group.table.identity]
    if not els:
        return point_mass_sampler(group.identity_element())
    return uniform_sampler(els)


def _quaternions_to_matrices(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    out = np.empty((q.shape[0], 3, 3))
    out[:, 0, 0] = 1 - 2 * (y * y + z * z)
    out[:, 0, 1] = 2 * (x * y - w * z)
    out[:, 0, 2] = 2 * (x * z + w * y)
    out[:, 1, 0] = 2 * (x * y + w * z)
    out[:, 1, 1] = 1 - 2 * (x * x + z * z)
    out[:, 1, 2] = 2 * (y * z - w * x)
    out[:, 2, 0] = 2 * (x * z - w * y)
    out[:, 2, 1] = 2 * (y * z + w * x)
    out[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return out


def sample_elements(spec: "SamplerSpec | MixtureSampler", rng: np.random.Generator,
                    m: int) -> list[GroupElement]:
    """Draw ``m`` elements.  All randomness flows through ``rng`` in a fixed
    order, so a seed pins the whole stream."""
    if m < 0:
        raise InvalidGroupError("sample count must be non-negative")
    if isinstance(spec, MixtureSampler):
        picks = rng.integers(0, len(spec.components), size=m)
        out: list[GroupElement | None] = [None] * m
        for c, comp in enumerate(spec.components):
            positions = np.flatnonzero(picks == c)
            if positions.size:
                drawn = sample_elements(comp, rng, int(positions.size))
                for pos, g in zip(positions, drawn):
                    out[int(pos)] = g
        return out  # type: ignore[return-value]
    if spec.kind == POINT_MASS:
        return [spec.element] * m
    if spec.kind == UNIFORM:
        idx = rng.integers(0, len(spec.elements), size=m)
        return [spec.elements[int(i)] for i in idx]
    if spec.kind == HAAR_CIRCLE:
        thetas = rng.uniform(0.0, TWO_PI, size=m)
        if spec.axis is not None:
            return [AxisRotation(spec.axis, float(t)) for t in thetas]
        return [PlanarRotation(float(t) % TWO_PI, spec.plane) for t in thetas]
    if spec.kind == GAUSSIAN_ANGLE:
        thetas = rng.normal(0.0, spec.std, size=m)
        if spec.axis is not None:
            return [AxisRotation(spec.axis, float(t)) for t in thetas]
        return [PlanarRotation(float(t) % TWO_PI, spec.plane) for t in thetas]
    if spec.kind == HAAR_SO3:
        q = rng.normal(size=(m, 4))
        q /= np.linalg.norm(q, axis=1, keepdims=True)
        mats = _quaternions_to_matrices(q)
        return [RotationMatrix(mats[k]) for k in range(m)]
    raise InvalidGroupError(f"unknown sampler kind {spec.kind!r}")


def sample(spec: SamplerSpec, rng: np.random.Generator) -> GroupElement:
    return sample_elements(spec, rng, 1)[0]
