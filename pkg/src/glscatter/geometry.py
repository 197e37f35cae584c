"""Minkowski kinematics: metric, Lorentz maps, wedges, warping matrices and
the precursor ordering of compact convex regions.

Vectors are plain numpy arrays of length ``d`` with component 0 the time
coordinate.  The metric signature is ``(+, -, ..., -)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

LORENTZ_TOL = 1e-12


class GeometryError(ValueError):
    """Invalid kinematic input (dimension mismatch, bad parameters)."""


def metric(d: int) -> np.ndarray:
    g = -np.eye(d)
    g[0, 0] = 1.0
    return g


def as_vector(x, d: int | None = None) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise GeometryError(f"expected a 1-d vector, got shape {v.shape}")
    if d is not None and v.shape[0] != d:
        raise GeometryError(f"dimension mismatch: expected {d}, got {v.shape[0]}")
    if v.shape[0] < 2:
        raise GeometryError("space-time dimension must be at least 2")
    return v


def minkowski_dot(p, q) -> float | np.ndarray:
    """Lorentzian scalar product ``p^0 q^0 - sum_i p^i q^i``.

    Broadcasts over leading axes, so stacks of vectors are allowed.
    """
    p = np.asarray(p)
    q = np.asarray(q)
    if p.shape[-1] != q.shape[-1]:
        raise GeometryError(f"dimension mismatch: {p.shape[-1]} vs {q.shape[-1]}")
    out = p[..., 0] * q[..., 0] - np.sum(p[..., 1:] * q[..., 1:], axis=-1)
    if np.ndim(out) == 0:
        return out.item()
    return out


@dataclass(frozen=True)
class LorentzMap:
    """A proper orthochronous Lorentz transformation."""

    matrix: np.ndarray

    def __post_init__(self):
        L = np.array(self.matrix, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] < 2:
            raise GeometryError(f"Lorentz matrix must be square d x d, got {L.shape}")
        g = metric(L.shape[0])
        if np.max(np.abs(L.T @ g @ L - g)) > LORENTZ_TOL * max(1.0, np.max(np.abs(L)) ** 2):
            raise GeometryError("matrix does not preserve the Minkowski metric")
        if np.linalg.det(L) <= 0 or L[0, 0] < 1.0 - LORENTZ_TOL:
            raise GeometryError("matrix is not proper orthochronous")
        L.setflags(write=False)
        object.__setattr__(self, "matrix", L)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, d: int) -> "LorentzMap":
        return cls(np.eye(d))

    @classmethod
    def boost(cls, d: int, rapidity: float, axis: int = 1) -> "LorentzMap":
        if not 1 <= axis < d:
            raise GeometryError(f"boost axis {axis} out of range for d={d}")
        L = np.eye(d)
        ch, sh = np.cosh(rapidity), np.sinh(rapidity)
        L[0, 0] = L[axis, axis] = ch
        L[0, axis] = L[axis, 0] = sh
        return cls(L)

    @classmethod
    def rotation(cls, d: int, angle: float, plane: tuple[int, int] = (1, 2)) -> "LorentzMap":
        i, j = plane
        if d < 3 or not (1 <= i < d and 1 <= j < d and i != j):
            raise GeometryError(f"spatial rotation plane {plane} invalid for d={d}")
        L = np.eye(d)
        c, s = np.cos(angle), np.sin(angle)
        L[i, i] = L[j, j] = c
        L[i, j], L[j, i] = -s, s
        return cls(L)

    def inverse(self) -> "LorentzMap":
        g = metric(self.dim)
        return LorentzMap(g @ self.matrix.T @ g)

    def __matmul__(self, other: "LorentzMap") -> "LorentzMap":
        if not isinstance(other, LorentzMap):
            return NotImplemented
        return LorentzMap(self.matrix @ other.matrix)

    def apply(self, x) -> np.ndarray:
        """Apply to a vector or to a stack of row vectors."""
        x = np.asarray(x, dtype=float)
        return x @ self.matrix.T


@dataclass(frozen=True)
class WarpingMatrix:
    """A g-antisymmetric (1,1)-tensor ``Q``; phases are ``minkowski_dot(p, Q q)``."""

    matrix: np.ndarray
    kappa: float = 0.0
    eta: float | None = None

    def __post_init__(self):
        Q = np.array(self.matrix, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise GeometryError(f"warping matrix must be square, got {Q.shape}")
        gQ = metric(Q.shape[0]) @ Q
        scale = max(1.0, float(np.max(np.abs(Q))))
        if np.max(np.abs(gQ + gQ.T)) > 1e-14 * scale:
            raise GeometryError("warping matrix is not antisymmetric with respect to g")
        Q.setflags(write=False)
        object.__setattr__(self, "matrix", Q)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, q) -> np.ndarray:
        return np.asarray(q, dtype=float) @ self.matrix.T

    def __neg__(self) -> "WarpingMatrix":
        return WarpingMatrix(-self.matrix, self.kappa, self.eta)

    def __mul__(self, c: float) -> "WarpingMatrix":
        return WarpingMatrix(c * self.matrix, self.kappa, self.eta)

    __rmul__ = __mul__

    def __add__(self, other: "WarpingMatrix") -> "WarpingMatrix":
        return WarpingMatrix(self.matrix + other.matrix)

    def conjugate(self, lam: LorentzMap) -> "WarpingMatrix":
        """``Lambda Q Lambda^-1``, projected back onto the g-antisymmetric part to shed rounding."""
        g = metric(self.dim)
        gq = g @ (lam.matrix @ self.matrix @ lam.inverse().matrix)
        return WarpingMatrix(g @ (gq - gq.T) / 2, self.kappa, self.eta)

    def phase(self, p, q):
        """``p . Q q`` with broadcasting over leading axes."""
        return minkowski_dot(p, self.apply(q))

    @classmethod
    def zero(cls, d: int) -> "WarpingMatrix":
        return cls(np.zeros((d, d)))


def standard_warping(d: int, kappa: float, eta: float | None = None) -> WarpingMatrix:
    """Warping matrix of the right Rindler wedge.

    A ``kappa`` block couples time and the first spatial axis; in ``d = 4``
    the ``eta`` block rotates the two transverse axes.
    """
    if d < 2:
        raise GeometryError("dimension must be at least 2")
    if kappa < 0:
        raise GeometryError("kappa must be non-negative")
    if eta is not None and d != 4:
        raise GeometryError("eta is only defined in dimension d = 4")
    Q = np.zeros((d, d))
    Q[0, 1] = Q[1, 0] = kappa
    if d == 4:
        e = 0.0 if eta is None else float(eta)
        Q[2, 3], Q[3, 2] = e, -e
    return WarpingMatrix(Q, float(kappa), None if d != 4 else float(eta or 0.0))


@dataclass(frozen=True)
class Wedge:
    """The region ``sign * Lambda W_R + a`` with ``W_R = {|x^0| < x^1}``.

    ``sign = -1`` encodes the causal complement of the centered wedge, which
    in ``d = 2`` is not reachable from ``W_R`` by proper orthochronous maps.
    """

    boost: LorentzMap
    translation: np.ndarray = field(default=None)
    sign: int = 1

    def __post_init__(self):
        d = self.boost.dim
        a = np.zeros(d) if self.translation is None else as_vector(self.translation, d)
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "translation", a)
        if self.sign not in (1, -1):
            raise GeometryError("wedge sign must be +1 or -1")

    @property
    def dim(self) -> int:
        return self.boost.dim

    @classmethod
    def right(cls, d: int) -> "Wedge":
        return cls(LorentzMap.identity(d))

    @classmethod
    def left(cls, d: int) -> "Wedge":
        return cls(LorentzMap.identity(d), sign=-1)

    def centered(self) -> "Wedge":
        return Wedge(self.boost, None, self.sign)

    def complement(self) -> "Wedge":
        """Causal complement ``W' = -W_c + a``."""
        return Wedge(self.boost, self.translation, -self.sign)

    def transform(self, lam: LorentzMap, a=None) -> "Wedge":
        """Image under the Poincare map ``x -> Lambda x + a``."""
        shift = lam.apply(self.translation)
        if a is not None:
            shift = shift + as_vector(a, self.dim)
        return Wedge(lam @ self.boost, shift, self.sign)

    def to_reference(self, x) -> np.ndarray:
        """Coordinates of ``x`` (centered) in the frame where the wedge is ``W_R``."""
        return self.sign * self.boost.inverse().apply(x)

    def clearance(self, x) -> np.ndarray | float:
        """``y^1 - |y^0|`` in reference coordinates; positive inside the centered wedge."""
        y = self.to_reference(x)
        return y[..., 1] - np.abs(y[..., 0])

    def contains(self, x, margin: float = 0.0, centered: bool = True):
        x = np.asarray(x, dtype=float)
        if not centered:
            x = x - self.translation
        return self.clearance(x) > margin


def warping_for_wedge(wedge: Wedge, q0: WarpingMatrix) -> WarpingMatrix:
    """Covariant warping matrix ``Q_W = sign * Lambda Q0 Lambda^-1``; translations drop out."""
    q = q0.conjugate(wedge.boost)
    return q if wedge.sign == 1 else -q


def _extreme_points(points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    pts = np.unique(np.round(points, 15), axis=0)
    if len(pts) <= 1:
        return pts
    center = pts.mean(axis=0)
    _, s, vt = np.linalg.svd(pts - center)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    if rank == 0:
        return pts[:1]
    coords = (pts - center) @ vt[:rank].T
    if rank == 1:
        c = coords[:, 0]
        return pts[[int(np.argmin(c)), int(np.argmax(c))]]
    hull = ConvexHull(coords)
    return pts[np.sort(hull.vertices)]


@dataclass(frozen=True)
class ConvexRegion:
    """Convex hull of finitely many points; stored by its extreme points."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.size == 0:
            raise GeometryError("convex region must be non-empty")
        v = _extreme_points(v)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def transform(self, lam: LorentzMap | None = None, a=None) -> "ConvexRegion":
        v = self.vertices if lam is None else lam.apply(self.vertices)
        if a is not None:
            v = v + np.asarray(a, dtype=float)
        return ConvexRegion(v)

    def differences(self, other: "ConvexRegion") -> np.ndarray:
        """All vertex differences ``w - v`` with ``w`` from ``other`` and ``v`` from self."""
        return (other.vertices[None, :, :] - self.vertices[:, None, :]).reshape(-1, self.dim)


def precursor(left: ConvexRegion, right: ConvexRegion, wedge: Wedge, margin: float = 0.0) -> bool:
    """``left`` precedes ``right``: ``right - left`` lies in the centered wedge.

    By convexity it suffices to test vertex differences.  ``margin`` demands a
    clearance ``y^1 - |y^0| > margin`` in the wedge's reference frame, which is
    superadditive, so the relation stays transitive for every margin.
    """
    if margin < 0:
        raise GeometryError("margin must be non-negative")
    if left.dim != wedge.dim or right.dim != wedge.dim:
        raise GeometryError("region and wedge dimensions differ")
    diffs = left.differences(right)
    return bool(np.all(wedge.clearance(diffs) > margin))


def precursor_covariance_check(
    left: ConvexRegion,
    right: ConvexRegion,
    wedge: Wedge,
    lam: LorentzMap,
    a=None,
    margin: float = 0.0,
) -> bool:
    before = precursor(left, right, wedge, margin)
    after = precursor(left.transform(lam, a), right.transform(lam, a), wedge.transform(lam, a), margin)
    return before == after


def random_lorentz(d: int, rng: np.random.Generator, max_rapidity: float = 1.5) -> LorentzMap:
    """Random proper orthochronous map: boosts along the first axis interleaved with spatial rotations."""
    lam = LorentzMap.boost(d, rng.uniform(-max_rapidity, max_rapidity))
    for i in range(1, d):
        for j in range(i + 1, d):
            lam = LorentzMap.rotation(d, rng.uniform(0, 2 * np.pi), (i, j)) @ lam
    if d > 2:
        lam = LorentzMap.boost(d, rng.uniform(-max_rapidity, max_rapidity)) @ lam
    return lam
