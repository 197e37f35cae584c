"""Positive-energy Klein-Gordon wave packets with compactly supported
momentum profiles: dispersion, velocity supports, space-time evaluation by
quadrature and decay scans along rays.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import ConvexRegion, LorentzMap, Wedge, precursor

DEFAULT_ORDER_MARGIN = 1e-9


class ResolutionError(ValueError):
    """Quadrature grid cannot resolve the profile or the phase oscillation."""


class ProfileDomainError(ValueError):
    """A tabulated profile was evaluated off its momentum table."""


def _spatial(k) -> np.ndarray:
    return np.atleast_1d(np.asarray(k, dtype=float))


def dispersion(m: float, k) -> float | np.ndarray:
    """``sqrt(|k|^2 + m^2)``; ``k`` may be a stack of spatial vectors."""
    if m <= 0:
        raise ValueError("mass must be positive")
    k = _spatial(k)
    out = np.sqrt(np.sum(k * k, axis=-1) + m * m)
    return float(out) if np.ndim(out) == 0 else out


def velocity(m: float, k) -> np.ndarray:
    k = _spatial(k)
    w = dispersion(m, k)
    return k / np.asarray(w)[..., None] if k.ndim > 1 else k / w


def on_shell(m: float, k) -> np.ndarray:
    """Energy-momentum ``(omega_m(k), k)`` for a spatial momentum or a stack of them."""
    k = np.atleast_2d(np.asarray(k, dtype=float)) if np.ndim(k) > 1 else _spatial(k)
    w = np.asarray(dispersion(m, k))
    if k.ndim == 1:
        return np.concatenate([[float(w)], k])
    return np.concatenate([w[:, None], k], axis=1)


@dataclass(frozen=True)
class MomentumProfile:
    """Smooth bump ``exp(-smoothness * r^2 / (r^2 - |k - center|^2))`` on the
    open ball of radius ``radius``; zero outside."""

    center: np.ndarray
    radius: float
    smoothness: float = 1.0

    def __post_init__(self):
        c = _spatial(self.center).copy()
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if self.radius <= 0:
            raise ValueError("profile radius must be positive")
        if self.smoothness <= 0:
            raise ValueError("smoothness must be positive")

    @property
    def spatial_dim(self) -> int:
        return self.center.shape[0]

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        r2 = np.sum((k - self.center) ** 2, axis=-1)
        d2 = self.radius ** 2
        inside = r2 < d2
        gap = np.where(inside, d2 - r2, 1.0)
        return np.where(inside, np.exp(-self.smoothness * d2 / gap), 0.0)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.center - self.radius, self.center + self.radius

    @property
    def support(self) -> ConvexRegion:
        """Axis-aligned box enclosing the ball; a superset, so orderings certified on it hold."""
        lo, hi = self.bounding_box()
        corners = list(itertools.product(*zip(lo, hi)))
        return ConvexRegion(np.array(corners))


@dataclass(frozen=True)
class TabulatedProfile:
    """Profile given by values at finitely many momenta (a lattice-supported packet)."""

    momenta: np.ndarray
    values: np.ndarray
    atol: float = 1e-12

    def __post_init__(self):
        k = np.asarray(self.momenta, dtype=float)
        if k.ndim == 1:
            k = k[:, None]
        v = np.asarray(self.values, dtype=complex).reshape(-1)
        if len(v) != len(k):
            raise ValueError("one value per tabulated momentum required")
        object.__setattr__(self, "momenta", k)
        object.__setattr__(self, "values", v)

    @property
    def spatial_dim(self) -> int:
        return self.momenta.shape[1]

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        flat = k.reshape(-1, self.spatial_dim)
        dist = np.max(np.abs(flat[:, None, :] - self.momenta[None, :, :]), axis=-1)
        hit = dist <= self.atol
        if not np.all(hit.any(axis=1)):
            bad = flat[~hit.any(axis=1)][0]
            raise ProfileDomainError(f"momentum {bad.tolist()} is not on the tabulated lattice")
        return self.values[np.argmax(hit, axis=1)].reshape(k.shape[:-1])

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.momenta.min(axis=0), self.momenta.max(axis=0)

    @property
    def support(self) -> ConvexRegion:
        nz = self.momenta[np.abs(self.values) > 0]
        return ConvexRegion(nz if len(nz) else self.momenta)


@dataclass(frozen=True)
class KGSolution:
    profile: MomentumProfile | TabulatedProfile
    mass: float

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive (mass gap)")

    @property
    def spatial_dim(self) -> int:
        return self.profile.spatial_dim

    @property
    def dim(self) -> int:
        return self.spatial_dim + 1


@dataclass(frozen=True)
class VelocitySupport:
    region: ConvexRegion
    frame: LorentzMap = field(default=None)

    def __post_init__(self):
        if self.frame is None:
            object.__setattr__(self, "frame", LorentzMap.identity(self.region.dim))


def _edge_samples(vertices: np.ndarray, per_edge: int) -> np.ndarray:
    pts = [vertices]
    if per_edge > 0 and len(vertices) > 1:
        ts = np.arange(1, per_edge + 1) / (per_edge + 1)
        for a, b in itertools.combinations(range(len(vertices)), 2):
            pts.append(vertices[a] + ts[:, None] * (vertices[b] - vertices[a]))
    return np.concatenate(pts, axis=0)


def rescale_to_frame(p: np.ndarray, frame: LorentzMap) -> np.ndarray:
    """Rescale forward rays ``p`` onto the hyperplane ``frame(T_1)``."""
    c = frame.inverse().apply(p)[..., 0]
    if np.any(c <= 0):
        raise RuntimeError("on-shell ray does not meet the frame hyperplane")
    return p / np.asarray(c)[..., None]


def velocity_support(
    f: KGSolution, frame: LorentzMap | None = None, samples_per_edge: int = 8
) -> VelocitySupport:
    """Velocity support of ``f`` in the Lorentz frame ``frame``.

    Each momentum of the support is mapped to its on-shell ray and rescaled
    to the time-one slice of the frame.  The velocity map is curved, so
    points along the support's edges are sampled before re-hulling.
    """
    frame = frame or LorentzMap.identity(f.dim)
    k = _edge_samples(f.profile.support.vertices, samples_per_edge)
    pts = rescale_to_frame(on_shell(f.mass, k).reshape(-1, f.dim), frame)
    return VelocitySupport(ConvexRegion(pts), frame)


def point_velocity_support(m: float, k, frame: LorentzMap | None = None) -> VelocitySupport:
    p = on_shell(m, k)
    frame = frame or LorentzMap.identity(len(p))
    return VelocitySupport(ConvexRegion(rescale_to_frame(p, frame)[None, :]), frame)


def ordered(
    fs: Sequence[KGSolution],
    wedge: Wedge,
    frame: LorentzMap | None = None,
    direction: str = "out",
    margin: float = DEFAULT_ORDER_MARGIN,
) -> bool:
    """Velocity ordering gate.

    ``out``: ``V(f_n) < ... < V(f_1)`` (first packet leads); ``in``: reversed.
    """
    if direction not in ("out", "in"):
        raise ValueError("direction must be 'out' or 'in'")
    supports = [velocity_support(f, frame).region for f in fs]
    return ordered_regions(supports, wedge, direction, margin)


def ordered_regions(
    regions: Sequence[ConvexRegion], wedge: Wedge, direction: str, margin: float = DEFAULT_ORDER_MARGIN
) -> bool:
    for a, b in zip(regions, regions[1:]):
        ok = precursor(b, a, wedge, margin) if direction == "out" else precursor(a, b, wedge, margin)
        if not ok:
            return False
    return True


def _grid(f: KGSolution, points: int) -> tuple[np.ndarray, np.ndarray, float]:
    if points < 16:
        raise ResolutionError(f"grid has {points} points per axis; at least 16 are required")
    lo, hi = f.profile.bounding_box()
    axes = [np.linspace(a, b, points) for a, b in zip(lo, hi)]
    h = float(np.max((hi - lo) / (points - 1)))
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, f.spatial_dim)
    weights = np.ones(points)
    weights[[0, -1]] = 0.5
    w = np.ones(1)
    for a, b in zip(lo, hi):
        w = np.multiply.outer(w, weights * (b - a) / (points - 1)).reshape(-1)
    return mesh, w, h


def evaluate(f: KGSolution, t: float, x, points: int = 4096) -> complex:
    """Trapezoidal evaluation of ``int d^s k/(2 pi)^s exp(i k.x - i omega t) f(k)``."""
    x = _spatial(x)
    if len(x) != f.spatial_dim:
        raise ValueError("spatial dimension mismatch")
    mesh, w, h = _grid(f, points)
    # velocities are subluminal, so |grad phase| <= |x| + |t|
    if h * (np.linalg.norm(x) + abs(t)) > np.pi / 2:
        raise ResolutionError(
            f"grid spacing {h:.3g} under-resolves the phase at t={t}, |x|={np.linalg.norm(x):.3g}"
        )
    amp = f.profile(mesh)
    phase = mesh @ x - dispersion(f.mass, mesh) * t
    return complex(np.sum(w * amp * np.exp(1j * phase)) / (2 * np.pi) ** f.spatial_dim)


def decay_scan(f: KGSolution, u, times: Sequence[float], points: int = 4096) -> np.ndarray:
    """Rows ``(tau, |f(tau, u tau)|)`` along the ray of velocity ``u``."""
    u = _spatial(u)
    taus = np.asarray(times, dtype=float)
    if np.any(np.diff(taus) <= 0) or np.any(taus < 0):
        raise ValueError("times must be non-negative and increasing")
    return np.array([[tau, abs(evaluate(f, tau, u * tau, points))] for tau in taus])


def decay_slope(scan: np.ndarray) -> float:
    """Least-squares log-log slope over the last decade of sampled times."""
    taus, vals = scan[:, 0], scan[:, 1]
    sel = (taus > 0) & (taus >= taus.max() / 10) & (vals > 0)
    if sel.sum() < 2:
        raise ValueError("need at least two positive samples in the last decade")
    return float(np.polyfit(np.log(taus[sel]), np.log(vals[sel]), 1)[0])


def kg_residual(f: KGSolution, t: float, x, h: float, points: int = 4096) -> complex:
    """Central-difference value of ``(d_t^2 - Laplacian + m^2) f`` at ``(t, x)``."""
    x = _spatial(x)
    f0 = evaluate(f, t, x, points)
    dtt = (evaluate(f, t + h, x, points) - 2 * f0 + evaluate(f, t - h, x, points)) / h**2
    lap = 0.0
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        lap += (evaluate(f, t, x + e, points) - 2 * f0 + evaluate(f, t, x - e, points)) / h**2
    return dtt - lap + f.mass**2 * f0
