"""Regularized oscillatory integrals: the damped two-variable integral ``J_eps``,
its closed form, tensor-grid quadrature and the regularizer identity."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import WarpingMatrix, as_vector, metric
from .wavepacket import ResolutionError

CHUNK = 512


@dataclass(frozen=True)
class QuadratureSpec:
    radius: float
    points: int
    eps: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("quadrature radius must be positive")
        if self.points < 64:
            raise ValueError("at least 64 points per axis are required")
        if not 0 < self.eps <= 1:
            raise ValueError("regulator eps must lie in (0, 1]")

    @property
    def spacing(self) -> float:
        return 2 * self.radius / (self.points - 1)

    @classmethod
    def for_eps(cls, eps: float, points: int = 1024, radius: float = 12.0) -> "QuadratureSpec":
        """Radius widened to ``10 / sqrt(eps)`` when the damping is weak."""
        return cls(max(radius, 10.0 / np.sqrt(eps)), points, eps)


def j1_closed(eps: float, p: float, q: float) -> complex:
    """``(1 + 4 eps^2)^{-1/2} exp((-i p q - eps (p^2 + q^2)) / (1 + 4 eps^2))``."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    den = 1 + 4 * eps * eps
    return complex(np.exp((-1j * p * q - eps * (p * p + q * q)) / den) / np.sqrt(den))


def _regulator(kind: str, eps: float, x: np.ndarray) -> np.ndarray:
    if kind == "gaussian":
        return np.exp(-eps * x * x)
    if kind == "bump":
        # exp(1 - 1/(1 - u^2)) with u = sqrt(eps) x: same curvature at the origin as the Gaussian
        u2 = eps * x * x
        inside = u2 < 1
        return np.where(inside, np.exp(1 - 1 / np.where(inside, 1 - u2, 1.0)), 0.0)
    raise ValueError(f"unknown regulator {kind!r}")


def j1_quadrature(spec: QuadratureSpec, p: float, q: float, regulator: str = "gaussian") -> complex:
    """Trapezoid rule for ``int dx dy / (2 pi) eta(x) eta(y) exp(-i (x y + p x - q y))`` on ``[-R, R]^2``."""
    R, N = spec.radius, spec.points
    h = spec.spacing
    if np.pi / h <= R + max(abs(p), abs(q)):
        raise ResolutionError(
            f"{N} points on [-{R:.3g}, {R:.3g}] cannot resolve frequencies up to {R + max(abs(p), abs(q)):.3g}"
        )
    x = np.linspace(-R, R, N)
    w = np.full(N, h)
    w[[0, -1]] = h / 2
    eta = _regulator(regulator, spec.eps, x)
    a = w * eta * np.exp(-1j * p * x)
    b = w * eta * np.exp(1j * q * x)
    total = 0.0 + 0.0j
    for s in range(0, N, CHUNK):
        K = np.exp(-1j * np.multiply.outer(x[s:s + CHUNK], x))
        total += a[s:s + CHUNK] @ (K @ b)
    return complex(total / (2 * np.pi))


def jd_product(eps: float, p, q, Q: WarpingMatrix) -> complex:
    """``prod_mu J^1_eps(p^mu, (Q q)_mu)`` with the index of ``Q q`` lowered by ``g``."""
    p = as_vector(p, Q.dim)
    low = metric(Q.dim) @ Q.apply(as_vector(q, Q.dim))
    return complex(np.prod([j1_closed(eps, a, b) for a, b in zip(p, low)]))


def deformation_phase_from_jd(k_i, k_j, Q: WarpingMatrix) -> complex:
    """``lim_{eps -> 0} J^d_eps(k_i + k_j, k_i)``, which equals ``exp(i k_i . Q k_j)``."""
    k_i, k_j = np.asarray(k_i, dtype=float), np.asarray(k_j, dtype=float)
    return jd_product(0.0, k_i + k_j, k_i, Q)


def epsilon_scan(
    p: float, q: float, eps_values: Sequence[float], points: int = 1024, radius: float = 12.0
) -> np.ndarray:
    """Rows ``(eps, |J_eps - exp(-i p q)|)`` with ``J_eps`` from quadrature."""
    limit = np.exp(-1j * p * q)
    rows = []
    for eps in eps_values:
        spec = QuadratureSpec.for_eps(eps, points, radius)
        rows.append([eps, abs(j1_quadrature(spec, p, q) - limit)])
    return np.array(rows)


def loglog_slope(rows: np.ndarray) -> float:
    return float(np.polyfit(np.log(rows[:, 0]), np.log(rows[:, 1]), 1)[0])


def dreg_identity_check(
    half_width: float = 2.0, points: int = 201, h: float | None = None, sign: int = 1
) -> float:
    """Max of ``|(1 - d_x^2 - d_y^2) e^{+-ixy} / (1 + x^2 + y^2) - e^{+-ixy}|`` on a square grid.

    ``h=None`` uses exact derivatives, otherwise central differences of step ``h``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    ax = np.linspace(-half_width, half_width, points)
    x, y = np.meshgrid(ax, ax, indexing="ij")

    def e(x, y):
        return np.exp(sign * 1j * x * y)

    if h is None:
        dxx, dyy = -(y * y) * e(x, y), -(x * x) * e(x, y)
    else:
        dxx = (e(x + h, y) - 2 * e(x, y) + e(x - h, y)) / h**2
        dyy = (e(x, y + h) - 2 * e(x, y) + e(x, y - h)) / h**2
    lhs = (e(x, y) - dxx - dyy) / (1 + x * x + y * y)
    return float(np.max(np.abs(lhs - e(x, y))))


def regulator_independence(p: float, q: float, eps: float = 2.5e-4, points: int = 4096) -> dict:
    """Compact bump regulator at small ``eps`` against the common limit and the Gaussian closed form.

    A Gaussian quadrature at this ``eps`` would need a far larger grid, so its closed form stands in.
    """
    spec = QuadratureSpec(1.0 / np.sqrt(eps), points, eps)
    limit = np.exp(-1j * p * q)
    jb = j1_quadrature(spec, p, q, "bump")
    return {
        "eps": eps,
        "bump_vs_limit": float(abs(jb - limit)),
        "bump_vs_gaussian": abs(jb - j1_closed(eps, p, q)),
    }
