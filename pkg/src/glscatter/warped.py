"""Warped convolutions on the truncated free model.

The joint energy-momentum spectrum of a finite mode set is discrete, so the
warped convolution is an exact finite spectral sum.  Three evaluations are
provided and cross-checked: the matrix-element phase, the right spectral sum
``sum_p alpha_{Qp}(A) E(p)`` and the left sum ``sum_p E(p) alpha_{Qp}(A)``.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .fock import DiagonalOperator, FockOperator, FockSpace, FockVector, annihilate, create
from .geometry import LorentzMap, WarpingMatrix, minkowski_dot
from .wavepacket import KGSolution, dispersion

FORMS = ("phase", "right", "left")


class SpectralDecomposition:
    """Joint spectrum of ``(H, P)`` on sectors ``0..n_max + 1``, tuples grouped by total momentum.

    The extra sector carries the overflow blocks of ladder operators.
    """

    def __init__(self, space: FockSpace, decimals: int = 10):
        self.space = space
        sectors = range(space.n_max + 2)
        moms = [space.momenta(n) for n in sectors]
        allp = np.concatenate(moms, axis=0)
        keys = np.round(allp, decimals) + 0.0
        _, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
        self.eigenvalues = allp[first]
        inv = np.asarray(inv).reshape(-1)
        bounds = np.cumsum([0] + [len(m) for m in moms])
        self.labels = {n: inv[bounds[n]:bounds[n + 1]] for n in sectors}

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def groups(self, n: int) -> dict[int, np.ndarray]:
        """Group id -> tuple indices of sector ``n`` carrying that eigenvalue."""
        lab = self.labels[n]
        order = np.argsort(lab, kind="stable")
        ids, starts = np.unique(lab[order], return_index=True)
        return {int(g): idx for g, idx in zip(ids, np.split(order, starts[1:]))}

    def projector(self, g: int) -> DiagonalOperator:
        return DiagonalOperator(
            self.space, tuple((self.labels[n] == g).astype(float) for n in self.space.sectors())
        )

    def completeness_residual(self) -> float:
        total = [np.zeros(self.space.sector_dim(n)) for n in self.space.sectors()]
        for g in range(len(self)):
            for n, v in enumerate(self.projector(g).values):
                total[n] = total[n] + v.real
        return max(float(np.max(np.abs(t - 1.0))) for t in total)

    def orthogonality_residual(self) -> float:
        """Largest off-diagonal overlap ``E(p) E(p')`` between distinct groups."""
        worst = 0.0
        for n in self.space.sectors():
            masks = np.stack([v.real for v in (self.projector(g).values[n] for g in range(len(self)))])
            overlap = masks @ masks.T
            worst = max(worst, float(np.max(np.abs(overlap - np.diag(np.diag(overlap))))))
        return worst

    def spectral_condition(self) -> bool:
        p = self.eigenvalues
        return bool(np.all(p[:, 0] + 1e-12 >= np.linalg.norm(p[:, 1:], axis=1)))


def _entries(blk: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.nonzero(blk)


def alpha(A: FockOperator, x) -> FockOperator:
    """``U(x) A U(x)*`` on every block, overflow included."""
    x = np.asarray(x, dtype=float)
    sp = A.space

    def fn(a, b, blk):
        uo = np.exp(1j * minkowski_dot(sp.momenta(a), x))
        ui = np.exp(1j * minkowski_dot(sp.momenta(b), x))
        return uo[:, None] * blk * np.conj(ui)[None, :]

    return A.map_blocks(fn)


def _warp_phase(A: FockOperator, Q: WarpingMatrix) -> FockOperator:
    sp = A.space

    def fn(a, b, blk):
        r, c = _entries(blk)
        p_out, p_in = sp.momenta(a)[r], sp.momenta(b)[c]
        qp = Q.apply(p_in)
        ph = minkowski_dot(qp, p_out) - minkowski_dot(qp, p_in)
        out = np.zeros_like(blk)
        out[r, c] = blk[r, c] * np.exp(1j * ph)
        return out

    return A.map_blocks(fn)


def _warp_spectral(A: FockOperator, Q: WarpingMatrix, side: str, spec: SpectralDecomposition) -> FockOperator:
    sp = A.space
    ys = Q.apply(spec.eigenvalues)

    def fn(a, b, blk):
        out = np.zeros_like(blk)
        n = b if side == "right" else a
        for g, idx in spec.groups(n).items():
            uo = np.exp(1j * minkowski_dot(sp.momenta(a), ys[g]))
            ui = np.exp(1j * minkowski_dot(sp.momenta(b), ys[g]))
            if side == "right":
                # alpha_{Qp}(A) E(p): keep the columns with in-eigenvalue p
                out[:, idx] += uo[:, None] * blk[:, idx] * np.conj(ui[idx])[None, :]
            else:
                out[idx, :] += uo[idx, None] * blk[idx, :] * np.conj(ui)[None, :]
        return out

    return A.map_blocks(fn)


def warp(
    A: FockOperator, Q: WarpingMatrix, form: str = "phase", spectrum: SpectralDecomposition | None = None
) -> FockOperator:
    """Warped convolution ``A_Q``.

    ``phase`` multiplies ``<out|A|in>`` by ``exp(i (Q p_in).(p_out - p_in))``;
    ``right`` and ``left`` evaluate the spectral sums literally.
    """
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    if form == "phase":
        return _warp_phase(A, Q)
    spectrum = spectrum or SpectralDecomposition(A.space)
    return _warp_spectral(A, Q, form, spectrum)


def random_ladder_polynomial(space: FockSpace, rng: np.random.Generator, terms: int = 4, degree: int = 3) -> FockOperator:
    """Random complex combination of products of up to ``degree`` ladder operators."""
    ladders = [create(space, i) for i in range(space.M)] + [annihilate(space, i) for i in range(space.M)]
    op = FockOperator(space, {})
    for _ in range(terms):
        k = int(rng.integers(1, degree + 1))
        term = ladders[int(rng.integers(len(ladders)))]
        for _ in range(k - 1):
            term = term @ ladders[int(rng.integers(len(ladders)))]
        c = complex(rng.normal(), rng.normal())
        op = op + c * term
    return op


def verify_warp_properties(
    A: FockOperator,
    Q: WarpingMatrix,
    rng: np.random.Generator,
    n_translations: int = 5,
    boosts: Sequence[LorentzMap] = (),
    spectrum: SpectralDecomposition | None = None,
) -> dict[str, float]:
    """Max deviations for the vacuum, adjoint, zero-Q, translation and boost properties,
    plus agreement of the three evaluation forms."""
    sp = A.space
    spectrum = spectrum or SpectralDecomposition(sp)
    AQ = warp(A, Q)
    out: dict[str, float] = {}

    omega = FockVector.vacuum(sp)
    out["vacuum"] = (AQ.apply(omega) - A.apply(omega)).norm()
    out["adjoint"] = AQ.H.distance(warp(A.H, Q))
    out["zero"] = warp(A, WarpingMatrix.zero(sp.dim)).distance(A)

    dev = 0.0
    for _ in range(n_translations):
        x = rng.normal(size=sp.dim) * 2.0
        dev = max(dev, alpha(AQ, x).distance(warp(alpha(A, x), Q)))
    out["translation"] = dev

    dev = 0.0
    for lam in boosts:
        boosted = FockSpace(sp.modes.transform(lam), sp.n_max)
        x = rng.normal(size=sp.dim)
        lhs = alpha(AQ.relabel(boosted), x)
        rhs = warp(alpha(A.relabel(boosted), x), Q.conjugate(lam))
        dev = max(dev, lhs.distance(rhs))
    out["boost"] = dev

    out["right_form"] = AQ.distance(warp(A, Q, "right", spectrum))
    out["left_form"] = AQ.distance(warp(A, Q, "left", spectrum))
    return out


def on_shell_indicator(mass: float, dim: int, tol: float = 1e-9, profile: Callable | None = None) -> Callable:
    """``(2 pi)^{-d/2}`` on the positive mass shell (times an optional profile), zero elsewhere."""
    norm = (2 * np.pi) ** (-dim / 2)

    def chi(p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        msq = minkowski_dot(p, p)
        hit = (p[..., 0] > 0) & (np.abs(np.asarray(msq) - mass**2) <= tol * np.maximum(1.0, p[..., 0] ** 2))
        val = np.where(hit, norm, 0.0)
        if profile is not None:
            val = val * profile(p)
        return val

    return chi


def constant_symbol(dim: int) -> Callable:
    norm = (2 * np.pi) ** (-dim / 2)
    return lambda p: np.full(np.shape(p)[:-1], norm)


def smear(A: FockOperator, chi_hat: Callable) -> FockOperator:
    """Blocks multiplied by ``(2 pi)^{d/2} chi_hat(p_out - p_in)``."""
    sp = A.space
    scale = (2 * np.pi) ** (sp.dim / 2)

    def fn(a, b, blk):
        r, c = _entries(blk)
        out = np.zeros_like(blk)
        out[r, c] = blk[r, c] * scale * chi_hat(sp.momenta(a)[r] - sp.momenta(b)[c])
        return out

    return A.map_blocks(fn)


def haag_ruelle(B: FockOperator, f: KGSolution, tau: float, frame: LorentzMap | None = None) -> FockOperator:
    """Exact finite-mode image of ``int d^s x f(tau, x) alpha_{(tau, x)}(B)``.

    Blocks are multiplied by ``f~(dp) exp(i (dp^0 - omega(dp)) tau)`` with
    ``dp = p_out - p_in``.  Only the identity frame is supported.
    """
    sp = B.space
    if frame is not None and not np.allclose(frame.matrix, np.eye(sp.dim), atol=1e-14):
        raise NotImplementedError("Haag-Ruelle approximants are implemented for the identity frame only")
    if f.dim != sp.dim:
        raise ValueError("packet dimension does not match the Fock space")

    def fn(a, b, blk):
        r, c = _entries(blk)
        out = np.zeros_like(blk)
        if len(r) == 0:
            return out
        dp = sp.momenta(a)[r] - sp.momenta(b)[c]
        k = dp[:, 1:]
        phase = np.exp(1j * (dp[:, 0] - dispersion(f.mass, k)) * tau)
        out[r, c] = blk[r, c] * f.profile(k) * phase
        return out

    return B.map_blocks(fn)
