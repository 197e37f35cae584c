"""Wave operators of the free and the deformed model on a finite mode set,
deformed scattering states and ordered-completeness rank checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .deformation import deformed_chain, s_q
from .fock import (
    FockOperator,
    FockSpace,
    FockVector,
    OrderingError,
    distinct_symmetric_basis,
    distinct_symmetric_dim,
    embed,
    embedding_matrix,
    field_operator,
    ordered_basis,
)
from .geometry import LorentzMap, WarpingMatrix, Wedge, warping_for_wedge
from .wavepacket import DEFAULT_ORDER_MARGIN, KGSolution, TabulatedProfile, ordered
from .warped import haag_ruelle, on_shell_indicator, smear, warp


@dataclass(frozen=True, eq=False)
class WaveOperator:
    """Map from the span of ordered tuples into the ``n``-particle sector (columns = images)."""

    n: int
    cols: tuple
    matrix: np.ndarray

    def isometry_residual(self) -> float:
        if not self.cols:
            return 0.0
        g = self.matrix.conj().T @ self.matrix
        return float(np.max(np.abs(g - np.eye(len(self.cols)))))


def wave_operator_free(
    space: FockSpace,
    W: Wedge,
    direction: str,
    n: int,
    frame: LorentzMap | None = None,
    margin: float = DEFAULT_ORDER_MARGIN,
) -> WaveOperator:
    """``I^{> W}`` (out) or ``I^{< W}`` (in) on the ordered ``n``-particle basis."""
    cols = ordered_basis(space, W, direction, n, frame, margin)
    return WaveOperator(n, tuple(cols), embedding_matrix(space, cols))


def mode_packet(space: FockSpace, i: int) -> KGSolution:
    """Packet whose profile is the indicator of mode ``i`` on the mode lattice."""
    vals = np.zeros(space.M)
    vals[i] = 1.0
    return KGSolution(TabulatedProfile(space.modes.momenta, vals), space.modes.mass)


def profile_amplitudes(space: FockSpace, f: KGSolution) -> np.ndarray:
    """One-particle amplitudes ``f~(k_i)`` on the mode lattice."""
    return np.asarray(f.profile(space.modes.momenta), dtype=complex)


def creation_approximant(
    space: FockSpace, Q: WarpingMatrix, chi_hat: Callable | None = None, coupling=None, form: str = "right"
) -> FockOperator:
    """Smeared warped field ``B = (2 pi)^{d/2} chi^(H,P) A_Q``, with ``A`` a field-type operator.

    The warp defaults to the literal spectral sum so that scattering states
    never share code with the diagonal phase route they are compared against.
    """
    A = field_operator(space, np.ones(space.M) if coupling is None else coupling)
    chi_hat = chi_hat or on_shell_indicator(space.modes.mass, space.dim)
    return smear(warp(A, Q, form), chi_hat)


def _check_gate(fs, W, direction, frame, margin):
    if not ordered(fs, W, frame, direction, margin):
        raise OrderingError(f"packets are not {direction}-ordered with respect to the wedge")


def deformed_product_state(
    space: FockSpace,
    fs: Sequence[KGSolution],
    W: Wedge,
    Q0: WarpingMatrix,
    tau: float,
    direction: str = "out",
    frame: LorentzMap | None = None,
    margin: float = DEFAULT_ORDER_MARGIN,
    B: FockOperator | None = None,
) -> FockVector:
    """``B_{1,tau}(f_1) ... B_{n,tau}(f_n) Omega`` with warped, smeared Haag-Ruelle approximants.

    The packets must satisfy the ordering gate for ``direction``; ``B`` may
    carry a precomputed approximant for ``Q_W``.
    """
    _check_gate(fs, W, direction, frame, margin)
    if len(fs) > space.n_max:
        raise ValueError("more packets than the truncation allows")
    if B is None:
        B = creation_approximant(space, warping_for_wedge(W, Q0))
    state = FockVector.vacuum(space)
    for f in reversed(fs):
        state = haag_ruelle(B, f, tau, frame).apply(state)
    return state


def undeformed_product(space: FockSpace, fs: Sequence[KGSolution]) -> FockVector:
    return FockVector.product(space, [profile_amplitudes(space, f) for f in fs])


def phase_route_state(space: FockSpace, fs: Sequence[KGSolution], Q: WarpingMatrix) -> FockVector:
    """``I S_Q (psi_1 (x) ... (x) psi_n)`` via the diagonal phase operator."""
    return embed(s_q(space, Q).apply(undeformed_product(space, fs)))


def chain_route_state(space: FockSpace, fs: Sequence[KGSolution], Q: WarpingMatrix) -> FockVector:
    """``I (psi_1 (x)_Q ... (x)_Q psi_n)``."""
    factors = [FockVector.one_particle(space, profile_amplitudes(space, f)) for f in fs]
    return embed(deformed_chain(factors, Q))


def verify_defw(
    space: FockSpace,
    fs: Sequence[KGSolution],
    W: Wedge,
    Q0: WarpingMatrix,
    tau: float = 0.0,
    direction: str = "out",
    frame: LorentzMap | None = None,
    margin: float = DEFAULT_ORDER_MARGIN,
    B: FockOperator | None = None,
) -> dict:
    """Residuals between the deformed scattering state and its free-model expressions."""
    Q = warping_for_wedge(W, Q0)
    lhs = deformed_product_state(space, fs, W, Q0, tau, direction, frame, margin, B)
    via_sq = phase_route_state(space, fs, Q)
    via_chain = chain_route_state(space, fs, Q)
    return {
        "n": len(fs),
        "direction": direction,
        "norm": lhs.norm(),
        "delta_sq": (lhs - via_sq).norm(),
        "delta_chain": (lhs - via_chain).norm(),
        "discarded": lhs.discarded_norm,
    }


def wave_operator_deformed(
    space: FockSpace,
    W: Wedge,
    direction: str,
    Q0: WarpingMatrix,
    n: int,
    frame: LorentzMap | None = None,
    margin: float = DEFAULT_ORDER_MARGIN,
) -> WaveOperator:
    """Deformed wave operator columns built from mode packets through the warped approximants."""
    cols = ordered_basis(space, W, direction, n, frame, margin)
    B = creation_approximant(space, warping_for_wedge(W, Q0))
    mat = np.zeros((space.sector_dim(n), len(cols)), dtype=complex)
    for j, t in enumerate(cols):
        fs = [mode_packet(space, i) for i in t]
        mat[:, j] = deformed_product_state(space, fs, W, Q0, 0.0, direction, frame, margin, B).sector(n)
    return WaveOperator(n, tuple(cols), mat)


def _rank(mat: np.ndarray, rtol: float) -> int:
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(s > rtol * max(1.0, s[0])))


def completeness_check(
    space: FockSpace,
    W: Wedge,
    direction: str,
    n: int,
    Q0: WarpingMatrix,
    frame: LorentzMap | None = None,
    margin: float = DEFAULT_ORDER_MARGIN,
    rtol: float = 1e-10,
) -> dict:
    """Rank of the ordered scattering states inside the distinct-mode symmetric sector."""
    if n > space.n_max:
        raise ValueError(f"n={n} exceeds n_max={space.n_max}")
    Wq = wave_operator_deformed(space, W, direction, Q0, n, frame, margin)
    W0 = wave_operator_deformed(space, W, direction, WarpingMatrix.zero(space.dim), n, frame, margin)
    dim = distinct_symmetric_dim(space.M, n)
    basis = distinct_symmetric_basis(space, n)
    # images must stay inside the distinct-mode symmetric subspace
    leak = 0.0
    if Wq.cols:
        proj = basis @ (basis.conj().T @ Wq.matrix)
        leak = float(np.max(np.abs(proj - Wq.matrix)))
    rank_q = _rank(Wq.matrix, rtol)
    rank_0 = _rank(W0.matrix, rtol)
    return {
        "n": n,
        "M": space.M,
        "direction": direction,
        "ordered_count": len(Wq.cols),
        "dimension": dim,
        "rank": rank_q,
        "rank_undeformed": rank_0,
        "subspace_leak": leak,
        "complete": rank_q == dim,
        "stable": rank_q == rank_0,
    }


def isometry_on_products(space: FockSpace, fs: Sequence[KGSolution], W: Wedge, Q0: WarpingMatrix) -> float:
    """``| ||state||^2 - prod ||psi_k||^2 |`` for an ordered product with orthogonal factors."""
    state = deformed_product_state(space, fs, W, Q0, 0.0)
    expected = math.prod(float(np.sum(np.abs(profile_amplitudes(space, f)) ** 2)) for f in fs)
    return abs(state.norm() ** 2 - expected)
