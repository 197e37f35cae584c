"""Deformed tensor products, the multi-particle phase operator ``S_Q`` and
the S-matrix and wedge-transition algebra built from them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock import (
    DiagonalOperator,
    FockSpace,
    FockVector,
    embedding_matrix,
    ordered_basis,
    reverse_tuples,
    tensor,
)
from .geometry import LorentzMap, WarpingMatrix, Wedge, minkowski_dot, warping_for_wedge
from .wavepacket import DEFAULT_ORDER_MARGIN


def pair_table(space: FockSpace, Q: WarpingMatrix) -> np.ndarray:
    """``G[i, j] = k_i . Q k_j`` over on-shell mode vectors."""
    k = space.modes.on_shell
    return minkowski_dot(k[:, None, :], Q.apply(k)[None, :, :])


def tuple_phase(G: np.ndarray, tup: Sequence[int]) -> float:
    """``sum_{a<b} G[t_a, t_b]`` with compensated summation."""
    return math.fsum(G[tup[a], tup[b]] for a in range(len(tup)) for b in range(a + 1, len(tup)))


def sq_exponents(space: FockSpace, Q: WarpingMatrix, n: int) -> np.ndarray:
    G = pair_table(space, Q)
    return np.array([tuple_phase(G, t) for t in space.tuples(n)])


def s_q(space: FockSpace, Q: WarpingMatrix) -> DiagonalOperator:
    """Diagonal phase ``exp(i sum_{a<b} k_a . Q k_b)`` on every slot tuple."""
    return DiagonalOperator(space, tuple(np.exp(1j * sq_exponents(space, Q, n)) for n in space.sectors()))


def deformed_tensor(psi: FockVector, phi: FockVector, Q: WarpingMatrix) -> FockVector:
    """``psi (x)_Q phi = exp(i P_1 . Q P_2) psi (x) phi`` with ``P_1, P_2`` the factors' momenta."""

    def phases(p1, p2):
        return np.exp(1j * minkowski_dot(p1[:, None, :], Q.apply(p2)[None, :, :]))

    return tensor(psi, phi, phases)


def deformed_chain(factors: Sequence[FockVector], Q: WarpingMatrix) -> FockVector:
    """Left-nested ``psi_1 (x)_Q psi_2 (x)_Q ... (x)_Q psi_n``."""
    out = FockVector.vacuum(factors[0].space, "unordered")
    for f in factors:
        out = deformed_tensor(out, f, Q)
    return out


def mixed_associativity_witness(space: FockSpace, Q: WarpingMatrix, modes: tuple[int, int, int] = (0, 1, 2)) -> float:
    """``|| (e_i (x)_Q e_j) (x) e_k - e_i (x)_Q (e_j (x) e_k) ||``; nonzero in general."""
    e = [FockVector.basis(space, (i,)) for i in modes]
    lhs = tensor(deformed_tensor(e[0], e[1], Q), e[2])
    rhs = deformed_tensor(e[0], tensor(e[1], e[2]), Q)
    return (lhs - rhs).norm()


@dataclass(frozen=True, eq=False)
class OrderedMap:
    """Matrix between spans of slot-tuple bases (rows: targets, cols: sources)."""

    rows: tuple
    cols: tuple
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        object.__setattr__(self, "cols", tuple(tuple(c) for c in self.cols))
        if m.shape != (len(self.rows), len(self.cols)):
            raise ValueError(f"matrix shape {m.shape} does not match the bases")
        object.__setattr__(self, "matrix", m)

    @property
    def H(self) -> "OrderedMap":
        return OrderedMap(self.cols, self.rows, self.matrix.conj().T)

    def __matmul__(self, other: "OrderedMap") -> "OrderedMap":
        if self.cols != other.rows:
            raise ValueError("domain mismatch between composed maps")
        return OrderedMap(self.rows, other.cols, self.matrix @ other.matrix)

    def reindexed(self, rows, cols) -> "OrderedMap":
        """Same map with its bases listed in the given order."""
        rows, cols = tuple(map(tuple, rows)), tuple(map(tuple, cols))
        if sorted(rows) != sorted(self.rows) or sorted(cols) != sorted(self.cols):
            raise ValueError("maps act between different bases")
        if not rows or not cols:
            return OrderedMap(rows, cols, np.zeros((len(rows), len(cols))))
        ri = {t: j for j, t in enumerate(self.rows)}
        ci = {t: j for j, t in enumerate(self.cols)}
        m = self.matrix[np.ix_([ri[t] for t in rows], [ci[t] for t in cols])]
        return OrderedMap(rows, cols, m)

    def distance(self, other: "OrderedMap") -> float:
        other = other.reindexed(self.rows, self.cols)
        if self.matrix.size == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix - other.matrix)))

    def unitarity_residual(self) -> float:
        if self.matrix.size == 0:
            return 0.0
        eye = np.eye(len(self.cols))
        res = np.max(np.abs(self.matrix.conj().T @ self.matrix - eye))
        if len(self.rows) == len(self.cols):
            res = max(res, np.max(np.abs(self.matrix @ self.matrix.conj().T - eye)))
        return float(res)


def phase_map(space: FockSpace, Q: WarpingMatrix, tuples: Sequence[tuple[int, ...]]) -> OrderedMap:
    """``S_Q`` restricted to the span of ``tuples``."""
    G = pair_table(space, Q)
    ph = np.exp(1j * np.array([tuple_phase(G, t) for t in tuples]))
    return OrderedMap(tuples, tuples, np.diag(ph))


def reversal_map(tuples: Sequence[tuple[int, ...]]) -> OrderedMap:
    """``Z`` from the span of ``tuples`` onto the span of their reversals."""
    return OrderedMap(reverse_tuples(tuples), tuples, np.eye(len(tuples)))


def gl_smatrix(
    space: FockSpace,
    W: Wedge,
    final: str,
    Q0: WarpingMatrix,
    n: int,
    frame: LorentzMap | None = None,
    margin: float = DEFAULT_ORDER_MARGIN,
) -> OrderedMap:
    """S-matrix of the deformed free field on the in-ordered ``n``-particle basis of ``W``.

    ``opposite``: final wedge ``W'``, ``S_{2 Q_W}``.  ``same``: final wedge
    ``W``, ``Z S_{2 Q_W}``.
    """
    if final not in ("same", "opposite"):
        raise ValueError("final must be 'same' or 'opposite'")
    cols = ordered_basis(space, W, "in", n, frame, margin)
    S = phase_map(space, 2 * warping_for_wedge(W, Q0), cols)
    return S if final == "opposite" else reversal_map(cols) @ S


def free_smatrix(
    space: FockSpace,
    W_f: Wedge,
    W_i: Wedge,
    n: int,
    frame: LorentzMap | None = None,
    margin: float = DEFAULT_ORDER_MARGIN,
) -> OrderedMap:
    """Undeformed S-matrix ``(I^{> W_f})* I^{< W_i}`` from the embeddings."""
    rows = ordered_basis(space, W_f, "out", n, frame, margin)
    cols = ordered_basis(space, W_i, "in", n, frame, margin)
    return _overlap(space, rows, cols)


def transition_free(
    space: FockSpace,
    W2: Wedge,
    W1: Wedge,
    n: int,
    frame: LorentzMap | None = None,
    margin: float = DEFAULT_ORDER_MARGIN,
) -> OrderedMap:
    """Undeformed outgoing wedge transition ``(I^{> W2})* I^{> W1}``."""
    rows = ordered_basis(space, W2, "out", n, frame, margin)
    cols = ordered_basis(space, W1, "out", n, frame, margin)
    return _overlap(space, rows, cols)


def _overlap(space: FockSpace, rows, cols) -> OrderedMap:
    Er = embedding_matrix(space, rows)
    Ec = embedding_matrix(space, cols)
    if not rows or not cols:
        return OrderedMap(rows, cols, np.zeros((len(rows), len(cols))))
    return OrderedMap(rows, cols, Er.conj().T @ Ec)


def compose_deformed_smatrix(space: FockSpace, S0: OrderedMap, W_f: Wedge, W_i: Wedge, Q0: WarpingMatrix) -> OrderedMap:
    """``(S_{Q_{W_f}})* S0 S_{Q_{W_i}}`` with the phase operators restricted to S0's bases."""
    Sf = phase_map(space, warping_for_wedge(W_f, Q0), S0.rows)
    Si = phase_map(space, warping_for_wedge(W_i, Q0), S0.cols)
    return Sf.H @ S0 @ Si


def pairwise_factorization_residual(space: FockSpace, Q: WarpingMatrix, tuples: Sequence[tuple[int, ...]]) -> float:
    """Largest gap between the n-particle phase and the product of its two-particle phases.

    Two-particle phases are read off the two-particle S-matrix entries.
    """
    if not tuples:
        return 0.0
    pairs = sorted({(t[a], t[b]) for t in tuples for a in range(len(t)) for b in range(a + 1, len(t))})
    two = phase_map(space, Q, pairs)
    table = {p: two.matrix[j, j] for j, p in enumerate(pairs)}
    full = phase_map(space, Q, tuples)
    worst = 0.0
    for j, t in enumerate(tuples):
        prod = np.prod([table[(t[a], t[b])] for a in range(len(t)) for b in range(a + 1, len(t))])
        worst = max(worst, abs(full.matrix[j, j] - prod))
    return worst


def wedge_swap_check(
    space: FockSpace, W: Wedge, n: int, frame: LorentzMap | None = None, margin: float = DEFAULT_ORDER_MARGIN
) -> dict:
    """Checks ``I^{> W} = I^{> W'} Z`` on the out-ordered basis of ``W``."""
    out_w = ordered_basis(space, W, "out", n, frame, margin)
    out_wc = ordered_basis(space, W.complement(), "out", n, frame, margin)
    rev = reverse_tuples(out_w)
    bijective = sorted(rev) == sorted(out_wc)
    if not out_w:
        return {"n": n, "count": 0, "deviation": 0.0, "bijective": bijective}
    lhs = embedding_matrix(space, out_w)
    rhs = embedding_matrix(space, rev)
    return {
        "n": n,
        "count": len(out_w),
        "deviation": float(np.max(np.abs(lhs - rhs))),
        "bijective": bijective,
    }
