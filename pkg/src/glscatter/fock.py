"""Truncated Fock spaces over a finite set of momentum modes.

Every ``n``-particle sector is stored densely as ``M**n`` amplitudes indexed
by slot tuples ``(i_1, ..., i_n)`` in row-major order.  Unordered tensor
states and bosonic states share this layout; bosonic states are the
permutation-symmetric ones.  Operators are dicts of dense blocks between
sectors.  Blocks landing in sector ``n_max + 1`` are kept as overflow so that
truncation loss is measured rather than silently dropped.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .geometry import ConvexRegion, LorentzMap, Wedge, minkowski_dot
from .wavepacket import DEFAULT_ORDER_MARGIN, dispersion, ordered_regions, rescale_to_frame

KINDS = ("unordered", "bosonic")


class TruncationError(ValueError):
    pass


class OrderingError(ValueError):
    """A state or packet configuration violates the velocity-ordering gate."""


@dataclass(frozen=True, eq=False)
class ModeSet:
    dim: int
    mass: float
    momenta: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.momenta, dtype=float)
        if k.ndim == 1:
            k = k[:, None]
        if self.dim < 2 or k.shape[1] != self.dim - 1:
            raise ValueError(f"momenta must have {self.dim - 1} spatial components, got {k.shape}")
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if len(np.unique(np.round(k, 12), axis=0)) != len(k):
            raise ValueError("mode momenta must be pairwise distinct")
        k = k.copy()
        k.setflags(write=False)
        object.__setattr__(self, "momenta", k)

    @property
    def size(self) -> int:
        return self.momenta.shape[0]

    @cached_property
    def on_shell(self) -> np.ndarray:
        """``(M, d)`` array of ``(omega_m(k_i), k_i)``."""
        w = dispersion(self.mass, self.momenta)
        return np.concatenate([np.atleast_1d(w)[:, None], self.momenta], axis=1)

    def mass_shell_residual(self) -> float:
        return float(np.max(np.abs(minkowski_dot(self.on_shell, self.on_shell) - self.mass**2)))

    def velocities(self) -> np.ndarray:
        return self.momenta / self.on_shell[:, :1]

    def transform(self, lam: LorentzMap) -> "ModeSet":
        """Mode set carried along by a Lorentz map (same labels, boosted momenta)."""
        return ModeSet(self.dim, self.mass, lam.apply(self.on_shell)[:, 1:])

    def point_supports(self, frame: LorentzMap | None = None) -> list[ConvexRegion]:
        frame = frame or LorentzMap.identity(self.dim)
        pts = rescale_to_frame(self.on_shell, frame)
        return [ConvexRegion(p[None, :]) for p in pts]


@dataclass(frozen=True, eq=False)
class FockSpace:
    modes: ModeSet
    n_max: int

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError("n_max must be non-negative")

    @property
    def M(self) -> int:
        return self.modes.size

    @property
    def dim(self) -> int:
        return self.modes.dim

    def sector_dim(self, n: int) -> int:
        return self.M**n

    @property
    def total_dim(self) -> int:
        return sum(self.sector_dim(n) for n in range(self.n_max + 1))

    @cached_property
    def _tuples(self) -> dict[int, np.ndarray]:
        return {}

    def tuples(self, n: int) -> np.ndarray:
        if n not in self._tuples:
            if n == 0:
                t = np.zeros((1, 0), dtype=int)
            else:
                t = np.indices((self.M,) * n).reshape(n, -1).T
            self._tuples[n] = t
        return self._tuples[n]

    def index(self, tup: Sequence[int]) -> int:
        if len(tup) == 0:
            return 0
        return int(np.ravel_multi_index(tuple(tup), (self.M,) * len(tup)))

    @cached_property
    def _momenta(self) -> dict[int, np.ndarray]:
        return {}

    def momenta(self, n: int) -> np.ndarray:
        """Total energy-momentum of every slot tuple in sector ``n``: ``(M**n, d)``."""
        if n not in self._momenta:
            t = self.tuples(n)
            self._momenta[n] = self.modes.on_shell[t].sum(axis=1) if n else np.zeros((1, self.dim))
        return self._momenta[n]

    def sectors(self) -> range:
        return range(self.n_max + 1)

    def offsets(self) -> list[int]:
        return list(itertools.accumulate([0] + [self.sector_dim(n) for n in self.sectors()]))


# --- symmetrization helpers -------------------------------------------------


def symmetrize_rows(mat: np.ndarray, n: int, M: int) -> np.ndarray:
    """Apply the slot symmetrizer of sector ``n`` to every column of ``mat``."""
    if n <= 1:
        return mat.copy()
    cols = mat.shape[1]
    t = mat.reshape((M,) * n + (cols,))
    acc = np.zeros_like(t)
    for perm in itertools.permutations(range(n)):
        acc += np.transpose(t, perm + (n,))
    return (acc / math.factorial(n)).reshape(M**n, cols)


def symmetrize(vec: np.ndarray, n: int, M: int) -> np.ndarray:
    return symmetrize_rows(vec.reshape(-1, 1), n, M).reshape(-1)


# --- vectors ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FockVector:
    space: FockSpace
    sectors: tuple[np.ndarray, ...]
    kind: str = "unordered"
    discarded_sq: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        secs = tuple(np.asarray(s, dtype=complex).reshape(-1) for s in self.sectors)
        if len(secs) != self.space.n_max + 1:
            raise ValueError("one amplitude array per sector 0..n_max required")
        for n, s in enumerate(secs):
            if s.shape[0] != self.space.sector_dim(n):
                raise ValueError(f"sector {n} must have {self.space.sector_dim(n)} amplitudes")
        object.__setattr__(self, "sectors", secs)

    @classmethod
    def zero(cls, space: FockSpace, kind: str = "unordered") -> "FockVector":
        return cls(space, tuple(np.zeros(space.sector_dim(n)) for n in space.sectors()), kind)

    @classmethod
    def vacuum(cls, space: FockSpace, kind: str = "bosonic") -> "FockVector":
        secs = [np.zeros(space.sector_dim(n), dtype=complex) for n in space.sectors()]
        secs[0][0] = 1.0
        return cls(space, tuple(secs), kind)

    @classmethod
    def from_sector(cls, space: FockSpace, n: int, amp, kind: str = "unordered") -> "FockVector":
        if n > space.n_max:
            raise TruncationError(f"sector {n} exceeds n_max={space.n_max}")
        secs = [np.zeros(space.sector_dim(k), dtype=complex) for k in space.sectors()]
        secs[n] = np.asarray(amp, dtype=complex).reshape(-1)
        return cls(space, tuple(secs), kind)

    @classmethod
    def basis(cls, space: FockSpace, tup: Sequence[int], kind: str = "unordered") -> "FockVector":
        amp = np.zeros(space.sector_dim(len(tup)), dtype=complex)
        amp[space.index(tup)] = 1.0
        return cls.from_sector(space, len(tup), amp, kind)

    @classmethod
    def one_particle(cls, space: FockSpace, amplitudes) -> "FockVector":
        return cls.from_sector(space, 1, amplitudes, "unordered")

    @classmethod
    def product(cls, space: FockSpace, factors: Sequence[np.ndarray]) -> "FockVector":
        """Unordered product ``psi_1 (x) ... (x) psi_n`` of one-particle amplitude arrays."""
        amp = np.ones(1, dtype=complex)
        for f in factors:
            amp = np.kron(amp, np.asarray(f, dtype=complex).reshape(-1))
        return cls.from_sector(space, len(factors), amp)

    def sector(self, n: int) -> np.ndarray:
        return self.sectors[n]

    @property
    def discarded_norm(self) -> float:
        return math.sqrt(self.discarded_sq)

    def flat(self) -> np.ndarray:
        return np.concatenate(self.sectors)

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat()))

    def inner(self, other: "FockVector") -> complex:
        """``<self, other>``, antilinear in ``self``."""
        return complex(sum(np.vdot(a, b) for a, b in zip(self.sectors, other.sectors)))

    def _combine(self, other: "FockVector", sign: float) -> "FockVector":
        kind = self.kind if self.kind == other.kind else "unordered"
        secs = tuple(a + sign * b for a, b in zip(self.sectors, other.sectors))
        return FockVector(self.space, secs, kind, self.discarded_sq + other.discarded_sq)

    def __add__(self, other: "FockVector") -> "FockVector":
        return self._combine(other, 1.0)

    def __sub__(self, other: "FockVector") -> "FockVector":
        return self._combine(other, -1.0)

    def __mul__(self, c: complex) -> "FockVector":
        return FockVector(self.space, tuple(c * s for s in self.sectors), self.kind, abs(c) ** 2 * self.discarded_sq)

    __rmul__ = __mul__

    def asymmetry(self) -> float:
        M = self.space.M
        return max(
            (float(np.max(np.abs(s - symmetrize(s, n, M)))) for n, s in enumerate(self.sectors) if s.size),
            default=0.0,
        )

    def as_kind(self, kind: str, atol: float = 1e-12) -> "FockVector":
        if kind == "bosonic" and self.asymmetry() > atol:
            raise ValueError("state is not permutation symmetric")
        return FockVector(self.space, self.sectors, kind, self.discarded_sq)

    def support(self, n: int, atol: float = 0.0) -> list[tuple[int, ...]]:
        idx = np.flatnonzero(np.abs(self.sectors[n]) > atol)
        return [tuple(int(i) for i in self.space.tuples(n)[j]) for j in idx]


def tensor(psi: FockVector, phi: FockVector, phases=None) -> FockVector:
    """Unordered tensor product, optionally weighted by ``phases(P1, P2)`` per tuple pair."""
    space = psi.space
    out = [np.zeros(space.sector_dim(n), dtype=complex) for n in space.sectors()]
    lost = psi.discarded_sq + phi.discarded_sq
    for a, sa in enumerate(psi.sectors):
        for b, sb in enumerate(phi.sectors):
            if not (np.any(sa) and np.any(sb)):
                continue
            block = np.multiply.outer(sa, sb)
            if phases is not None:
                block = block * phases(space.momenta(a), space.momenta(b))
            if a + b > space.n_max:
                lost += float(np.sum(np.abs(block) ** 2))
                continue
            out[a + b] += block.reshape(-1)
    return FockVector(space, tuple(out), "unordered", lost)


# --- operators ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Block operator; ``blocks[(n_out, n_in)]`` has shape ``(M**n_out, M**n_in)``."""

    space: FockSpace
    blocks: dict = field(default_factory=dict)
    kind: str | None = None

    def __post_init__(self):
        sp = self.space
        clean = {}
        for (a, b), blk in self.blocks.items():
            if b > sp.n_max or a > sp.n_max + 1:
                raise TruncationError(f"block {(a, b)} outside truncation n_max={sp.n_max}")
            blk = np.asarray(blk, dtype=complex)
            if blk.shape != (sp.sector_dim(a), sp.sector_dim(b)):
                raise ValueError(f"block {(a, b)} has shape {blk.shape}")
            clean[(a, b)] = blk
        object.__setattr__(self, "blocks", clean)

    @classmethod
    def identity(cls, space: FockSpace) -> "FockOperator":
        return cls(space, {(n, n): np.eye(space.sector_dim(n)) for n in space.sectors()})

    @classmethod
    def from_dense(cls, space: FockSpace, mat: np.ndarray, atol: float = 0.0) -> "FockOperator":
        off = space.offsets()
        blocks = {}
        for a in space.sectors():
            for b in space.sectors():
                blk = mat[off[a]:off[a + 1], off[b]:off[b + 1]]
                if np.any(np.abs(blk) > atol):
                    blocks[(a, b)] = blk
        return cls(space, blocks)

    def block(self, a: int, b: int) -> np.ndarray:
        blk = self.blocks.get((a, b))
        if blk is None:
            return np.zeros((self.space.sector_dim(a), self.space.sector_dim(b)), dtype=complex)
        return blk

    def in_range(self) -> dict:
        return {k: v for k, v in self.blocks.items() if k[0] <= self.space.n_max}

    def dense(self) -> np.ndarray:
        off = self.space.offsets()
        out = np.zeros((off[-1], off[-1]), dtype=complex)
        for (a, b), blk in self.in_range().items():
            out[off[a]:off[a + 1], off[b]:off[b + 1]] = blk
        return out

    def map_blocks(self, fn) -> "FockOperator":
        """New operator with ``fn(n_out, n_in, block)`` applied to every block."""
        return FockOperator(self.space, {k: fn(k[0], k[1], v) for k, v in self.blocks.items()}, self.kind)

    def apply(self, vec: FockVector) -> FockVector:
        sp = self.space
        out = [np.zeros(sp.sector_dim(n), dtype=complex) for n in sp.sectors()]
        lost = vec.discarded_sq
        for (a, b), blk in self.blocks.items():
            y = blk @ vec.sectors[b]
            if a > sp.n_max:
                lost += float(np.sum(np.abs(y) ** 2))
            else:
                out[a] += y
        return FockVector(sp, tuple(out), self.kind or vec.kind, lost)

    @property
    def H(self) -> "FockOperator":
        return FockOperator(self.space, {(b, a): blk.conj().T for (a, b), blk in self.in_range().items()}, self.kind)

    def __matmul__(self, other):
        if isinstance(other, FockVector):
            return self.apply(other)
        if isinstance(other, DiagonalOperator):
            other = other.to_operator()
        if not isinstance(other, FockOperator):
            return NotImplemented
        out: dict = {}
        for (a, b), x in self.blocks.items():
            for (b2, c), y in other.in_range().items():
                if b2 == b:
                    out[(a, c)] = out.get((a, c), 0) + x @ y
        return FockOperator(self.space, out, self.kind or other.kind)

    def _lin(self, other: "FockOperator", sign: float) -> "FockOperator":
        if isinstance(other, DiagonalOperator):
            other = other.to_operator()
        out = dict(self.blocks)
        for k, v in other.blocks.items():
            out[k] = out.get(k, 0) + sign * v
        return FockOperator(self.space, out)

    def __add__(self, other):
        return self._lin(other, 1.0)

    def __sub__(self, other):
        return self._lin(other, -1.0)

    def __mul__(self, c: complex) -> "FockOperator":
        return FockOperator(self.space, {k: c * v for k, v in self.blocks.items()}, self.kind)

    __rmul__ = __mul__

    def distance(self, other: "FockOperator") -> float:
        """Largest entrywise deviation over all blocks (overflow included)."""
        if isinstance(other, DiagonalOperator):
            other = other.to_operator()
        keys = set(self.blocks) | set(other.blocks)
        return max((float(np.max(np.abs(self.block(*k) - other.block(*k)), initial=0.0)) for k in keys), default=0.0)

    def relabel(self, space: FockSpace) -> "FockOperator":
        """Same matrix on another space with identical sector layout (mode relabelling)."""
        if space.M != self.space.M or space.n_max != self.space.n_max:
            raise ValueError("relabelling requires identical sector layout")
        return FockOperator(space, self.blocks, self.kind)


@dataclass(frozen=True, eq=False)
class DiagonalOperator:
    """Operator diagonal in the slot-tuple basis, stored as one value array per sector."""

    space: FockSpace
    values: tuple[np.ndarray, ...]

    def __post_init__(self):
        vals = tuple(np.asarray(v, dtype=complex).reshape(-1) for v in self.values)
        if len(vals) != self.space.n_max + 1:
            raise ValueError("one value array per sector required")
        object.__setattr__(self, "values", vals)

    def to_operator(self) -> FockOperator:
        return FockOperator(self.space, {(n, n): np.diag(v) for n, v in enumerate(self.values)})

    def apply(self, vec: FockVector) -> FockVector:
        secs = tuple(v * s for v, s in zip(self.values, vec.sectors))
        return FockVector(self.space, secs, vec.kind, vec.discarded_sq)

    @property
    def H(self) -> "DiagonalOperator":
        return DiagonalOperator(self.space, tuple(v.conj() for v in self.values))

    def __matmul__(self, other):
        if isinstance(other, FockVector):
            return self.apply(other)
        if isinstance(other, DiagonalOperator):
            return DiagonalOperator(self.space, tuple(a * b for a, b in zip(self.values, other.values)))
        if isinstance(other, FockOperator):
            blocks = {}
            for (a, b), blk in other.in_range().items():
                blocks[(a, b)] = self.values[a][:, None] * blk
            return FockOperator(self.space, blocks, other.kind)
        return NotImplemented

    def distance(self, other) -> float:
        if isinstance(other, DiagonalOperator):
            return max(float(np.max(np.abs(a - b))) for a, b in zip(self.values, other.values))
        return self.to_operator().distance(other)

    def restrict(self, tuples: Sequence[Sequence[int]]) -> np.ndarray:
        """Diagonal values on the given slot tuples (all of one length)."""
        return np.array([self.values[len(t)][self.space.index(t)] for t in tuples], dtype=complex)


# --- ladder operators -------------------------------------------------------


def _check_mode(space: FockSpace, i: int) -> None:
    if not 0 <= i < space.M:
        raise IndexError(f"mode index {i} out of range 0..{space.M - 1}")


def create(space: FockSpace, i: int, kind: str = "bosonic") -> FockOperator:
    """Creation operator for mode ``i``.

    ``bosonic``: ``sqrt(n+1) Sym(e_i (x) Sym psi)``, the standard ladder on
    symmetric tensors (zero on the non-symmetric complement).  ``unordered``:
    ``e_i (x) psi``, a new leading slot.  The block into ``n_max + 1`` is kept as
    overflow.
    """
    _check_mode(space, i)
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    M = space.M
    blocks = {}
    for n in range(space.n_max + 1):
        dn = M**n
        inner = symmetrize_rows(np.eye(dn), n, M) if kind == "bosonic" else np.eye(dn)
        lifted = np.zeros((M ** (n + 1), dn), dtype=complex)
        lifted[i * dn:(i + 1) * dn, :] = inner
        if kind == "bosonic":
            lifted = math.sqrt(n + 1) * symmetrize_rows(lifted, n + 1, M)
        blocks[(n + 1, n)] = lifted
    return FockOperator(space, blocks, kind)


def annihilate(space: FockSpace, i: int, kind: str = "bosonic") -> FockOperator:
    return create(space, i, kind).H


def field_operator(space: FockSpace, coupling) -> FockOperator:
    """``sum_i g_i a*(i) + conj(g_i) a(i)``; a field-type operator of the free model."""
    g = np.asarray(coupling, dtype=complex).reshape(-1)
    if g.shape[0] != space.M:
        raise ValueError("one coupling per mode required")
    op = FockOperator(space, {})
    for i, gi in enumerate(g):
        if gi != 0:
            c = create(space, i)
            op = op + gi * c + np.conj(gi) * c.H
    return op


def symmetric_projector(space: FockSpace) -> FockOperator:
    M = space.M
    return FockOperator(space, {(n, n): symmetrize_rows(np.eye(M**n), n, M) for n in space.sectors()})


def number_operator(space: FockSpace) -> DiagonalOperator:
    return DiagonalOperator(space, tuple(np.full(space.sector_dim(n), float(n)) for n in space.sectors()))


# --- energy-momentum ------------------------------------------------------------


def translate(space: FockSpace, x) -> DiagonalOperator:
    """``U(x) = exp(i (t H - x.P))``: phase ``exp(i x.p)`` on a tuple of total momentum ``p``."""
    x = np.asarray(x, dtype=float)
    return DiagonalOperator(space, tuple(np.exp(1j * minkowski_dot(space.momenta(n), x)) for n in space.sectors()))


def energy_momentum(space: FockSpace, mu: int) -> DiagonalOperator:
    return DiagonalOperator(space, tuple(space.momenta(n)[:, mu] for n in space.sectors()))


def slot_momentum_operator(space: FockSpace, slot: int) -> list[DiagonalOperator]:
    """Components ``P_slot^mu`` (slot is 1-based); zero on sectors with fewer particles."""
    if slot < 1:
        raise ValueError("slots are numbered from 1")
    k = space.modes.on_shell
    comps = []
    for mu in range(space.dim):
        vals = []
        for n in space.sectors():
            if n < slot:
                vals.append(np.zeros(space.sector_dim(n)))
            else:
                vals.append(k[space.tuples(n)[:, slot - 1], mu])
        comps.append(DiagonalOperator(space, tuple(vals)))
    return comps


# --- ordering, embeddings, reversal -------------------------------------------


def ordered_basis(
    space: FockSpace,
    wedge: Wedge,
    direction: str,
    n: int,
    frame: LorentzMap | None = None,
    margin: float = DEFAULT_ORDER_MARGIN,
) -> list[tuple[int, ...]]:
    """Slot tuples of distinct modes whose point velocity supports form a chain.

    ``out``: ``V(i_1) > V(i_2) > ...``; ``in``: ``V(i_1) < V(i_2) < ...``.
    """
    if n > space.n_max:
        raise TruncationError(f"n={n} exceeds n_max={space.n_max}")
    if direction not in ("out", "in"):
        raise ValueError("direction must be 'out' or 'in'")
    supports = space.modes.point_supports(frame)
    return [
        tup
        for tup in itertools.permutations(range(space.M), n)
        if ordered_regions([supports[i] for i in tup], wedge, direction, margin)
    ]


def embedding_matrix(space: FockSpace, tuples: Sequence[Sequence[int]]) -> np.ndarray:
    """Columns ``sqrt(n!) Sym(e_t)`` for each tuple ``t`` (all of one length ``n``)."""
    if not tuples:
        return np.zeros((0, 0), dtype=complex)
    n = len(tuples[0])
    cols = np.zeros((space.sector_dim(n), len(tuples)), dtype=complex)
    for j, t in enumerate(tuples):
        cols[space.index(t), j] = 1.0
    return math.sqrt(math.factorial(n)) * symmetrize_rows(cols, n, space.M)


def embed(psi: FockVector) -> FockVector:
    """``sqrt(n!) Sym`` on every sector, i.e. ``a*(psi_1)...a*(psi_n) Omega`` on products."""
    M = psi.space.M
    secs = tuple(math.sqrt(math.factorial(n)) * symmetrize(s, n, M) for n, s in enumerate(psi.sectors))
    return FockVector(psi.space, secs, "bosonic", psi.discarded_sq)


def embed_ordered(
    psi: FockVector,
    wedge: Wedge,
    direction: str,
    frame: LorentzMap | None = None,
    margin: float = DEFAULT_ORDER_MARGIN,
    atol: float = 0.0,
) -> FockVector:
    """Embedding of a velocity-ordered unordered-tensor state into the bosonic Fock space."""
    space = psi.space
    for n in space.sectors():
        if n < 2:
            continue
        allowed = np.zeros(space.sector_dim(n), dtype=bool)
        for t in ordered_basis(space, wedge, direction, n, frame, margin):
            allowed[space.index(t)] = True
        if np.any(np.abs(psi.sectors[n][~allowed]) > atol):
            raise OrderingError(f"sector {n} has amplitude outside the {direction}-ordered basis")
    return embed(psi)


def reversal_index(space: FockSpace, n: int) -> np.ndarray:
    """``rev[j]`` is the flat index of the reversed tuple of tuple ``j``."""
    t = space.tuples(n)
    if n == 0:
        return np.zeros(1, dtype=int)
    return np.ravel_multi_index(tuple(t[:, ::-1].T), (space.M,) * n)


def reversal(space: FockSpace) -> FockOperator:
    """Slot-order reversal ``Z``."""
    blocks = {}
    for n in space.sectors():
        dn = space.sector_dim(n)
        P = np.zeros((dn, dn))
        P[reversal_index(space, n), np.arange(dn)] = 1.0
        blocks[(n, n)] = P
    return FockOperator(space, blocks)


def reverse_tuples(tuples: Iterable[Sequence[int]]) -> list[tuple[int, ...]]:
    return [tuple(reversed(t)) for t in tuples]


def distinct_symmetric_dim(M: int, n: int) -> int:
    return math.comb(M, n)


def distinct_symmetric_basis(space: FockSpace, n: int) -> np.ndarray:
    """Orthonormal basis of the symmetric states built from ``n`` distinct modes."""
    combos = list(itertools.combinations(range(space.M), n))
    return embedding_matrix(space, combos)
