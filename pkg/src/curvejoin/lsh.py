"""Randomly shifted grid hashing for curves and the tensored table index.

A curve is snapped to a randomly shifted grid (each vertex to its closest
grid vertex) and the resulting cell sequence, with consecutive duplicates
removed, is its signature. Signatures of k concatenated grids are folded
into a 32-bit key by a streaming polynomial accumulator finished with one
multiply-shift step. The index keeps L = L' * L' tables but evaluates only
2 * L' signatures per curve: table (i, j) pairs the i-th hash of one group
with the j-th hash of the other, so per-curve grid work drops from k * L
to k * sqrt(L).

Everything is derived deterministically from a 64-bit seed via
counter-based PRNG streams, one per (group, table slot, concatenation
slot), so indices are reproducible across platforms and processes.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curves import Curve, Dataset

__all__ = [
    "GridHash",
    "IndexFormatError",
    "LshIndex",
    "LshParams",
    "ScoredCandidate",
    "SequenceHasher",
    "Signature",
    "build_index",
    "dataset_fingerprint",
    "fold_key",
    "load_index",
    "query_scores",
    "save_index",
    "snap_signature",
]

MASK64 = (1 << 64) - 1

# word injected between per-grid blocks so block boundaries are positional
_SEPARATOR = 0x9E3779B97F4A7C15


class IndexFormatError(ValueError):
    """Raised when an index file is malformed or does not match the dataset."""


@dataclass(frozen=True)
class LshParams:
    """Hashing parameters; the table count is rounded up to a square.

    L is the requested table count at construction and the effective one
    (l_prime squared) afterwards.
    """

    delta: float
    k: int
    L: int
    d: int
    seed: int
    l_prime: int = field(init=False)

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.k < 1 or self.L < 1 or self.d < 1:
            raise ValueError("k, L, and d must be >= 1")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must fit in 64 bits")
        lp = math.isqrt(self.L)
        if lp * lp < self.L:
            lp += 1
        object.__setattr__(self, "l_prime", lp)
        object.__setattr__(self, "L", lp * lp)


@dataclass(frozen=True)
class GridHash:
    """A grid of side delta shifted by t, with every t_i uniform in [0, delta)."""

    delta: float
    shift: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.shift, dtype=np.float64)
        if s.ndim != 1 or not ((0.0 <= s) & (s < self.delta)).all():
            raise ValueError("shift must be a vector with entries in [0, delta)")
        s.setflags(write=False)
        object.__setattr__(self, "shift", s)

    def cells(self, vertices: np.ndarray) -> np.ndarray:
        # round-half-up: the closest grid vertex to x is at cell*delta + t
        return np.floor((vertices - self.shift) / self.delta + 0.5).astype(np.int64)


@dataclass(frozen=True)
class Signature:
    """Snapped cell sequences, one block per concatenated grid.

    Each block is an (m_i, d) integer array with no two consecutive rows
    equal and m_i at most the source curve length.
    """

    blocks: tuple[np.ndarray, ...]


def snap_signature(grids, p: Curve, stats: dict | None = None) -> Signature:
    """Snap a curve to each grid in turn; one deduplicated block per grid."""
    blocks = []
    for g in grids:
        if len(g.shift) != p.dim:
            raise ValueError(f"dimension mismatch: grid {len(g.shift)}, curve {p.dim}")
        cells = g.cells(p.vertices)
        if len(cells) > 1:
            keep = np.empty(len(cells), dtype=bool)
            keep[0] = True
            keep[1:] = (cells[1:] != cells[:-1]).any(axis=1)
            cells = cells[keep]
        cells.setflags(write=False)
        blocks.append(cells)
        if stats is not None:
            stats["grid_evals"] = stats.get("grid_evals", 0) + 1
    return Signature(tuple(blocks))


@dataclass(frozen=True)
class SequenceHasher:
    """Folds cell sequences into 32-bit keys, streaming one word at a time.

    Every cell coordinate is mixed through a fixed per-coordinate 64-bit
    finalizer, accumulated into a rolling polynomial with the odd
    multiplier a (wrapping 64-bit arithmetic), and the final multiply-shift
    (a * acc mod 2^64) >> (u - v) keeps the top v bits.
    """

    a: int
    mixers: np.ndarray

    U = 64
    V = 32

    def __post_init__(self):
        if self.a % 2 == 0 or not 0 < self.a <= MASK64:
            raise ValueError("multiplier a must be odd and fit in 64 bits")
        m = np.asarray(self.mixers, dtype=np.uint64)
        m.setflags(write=False)
        object.__setattr__(self, "mixers", m)

    @classmethod
    def from_rng(cls, rng: np.random.Generator, d: int) -> "SequenceHasher":
        a = int.from_bytes(rng.bytes(8), "little") | 1
        mixers = np.frombuffer(rng.bytes(8 * d), dtype="<u8").copy()
        return cls(a, mixers)

    def _mix(self, cells: np.ndarray) -> np.ndarray:
        """Per-coordinate mixed words of a cell block, row-major."""
        z = cells.view(np.uint64) ^ self.mixers
        z = z ^ (z >> 30)
        z = z * 0xBF58476D1CE4E5B9
        z = z ^ (z >> 27)
        z = z * 0x94D049BB133111EB
        z = z ^ (z >> 31)
        return z.ravel()

    def fold_state(self, sig: Signature, lead_separator: bool = False):
        """Polynomial accumulator over the signature's words.

        Returns (acc, a**n mod 2^64); two states compose associatively,
        which is what lets tensored table keys reuse per-group folds.
        """
        words: list[np.ndarray] = []
        sep = np.array([_SEPARATOR], dtype=np.uint64)
        for bi, block in enumerate(sig.blocks):
            if bi > 0 or lead_separator:
                words.append(sep)
            words.append(self._mix(block))
        if not words:
            return 0, 1
        w = np.concatenate(words)
        powers = np.full(len(w), self.a, dtype=np.uint64)
        powers[0] = 1
        powers = powers.cumprod()  # wraps mod 2^64
        acc = int((w * powers[::-1]).sum(dtype=np.uint64))
        return acc, (int(powers[-1]) * self.a) & MASK64

    @staticmethod
    def combine(s1, s2):
        a1, p1 = s1
        a2, p2 = s2
        return (a1 * p2 + a2) & MASK64, (p1 * p2) & MASK64

    def finalize(self, acc: int) -> int:
        return ((self.a * acc) & MASK64) >> (self.U - self.V)


def fold_key(h: SequenceHasher, sig: Signature) -> int:
    """One-pass 32-bit key of a signature."""
    acc, _ = h.fold_state(sig)
    return h.finalize(acc)


def _stream(seed: int, group: int, slot: int, concat: int) -> np.random.Generator:
    # one counter-based stream per role keeps every draw reproducible
    ss = np.random.SeedSequence(seed, spawn_key=(group, slot, concat))
    return np.random.Generator(np.random.Philox(ss))


def _draw_grids(params: LshParams):
    half_up = (params.k + 1) // 2
    half_down = params.k // 2
    lambda1 = tuple(
        tuple(
            GridHash(params.delta, _stream(params.seed, 0, slot, c).uniform(0.0, params.delta, params.d))
            for c in range(half_up)
        )
        for slot in range(params.l_prime)
    )
    lambda2 = tuple(
        tuple(
            GridHash(params.delta, _stream(params.seed, 1, slot, c).uniform(0.0, params.delta, params.d))
            for c in range(half_down)
        )
        for slot in range(params.l_prime)
    )
    hasher = SequenceHasher.from_rng(_stream(params.seed, 2, 0, 0), params.d)
    return lambda1, lambda2, hasher


def dataset_fingerprint(dataset: Dataset) -> int:
    """Order-sensitive 64-bit checksum of the dataset's exact contents."""
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<QQ", dataset.n, dataset.d))
    for i in range(dataset.n):
        c = dataset[i]
        h.update(struct.pack("<Q", len(c)))
        h.update(np.ascontiguousarray(c.vertices).tobytes())
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class LshIndex:
    """Immutable L-table index; table (i, j) lives at index i * l_prime + j."""

    params: LshParams
    lambda1: tuple
    lambda2: tuple
    hasher: SequenceHasher
    tables: tuple
    fingerprint: int
    grid_evals: int


@dataclass(frozen=True)
class ScoredCandidate:
    """A colliding curve: collisions out of L tables, score = collisions/L."""

    curve_id: int
    collisions: int
    score: float


def _table_keys(lambda1, lambda2, hasher: SequenceHasher, p: Curve,
                stats: dict | None = None) -> list[int]:
    """The curve's key in each of the L tables (2 * l_prime snaps total)."""
    states1 = [
        hasher.fold_state(snap_signature(g, p, stats)) for g in lambda1
    ]
    states2 = [
        hasher.fold_state(snap_signature(g, p, stats), lead_separator=True)
        for g in lambda2
    ]
    keys = []
    for s1 in states1:
        for s2 in states2:
            keys.append(hasher.finalize(hasher.combine(s1, s2)[0]))
    return keys


def build_index(dataset: Dataset, params: LshParams) -> LshIndex:
    """Hash every curve into the L tables; deterministic given the seed."""
    if params.d != dataset.d:
        raise ValueError(f"params dimension {params.d} != dataset dimension {dataset.d}")
    lambda1, lambda2, hasher = _draw_grids(params)
    tables: list[dict] = [dict() for _ in range(params.L)]
    stats = {"grid_evals": 0}
    for c in dataset:
        for t, key in enumerate(_table_keys(lambda1, lambda2, hasher, c, stats)):
            tables[t].setdefault(key, []).append(c.id)
    return LshIndex(
        params,
        lambda1,
        lambda2,
        hasher,
        tuple(tables),
        dataset_fingerprint(dataset),
        stats["grid_evals"],
    )


def query_scores(idx: LshIndex, q: Curve, stats: dict | None = None) -> list[ScoredCandidate]:
    """All curves colliding with q in at least one table, cheapest first.

    Scores are collision fractions in (0, 1]; the result is sorted by
    (score ascending, id ascending). Does not mutate the index.
    """
    if q.dim != idx.params.d:
        raise ValueError(f"dimension mismatch: query {q.dim}, index {idx.params.d}")
    counts: dict[int, int] = {}
    keys = _table_keys(idx.lambda1, idx.lambda2, idx.hasher, q, stats)
    for t, key in enumerate(keys):
        for cid in idx.tables[t].get(key, ()):
            counts[cid] = counts.get(cid, 0) + 1
    L = idx.params.L
    return [
        ScoredCandidate(cid, n, n / L)
        for cid, n in sorted(counts.items(), key=lambda kv: (kv[1], kv[0]))
    ]


# ---------------------------------------------------------------------------
# Binary index files

_MAGIC = b"FRSH"
_VERSION = b"1"
_HEADER = struct.Struct("<dIIIIQQ")


def save_index(idx: LshIndex, path) -> None:
    """Write the index: magic, params, fingerprint, then the L tables."""
    p = idx.params
    out = bytearray()
    out += _MAGIC + _VERSION
    out += _HEADER.pack(p.delta, p.k, p.L, p.l_prime, p.d, p.seed, idx.fingerprint)
    for table in idx.tables:
        out += struct.pack("<I", len(table))
        for key in sorted(table):
            ids = table[key]
            out += struct.pack("<II", key, len(ids))
            out += struct.pack(f"<{len(ids)}I", *ids)
    Path(path).write_bytes(bytes(out))


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.off = 0
        self.path = path

    def take(self, fmt: str):
        s = struct.Struct(fmt)
        if self.off + s.size > len(self.data):
            raise IndexFormatError(f"{self.path}: truncated index file")
        vals = s.unpack_from(self.data, self.off)
        self.off += s.size
        return vals


def load_index(path, dataset: Dataset) -> LshIndex:
    """Read an index and re-derive its grids; refuses stale or foreign files."""
    data = Path(path).read_bytes()
    rd = _Reader(data, path)
    (magic,) = rd.take("<4s")
    if magic != _MAGIC:
        raise IndexFormatError(f"{path}: not an index file (bad magic)")
    (version,) = rd.take("<1s")
    if version != _VERSION:
        raise IndexFormatError(f"{path}: unsupported index version {version!r}")
    delta, k, L, l_prime, d, seed, fingerprint = rd.take("<dIIIIQQ")
    params = LshParams(delta, k, L, d, seed)
    if params.L != L or params.l_prime != l_prime:
        raise IndexFormatError(f"{path}: inconsistent table counts in header")
    actual = dataset_fingerprint(dataset)
    if actual != fingerprint:
        raise IndexFormatError(
            f"{path}: dataset fingerprint mismatch "
            f"(index {fingerprint:#018x}, data {actual:#018x})"
        )
    tables = []
    for _ in range(L):
        (nkeys,) = rd.take("<I")
        table = {}
        for _ in range(nkeys):
            key, nids = rd.take("<II")
            table[key] = list(rd.take(f"<{nids}I"))
        tables.append(table)
    if rd.off != len(data):
        raise IndexFormatError(f"{path}: trailing bytes after table data")
    lambda1, lambda2, hasher = _draw_grids(params)
    return LshIndex(params, lambda1, lambda2, hasher, tuple(tables), fingerprint, 0)
