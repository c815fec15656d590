"""Circular (Morgan/ECFP-style) fingerprints and Tanimoto-based set metrics.

The hash is FNV-1a (64 bit) over the little-endian 8-byte encoding of each
integer in a tuple:

* radius 0: ``(atomic number, degree, hydrogen count, formal charge,
  aromatic, in ring)``; negative values use two's complement;
* radius r > 0: ``(previous identifier, c1, n1, c2, n2, ...)`` with the
  ``(bond code, neighbor identifier)`` pairs sorted ascending. Bond codes
  are single=1, double=2, triple=3, aromatic=4.

Every identifier from every radius sets bit ``identifier % nbits``. The
bits are not compatible with any external toolkit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from ._rng import task_rng
from .smiles import BOND_CODE, Molecule

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1
DEFAULT_NBITS = 2048
DEFAULT_RADIUS = 2


class WidthMismatch(ValueError):
    pass


def fnv1a_64(values: Sequence[int]) -> int:
    h = FNV_OFFSET
    for byte in struct.pack(f"<{len(values)}Q", *(v & _MASK for v in values)):
        h = ((h ^ byte) * FNV_PRIME) & _MASK
    return h


@dataclass(frozen=True)
class Fingerprint:
    """A fixed-width bit set, stored as its sorted on-bit positions."""

    on_bits: tuple[int, ...]
    nbits: int = DEFAULT_NBITS

    @classmethod
    def from_array(cls, bits) -> Fingerprint:
        bits = np.asarray(bits, dtype=bool)
        return cls(tuple(int(i) for i in np.flatnonzero(bits)), len(bits))

    def to_array(self, dtype=np.float64) -> np.ndarray:
        out = np.zeros(self.nbits, dtype=dtype)
        out[list(self.on_bits)] = 1
        return out

    def popcount(self) -> int:
        return len(self.on_bits)


def atom_identifiers(mol: Molecule, radius: int = DEFAULT_RADIUS) -> list[list[int]]:
    """Per radius 0..radius, the list of per-atom identifiers."""
    ring = mol.ring_atoms
    ids = [
        fnv1a_64((a.atomic_number, mol.degree(a.index), a.total_h, a.formal_charge,
                  int(a.aromatic), int(a.index in ring)))
        for a in mol.atoms
    ]
    layers = [ids]
    for _ in range(radius):
        prev = layers[-1]
        nxt = []
        for i, nbrs in enumerate(mol.adjacency):
            env = sorted((BOND_CODE[order], prev[j]) for j, order in nbrs)
            nxt.append(fnv1a_64([prev[i], *(x for pair in env for x in pair)]))
        layers.append(nxt)
    return layers


def morgan_fingerprint(mol: Molecule, radius: int = DEFAULT_RADIUS, nbits: int = DEFAULT_NBITS) -> Fingerprint:
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if nbits < 1 or nbits & (nbits - 1):
        raise ValueError("nbits must be a power of two")
    bits = {ident % nbits for layer in atom_identifiers(mol, radius) for ident in layer}
    return Fingerprint(tuple(sorted(bits)), nbits)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a & b| / |a | b|; two empty fingerprints have similarity 1.0."""
    if a.nbits != b.nbits:
        raise WidthMismatch(f"{a.nbits} != {b.nbits}")
    inter = len(set(a.on_bits).intersection(b.on_bits))
    union = len(a.on_bits) + len(b.on_bits) - inter
    return 1.0 if union == 0 else inter / union


def fingerprint_matrix(fps: Sequence[Fingerprint], dtype=np.float32) -> np.ndarray:
    """Dense ``(n, nbits)`` 0/1 matrix."""
    if not fps:
        raise ValueError("no fingerprints")
    nbits = fps[0].nbits
    rows, cols = [], []
    for i, fp in enumerate(fps):
        if fp.nbits != nbits:
            raise WidthMismatch(f"{fp.nbits} != {nbits}")
        rows.extend([i] * len(fp.on_bits))
        cols.extend(fp.on_bits)
    out = np.zeros((len(fps), nbits), dtype=dtype)
    out[rows, cols] = 1
    return out


def _pair_blocks(dense: np.ndarray, block: int) -> Iterator[tuple[int, int, np.ndarray, np.ndarray]]:
    """Yield ``(i0, j0, intersections, unions)`` for blocks on or above the diagonal.

    Intersections come from a float32 matmul of 0/1 rows, which is exact for
    widths below 2**24.
    """
    n = dense.shape[0]
    pop = dense.sum(axis=1, dtype=np.float64).astype(np.int64)
    for i0 in range(0, n, block):
        rows = dense[i0 : i0 + block]
        for j0 in range(i0, n, block):
            inter = np.rint(rows @ dense[j0 : j0 + block].T).astype(np.int64)
            union = pop[i0 : i0 + block, None] + pop[None, j0 : j0 + block] - inter
            yield i0, j0, inter, union


def _upper_mask(i0: int, j0: int, shape: tuple[int, int]) -> np.ndarray:
    """Mask of pairs (i, j) with global i < j inside a block."""
    gi = np.arange(i0, i0 + shape[0])[:, None]
    gj = np.arange(j0, j0 + shape[1])[None, :]
    return gi < gj


def mean_pairwise_similarity(fps: Sequence[Fingerprint], block: int = 1024) -> Fraction:
    """Exact mean Tanimoto similarity over unordered distinct pairs.

    Streams over blocks; similarity sums are grouped by union size and kept
    as integers, so the result is an exact rational.
    """
    n = len(fps)
    if n < 2:
        raise ValueError("need at least two fingerprints")
    dense = fingerprint_matrix(fps)
    nbits = dense.shape[1]
    by_union = np.zeros(2 * nbits + 1, dtype=np.int64)
    empty_pairs = 0
    for i0, j0, inter, union in _pair_blocks(dense, block):
        mask = _upper_mask(i0, j0, inter.shape) if i0 == j0 else np.ones(inter.shape, dtype=bool)
        u = union[mask]
        empty_pairs += int(np.count_nonzero(u == 0))
        by_union += np.rint(np.bincount(u, weights=inter[mask], minlength=len(by_union))).astype(np.int64)
    total = Fraction(empty_pairs)
    for u in np.flatnonzero(by_union):
        if u:
            total += Fraction(int(by_union[u]), int(u))
    return total / (n * (n - 1) // 2)


def internal_diversity(
    fps: Sequence[Fingerprint],
    subset_size: int = 5000,
    repeats: int = 5,
    seed: int = 0,
) -> float:
    """Mean pairwise Tanimoto distance, averaged over random subsets.

    Each repeat draws ``min(subset_size, n)`` fingerprints without
    replacement. Returns 0.0 when fewer than two fingerprints are given.
    """
    n = len(fps)
    if n == 0:
        raise ValueError("no fingerprints")
    if n < 2:
        return 0.0
    k = min(subset_size, n)
    if k == n:
        # every repeat would draw the full set
        return float(1 - mean_pairwise_similarity(fps))
    acc = Fraction(0)
    for r in range(repeats):
        idx = np.sort(task_rng(seed, r).choice(n, size=k, replace=False))
        acc += 1 - mean_pairwise_similarity([fps[i] for i in idx])
    return float(acc / repeats)


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = np.arange(n)
        self.size = np.ones(n, dtype=np.int64)

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return int(x)

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]

    def roots(self) -> np.ndarray:
        """Root of every element, by vectorized pointer jumping."""
        r = self.parent.copy()
        while True:
            nxt = r[r]
            if np.array_equal(nxt, r):
                return r
            r = nxt


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    cutoff: float

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_clusters)

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)


def _first_occurrence_labels(roots: np.ndarray) -> np.ndarray:
    _, first, inverse = np.unique(roots, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse]


def single_linkage_clusters(
    fps: Sequence[Fingerprint], cutoff: float = 0.65, block: int = 1024
) -> ClusterAssignment:
    """Connected components of the graph linking pairs with Tanimoto >= cutoff.

    Labels are numbered by first appearance in ``fps``.
    """
    if not 0 < cutoff <= 1:
        raise ValueError("cutoff must be in (0, 1]")
    n = len(fps)
    dense = fingerprint_matrix(fps)
    uf = UnionFind(n)
    for i0, j0, inter, union in _pair_blocks(dense, block):
        with np.errstate(invalid="ignore", divide="ignore"):
            sim = np.where(union == 0, 1.0, inter / np.maximum(union, 1))
        linked = sim >= cutoff
        if i0 == j0:
            linked &= _upper_mask(i0, j0, linked.shape)
        r, c = np.nonzero(linked)
        if not len(r):
            continue
        roots = uf.roots()
        uf.parent = roots
        a, b = roots[r + i0], roots[c + j0]
        keep = a != b
        if not keep.any():
            continue
        pairs = np.unique(np.stack([a[keep], b[keep]], axis=1), axis=0)
        for x, y in pairs:
            uf.union(int(x), int(y))
    return ClusterAssignment(_first_occurrence_labels(uf.roots()), cutoff)
