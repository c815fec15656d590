"""Gaussian moment estimation and the Fréchet (Wasserstein-2) distance.

For Gaussians N(m1, C1) and N(m2, C2) the squared distance is

    d^2 = ||m1 - m2||^2 + Tr(C1 + C2 - 2 (C1 C2)^{1/2})

The trace of the matrix square root is evaluated through the symmetric
matrix A C2 A with A = C1^{1/2}, which has the same eigenvalues as C1 C2
but can be handled by a symmetric eigensolver.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-6
CHUNK_ROWS = 4096
STATS_FORMAT = "molmetric-stats"


class FrechetError(ValueError):
    pass


class InsufficientSamples(FrechetError):
    pass


class DimensionMismatch(FrechetError):
    pass


class NonFiniteInput(FrechetError):
    pass


class NotPSD(FrechetError):
    pass


class NumericalFailure(FrechetError):
    pass


class CorruptStatsFile(FrechetError):
    pass


@dataclass
class GaussianStats:
    """Mean, unbiased covariance and sample count of an embedding set."""

    mean: np.ndarray
    cov: np.ndarray
    n: int
    meta: dict = field(default_factory=dict)
    _roots: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        d = self.mean.shape[0]
        if self.cov.shape != (d, d):
            raise DimensionMismatch(f"mean has dim {d} but cov has shape {self.cov.shape}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def cov_sqrt(self, shift: float = 0.0) -> tuple[np.ndarray, float, float]:
        """Cached :func:`psd_sqrt` of ``cov + shift * I``."""
        if shift not in self._roots:
            self._roots[shift] = psd_sqrt(self.cov + shift * np.eye(self.dim) if shift else self.cov)
        return self._roots[shift]

    def save(self, path) -> None:
        """Write a one-line JSON manifest followed by the raw float64 payload.

        Payload: mean (dim values) then covariance (dim*dim, row-major),
        little-endian IEEE-754 doubles.
        """
        payload = (
            self.mean.astype("<f8").tobytes()
            + np.ascontiguousarray(self.cov).astype("<f8").tobytes()
        )
        manifest = {
            "format": STATS_FORMAT,
            "version": 1,
            "dim": self.dim,
            "n": int(self.n),
            "eps_used": float(self.meta.get("eps_used", DEFAULT_EPS)),
            "covariance": "unbiased",
            "dtype": "<f8",
            "payload_bytes": len(payload),
        }
        extra = {k: v for k, v in self.meta.items() if k not in manifest}
        if extra:
            manifest["meta"] = extra
        with open(path, "wb") as fh:
            fh.write(json.dumps(manifest, sort_keys=True).encode() + b"\n")
            fh.write(payload)

    @classmethod
    def load(cls, path) -> GaussianStats:
        raw = Path(path).read_bytes()
        head, sep, payload = raw.partition(b"\n")
        try:
            manifest = json.loads(head)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise CorruptStatsFile(f"{path}: unreadable manifest") from exc
        if not sep or manifest.get("format") != STATS_FORMAT:
            raise CorruptStatsFile(f"{path}: not a stats file")
        d = int(manifest["dim"])
        if len(payload) != 8 * (d + d * d) or manifest.get("payload_bytes") != len(payload):
            raise CorruptStatsFile(f"{path}: expected {8 * (d + d * d)} payload bytes, found {len(payload)}")
        values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
        meta = dict(manifest.get("meta", {}))
        meta["eps_used"] = manifest["eps_used"]
        meta["covariance"] = manifest["covariance"]
        return cls(values[:d], values[d:].reshape(d, d), int(manifest["n"]), meta)


class MomentAccumulator:
    """Streaming mean/covariance by pairwise merging of chunk moments.

    Each chunk is centered on its own mean (two-pass within the chunk) and
    merged with the running moments using the Chan et al. update. Chunks
    are merged strictly in arrival order so results are reproducible.
    Memory is one d x d scatter matrix plus one chunk.
    """

    def __init__(self, dim: int | None = None):
        self.n = 0
        self.dim = dim
        self.mean: np.ndarray | None = None
        self.m2: np.ndarray | None = None

    def update(self, chunk) -> None:
        x = np.asarray(chunk, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2:
            raise DimensionMismatch(f"expected 2-D chunk, got shape {x.shape}")
        if x.shape[0] == 0:
            return
        if self.dim is None:
            self.dim = x.shape[1]
        elif x.shape[1] != self.dim:
            raise DimensionMismatch(f"expected dim {self.dim}, got {x.shape[1]}")
        if not np.isfinite(x).all():
            raise NonFiniteInput("embeddings contain NaN or Inf")
        for start in range(0, x.shape[0], CHUNK_ROWS):
            self._merge_chunk(x[start : start + CHUNK_ROWS])

    def _merge_chunk(self, x: np.ndarray) -> None:
        nb = x.shape[0]
        mb = x.mean(axis=0)
        centered = x - mb
        m2b = centered.T @ centered
        self.merge_moments(nb, mb, m2b)

    def merge_moments(self, nb: int, mb: np.ndarray, m2b: np.ndarray) -> None:
        """Fold in moments of another block; ``m2b`` may be taken over, not copied."""
        if self.n == 0:
            self.n, self.mean, self.m2 = nb, mb.copy(), m2b
            return
        na = self.n
        n = na + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * (nb / n)
        # in place, so the running scatter never needs more than two extra d x d buffers
        self.m2 += m2b
        correction = np.outer(delta, delta)
        correction *= na * nb / n
        self.m2 += correction
        self.n = n

    def merge(self, other: MomentAccumulator) -> None:
        if other.n:
            self.merge_moments(other.n, other.mean, other.m2.copy())

    def finalize(self) -> GaussianStats:
        if self.n < 2:
            raise InsufficientSamples(f"need at least 2 samples, got {self.n}")
        cov = self.m2 / (self.n - 1)
        cov = (cov + cov.T) / 2
        return GaussianStats(self.mean.copy(), cov, self.n)


def estimate_stats(embeddings: np.ndarray | Iterable) -> GaussianStats:
    """Mean and unbiased covariance of an ``(n, d)`` array or a stream of chunks.

    A stream may yield single vectors or ``(k, d)`` blocks.
    """
    acc = MomentAccumulator()
    if isinstance(embeddings, np.ndarray):
        if embeddings.ndim != 2:
            raise DimensionMismatch("expected an (n, d) array")
        acc.update(embeddings)
    else:
        for chunk in embeddings:
            acc.update(chunk)
    return acc.finalize()


def _check_square_pair(c1: np.ndarray, c2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c1 = np.atleast_2d(np.asarray(c1, dtype=np.float64))
    c2 = np.atleast_2d(np.asarray(c2, dtype=np.float64))
    if c1.shape != c2.shape or c1.shape[0] != c1.shape[1]:
        raise DimensionMismatch(f"covariance shapes {c1.shape} and {c2.shape}")
    return c1, c2


def psd_sqrt(a: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Symmetric square root with negative eigenvalues clamped to zero.

    Returns ``(sqrt, min eigenvalue, max eigenvalue)`` of ``a``.
    """
    w, v = np.linalg.eigh((a + a.T) / 2)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    return (root + root.T) / 2, float(w[0]), float(w[-1])


def _below_band(lo: float, hi: float, eps: float) -> bool:
    return lo < -eps * max(1.0, hi)


def trace_sqrt_product(c1, c2, eps: float = DEFAULT_EPS, sqrt_c1=None) -> float:
    """Tr((C1 C2)^{1/2}) for symmetric PSD C1, C2.

    If either ``C1`` or ``A C2 A`` has an eigenvalue below
    ``-eps * max(1, largest eigenvalue)``, ``eps * I`` is added to both
    matrices and the computation is retried once. ``sqrt_c1`` may pass a
    precomputed ``psd_sqrt(c1)``.
    """
    c1, c2 = _check_square_pair(c1, c2)
    for attempt in range(2):
        root, lo1, hi1 = sqrt_c1 if (sqrt_c1 is not None and attempt == 0) else psd_sqrt(c1)
        s = root @ c2 @ root
        w = np.linalg.eigvalsh((s + s.T) / 2)
        if not (_below_band(lo1, hi1, eps) or _below_band(w[0], w[-1], eps)):
            return float(np.sqrt(np.clip(w, 0.0, None)).sum())
        if attempt == 0:
            logger.warning("covariance not PSD within tolerance; adding %g*I and retrying", eps)
            eye = np.eye(c1.shape[0]) * eps
            c1, c2 = c1 + eye, c2 + eye
    raise NotPSD("covariances remain non-PSD after eps regularization")


def _root_side_first(a: GaussianStats, b: GaussianStats) -> tuple[GaussianStats, GaussianStats]:
    """Order a pair by sample size, breaking ties on covariance content."""
    if a.n != b.n:
        return (a, b) if a.n > b.n else (b, a)
    return (a, b) if a.cov.tobytes() >= b.cov.tobytes() else (b, a)


def frechet_distance(
    a: GaussianStats, b: GaussianStats, eps: float = DEFAULT_EPS, regularize: bool = False
) -> float:
    """Squared Fréchet distance between two Gaussian summaries.

    With ``regularize`` both covariances get ``eps * I`` before anything
    else. Use it when covariances are known to be rank-deficient (as for
    fingerprint bit vectors): round-off in the null space otherwise adds
    about ``sqrt(machine eps)`` per dimension to the trace term.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"dims {a.dim} and {b.dim}")
    shift = eps if regularize else 0.0
    # The square root is taken of the larger sample's covariance and cached
    # there, so repeated scoring against one reference reuses it, and the
    # result does not depend on argument order.
    big, small = _root_side_first(a, b)
    c_big, c_small = big.cov, small.cov
    if shift:
        eye = shift * np.eye(a.dim)
        c_big, c_small = c_big + eye, c_small + eye
    diff = a.mean - b.mean
    tr = trace_sqrt_product(c_big, c_small, eps, sqrt_c1=big.cov_sqrt(shift))
    result = float(diff @ diff + (np.trace(c_big) + np.trace(c_small)) - 2.0 * tr)
    if not np.isfinite(result):
        raise NumericalFailure("distance is not finite")
    if result < 0:
        if -result <= 1e-8 * (1 + abs(result)):
            return 0.0
        raise NumericalFailure(f"negative squared distance {result:g}")
    return result


def frechet_distance_from_embeddings(x: np.ndarray, y: np.ndarray, eps: float = DEFAULT_EPS) -> float:
    return frechet_distance(estimate_stats(x), estimate_stats(y), eps)
