"""Neighborhood and distance-preservation metrics for embeddings.

Trustworthiness and continuity compare K-nearest-neighbor sets between a
reference point set and an embedding; Kruskal's stress compares all
pairwise distances up to the least-squares optimal scale factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist


class MetricsError(ValueError):
    pass


@dataclass
class RankTable:
    """``order[i]`` lists the other points by ascending distance from ``i``;
    ``rank[i, j]`` is 1 for the nearest neighbor and 0 on the diagonal.
    Ties go to the smaller index."""

    order: np.ndarray  # (N, N-1)
    rank: np.ndarray  # (N, N)

    def neighbors(self, k: int) -> np.ndarray:
        """Boolean ``(N, N)`` mask of each point's K nearest neighbors."""
        return (self.rank >= 1) & (self.rank <= k)


def neighbor_ranks(points) -> RankTable:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    if n < 2:
        raise MetricsError("need at least two points")
    dist = cdist(x, x)
    np.fill_diagonal(dist, -np.inf)
    order = np.argsort(dist, axis=1, kind="stable")[:, 1:]
    rank = np.zeros((n, n), dtype=np.int64)
    rows = np.arange(n)[:, None]
    rank[rows, order] = np.arange(1, n)[None, :]
    return RankTable(order=order, rank=rank)


def _check_k(n: int, k: int) -> None:
    if not 1 <= k or not 3 * k < 2 * n - 1:
        raise MetricsError(f"K={k} outside the valid range 1 <= K < (2N-1)/3 for N={n}")


def _intrusion(rank_a: RankTable, rank_b: RankTable, k: int) -> float:
    """Penalty for the K-neighbors in ``b`` that are not K-neighbors in ``a``,
    scored by their rank in ``a``."""
    n = len(rank_a.rank)
    _check_k(n, k)
    extra = rank_b.neighbors(k) & ~rank_a.neighbors(k)
    total = np.sum(rank_a.rank[extra] - k)
    return 1.0 - 2.0 / (n * k * (2 * n - 3 * k - 1)) * float(total)


def _tables(reference, embedding):
    ref = reference if isinstance(reference, RankTable) else neighbor_ranks(reference)
    emb = embedding if isinstance(embedding, RankTable) else neighbor_ranks(embedding)
    if ref.rank.shape != emb.rank.shape:
        raise MetricsError("reference and embedding have different point counts")
    return ref, emb


def trustworthiness(reference, embedding, k: int) -> float:
    """Points or precomputed ``RankTable`` for either argument."""
    ref, emb = _tables(reference, embedding)
    return _intrusion(ref, emb, k)


def continuity(reference, embedding, k: int) -> float:
    ref, emb = _tables(reference, embedding)
    return _intrusion(emb, ref, k)


def kruskal_stress(reference, embedding) -> float:
    """Stress after scaling the embedding distances by ``sum(d*e) / sum(e^2)``.

    Each unordered pair is counted once; the ordered double sum only doubles
    numerator and denominator. A collapsed embedding scores 1.
    """
    ref = np.asarray(reference, dtype=np.float64)
    emb = np.asarray(embedding, dtype=np.float64)
    if ref.ndim == 1:
        ref = ref[:, None]
    if emb.ndim == 1:
        emb = emb[:, None]
    if len(ref) != len(emb):
        raise MetricsError("reference and embedding have different point counts")
    if len(ref) < 2:
        raise MetricsError("need at least two points")
    d = pdist(ref)
    e = pdist(emb)
    dd = float(np.dot(d, d))
    if dd == 0.0:
        raise MetricsError("reference points are all identical")
    ee = float(np.dot(e, e))
    if ee == 0.0:
        return 1.0
    beta = float(np.dot(d, e)) / ee
    r = d - beta * e
    return float(min(1.0, math.sqrt(float(np.dot(r, r)) / dd)))


def default_ks(n: int) -> list[int]:
    """K = 1, ceil(2.5% N), ceil(5% N), dropping values outside the valid range."""
    ks = []
    for k in (1, math.ceil(0.025 * n), math.ceil(0.05 * n)):
        if 1 <= k and 3 * k < 2 * n - 1 and k not in ks:
            ks.append(k)
    return ks


@dataclass
class MetricsReport:
    reference: str  # "true-positions" or "feature-space"
    n: int
    tw: dict[int, float] = field(default_factory=dict)
    ct: dict[int, float] = field(default_factory=dict)
    ks: float = float("nan")

    def rows(self, prefix: str = "") -> list[tuple[str, str, float]]:
        out = [(f"{prefix}TW", str(k), v) for k, v in self.tw.items()]
        out += [(f"{prefix}CT", str(k), v) for k, v in self.ct.items()]
        out.append((f"{prefix}KS", "", self.ks))
        return out

    def text(self) -> str:
        lines = [f"reference = {self.reference}", f"N = {self.n}"]
        lines += [f"TW[{k}] = {v:.4f}" for k, v in self.tw.items()]
        lines += [f"CT[{k}] = {v:.4f}" for k, v in self.ct.items()]
        lines.append(f"KS = {self.ks:.4f}")
        return "\n".join(lines)


def evaluate(reference, embedding, ks=None, reference_tag: str = "true-positions") -> MetricsReport:
    """All metrics for one embedding, sharing the rank tables across K."""
    ref_points = np.asarray(reference, dtype=np.float64)
    emb_points = np.asarray(embedding, dtype=np.float64)
    ref, emb = _tables(ref_points, emb_points)
    n = len(ref.rank)
    ks = default_ks(n) if ks is None else list(ks)
    report = MetricsReport(reference=reference_tag, n=n)
    for k in ks:
        report.tw[k] = _intrusion(ref, emb, k)
        report.ct[k] = _intrusion(emb, ref, k)
    report.ks = kruskal_stress(ref_points, emb_points)
    return report
