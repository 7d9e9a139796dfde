"""Six similarity features for a candidate pair of same-name vertices.

The vector combines network structure (a normalized Weisfeiler-Lehman subtree
kernel and a shared-triangle ratio), research interests (keyword-embedding
cosine and a time-decayed rare-keyword overlap), and research communities
(modal-venue coincidence and a rarity-weighted venue overlap).  Count-based
features are normalized by tau, the smaller paper count of the pair.
"""

from __future__ import annotations

import hashlib
import math
import struct
from collections import Counter
from dataclasses import dataclass, replace

import numpy as np

from .corpus import CorpusIndex
from .network import CollabNetwork, VertexId

FEATURE_NAMES = (
    "wl_kernel",
    "clique_coincidence",
    "interest_cosine",
    "time_consistency",
    "representative_community",
    "community_similarity",
)

N_FEATURES = len(FEATURE_NAMES)


class UnscorablePair(Exception):
    """Raised when a pair cannot be scored (for example a vertex with no papers)."""


@dataclass(frozen=True)
class SimilarityVector:
    """The six-feature description of a candidate pair.

    ``g3_interest`` is ``None`` when either vertex has no keyword covered by
    the embedding table; the model drops that factor for such pairs.
    """

    g1_wl_kernel: float
    g2_clique: float
    g3_interest: float | None
    g4_time: float
    g5_rep_community: float
    g6_community: float

    def as_array(self) -> np.ndarray:
        g3 = math.nan if self.g3_interest is None else self.g3_interest
        return np.array(
            [
                self.g1_wl_kernel,
                self.g2_clique,
                g3,
                self.g4_time,
                self.g5_rep_community,
                self.g6_community,
            ],
            dtype=float,
        )


class EmbeddingTable:
    """Word -> dense vector map with a fixed dimension."""

    def __init__(self, vectors: dict[str, np.ndarray]):
        if not vectors:
            raise ValueError("embedding table is empty")
        dims = {v.shape for v in vectors.values()}
        if len(dims) != 1 or next(iter(dims)) == (0,):
            raise ValueError("embedding vectors must share one nonzero dimension")
        self.vectors = vectors
        self.dim = next(iter(vectors.values())).shape[0]

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __getitem__(self, word: str) -> np.ndarray:
        return self.vectors[word]

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        """Read a text table: one word per line followed by its components."""
        vectors: dict[str, np.ndarray] = {}
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                parts = raw.split()
                if not parts:
                    continue
                vectors[parts[0]] = np.array([float(x) for x in parts[1:]], dtype=float)
        return cls(vectors)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for word in sorted(self.vectors):
                comps = " ".join(repr(float(x)) for x in self.vectors[word])
                fh.write(f"{word} {comps}\n")

    @classmethod
    def hashed(cls, words, dim: int = 16, seed: int = 0) -> "EmbeddingTable":
        """Deterministic pseudo-embeddings: each word hashes to a unit vector.

        Stable across processes and platforms (no builtin ``hash``), so tests
        and pipelines can run without a trained vector file.
        """
        vectors: dict[str, np.ndarray] = {}
        for word in sorted(set(words)):
            raw = b""
            counter = 0
            while len(raw) < 8 * dim:
                digest = hashlib.sha256(f"{seed}:{counter}:{word}".encode()).digest()
                raw += digest
                counter += 1
            values = struct.unpack(f">{dim}q", raw[: 8 * dim])
            vec = np.array(values, dtype=float) / float(2**63)
            norm = np.linalg.norm(vec)
            vectors[word] = vec / norm
        return cls(vectors)


@dataclass
class SimilarityContext:
    """Immutable inputs shared by all feature computations.

    ``alpha`` is the time-decay rate of the keyword-overlap feature and
    ``wl_iterations`` the refinement depth (and ego radius) of the WL kernel.
    ``positive_time_exponent`` flips the decay into growth for comparison runs.
    """

    network: CollabNetwork
    index: CorpusIndex
    embeddings: EmbeddingTable
    alpha: float = 0.62
    wl_iterations: int = 2
    positive_time_exponent: bool = False

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.wl_iterations < 1:
            raise ValueError("wl_iterations must be at least 1")

    def with_network(self, network: CollabNetwork) -> "SimilarityContext":
        return replace(self, network=network)

    @property
    def word_freq(self) -> dict[str, int]:
        return self.index.word_freq

    @property
    def venue_freq(self) -> dict[str, int]:
        return self.index.venue_freq


def _require_vertex(ctx: SimilarityContext, vid: VertexId) -> None:
    if vid not in ctx.network:
        raise ValueError(f"vertex {vid} not in network")


def _tau(ctx: SimilarityContext, u: VertexId, v: VertexId) -> int:
    tau = min(len(ctx.network.vertices[u].papers), len(ctx.network.vertices[v].papers))
    if tau == 0:
        raise UnscorablePair(f"pair ({u}, {v}) has a vertex with no papers")
    return tau


def _log_clamped(count: int) -> float:
    # Counts <= 1 would make log(count) zero or negative; clamp to 2.
    return math.log(max(count, 2))


# -- network structure ----------------------------------------------------


def _wl_feature_counts(net: CollabNetwork, root: VertexId, h: int) -> Counter:
    """Label counts of the radius-h ego subgraph over WL iterations 0..h.

    Initial labels are the vertex name strings; each refinement combines a
    vertex's label with the sorted labels of its ego-graph neighbors.  The
    root's own labels are excluded: for a same-name pair they match by
    construction and would dominate sparse neighborhoods.
    """
    ball = {root}
    frontier = {root}
    for _ in range(h):
        nxt: set[VertexId] = set()
        for vid in frontier:
            nxt |= net.neighbors(vid)
        frontier = nxt - ball
        ball |= frontier
    adjacency = {vid: sorted(net.neighbors(vid) & ball) for vid in ball}
    labels: dict[VertexId, object] = {vid: vid[0] for vid in ball}
    counts: Counter = Counter()
    counts.update(labels[vid] for vid in ball if vid != root)
    for _ in range(h):
        labels = {
            vid: (labels[vid], tuple(sorted(labels[nb] for nb in adjacency[vid])))
            for vid in ball
        }
        counts.update(labels[vid] for vid in ball if vid != root)
    return counts


def wl_kernel(ctx: SimilarityContext, u: VertexId, v: VertexId) -> float:
    """Cosine-normalized WL subtree kernel of the two ego subgraphs, in [0, 1]."""
    _require_vertex(ctx, u)
    _require_vertex(ctx, v)
    phi_u = _wl_feature_counts(ctx.network, u, ctx.wl_iterations)
    phi_v = _wl_feature_counts(ctx.network, v, ctx.wl_iterations)
    self_u = sum(c * c for c in phi_u.values())
    self_v = sum(c * c for c in phi_v.values())
    if self_u == 0 or self_v == 0:
        return 0.0
    cross = sum(c * phi_v[label] for label, c in phi_u.items() if label in phi_v)
    return min(1.0, cross / math.sqrt(self_u * self_v))


def _triangle_pairs(net: CollabNetwork, vid: VertexId) -> set[frozenset[str]]:
    """Name pairs {b, c} such that vid, b, c form a triangle."""
    out: set[frozenset[str]] = set()
    nbs = sorted(net.neighbors(vid))
    for i, b in enumerate(nbs):
        for c in nbs[i + 1 :]:
            if net.has_edge(b, c):
                out.add(frozenset((b[0], c[0])))
    return out


def clique_coincidence(ctx: SimilarityContext, u: VertexId, v: VertexId) -> float:
    """Shared co-author triangles of the two vertices, normalized by tau."""
    tau = _tau(ctx, u, v)
    shared = _triangle_pairs(ctx.network, u) & _triangle_pairs(ctx.network, v)
    return len(shared) / tau


# -- research interests -----------------------------------------------------


def _keyword_counts(ctx: SimilarityContext, vid: VertexId) -> Counter:
    bag: Counter = Counter()
    for pid in ctx.network.vertices[vid].papers:
        bag.update(ctx.index.keywords_for(pid))
    return bag


def _keyword_years(ctx: SimilarityContext, vid: VertexId) -> dict[str, set[int]]:
    out: dict[str, set[int]] = {}
    for pid in ctx.network.vertices[vid].papers:
        year = ctx.index.papers[pid].year
        for kw in set(ctx.index.keywords_for(pid)):
            out.setdefault(kw, set()).add(year)
    return out


def _centroid(ctx: SimilarityContext, bag: Counter) -> np.ndarray | None:
    total = 0
    acc = np.zeros(ctx.embeddings.dim)
    for word, count in bag.items():
        if word in ctx.embeddings:
            acc += count * ctx.embeddings[word]
            total += count
    if total == 0:
        return None
    return acc / total


def interest_cosine(ctx: SimilarityContext, u: VertexId, v: VertexId) -> float | None:
    """Cosine of the mean keyword-embedding vectors; None if either is undefined."""
    wu = _centroid(ctx, _keyword_counts(ctx, u))
    wv = _centroid(ctx, _keyword_counts(ctx, v))
    if wu is None or wv is None:
        return None
    nu = np.linalg.norm(wu)
    nv = np.linalg.norm(wv)
    if nu == 0.0 or nv == 0.0:
        return None
    return float(np.clip(np.dot(wu, wv) / (nu * nv), -1.0, 1.0))


def time_consistency(ctx: SimilarityContext, u: VertexId, v: VertexId) -> float:
    """Rarity-weighted overlap of keywords, decayed by the closest year gap.

    For each keyword both vertices used, the smallest |year_u - year_v| over
    their usages feeds exp(-alpha * gap), weighted by 1/log(document
    frequency); the sum is normalized by tau.
    """
    tau = _tau(ctx, u, v)
    years_u = _keyword_years(ctx, u)
    years_v = _keyword_years(ctx, v)
    sign = 1.0 if ctx.positive_time_exponent else -1.0
    total = 0.0
    for kw in set(years_u) & set(years_v):
        gap = min(abs(yu - yv) for yu in years_u[kw] for yv in years_v[kw])
        df = ctx.word_freq.get(kw, 0)
        total += math.exp(sign * ctx.alpha * gap) / _log_clamped(df)
    return total / tau


# -- research communities ---------------------------------------------------


def _venue_counts(ctx: SimilarityContext, vid: VertexId) -> Counter:
    return Counter(
        ctx.index.papers[pid].venue for pid in ctx.network.vertices[vid].papers
    )


def _modal_venue(venues: Counter) -> str:
    # Highest multiplicity, ties by lexicographically smallest venue.
    return min(venues, key=lambda h: (-venues[h], h))


def representative_community(ctx: SimilarityContext, u: VertexId, v: VertexId) -> float:
    """How often each vertex publishes in the other's most frequent venue."""
    tau = _tau(ctx, u, v)
    h_u = _venue_counts(ctx, u)
    h_v = _venue_counts(ctx, v)
    return (h_v[_modal_venue(h_u)] + h_u[_modal_venue(h_v)]) / tau


def community_similarity(ctx: SimilarityContext, u: VertexId, v: VertexId) -> float:
    """Adamic/Adar-style overlap of the two venue sets: rare venues weigh more."""
    tau = _tau(ctx, u, v)
    h_u = _venue_counts(ctx, u)
    h_v = _venue_counts(ctx, v)
    total = 0.0
    for venue in set(h_u) & set(h_v):
        total += 1.0 / _log_clamped(ctx.venue_freq.get(venue, 0))
    return total / tau


def similarity_vector(ctx: SimilarityContext, u: VertexId, v: VertexId) -> SimilarityVector:
    """Assemble all six features for a same-name vertex pair."""
    if u == v:
        raise ValueError("a pair must consist of two distinct vertices")
    if u[0] != v[0]:
        raise ValueError(f"pair ({u}, {v}) mixes different names")
    _require_vertex(ctx, u)
    _require_vertex(ctx, v)
    return SimilarityVector(
        g1_wl_kernel=wl_kernel(ctx, u, v),
        g2_clique=clique_coincidence(ctx, u, v),
        g3_interest=interest_cosine(ctx, u, v),
        g4_time=time_consistency(ctx, u, v),
        g5_rep_community=representative_community(ctx, u, v),
        g6_community=community_similarity(ctx, u, v),
    )
