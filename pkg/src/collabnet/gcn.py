"""Stage II: merge same-name vertices by matching score and recover relations.

Within each name group the highest-scoring pair at or above the decision
threshold is merged first; scores involving the merged vertex are recomputed
and the vertex re-enters the candidate pool, so chains of merges happen inside
one pass.  Afterwards every (paper, name pair) from the corpus is re-attached
between the resolved vertices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations

from .corpus import CorpusIndex
from .model import ModelParams, matching_score
from .network import CollabNetwork, VertexId
from .similarity import SimilarityContext, UnscorablePair, similarity_vector

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MergeEvent:
    name: str
    kept_vertex: VertexId
    absorbed_vertex: VertexId
    score: float
    iteration: int

    def __str__(self) -> str:
        return (
            f"{self.iteration}\t{self.name}\t{self.kept_vertex[1]}"
            f"\t{self.absorbed_vertex[1]}\t{self.score!r}"
        )


def _pair_score(
    ctx: SimilarityContext, params: ModelParams, u: VertexId, v: VertexId
) -> float | None:
    try:
        return matching_score(similarity_vector(ctx, u, v), params)
    except UnscorablePair:
        return None


def merge_pass(
    network: CollabNetwork,
    params: ModelParams,
    ctx: SimilarityContext,
    delta: float,
) -> tuple[CollabNetwork, list[MergeEvent]]:
    """Greedily merge same-name vertex pairs whose score clears ``delta``.

    Mutates ``network`` in place (``ctx`` must be bound to it) and returns it
    together with the merge log.  Unscorable pairs are skipped and reported at
    debug level; they never block other merges.
    """
    if ctx.network is not network:
        raise ValueError("ctx must be bound to the network being merged")
    events: list[MergeEvent] = []
    iteration = 0
    for name in network.names():
        group = network.vertices_named(name)
        if len(group) < 2:
            continue
        scores: dict[tuple[VertexId, VertexId], float] = {}
        skipped = 0
        for u, v in combinations(group, 2):
            s = _pair_score(ctx, params, u, v)
            if s is None:
                skipped += 1
            else:
                scores[(u, v)] = s
        if skipped:
            log.debug("name %r: %d unscorable pairs left unmerged", name, skipped)
        alive = set(group)
        while scores:
            # Highest score first; ties go to the lowest instance-id pair.
            (u, v), best = min(scores.items(), key=lambda kv: (-kv[1], kv[0]))
            if best < delta:
                break
            iteration += 1
            network.merge_vertices(u, v)
            alive.discard(v)
            events.append(MergeEvent(name, u, v, best, iteration))
            scores = {
                pair: s for pair, s in scores.items() if u not in pair and v not in pair
            }
            for w in sorted(alive):
                if w == u:
                    continue
                s = _pair_score(ctx, params, *(min(u, w), max(u, w)))
                if s is not None:
                    scores[(min(u, w), max(u, w))] = s
    return network, events


def _containing_vertices(
    network: CollabNetwork, name: str, paper_id: str
) -> list[VertexId]:
    return [
        vid
        for vid in network.vertices_named(name)
        if paper_id in network.vertices[vid].papers
    ]


def _assign_by_score(
    network: CollabNetwork,
    ctx: SimilarityContext,
    params: ModelParams,
    delta: float,
    name: str,
    paper_id: str,
    candidates: list[VertexId],
) -> VertexId:
    """Re-home one (paper, name) among candidate vertices, incremental-style.

    The paper is withdrawn from every candidate, scored as a provisional
    one-paper vertex against the survivors, and attached to the best candidate
    at or above ``delta``; otherwise it stays behind as a new singleton.
    """
    for vid in candidates:
        network.remove_paper_from_vertex(vid, paper_id)
    survivors = [vid for vid in candidates if vid in network]
    provisional = network.add_vertex(name, {paper_id})
    best: VertexId | None = None
    best_score = -float("inf")
    for vid in survivors:
        score = _pair_score(ctx, params, provisional, vid)
        if score is not None and (score > best_score or (score == best_score and (best is None or vid < best))):
            best, best_score = vid, score
    if best is not None and best_score >= delta:
        network.merge_vertices(best, provisional)
        return best
    return provisional


def recover_relations(
    network: CollabNetwork,
    index: CorpusIndex,
    params: ModelParams,
    ctx: SimilarityContext,
    delta: float,
) -> CollabNetwork:
    """Re-attach every co-authorship from the corpus onto the merged network.

    First resolves papers held by several same-name vertices to a single one,
    then makes sure each paper's author pairs are connected by an edge
    carrying it.  Idempotent: edges use set semantics.
    """
    if ctx.network is not network:
        raise ValueError("ctx must be bound to the network being recovered")
    multi: list[tuple[str, str, list[VertexId]]] = []
    holders: dict[tuple[str, str], list[VertexId]] = {}
    for vid in sorted(network.vertices):
        vertex = network.vertices[vid]
        for pid in vertex.papers:
            holders.setdefault((pid, vertex.name), []).append(vid)
    for (pid, name) in sorted(holders):
        vids = holders[(pid, name)]
        if len(vids) > 1:
            multi.append((pid, name, vids))
    for pid, name, vids in multi:
        live = [vid for vid in vids if vid in network and pid in network.vertices[vid].papers]
        if len(live) > 1:
            _assign_by_score(network, ctx, params, delta, name, pid, live)

    for pid in sorted(index.papers):
        authors = index.papers[pid].authors
        resolved: dict[str, VertexId] = {}
        for name in authors:
            vids = _containing_vertices(network, name, pid)
            if len(vids) == 1:
                resolved[name] = vids[0]
            else:
                log.warning("paper %s: name %r resolves to %d vertices", pid, name, len(vids))
        names = sorted(resolved)
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                network.add_edge_papers(resolved[a], resolved[b], {pid})
    return network
