"""Incremental single-paper disambiguation against a built network.

A newly published paper is held by a provisional one-paper vertex, scored
against every existing vertex with the target name, and attached to the best
candidate when its score clears the decision threshold; otherwise the
provisional vertex stays as a new author.  Model parameters are reused as-is,
no refitting happens.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .corpus import PaperRecord
from .model import ModelParams, matching_score
from .network import CollabNetwork, VertexId
from .similarity import SimilarityContext, UnscorablePair, similarity_vector

log = logging.getLogger(__name__)

ATTACHED = "attached"
NEW_VERTEX = "new-vertex"


@dataclass(frozen=True)
class IncrementalDecision:
    name: str
    paper_id: str
    outcome: str
    vertex: VertexId
    best_score: float | None
    runner_up_score: float | None

    def __str__(self) -> str:
        best = "-" if self.best_score is None else repr(self.best_score)
        runner = "-" if self.runner_up_score is None else repr(self.runner_up_score)
        return (
            f"{self.paper_id}\t{self.name}\t{self.outcome}"
            f"\t{self.vertex[1]}\t{best}\t{runner}"
        )


def disambiguate_paper(
    network: CollabNetwork,
    params: ModelParams,
    ctx: SimilarityContext,
    paper: PaperRecord,
    name: str,
    delta: float,
) -> IncrementalDecision:
    """Decide which existing vertex (if any) wrote ``paper`` under ``name``.

    Mutates the network: either the chosen vertex gains the paper or a new
    isolated vertex is inserted.  Edges toward co-authors are synced for this
    paper wherever the co-author name already resolves to a unique holder, so
    processing a paper's names one by one rebuilds its collaboration edges.
    """
    if ctx.network is not network:
        raise ValueError("ctx must be bound to the target network")
    if name not in paper.authors:
        raise ValueError(f"name {name!r} is not an author of paper {paper.paper_id}")
    for vid in network.vertices_named(name):
        if paper.paper_id in network.vertices[vid].papers:
            raise ValueError(
                f"paper {paper.paper_id} is already assigned for name {name!r}"
            )

    if paper.paper_id not in ctx.index.papers:
        # The record must stay known for later calls that score vertices
        # holding this paper; frequency tables stay as fitted.
        ctx.index.add_record(paper)
    work_ctx = ctx

    candidates = network.vertices_named(name)
    provisional = network.add_vertex(name, {paper.paper_id})
    scores: list[tuple[float, VertexId]] = []
    for vid in candidates:
        try:
            score = matching_score(similarity_vector(work_ctx, provisional, vid), params)
        except UnscorablePair:
            continue
        scores.append((score, vid))

    best_score: float | None = None
    runner_up: float | None = None
    if scores:
        # Argmax with ties going to the lower instance id.
        scores.sort(key=lambda sv: (-sv[0], sv[1]))
        best_score = scores[0][0]
        if len(scores) > 1:
            runner_up = scores[1][0]

    if best_score is not None and best_score >= delta:
        target = scores[0][1]
        network.merge_vertices(target, provisional)
        outcome = ATTACHED
    else:
        target = provisional
        outcome = NEW_VERTEX

    _sync_paper_edges(network, work_ctx, paper, log_skips=True)
    return IncrementalDecision(name, paper.paper_id, outcome, target, best_score, runner_up)


def _sync_paper_edges(
    network: CollabNetwork,
    ctx: SimilarityContext,
    paper: PaperRecord,
    log_skips: bool = False,
) -> None:
    """Connect the unique holders of this paper's author names, pairwise."""
    resolved: dict[str, VertexId] = {}
    for author in paper.authors:
        vids = [
            vid
            for vid in network.vertices_named(author)
            if paper.paper_id in network.vertices[vid].papers
        ]
        if len(vids) == 1:
            resolved[author] = vids[0]
        elif log_skips and len(vids) > 1:
            log.warning(
                "paper %s: name %r held by %d vertices, edge left unresolved",
                paper.paper_id,
                author,
                len(vids),
            )
    names = sorted(resolved)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            network.add_edge_papers(resolved[a], resolved[b], {paper.paper_id})
