"""Collaboration network: same-name vertex instances with paper sets on edges.

A vertex is identified by ``(name, instance_id)``; multiple instances of one
name represent (presumed) distinct authors.  Edges carry the set of papers
that justify the collaboration.  The text dump format is canonical so that
two equal networks serialize byte-for-byte identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

VertexId = tuple[str, int]

GRAPH_HEADER = "collabnet-graph v1"


@dataclass
class CollabVertex:
    name: str
    instance_id: int
    papers: set[str] = field(default_factory=set)

    @property
    def vid(self) -> VertexId:
        return (self.name, self.instance_id)


def edge_key(u: VertexId, v: VertexId) -> tuple[VertexId, VertexId]:
    return (u, v) if u <= v else (v, u)


class CollabNetwork:
    """Mutable vertex/edge store with a per-name index.

    Mutators keep three structures consistent: ``vertices`` (vid -> vertex),
    ``edges`` (sorted vid pair -> paper set), and ``_adjacency``.  Edge paper
    sets are always subsets of both endpoints' paper sets.
    """

    def __init__(self) -> None:
        self.vertices: dict[VertexId, CollabVertex] = {}
        self.edges: dict[tuple[VertexId, VertexId], set[str]] = {}
        self._adjacency: dict[VertexId, set[VertexId]] = {}
        self._next_instance: dict[str, int] = {}

    # -- construction -----------------------------------------------------

    def add_vertex(
        self, name: str, papers: Iterable[str] = (), instance_id: int | None = None
    ) -> VertexId:
        if instance_id is None:
            instance_id = self._next_instance.get(name, 0)
        vid = (name, instance_id)
        if vid in self.vertices:
            raise ValueError(f"vertex {vid} already present")
        self.vertices[vid] = CollabVertex(name, instance_id, set(papers))
        self._adjacency[vid] = set()
        self._next_instance[name] = max(self._next_instance.get(name, 0), instance_id + 1)
        return vid

    def add_edge_papers(self, u: VertexId, v: VertexId, papers: Iterable[str]) -> None:
        """Attach papers to edge (u, v), creating it if absent.

        The papers are also added to both endpoint vertices so the subset
        invariant holds.
        """
        if u == v:
            raise ValueError("self-loops are not allowed")
        if u not in self.vertices or v not in self.vertices:
            raise KeyError(f"unknown endpoint in edge ({u}, {v})")
        papers = set(papers)
        key = edge_key(u, v)
        if key in self.edges:
            self.edges[key] |= papers
        else:
            self.edges[key] = set(papers)
            self._adjacency[u].add(v)
            self._adjacency[v].add(u)
        self.vertices[u].papers |= papers
        self.vertices[v].papers |= papers

    def remove_vertex(self, vid: VertexId) -> None:
        for nb in list(self._adjacency[vid]):
            del self.edges[edge_key(vid, nb)]
            self._adjacency[nb].discard(vid)
        del self._adjacency[vid]
        del self.vertices[vid]

    # -- queries ----------------------------------------------------------

    def neighbors(self, vid: VertexId) -> set[VertexId]:
        return self._adjacency[vid]

    def has_edge(self, u: VertexId, v: VertexId) -> bool:
        return edge_key(u, v) in self.edges

    def edge_papers(self, u: VertexId, v: VertexId) -> set[str]:
        return self.edges[edge_key(u, v)]

    def vertices_named(self, name: str) -> list[VertexId]:
        return sorted(v for v in self.vertices if v[0] == name)

    def names(self) -> list[str]:
        return sorted({v[0] for v in self.vertices})

    def n_vertices(self) -> int:
        return len(self.vertices)

    def n_edges(self) -> int:
        return len(self.edges)

    def __contains__(self, vid: VertexId) -> bool:
        return vid in self.vertices

    def iter_vertices(self) -> Iterator[CollabVertex]:
        for vid in sorted(self.vertices):
            yield self.vertices[vid]

    # -- restructuring ----------------------------------------------------

    def merge_vertices(self, keep: VertexId, absorb: VertexId) -> None:
        """Union ``absorb`` into ``keep``: papers and edges move, self-loops drop."""
        if keep == absorb:
            raise ValueError("cannot merge a vertex with itself")
        kept = self.vertices[keep]
        gone = self.vertices[absorb]
        kept.papers |= gone.papers
        for nb in list(self._adjacency[absorb]):
            papers = self.edges.pop(edge_key(absorb, nb))
            self._adjacency[nb].discard(absorb)
            if nb == keep:
                continue
            key = edge_key(keep, nb)
            if key in self.edges:
                self.edges[key] |= papers
            else:
                self.edges[key] = papers
                self._adjacency[keep].add(nb)
                self._adjacency[nb].add(keep)
        del self._adjacency[absorb]
        del self.vertices[absorb]

    def split_vertex(
        self, vid: VertexId, papers_a: set[str], papers_b: set[str]
    ) -> tuple[VertexId, VertexId]:
        """Replace a vertex by two instances partitioning its paper set.

        Incident edges keep only the papers that follow each side; edges left
        empty are dropped.
        """
        vertex = self.vertices[vid]
        if papers_a | papers_b != vertex.papers or papers_a & papers_b:
            raise ValueError("split sides must partition the vertex paper set")
        if not papers_a or not papers_b:
            raise ValueError("both split sides must be non-empty")
        incident = [(nb, set(self.edges[edge_key(vid, nb)])) for nb in sorted(self._adjacency[vid])]
        self.remove_vertex(vid)
        va = self.add_vertex(vertex.name, papers_a)
        vb = self.add_vertex(vertex.name, papers_b)
        for nb, papers in incident:
            pa = papers & papers_a
            pb = papers & papers_b
            if pa:
                self.add_edge_papers(va, nb, pa)
            if pb:
                self.add_edge_papers(vb, nb, pb)
        return va, vb

    def remove_paper_from_vertex(self, vid: VertexId, paper_id: str) -> None:
        """Drop one paper from a vertex and its incident edges.

        Removes the vertex entirely if its paper set becomes empty.
        """
        vertex = self.vertices[vid]
        vertex.papers.discard(paper_id)
        for nb in list(self._adjacency[vid]):
            key = edge_key(vid, nb)
            papers = self.edges[key]
            papers.discard(paper_id)
            if not papers:
                del self.edges[key]
                self._adjacency[vid].discard(nb)
                self._adjacency[nb].discard(vid)
        if not vertex.papers:
            self.remove_vertex(vid)

    def copy(self) -> "CollabNetwork":
        out = CollabNetwork()
        out.vertices = {
            vid: CollabVertex(v.name, v.instance_id, set(v.papers))
            for vid, v in self.vertices.items()
        }
        out.edges = {key: set(p) for key, p in self.edges.items()}
        out._adjacency = {vid: set(nbs) for vid, nbs in self._adjacency.items()}
        out._next_instance = dict(self._next_instance)
        return out

    # -- assignments and validation ----------------------------------------

    def paper_assignments(self) -> dict[tuple[str, str], VertexId]:
        """Map each (paper_id, name) to the vertex that holds it.

        When several same-name instances hold the same paper (possible before
        relation recovery), the instance with the largest paper set wins, ties
        broken by lower instance id.
        """
        out: dict[tuple[str, str], VertexId] = {}
        rank: dict[tuple[str, str], tuple[int, int]] = {}
        for vid in sorted(self.vertices):
            vertex = self.vertices[vid]
            score = (-len(vertex.papers), vid[1])
            for pid in vertex.papers:
                key = (pid, vertex.name)
                if key not in out or score < rank[key]:
                    out[key] = vid
                    rank[key] = score
        return out

    def check(self, index=None) -> None:
        """Assert structural invariants; optionally check papers against a corpus."""
        for (u, v), papers in self.edges.items():
            assert u in self.vertices and v in self.vertices
            assert v in self._adjacency[u] and u in self._adjacency[v]
            assert papers <= self.vertices[u].papers | self.vertices[v].papers
            assert papers, f"empty edge ({u}, {v})"
            if index is not None:
                for pid in papers:
                    authors = index.papers[pid].authors
                    assert u[0] in authors and v[0] in authors
        for vid, nbs in self._adjacency.items():
            for nb in nbs:
                assert edge_key(vid, nb) in self.edges

    # -- serialization ------------------------------------------------------

    def to_lines(self) -> list[str]:
        lines = [GRAPH_HEADER]
        for vid in sorted(self.vertices):
            vertex = self.vertices[vid]
            lines.append(
                "V\t%s\t%d\t%s" % (vertex.name, vertex.instance_id, ",".join(sorted(vertex.papers)))
            )
        for (u, v) in sorted(self.edges):
            papers = ",".join(sorted(self.edges[(u, v)]))
            lines.append("E\t%s\t%d\t%s\t%d\t%s" % (u[0], u[1], v[0], v[1], papers))
        return lines

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.to_lines()) + "\n")

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "CollabNetwork":
        it = iter(lines)
        header = next(it, "").rstrip("\n")
        if header != GRAPH_HEADER:
            raise ValueError(f"unexpected graph header {header!r}")
        net = cls()
        for raw in it:
            raw = raw.rstrip("\n")
            if not raw:
                continue
            parts = raw.split("\t")
            if parts[0] == "V" and len(parts) == 4:
                papers = [p for p in parts[3].split(",") if p]
                net.add_vertex(parts[1], papers, instance_id=int(parts[2]))
            elif parts[0] == "E" and len(parts) == 6:
                u = (parts[1], int(parts[2]))
                v = (parts[3], int(parts[4]))
                papers = [p for p in parts[5].split(",") if p]
                net.add_edge_papers(u, v, papers)
            else:
                raise ValueError(f"malformed graph line {raw!r}")
        return net

    @classmethod
    def load(cls, path) -> "CollabNetwork":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CollabNetwork):
            return NotImplemented
        return self.to_lines() == other.to_lines()
