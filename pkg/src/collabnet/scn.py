"""Stage I: mine stable co-author pairs and build the stable collaboration network.

A stable collaborative relation (SCR) is an unordered name pair appearing in at
least ``eta`` co-author lists.  The network construction assumes every vertex
is a distinct author until triangle evidence proves two insertions refer to the
same one: when inserting pair (a, c), an existing vertex named ``a`` hosts the
relation only if it has a neighbor ``b`` with (b, c) also stable, in which case
the triangle is closed immediately.  Otherwise fresh instances are created.
Names and papers never covered by any stable pair end up as isolated vertices.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations

from .corpus import CorpusIndex
from .network import CollabNetwork, VertexId


def cooccurrence_tail_probability(n_a: int, n_b: int, n_papers: int, x: int) -> float:
    """Normal-approximated probability that two independent names co-occur >= x times.

    Each paper is a Bernoulli trial with success probability
    q = n_a * n_b / n_papers**2, so the co-occurrence count is binomial; the
    tail Pr(X >= x) is approximated with a continuity-corrected normal CDF.
    """
    if n_papers <= 0:
        raise ValueError("n_papers must be positive")
    if not (0 < n_a <= n_papers and 0 < n_b <= n_papers):
        raise ValueError("paper counts must lie in (0, n_papers]")
    if x <= 0:
        return 1.0
    q = (n_a * n_b) / (n_papers * n_papers)
    mean = n_papers * q
    var = n_papers * q * (1.0 - q)
    shifted = x - 0.5 - mean
    if var <= 0.0:
        return 0.0 if shifted > 0 else 1.0
    z = shifted / math.sqrt(var)
    # 1 - Phi(z) via the complementary error function.
    p = 0.5 * math.erfc(z / math.sqrt(2.0))
    return min(1.0, max(0.0, p))


@dataclass
class ScrSet:
    """All name pairs with co-occurrence support >= eta."""

    pairs: dict[tuple[str, str], int]
    eta: int

    @staticmethod
    def key(a: str, b: str) -> tuple[str, str]:
        return (a, b) if a <= b else (b, a)

    def contains(self, a: str, b: str) -> bool:
        return self.key(a, b) in self.pairs

    def support(self, a: str, b: str) -> int:
        return self.pairs[self.key(a, b)]

    def insertion_order(self) -> list[tuple[str, str]]:
        """Descending support, ties by lexicographic pair: the build order."""
        return sorted(self.pairs, key=lambda pair: (-self.pairs[pair], pair))

    def __len__(self) -> int:
        return len(self.pairs)


def mine_scrs(index: CorpusIndex, eta: int) -> ScrSet:
    """Count co-occurrences of all name pairs and keep those with support >= eta.

    Only 2-itemsets are needed downstream, so direct pair counting over the
    author lists is used; it returns exactly the frequent pairs with their
    exact supports.
    """
    if eta < 2:
        raise ValueError("eta must be at least 2")
    counts: Counter = Counter()
    for record in index.papers.values():
        for a, b in combinations(sorted(record.authors), 2):
            counts[(a, b)] += 1
    return ScrSet({pair: c for pair, c in counts.items() if c >= eta}, eta)


def _pair_papers(index: CorpusIndex, a: str, b: str) -> set[str]:
    return set(index.name_to_papers.get(a, ())) & set(index.name_to_papers.get(b, ()))


def _find_host(
    net: CollabNetwork, scrs: ScrSet, name: str, other: str
) -> tuple[VertexId, VertexId] | None:
    """First existing vertex named ``name`` with triangle evidence toward ``other``.

    Evidence is a neighbor w such that (w.name, other) is itself an SCR; the
    neighbor is returned as the closure witness.  Scanning order is sorted, so
    the choice is deterministic.
    """
    for vid in net.vertices_named(name):
        for nb in sorted(net.neighbors(vid)):
            if nb[0] != other and scrs.contains(nb[0], other):
                return vid, nb
    return None


def build_scn(scrs: ScrSet, index: CorpusIndex) -> CollabNetwork:
    """Construct the stable collaboration network from mined pairs.

    Pairs are inserted in descending-support order.  Each endpoint either
    attaches to an existing same-name vertex backed by triangle evidence
    (closing the triangle edge at once) or becomes a fresh instance.  Papers of
    a name that no insertion covered are grouped into isolated vertices, one
    per connected group of papers sharing a co-author name, defaulting to one
    vertex per paper.
    """
    net = CollabNetwork()
    for a, b in scrs.insertion_order():
        host_a = _find_host(net, scrs, a, b)
        host_b = _find_host(net, scrs, b, a)
        va = host_a[0] if host_a else net.add_vertex(a)
        vb = host_b[0] if host_b else net.add_vertex(b)
        net.add_edge_papers(va, vb, _pair_papers(index, a, b))
        if host_a:
            witness = host_a[1]
            net.add_edge_papers(vb, witness, _pair_papers(index, b, witness[0]))
        if host_b:
            witness = host_b[1]
            net.add_edge_papers(va, witness, _pair_papers(index, a, witness[0]))

    for name in sorted(index.name_to_papers):
        covered: set[str] = set()
        for vid in net.vertices_named(name):
            covered |= net.vertices[vid].papers
        leftover = sorted(index.name_to_papers[name] - covered)
        for group in _coauthor_groups(index, name, leftover):
            net.add_vertex(name, group)
    return net


def _coauthor_groups(index: CorpusIndex, name: str, paper_ids: list[str]) -> list[list[str]]:
    """Partition papers into components connected by a shared co-author name."""
    if not paper_ids:
        return []
    parent = {pid: pid for pid in paper_ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: str, y: str) -> None:
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    by_coauthor: dict[str, str] = {}
    for pid in paper_ids:
        for coauthor in index.papers[pid].authors:
            if coauthor == name:
                continue
            if coauthor in by_coauthor:
                union(by_coauthor[coauthor], pid)
            else:
                by_coauthor[coauthor] = pid
    groups: dict[str, list[str]] = {}
    for pid in paper_ids:
        groups.setdefault(find(pid), []).append(pid)
    return [sorted(groups[root]) for root in sorted(groups)]
