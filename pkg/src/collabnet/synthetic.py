"""Planted-truth synthetic corpus generator.

Builds a corpus with known author identities: communities with their own
venues and vocabulary, power-law productivity and repeat collaborations, and a
controllable number of names shared by two authors placed in different
communities.  The gold labels map every (paper_id, name) to the true author.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .corpus import PaperRecord

_GIVEN = [
    "bo", "chen", "da", "fei", "gan", "hao", "jin", "kai", "lan", "mei",
    "nan", "pei", "qi", "ran", "shu", "tao", "vi", "wan", "xin", "yu",
]
_FAMILY = [
    "an", "bai", "cao", "deng", "e", "fan", "gao", "han", "ji", "kong",
    "li", "ma", "ning", "ou", "pan", "qin", "ren", "su", "tan", "wei",
    "xu", "yan", "zou", "zhu", "luo", "mo", "hu", "du", "shi", "lin",
]

FILLER_WORDS = ["study", "method", "evaluation", "framework", "model"]
GLOBAL_VENUES = ["global-conf-a", "global-conf-b"]


@dataclass
class SyntheticAuthor:
    author_id: str
    name: str
    community: int
    weight: float
    years: tuple[int, ...]
    vocab: list[str]
    rare_words: list[str]
    preferred_venue: str
    partners: list[int] = field(default_factory=list)


@dataclass
class SyntheticCorpus:
    records: list[PaperRecord]
    gold: dict[tuple[str, str], str]
    authors: list[SyntheticAuthor]
    ambiguous_names: list[str]

    def holdout_split(self, n: int, seed: int) -> tuple[list[PaperRecord], list[PaperRecord]]:
        """Split off ``n`` papers whose authors all keep at least one other paper."""
        rng = random.Random(seed)
        paper_count: dict[str, int] = {}
        for record in self.records:
            for name in record.authors:
                key = self.gold[(record.paper_id, name)]
                paper_count[key] = paper_count.get(key, 0) + 1
        eligible = [
            r
            for r in self.records
            if all(paper_count[self.gold[(r.paper_id, a)]] >= 2 for a in r.authors)
        ]
        if len(eligible) < n:
            raise ValueError(f"only {len(eligible)} papers eligible for holdout")
        held = set(r.paper_id for r in rng.sample(eligible, n))
        train = [r for r in self.records if r.paper_id not in held]
        holdout = [r for r in self.records if r.paper_id in held]
        return train, holdout


def _make_names(count: int, rng: random.Random) -> list[str]:
    names: list[str] = []
    seen: set[str] = set()
    while len(names) < count:
        name = f"{rng.choice(_GIVEN)} {rng.choice(_FAMILY)}"
        if name not in seen:
            seen.add(name)
            names.append(name)
        else:
            # Name space is small; extend with a middle syllable when exhausted.
            name = f"{rng.choice(_GIVEN)}{rng.choice(_GIVEN)} {rng.choice(_FAMILY)}"
            if name not in seen:
                seen.add(name)
                names.append(name)
    return names


def generate(
    n_papers: int = 2400,
    n_communities: int = 24,
    authors_per_community: int = 26,
    n_ambiguous: int = 120,
    collision_degree: int = 2,
    seed: int = 7,
) -> SyntheticCorpus:
    """Generate a corpus with planted ground truth.

    ``n_ambiguous`` names are each shared by ``collision_degree`` authors
    assigned to communities far apart, so their papers differ in venues,
    keywords, and collaborators.
    """
    rng = random.Random(seed)
    n_authors = n_communities * authors_per_community
    if n_ambiguous * collision_degree > n_authors:
        raise ValueError("more ambiguous authors requested than authors exist")

    n_names = n_ambiguous + (n_authors - n_ambiguous * collision_degree)
    names = _make_names(n_names, rng)
    ambiguous_names = names[:n_ambiguous]

    community_venues = [[f"venue-{c}-{k}" for k in range(3)] for c in range(n_communities)]
    community_vocab = [[f"topic{c}w{j}" for j in range(18)] for c in range(n_communities)]

    authors: list[SyntheticAuthor] = []

    def add_author(name: str, community: int) -> None:
        idx = len(authors)
        start = rng.randint(1995, 2012)
        vocab = rng.sample(community_vocab[community], 8)
        authors.append(
            SyntheticAuthor(
                author_id=f"A{idx:04d}",
                name=name,
                community=community,
                weight=1.0 / (1 + len(authors) % authors_per_community) ** 0.8,
                years=tuple(range(start, start + 8)),
                vocab=vocab,
                rare_words=[f"rare{idx}x", f"rare{idx}y"],
                preferred_venue=rng.choice(community_venues[community]),
            )
        )

    for name in ambiguous_names:
        # Random distinct communities keep systematic double collisions
        # (two ambiguous names sharing both communities) rare.
        for community in rng.sample(range(n_communities), collision_degree):
            add_author(name, community)
    for i, name in enumerate(names[n_ambiguous:]):
        add_author(name, i % n_communities)

    by_community: dict[int, list[int]] = {}
    for idx, author in enumerate(authors):
        by_community.setdefault(author.community, []).append(idx)

    # Repeat-collaboration structure: partners are picked inside the community
    # with preferential attachment, so pair frequencies come out heavy-tailed.
    degree = [1] * len(authors)
    for idx, author in enumerate(authors):
        peers = [j for j in by_community[author.community] if j != idx]
        want = rng.randint(2, 4)
        while len(author.partners) < want and peers:
            pick = rng.choices(peers, weights=[degree[j] for j in peers], k=1)[0]
            if pick not in author.partners:
                author.partners.append(pick)
                degree[pick] += 1
                degree[idx] += 1

    weights = [a.weight for a in authors]
    records: list[PaperRecord] = []
    gold: dict[tuple[str, str], str] = {}
    for p in range(n_papers):
        lead_idx = rng.choices(range(len(authors)), weights=weights, k=1)[0]
        lead = authors[lead_idx]
        team = [lead_idx]
        team_names = {lead.name}
        n_co = rng.choices([0, 1, 2, 3], weights=[0.08, 0.42, 0.32, 0.18], k=1)[0]
        for _ in range(n_co):
            for _attempt in range(6):
                r = rng.random()
                if r < 0.75 and lead.partners:
                    cand = rng.choice(lead.partners)
                elif r < 0.98:
                    cand = rng.choice(by_community[lead.community])
                else:
                    cand = rng.randrange(len(authors))
                if cand not in team and authors[cand].name not in team_names:
                    team.append(cand)
                    team_names.add(authors[cand].name)
                    break

        words = rng.sample(lead.vocab, 3)
        words += rng.sample(community_vocab[lead.community], 2)
        if rng.random() < 0.35:
            words.append(rng.choice(lead.rare_words))
        words.append(rng.choice(FILLER_WORDS))
        rng.shuffle(words)

        r = rng.random()
        if r < 0.65:
            venue = lead.preferred_venue
        elif r < 0.97:
            venue = rng.choice(community_venues[lead.community])
        else:
            venue = rng.choice(GLOBAL_VENUES)

        pid = f"p{p:05d}"
        record = PaperRecord(
            paper_id=pid,
            title=" ".join(words),
            venue=venue,
            year=rng.choice(lead.years),
            authors=tuple(authors[i].name for i in team),
        )
        record.validate()
        records.append(record)
        for i in team:
            gold[(pid, authors[i].name)] = authors[i].author_id

    return SyntheticCorpus(records, gold, authors, ambiguous_names)
