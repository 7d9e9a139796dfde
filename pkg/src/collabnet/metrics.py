"""Micro-averaged pairwise metrics over same-name paper pairs.

For every name, all unordered pairs of its labeled (paper, name) items are
classified: true positive when prediction and truth both place them with one
author, and so on.  Counts are pooled across names before the four ratios are
computed, which keeps prolific names from being averaged away.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Hashable, Mapping

Item = tuple[str, str]  # (paper_id, name)


@dataclass(frozen=True)
class MicroMetrics:
    micro_a: float
    micro_p: float
    micro_r: float
    micro_f: float
    tp: int
    fp: int
    fn: int
    tn: int

    def __str__(self) -> str:
        return (
            f"MicroA={self.micro_a:.4f} MicroP={self.micro_p:.4f} "
            f"MicroR={self.micro_r:.4f} MicroF={self.micro_f:.4f} "
            f"(TP={self.tp} FP={self.fp} FN={self.fn} TN={self.tn})"
        )


def _pairs_within(counts: Counter) -> int:
    return sum(c * (c - 1) // 2 for c in counts.values())


def micro_metrics(
    predicted: Mapping[Item, Hashable], gold: Mapping[Item, Hashable]
) -> MicroMetrics:
    """Pooled pairwise accuracy/precision/recall/F1 of a predicted partition.

    ``predicted`` must cover every labeled item; a missing item is a hard
    error.  Precision and recall fall back to 1 when their denominator is 0,
    F1 to 0 when precision + recall is 0.
    """
    by_name: dict[str, list[Item]] = defaultdict(list)
    for item in gold:
        if item not in predicted:
            raise ValueError(f"labeled item {item!r} missing from prediction")
        by_name[item[1]].append(item)

    tp = fp = fn = tn = 0
    for name, items in by_name.items():
        n = len(items)
        total = n * (n - 1) // 2
        pred_counts = Counter(predicted[i] for i in items)
        gold_counts = Counter(gold[i] for i in items)
        cell_counts = Counter((predicted[i], gold[i]) for i in items)
        same_pred = _pairs_within(pred_counts)
        same_gold = _pairs_within(gold_counts)
        both = _pairs_within(cell_counts)
        tp += both
        fp += same_pred - both
        fn += same_gold - both
        tn += total - same_pred - same_gold + both

    total_pairs = tp + fp + fn + tn
    micro_a = (tp + tn) / total_pairs if total_pairs else 1.0
    micro_p = tp / (tp + fp) if tp + fp else 1.0
    micro_r = tp / (tp + fn) if tp + fn else 1.0
    micro_f = (
        2.0 * micro_p * micro_r / (micro_p + micro_r) if micro_p + micro_r > 0 else 0.0
    )
    return MicroMetrics(micro_a, micro_p, micro_r, micro_f, tp, fp, fn, tn)


def load_gold(path) -> dict[Item, str]:
    """Read tab-separated (paper_id, name, author_id) triples."""
    gold: dict[Item, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.rstrip("\n")
            if not raw.strip():
                continue
            parts = raw.split("\t")
            if len(parts) != 3:
                raise ValueError(f"gold line {line_no}: expected 3 fields, got {len(parts)}")
            gold[(parts[0], parts[1])] = parts[2]
    return gold


def write_gold(gold: Mapping[Item, str], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for (pid, name) in sorted(gold):
            fh.write(f"{pid}\t{name}\t{gold[(pid, name)]}\n")


def check_gold_against_corpus(gold: Mapping[Item, str], index) -> None:
    """Every labeled (paper, name) must exist in the corpus with that author."""
    for pid, name in gold:
        record = index.papers.get(pid)
        if record is None:
            raise ValueError(f"gold references unknown paper {pid!r}")
        if name not in record.authors:
            raise ValueError(f"gold pairs paper {pid!r} with non-author {name!r}")
