"""Build classification instances from co-occurring entity group pairs.

Every ordered pair of groups sharing at least one sentence becomes one
instance; the label comes from a matching gold triple, otherwise neutral.
Pairs are over synonym groups, not raw mentions, and gold labels are
direction-specific: (A, B, pos) labels only the (A, B) instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from sentrel.corpus import AUTHOR, Document, OpinionTriple
from sentrel.errors import GoldConflictError


@dataclass(frozen=True)
class Context:
    """One shared sentence, anchored at a deterministic mention pair.

    When a group has several mentions in the sentence, the anchor pair
    minimizes (word-token distance, leftmost mention start, other mention
    start).  The key is symmetric in the two roles, so the (A, B) and
    (B, A) instances anchor at the same mention pair.
    """

    sentence_index: int
    source_mention: int  # index into doc.entities
    target_mention: int


@dataclass
class PairInstance:
    doc_id: str
    source: int
    target: int
    contexts: list[Context]
    label: str  # pos / neg / neu


def _mention_distance(doc: Document, a: int, b: int) -> int:
    (a_lo, a_hi) = doc.mention_token_range[a]
    (b_lo, b_hi) = doc.mention_token_range[b]
    if a_lo > b_lo:
        a_lo, a_hi, b_lo, b_hi = b_lo, b_hi, a_lo, a_hi
    return doc.count_words(a_hi, b_lo)


def _pick_anchor(doc: Document, src_mentions: list[int], tgt_mentions: list[int]) -> tuple[int, int]:
    best = None
    best_key = None
    for ms in src_mentions:
        for mt in tgt_mentions:
            s_start = doc.entities[ms].start
            t_start = doc.entities[mt].start
            key = (_mention_distance(doc, ms, mt), min(s_start, t_start), max(s_start, t_start))
            if best_key is None or key < best_key:
                best_key = key
                best = (ms, mt)
    return best


def build_instances(
    doc: Document, opinions: list[OpinionTriple], mirror_labels: bool = False
) -> tuple[list[PairInstance], list[OpinionTriple]]:
    """Generate labeled ordered pair instances for one document.

    Returns the instances (sorted by source, target) and the gold triples
    whose pair never shares a sentence; the latter still count in recall
    denominators downstream.  With ``mirror_labels`` a gold triple labels
    both directions unless the reverse is separately annotated.
    """
    if any(t.source == AUTHOR for t in opinions):
        raise ValueError("author attitudes must be filtered out before pairing")

    gold: dict[tuple[int, int], str] = {}
    for t in opinions:
        prev = gold.get((t.source, t.target))
        if prev is not None and prev != t.label:
            raise GoldConflictError(
                f"{doc.id}: pair ({t.source}, {t.target}) labeled both {prev} and {t.label}"
            )
        gold[(t.source, t.target)] = t.label
    if mirror_labels:
        for (s, t), label in list(gold.items()):
            gold.setdefault((t, s), label)

    by_sentence: dict[int, dict[int, list[int]]] = {}
    for mi, m in enumerate(doc.entities):
        si = doc.mention_sentence[mi]
        by_sentence.setdefault(si, {}).setdefault(m.group, []).append(mi)

    contexts: dict[tuple[int, int], list[Context]] = {}
    for si in sorted(by_sentence):
        groups_here = sorted(by_sentence[si])
        for g1 in groups_here:
            for g2 in groups_here:
                if g1 == g2:
                    continue
                ms, mt = _pick_anchor(doc, by_sentence[si][g1], by_sentence[si][g2])
                contexts.setdefault((g1, g2), []).append(Context(si, ms, mt))

    instances = [
        PairInstance(doc.id, s, t, ctxs, gold.get((s, t), "neu"))
        for (s, t), ctxs in sorted(contexts.items())
    ]
    non_co_occurring = [
        OpinionTriple(s, t, label) for (s, t), label in sorted(gold.items()) if (s, t) not in contexts
    ]
    return instances, non_co_occurring


@dataclass
class LabelCounts:
    """Instance label tallies, per document and aggregate."""

    per_doc: dict[str, dict[str, int]] = field(default_factory=dict)

    def add(self, doc_id: str, instances: list[PairInstance], non_co_occurring: list[OpinionTriple]) -> None:
        counts = {"pos": 0, "neg": 0, "neu": 0, "unreachable": len(non_co_occurring)}
        for inst in instances:
            counts[inst.label] += 1
        self.per_doc[doc_id] = counts

    def total(self, key: str) -> int:
        return sum(c[key] for c in self.per_doc.values())

    def average(self, key: str) -> float:
        if not self.per_doc:
            return 0.0
        return self.total(key) / len(self.per_doc)


def split_counts(
    per_doc: list[tuple[str, list[PairInstance], list[OpinionTriple]]]
) -> LabelCounts:
    """Aggregate label counts over (doc_id, instances, non_co_occurring) triples."""
    counts = LabelCounts()
    for doc_id, instances, non_co in per_doc:
        counts.add(doc_id, instances, non_co)
    return counts
