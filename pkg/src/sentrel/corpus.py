"""Corpus loading: documents, entity mentions, opinions, synonym groups.

File formats
------------
``<id>.txt``        UTF-8 document text.
``<id>.ann``        one mention per line: ``id<TAB>TYPE<TAB>start<TAB>end<TAB>surface``
                    with TYPE in {PER, ORG, LOC, GEO} and [start, end) in code points.
``<id>.opin.txt``   one attitude per line: ``source, target, label`` with label
                    in {pos, neg}; the literal source "Author" marks the
                    document author.
``<id>.lemmas``     optional, whitespace-separated lemmas, one per word token
                    in token order.
``synonyms.txt``    one comma-separated set of name variants per line; the
                    0-based line number is the group id.

All offsets are Unicode code points, end-exclusive.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from sentrel.errors import GoldConflictError, ParseError, ValidationError

log = logging.getLogger(__name__)

# Pseudo group id for attitudes held by the document author.
AUTHOR = -1

ENTITY_TYPES = ("PER", "ORG", "LOC", "GEO")

LABELS = ("pos", "neg", "neu")

WORD = "word"
COMMA = "comma"
PUNCT = "punct"

_TERMINATORS = ".!?…"


def normalize_name(name: str) -> str:
    """Lowercase and collapse internal whitespace; idempotent."""
    return " ".join(name.split()).lower()


@dataclass(frozen=True)
class Token:
    start: int
    end: int
    surface: str
    lemma: str
    kind: str  # WORD, COMMA or PUNCT


@dataclass
class EntityMention:
    mention_id: str
    type: str
    start: int
    end: int
    surface: str
    group: int | None = None  # filled by resolve_mention_groups


@dataclass(frozen=True)
class OpinionTriple:
    source: int  # group id, or AUTHOR
    target: int
    label: str  # "pos" or "neg"


@dataclass
class Document:
    """A text with sentence spans, tokens and entity mentions.

    Derived index fields are computed once at load time and treated as
    immutable afterwards; documents are safe to share between workers.
    """

    id: str
    text: str
    sentences: list[tuple[int, int]]
    tokens: list[Token]
    entities: list[EntityMention]
    # Derived indexes (parallel to sentences / entities).
    sent_token_range: list[tuple[int, int]] = field(default_factory=list)
    mention_sentence: list[int] = field(default_factory=list)
    mention_token_range: list[tuple[int, int]] = field(default_factory=list)
    _word_prefix: list[int] = field(default_factory=list)
    _comma_prefix: list[int] = field(default_factory=list)

    def word_lemmas(self, token_lo: int, token_hi: int) -> list[str]:
        """Lemmas of the word tokens in token index range [lo, hi)."""
        return [t.lemma for t in self.tokens[token_lo:token_hi] if t.kind == WORD]

    def count_words(self, token_lo: int, token_hi: int) -> int:
        return self._word_prefix[token_hi] - self._word_prefix[token_lo]

    def count_commas(self, token_lo: int, token_hi: int) -> int:
        return self._comma_prefix[token_hi] - self._comma_prefix[token_lo]


class SynonymGroups:
    """Partition of entity names into coreferent groups.

    Names loaded from the synonym file keep their 0-based line number as the
    group id.  Unknown names resolve to fresh singleton groups so that
    resolution is total and repeatable: the same normalized name always maps
    to the same id within one SynonymGroups instance.
    """

    def __init__(self, groups: dict[int, list[str]], next_id: int):
        self._groups = groups
        self._index: dict[str, int] = {}
        for gid, names in groups.items():
            for name in names:
                self._index[normalize_name(name)] = gid
        self._next_id = next_id
        self._loaded_names = frozenset(self._index)

    @property
    def n_groups(self) -> int:
        return len(self._groups)

    def lookup(self, name: str) -> int | None:
        """Group id of a known name, or None; never creates a group."""
        return self._index.get(normalize_name(name))

    def resolve(self, name: str) -> int:
        """Group id of a name, creating a singleton group if unknown."""
        norm = normalize_name(name)
        gid = self._index.get(norm)
        if gid is None:
            gid = self._next_id
            self._next_id += 1
            self._groups[gid] = [norm]
            self._index[norm] = gid
        return gid

    def is_loaded(self, name: str) -> bool:
        """True if the name came from the synonym file (not a created singleton)."""
        return normalize_name(name) in self._loaded_names

    def canonical(self, gid: int) -> str:
        """First listed variant of a group, normalized."""
        if gid == AUTHOR:
            return "author"
        return normalize_name(self._groups[gid][0])

    def names(self, gid: int) -> list[str]:
        return list(self._groups[gid])


def load_synonyms(path) -> SynonymGroups:
    path = Path(path)
    groups: dict[int, list[str]] = {}
    seen: dict[str, int] = {}
    lines = path.read_text(encoding="utf-8").splitlines()
    for line_no, line in enumerate(lines):
        names = [n.strip() for n in line.split(",") if n.strip()]
        if not names:
            continue
        kept = []
        for name in names:
            norm = normalize_name(name)
            if norm in seen and seen[norm] != line_no:
                raise ParseError(
                    f"name {name!r} already belongs to group on line {seen[norm] + 1}",
                    path=path,
                    line=line_no + 1,
                )
            if seen.get(norm) == line_no:
                continue  # duplicate within one line is harmless
            seen[norm] = line_no
            kept.append(name)
        groups[line_no] = kept
    return SynonymGroups(groups, next_id=len(lines))


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "-"


def tokenize(text: str) -> list[tuple[int, int, str, str]]:
    """Split text into (start, end, surface, kind) tuples.

    Maximal runs of letters/digits/hyphens are word tokens; ',' is a comma
    token; any other non-space character is a single-char punct token.
    """
    out = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if _is_word_char(ch):
            j = i + 1
            while j < n and _is_word_char(text[j]):
                j += 1
            out.append((i, j, text[i:j], WORD))
            i = j
        elif ch == ",":
            out.append((i, i + 1, ch, COMMA))
            i += 1
        else:
            out.append((i, i + 1, ch, PUNCT))
            i += 1
    return out


def split_sentences(text: str, protected: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Deterministic sentence spans.

    A boundary falls after '.', '!', '?' or '…' followed by whitespace and
    after every newline, except when the boundary lies strictly inside one
    of the protected (entity) spans.  Spans are trimmed of surrounding
    whitespace; empty segments are dropped.
    """
    n = len(text)
    if n == 0:
        return []
    inside = bytearray(n + 1)
    for s, e in protected:
        for p in range(s + 1, e):
            inside[p] = 1
    breaks = []
    for p in range(1, n):
        prev = text[p - 1]
        if prev == "\n" or (prev in _TERMINATORS and text[p].isspace()):
            if not inside[p]:
                breaks.append(p)
    spans = []
    lo = 0
    for p in breaks + [n]:
        s, e = lo, p
        while s < e and text[s].isspace():
            s += 1
        while e > s and text[e - 1].isspace():
            e -= 1
        if s < e:
            spans.append((s, e))
        lo = p
    return spans


def _parse_ann(path, text: str) -> list[EntityMention]:
    path = Path(path)
    mentions = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise ParseError(f"expected 5 tab-separated fields, got {len(parts)}", path=path, line=line_no)
        mid, etype, start_s, end_s, surface = parts
        if etype not in ENTITY_TYPES:
            raise ParseError(f"unknown entity type {etype!r}", path=path, line=line_no)
        try:
            start, end = int(start_s), int(end_s)
        except ValueError:
            raise ParseError(f"non-integer span {start_s!r}..{end_s!r}", path=path, line=line_no) from None
        if not (0 <= start < end <= len(text)):
            raise ValidationError(f"{path}:{line_no}: span [{start}, {end}) out of bounds for text of length {len(text)}")
        actual = text[start:end]
        if actual != surface:
            log.warning("%s:%d: surface %r differs from text %r; using text", path, line_no, surface, actual)
        mentions.append(EntityMention(mid, etype, start, end, actual))
    mentions.sort(key=lambda m: (m.start, m.end))
    for a, b in zip(mentions, mentions[1:]):
        if b.start < a.end:
            raise ValidationError(
                f"{path}: mention {b.mention_id} [{b.start},{b.end}) overlaps {a.mention_id} [{a.start},{a.end})"
            )
    return mentions


def entities_to_ann(doc: Document) -> list[str]:
    """Render mentions back to annotation rows (round-trips the input)."""
    return [f"{m.mention_id}\t{m.type}\t{m.start}\t{m.end}\t{m.surface}" for m in doc.entities]


def load_document(text_path, ann_path, lemma_path=None, doc_id: str | None = None) -> Document:
    """Load one document with deterministic sentence and token structure."""
    text_path = Path(text_path)
    text = text_path.read_text(encoding="utf-8")
    entities = _parse_ann(ann_path, text)
    if doc_id is None:
        doc_id = text_path.stem
    sentences = split_sentences(text, [(m.start, m.end) for m in entities])
    raw_tokens = tokenize(text)

    lemmas = None
    if lemma_path is not None:
        lemmas = Path(lemma_path).read_text(encoding="utf-8").split()
        n_words = sum(1 for t in raw_tokens if t[3] == WORD)
        if len(lemmas) != n_words:
            raise ParseError(
                f"{len(lemmas)} lemmas for {n_words} word tokens", path=lemma_path
            )
    tokens = []
    wi = 0
    for start, end, surface, kind in raw_tokens:
        if kind == WORD:
            lemma = lemmas[wi].lower() if lemmas is not None else surface.lower()
            wi += 1
        else:
            lemma = surface
        tokens.append(Token(start, end, surface, lemma, kind))

    doc = Document(doc_id, text, sentences, tokens, entities)
    _build_indexes(doc)
    return doc


def _build_indexes(doc: Document) -> None:
    tokens = doc.tokens
    wp = [0]
    cp = [0]
    for t in tokens:
        wp.append(wp[-1] + (t.kind == WORD))
        cp.append(cp[-1] + (t.kind == COMMA))
    doc._word_prefix = wp
    doc._comma_prefix = cp

    starts = {t.start: i for i, t in enumerate(tokens)}
    ends = {t.end: i for i, t in enumerate(tokens)}

    doc.sent_token_range = []
    ti = 0
    for s, e in doc.sentences:
        lo = ti
        while lo < len(tokens) and tokens[lo].start < s:
            lo += 1
        hi = lo
        while hi < len(tokens) and tokens[hi].end <= e:
            hi += 1
        doc.sent_token_range.append((lo, hi))
        ti = hi

    doc.mention_sentence = []
    doc.mention_token_range = []
    for m in doc.entities:
        sent = None
        for si, (s, e) in enumerate(doc.sentences):
            if s <= m.start and m.end <= e:
                sent = si
                break
        if sent is None:
            raise ValidationError(
                f"{doc.id}: mention {m.mention_id} [{m.start},{m.end}) not contained in any sentence"
            )
        lo = starts.get(m.start)
        hi = ends.get(m.end)
        if lo is None or hi is None:
            raise ValidationError(
                f"{doc.id}: mention {m.mention_id} [{m.start},{m.end}) does not align to token boundaries"
            )
        doc.mention_sentence.append(sent)
        doc.mention_token_range.append((lo, hi + 1))


def make_document(doc_id: str, text: str, entities: list[EntityMention]) -> Document:
    """Build a Document from in-memory pieces (used by tests and fixtures)."""
    sentences = split_sentences(text, [(m.start, m.end) for m in entities])
    tokens = [Token(s, e, surf, surf.lower() if kind == WORD else surf, kind) for s, e, surf, kind in tokenize(text)]
    doc = Document(doc_id, text, sentences, tokens, list(entities))
    _build_indexes(doc)
    return doc


def resolve_mention_groups(doc: Document, groups: SynonymGroups) -> None:
    """Assign a group id to every mention via normalized surface match."""
    for m in doc.entities:
        m.group = groups.resolve(m.surface)


def load_opinions(path, groups: SynonymGroups, unmatched: set[str] | None = None) -> list[OpinionTriple]:
    """Parse attitude triples, resolving names through the synonym groups.

    Unknown names become singleton groups and are recorded in ``unmatched``
    when given.  Duplicate triples collapse; the same ordered pair with both
    labels is a conflict (files are post-adjudication).
    """
    path = Path(path)
    seen: dict[tuple[int, int], str] = {}
    triples: list[OpinionTriple] = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"expected 'source, target, label', got {len(parts)} fields", path=path, line=line_no)
        src_name, tgt_name, label = (p.strip() for p in parts)
        label = label.lower()
        if label not in ("pos", "neg"):
            raise ParseError(f"label must be pos or neg, got {label!r}", path=path, line=line_no)
        for name in (src_name, tgt_name):
            if normalize_name(name) != "author" and not groups.is_loaded(name) and unmatched is not None:
                unmatched.add(normalize_name(name))
        src = AUTHOR if normalize_name(src_name) == "author" else groups.resolve(src_name)
        tgt = groups.resolve(tgt_name)
        if src == tgt:
            raise ValidationError(f"{path}:{line_no}: source and target resolve to the same group")
        prev = seen.get((src, tgt))
        if prev is None:
            seen[(src, tgt)] = label
            triples.append(OpinionTriple(src, tgt, label))
        elif prev != label:
            raise GoldConflictError(
                f"{path}:{line_no}: pair ({src_name!r}, {tgt_name!r}) labeled both {prev} and {label}"
            )
    triples.sort(key=lambda t: (t.source, t.target))
    return triples


@dataclass
class LoadReport:
    """Bookkeeping from a collection load, for auditing."""

    n_documents: int = 0
    unmatched_opinion_names: set[str] = field(default_factory=set)


def document_paths(corpus_dir, doc_id: str) -> tuple[Path, Path, Path | None]:
    base = Path(corpus_dir)
    text = base / f"{doc_id}.txt"
    ann = base / f"{doc_id}.ann"
    lemmas = base / f"{doc_id}.lemmas"
    return text, ann, lemmas if lemmas.exists() else None


def load_collection(
    corpus_dir, doc_ids: list[str], groups: SynonymGroups, report: LoadReport | None = None
) -> list[tuple[Document, list[OpinionTriple]]]:
    """Load documents plus their gold attitudes, with groups resolved."""
    out = []
    for doc_id in doc_ids:
        text_path, ann_path, lemma_path = document_paths(corpus_dir, doc_id)
        doc = load_document(text_path, ann_path, lemma_path, doc_id=doc_id)
        resolve_mention_groups(doc, groups)
        opin_path = Path(corpus_dir) / f"{doc_id}.opin.txt"
        unmatched = report.unmatched_opinion_names if report is not None else None
        opinions = load_opinions(opin_path, groups, unmatched=unmatched)
        out.append((doc, opinions))
    if report is not None:
        report.n_documents += len(out)
    return out


@dataclass
class StatsReport:
    """Collection-level statistics in the shape of the corpus summary table."""

    n_documents: int
    avg_sentences: float
    avg_mentions: float
    avg_unique_groups: float
    avg_pos_pairs: float
    avg_neg_pairs: float
    avg_neutral_pairs: float

    def to_dict(self) -> dict:
        return {
            "n_documents": self.n_documents,
            "avg_sentences": self.avg_sentences,
            "avg_mentions": self.avg_mentions,
            "avg_unique_groups": self.avg_unique_groups,
            "avg_pos_pairs": self.avg_pos_pairs,
            "avg_neg_pairs": self.avg_neg_pairs,
            "avg_neutral_pairs": self.avg_neutral_pairs,
        }


def collection_stats(docs: list[tuple[Document, list[OpinionTriple]]]) -> StatsReport:
    """Document counts and per-document averages over a loaded collection.

    Positive/negative counts are gold entity-to-entity triples per document
    (author attitudes excluded); neutral counts are generated co-occurring
    pairs without a gold label.
    """
    from sentrel import pairing  # local import: pairing depends on corpus types

    if not docs:
        raise ValidationError("cannot compute statistics of an empty collection")
    n = len(docs)
    sents = mentions = uniq = pos = neg = neu = 0
    for doc, opinions in docs:
        sents += len(doc.sentences)
        mentions += len(doc.entities)
        uniq += len({m.group for m in doc.entities})
        ne_opinions = [t for t in opinions if t.source != AUTHOR]
        pos += sum(1 for t in ne_opinions if t.label == "pos")
        neg += sum(1 for t in ne_opinions if t.label == "neg")
        instances, _ = pairing.build_instances(doc, ne_opinions)
        neu += sum(1 for inst in instances if inst.label == "neu")
    return StatsReport(
        n_documents=n,
        avg_sentences=sents / n,
        avg_mentions=mentions / n,
        avg_unique_groups=uniq / n,
        avg_pos_pairs=pos / n,
        avg_neg_pairs=neg / n,
        avg_neutral_pairs=neu / n,
    )
