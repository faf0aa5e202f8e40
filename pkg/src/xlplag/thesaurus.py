"""Multilingual word-cluster dictionaries.

A cluster groups lemmas from several languages that share a meaning.
Clusters are anchored on English (lemma, pos) keys and can be built in
two modes:

* ``all``  - every concept attached to the anchor is merged into one
  cluster, so a polysemous word drags all of its senses along.
* ``top1`` - only the most frequent concept per anchor survives, which
  trades a little coverage for far less noise.

Dictionaries map (lang, lemma) to cluster ids and can be augmented from
plain translation tables, serialized to TSV, and fingerprinted so other
stages can refuse mismatched inputs.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

ALL = "all"
TOP1 = "top1"
MODES = (ALL, TOP1)

NOUN = "NOUN"
VERB = "VERB"
ADJ = "ADJ"
ADV = "ADV"
OTHER = "OTHER"
POS_TAGS = (NOUN, VERB, ADJ, ADV, OTHER)

# Common coarse tags seen in the wild, folded onto our inventory.
_POS_ALIASES = {
    "NOUN": NOUN, "N": NOUN, "NN": NOUN,
    "VERB": VERB, "V": VERB, "VB": VERB,
    "ADJ": ADJ, "A": ADJ, "JJ": ADJ,
    "ADV": ADV, "R": ADV, "RB": ADV,
    "OTHER": OTHER,
}

WORDNET = "WORDNET"
TRANSLATION = "TRANSLATION"


class SenseParseError(ValueError):
    """Raised for malformed sense or translation rows; carries the line number."""


@dataclass(frozen=True)
class SenseRecord:
    concept_id: str
    lang: str
    lemma: str
    pos: str
    freq_rank: int | None = None
    weight: float | None = None


def normalize_pos(tag: str, counters: dict | None = None) -> str:
    tag = tag.strip().upper()
    mapped = _POS_ALIASES.get(tag)
    if mapped is None:
        if counters is not None:
            counters["unknown_pos"] = counters.get("unknown_pos", 0) + 1
        return OTHER
    return mapped


def _decode_lines(source) -> Iterable[str]:
    if isinstance(source, (str, bytes)):
        raise TypeError("expected a readable stream, not a path or raw data")
    raw = source.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    return raw.splitlines()


def load_senses(source, counters: dict | None = None) -> list[SenseRecord]:
    """Parse sense rows (concept_id, lang, lemma, pos, freq_rank, weight).

    Lemmas are lowercased at ingestion. Unknown pos tags fold to OTHER and
    are counted in ``counters``; missing freq_rank/weight are permitted.
    Structural problems raise SenseParseError naming the offending line.
    """
    records = []
    for lineno, line in enumerate(_decode_lines(source), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 4:
            raise SenseParseError(f"line {lineno}: expected at least 4 tab-separated columns")
        concept_id, lang, lemma, pos = (c.strip() for c in cols[:4])
        if not concept_id or not lang or not lemma:
            raise SenseParseError(f"line {lineno}: empty concept_id, lang, or lemma")
        freq_rank = None
        weight = None
        if len(cols) > 4 and cols[4].strip():
            try:
                freq_rank = int(cols[4])
            except ValueError:
                raise SenseParseError(f"line {lineno}: bad freq_rank {cols[4]!r}") from None
            if freq_rank < 0:
                raise SenseParseError(f"line {lineno}: negative freq_rank")
        if len(cols) > 5 and cols[5].strip():
            try:
                weight = float(cols[5])
            except ValueError:
                raise SenseParseError(f"line {lineno}: bad weight {cols[5]!r}") from None
        records.append(SenseRecord(concept_id, lang.lower(), lemma.lower(),
                                   normalize_pos(pos, counters), freq_rank, weight))
    return records


@dataclass(frozen=True)
class TranslationRow:
    en_lemma: str
    pos: str
    target_lang: str
    lemma: str


class TranslationTable:
    """Offline translations of English lemmas, keyed by (en_lemma, pos)."""

    def __init__(self, rows: Iterable[TranslationRow]):
        seen = set()
        kept = []
        for row in rows:
            if row.target_lang == "en":
                raise ValueError("translation target_lang must not be 'en'")
            key = (row.en_lemma, row.pos, row.target_lang, row.lemma)
            if key in seen:
                continue
            seen.add(key)
            kept.append(row)
        self.rows: tuple[TranslationRow, ...] = tuple(kept)

    def __len__(self) -> int:
        return len(self.rows)


def load_translations(source, counters: dict | None = None) -> TranslationTable:
    """Parse translation rows (en_lemma, pos, target_lang, translated_lemma)."""
    rows = []
    for lineno, line in enumerate(_decode_lines(source), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise SenseParseError(f"line {lineno}: expected 4 tab-separated columns")
        en_lemma, pos, target_lang, lemma = (c.strip() for c in cols)
        if not en_lemma or not target_lang or not lemma:
            raise SenseParseError(f"line {lineno}: empty field")
        if target_lang.lower() == "en":
            raise SenseParseError(f"line {lineno}: target_lang must not be 'en'")
        rows.append(TranslationRow(en_lemma.lower(), normalize_pos(pos, counters),
                                   target_lang.lower(), lemma.lower()))
    return TranslationTable(rows)


class ClusterDictionary:
    """Immutable mapping from (lang, lemma) to cluster ids.

    entries holds the full (lang, lemma, pos) -> cluster ids table;
    lookup() merges across pos the way retrieval needs it. In top1 mode
    the merge keeps the single cluster whose concept ranks best.
    """

    def __init__(self, mode: str,
                 entries: Mapping[tuple[str, str, str], tuple[str, ...]],
                 provenance: Mapping[tuple[str, str, str, str], str],
                 concept_rank: Mapping[str, int]):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        if mode == TOP1:
            for (lang, lemma, pos), cids in entries.items():
                if lang == "en" and len(cids) != 1:
                    raise ValueError(
                        f"top1 dictionary must map English key ({lemma}, {pos}) "
                        f"to exactly one cluster, got {len(cids)}")
        self.mode = mode
        self._entries = dict(entries)
        self._provenance = dict(provenance)
        self._concept_rank = dict(concept_rank)
        self._lookup: dict[tuple[str, str], tuple[str, ...]] = {}
        self._members: dict[str, set[tuple[str, str]]] = {}
        for (lang, lemma, pos), cids in self._entries.items():
            for cid in cids:
                self._members.setdefault(cid, set()).add((lang, lemma))
        for (lang, lemma, pos), cids in self._entries.items():
            key = (lang, lemma)
            merged = set(self._lookup.get(key, ())) | set(cids)
            self._lookup[key] = tuple(sorted(merged))
        if mode == TOP1:
            for key, cids in self._lookup.items():
                if len(cids) > 1:
                    best = min(cids, key=lambda c: (self._concept_rank.get(c, math.inf), c))
                    self._lookup[key] = (best,)

    @property
    def entries(self) -> Mapping[tuple[str, str, str], tuple[str, ...]]:
        return self._entries

    @property
    def languages(self) -> frozenset[str]:
        return frozenset(lang for (lang, _lemma, _pos) in self._entries)

    def lookup(self, lang: str, lemma: str) -> tuple[str, ...]:
        return self._lookup.get((lang, lemma), ())

    def members(self, cluster_id: str) -> frozenset[tuple[str, str]]:
        return frozenset(self._members.get(cluster_id, ()))

    def cluster_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self._members))

    def __len__(self) -> int:
        return len(self._entries)

    def to_tsv_bytes(self) -> bytes:
        """Serialize deterministically: header comments, then sorted data rows."""
        out = io.StringIO()
        out.write("#! clusters v1\n")
        out.write(f"#! mode\t{self.mode}\n")
        for cid in sorted(self._concept_rank):
            out.write(f"#! rank\t{cid}\t{self._concept_rank[cid]}\n")
        rows = []
        for (lang, lemma, pos), cids in self._entries.items():
            for cid in cids:
                prov = self._provenance.get((lang, lemma, pos, cid), WORDNET)
                rows.append((lang, lemma, pos, cid, prov))
        for row in sorted(rows):
            out.write("\t".join(row) + "\n")
        return out.getvalue().encode("utf-8")

    def write_tsv(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_tsv_bytes())

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_tsv_bytes()).hexdigest()

    @classmethod
    def from_tsv(cls, source) -> "ClusterDictionary":
        mode = None
        concept_rank: dict[str, int] = {}
        entries: dict[tuple[str, str, str], set[str]] = {}
        provenance: dict[tuple[str, str, str, str], str] = {}
        for lineno, line in enumerate(_decode_lines(source), start=1):
            if not line.strip():
                continue
            if line.startswith("#!"):
                parts = line[2:].strip().split("\t")
                if parts[0] == "mode" and len(parts) == 2:
                    mode = parts[1]
                elif parts[0] == "rank" and len(parts) == 3:
                    concept_rank[parts[1]] = int(parts[2])
                continue
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise SenseParseError(f"line {lineno}: expected 5 tab-separated columns")
            lang, lemma, pos, cid, prov = cols
            entries.setdefault((lang, lemma, pos), set()).add(cid)
            provenance[(lang, lemma, pos, cid)] = prov
        if mode is None:
            raise SenseParseError("missing '#! mode' header line")
        frozen = {key: tuple(sorted(cids)) for key, cids in entries.items()}
        return cls(mode, frozen, provenance, concept_rank)


def anchor_cluster_id(lemma: str, pos: str) -> str:
    """Cluster id for a merged all-mode cluster, derived from its English anchor."""
    return f"{lemma}#{pos}"


def build_clusters(records: Iterable[SenseRecord], mode: str,
                   counters: dict | None = None) -> ClusterDictionary:
    """Build a cluster dictionary from sense records.

    English (lemma, pos) pairs act as anchors; concepts with no English
    record cannot be reached and are skipped (counted). In all mode every
    anchor gets one merged cluster (id derived from the anchor) holding
    the members of all its concepts. In top1 mode the anchor keeps only
    its best-ranked concept, which keeps its concept_id as cluster id; a
    missing rank sorts last, ties break on the smaller concept_id.
    English keys in top1 mode map only through their own anchor, so each
    maps to exactly one cluster.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    by_concept: dict[str, list[SenseRecord]] = {}
    for rec in records:
        by_concept.setdefault(rec.concept_id, []).append(rec)

    # Best English rank per concept; also which concepts hang off each anchor.
    concept_rank: dict[str, int] = {}
    anchors: dict[tuple[str, str], list[str]] = {}
    for cid in sorted(by_concept):
        english = [r for r in by_concept[cid] if r.lang == "en"]
        if not english:
            if counters is not None:
                counters["concepts_without_anchor"] = counters.get("concepts_without_anchor", 0) + 1
            continue
        ranks = [r.freq_rank for r in english if r.freq_rank is not None]
        if ranks:
            concept_rank[cid] = min(ranks)
        for rec in english:
            cids = anchors.setdefault((rec.lemma, rec.pos), [])
            if cid not in cids:
                cids.append(cid)

    entries: dict[tuple[str, str, str], set[str]] = {}
    provenance: dict[tuple[str, str, str, str], str] = {}

    def add(lang: str, lemma: str, pos: str, cluster_id: str) -> None:
        entries.setdefault((lang, lemma, pos), set()).add(cluster_id)
        provenance[(lang, lemma, pos, cluster_id)] = WORDNET

    if mode == ALL:
        for (lemma, pos), cids in anchors.items():
            cluster_id = anchor_cluster_id(lemma, pos)
            for cid in cids:
                for rec in by_concept[cid]:
                    add(rec.lang, rec.lemma, rec.pos, cluster_id)
        ranks: dict[str, int] = {}
    else:
        def rank_key(cid: str):
            return (concept_rank.get(cid, math.inf), cid)

        selected = {key: min(cids, key=rank_key) for key, cids in anchors.items()}
        active = set(selected.values())
        for cid in sorted(active):
            for rec in by_concept[cid]:
                if rec.lang == "en":
                    continue
                add(rec.lang, rec.lemma, rec.pos, cid)
        for (lemma, pos), cid in selected.items():
            add("en", lemma, pos, cid)
        ranks = {cid: concept_rank[cid] for cid in active if cid in concept_rank}

    frozen = {key: tuple(sorted(cids)) for key, cids in entries.items()}
    return ClusterDictionary(mode, frozen, provenance, ranks)


def augment_clusters(dictionary: ClusterDictionary, table: TranslationTable,
                     counters: dict | None = None) -> ClusterDictionary:
    """Return a new dictionary with translated lemmas added to anchor clusters.

    Each row attaches target lemma to every cluster its English
    (lemma, pos) anchor maps to. Rows whose anchor is unknown are skipped
    and counted. Adding the same row twice is a no-op.
    """
    entries = {key: set(cids) for key, cids in dictionary.entries.items()}
    provenance = dict(dictionary._provenance)
    for row in table.rows:
        anchor_cids = dictionary.entries.get(("en", row.en_lemma, row.pos), ())
        if not anchor_cids:
            if counters is not None:
                counters["translations_without_anchor"] = counters.get("translations_without_anchor", 0) + 1
            continue
        key = (row.target_lang, row.lemma, row.pos)
        bucket = entries.setdefault(key, set())
        for cid in anchor_cids:
            bucket.add(cid)
            provenance.setdefault((row.target_lang, row.lemma, row.pos, cid), TRANSLATION)
    frozen = {key: tuple(sorted(cids)) for key, cids in entries.items()}
    return ClusterDictionary(dictionary.mode, frozen, provenance, dictionary._concept_rank)


def coverage(dictionary: ClusterDictionary, tokens: Iterable[tuple[str, str]]) -> float:
    """Fraction of (lang, lemma) tokens with at least one cluster. 0.0 on empty input."""
    total = 0
    covered = 0
    for lang, lemma in tokens:
        total += 1
        if dictionary.lookup(lang, lemma):
            covered += 1
    if total == 0:
        return 0.0
    return covered / total
