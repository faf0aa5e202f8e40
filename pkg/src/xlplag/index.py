"""Inverted index with Okapi BM25 ranking over concept terms.

Fragments are added with their term sequences, then the index is sealed,
freezing the corpus statistics (N, average length). Queries use set
semantics: duplicate query terms do not score twice. Scoring sums, per
query term, idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len/avgdl)).

The default idf is the non-negative variant ln(1 + (N - n + 0.5)/(n + 0.5));
the classic ln((N - n + 0.5)/(n + 0.5)) can go negative for very common
terms and is kept behind a config switch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

from .textproc import Fragment, TermSequence

IDF_NONNEGATIVE = "nonnegative"
IDF_CLASSIC = "classic"


@dataclass(frozen=True)
class RetrievalConfig:
    k1: float = 1.2
    b: float = 0.75
    k: int = 50
    idf: str = IDF_NONNEGATIVE

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError("k1 must be positive")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must be in [0, 1]")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.idf not in (IDF_NONNEGATIVE, IDF_CLASSIC):
            raise ValueError(f"unknown idf variant {self.idf!r}")

    def to_dict(self) -> dict:
        return {"k1": self.k1, "b": self.b, "k": self.k, "idf": self.idf}

    @classmethod
    def from_dict(cls, obj: dict) -> "RetrievalConfig":
        return cls(k1=float(obj["k1"]), b=float(obj["b"]), k=int(obj["k"]), idf=str(obj["idf"]))


@dataclass(frozen=True)
class Candidate:
    ref: int
    score: float


class IndexStateError(RuntimeError):
    """Operation not valid for the index's sealed/unsealed state."""


class InvertedIndex:
    def __init__(self, cfg: RetrievalConfig | None = None, lang: str | None = None,
                 dict_fingerprint: str | None = None):
        self.cfg = cfg or RetrievalConfig()
        self.lang = lang
        self.dict_fingerprint = dict_fingerprint
        self._fragments: list[Fragment] = []
        self._lengths: list[int] = []
        self._postings: dict[str, dict[int, int]] = {}
        self._sealed = False
        self._avgdl = 0.0

    @property
    def sealed(self) -> bool:
        return self._sealed

    @property
    def n(self) -> int:
        return len(self._fragments)

    @property
    def avgdl(self) -> float:
        if not self._sealed:
            raise IndexStateError("index not sealed; statistics not frozen yet")
        return self._avgdl

    def add_fragment(self, fragment: Fragment, terms: Iterable[str]) -> int:
        """Register a fragment with its term sequence; returns its ref."""
        if self._sealed:
            raise IndexStateError("cannot add fragments to a sealed index")
        ref = len(self._fragments)
        self._fragments.append(fragment)
        count = 0
        for term in terms:
            bucket = self._postings.setdefault(term, {})
            bucket[ref] = bucket.get(ref, 0) + 1
            count += 1
        self._lengths.append(count)
        return ref

    def seal(self) -> "InvertedIndex":
        if self._sealed:
            raise IndexStateError("index already sealed")
        self._sealed = True
        if self._lengths:
            self._avgdl = sum(self._lengths) / len(self._lengths)
        return self

    def fragment(self, ref: int) -> Fragment:
        if not 0 <= ref < len(self._fragments):
            raise KeyError(f"unknown fragment ref {ref}")
        return self._fragments[ref]

    def fragment_length(self, ref: int) -> int:
        if not 0 <= ref < len(self._lengths):
            raise KeyError(f"unknown fragment ref {ref}")
        return self._lengths[ref]

    def idf(self, term: str, cfg: RetrievalConfig | None = None) -> float:
        if not self._sealed:
            raise IndexStateError("index not sealed")
        cfg = cfg or self.cfg
        n_t = len(self._postings.get(term, ()))
        if cfg.idf == IDF_CLASSIC:
            if n_t == 0:
                return 0.0
            return math.log((self.n - n_t + 0.5) / (n_t + 0.5))
        return math.log(1.0 + (self.n - n_t + 0.5) / (n_t + 0.5))

    @staticmethod
    def _query_terms(query) -> list[str]:
        if isinstance(query, TermSequence):
            terms = query.terms
        else:
            terms = tuple(query)
        # Set semantics with a fixed iteration order so float sums are
        # reproducible no matter how the caller ordered the query.
        return sorted(set(terms))

    def bm25_score(self, ref: int, query, cfg: RetrievalConfig | None = None) -> float:
        if not self._sealed:
            raise IndexStateError("index not sealed")
        cfg = cfg or self.cfg
        if not 0 <= ref < len(self._fragments):
            raise KeyError(f"unknown fragment ref {ref}")
        length = self._lengths[ref]
        score = 0.0
        for term in self._query_terms(query):
            postings = self._postings.get(term)
            if not postings:
                continue
            tf = postings.get(ref, 0)
            if tf == 0:
                continue
            denom = tf + cfg.k1 * (1.0 - cfg.b + cfg.b * length / self._avgdl)
            score += self.idf(term, cfg) * tf * (cfg.k1 + 1.0) / denom
        return score

    def search(self, query, cfg: RetrievalConfig | None = None) -> list[Candidate]:
        """Top-k fragments by BM25, ties broken by ascending ref.

        Fragments scoring 0 never appear; an empty query returns [].
        """
        if not self._sealed:
            raise IndexStateError("index not sealed")
        cfg = cfg or self.cfg
        terms = self._query_terms(query)
        if not terms or cfg.k == 0 or self.n == 0:
            return []
        scores: dict[int, float] = {}
        for term in terms:
            postings = self._postings.get(term)
            if not postings:
                continue
            w_idf = self.idf(term, cfg)
            for ref, tf in postings.items():
                length = self._lengths[ref]
                denom = tf + cfg.k1 * (1.0 - cfg.b + cfg.b * length / self._avgdl)
                scores[ref] = scores.get(ref, 0.0) + w_idf * tf * (cfg.k1 + 1.0) / denom
        ranked = [Candidate(ref=ref, score=sc) for ref, sc in scores.items() if sc > 0.0]
        ranked.sort(key=lambda c: (-c.score, c.ref))
        return ranked[:cfg.k]

    def save(self, path) -> None:
        """Write a deterministic JSONL snapshot (header, fragments, postings)."""
        if not self._sealed:
            raise IndexStateError("only sealed indexes can be saved")
        with open(path, "w", encoding="utf-8") as fh:
            header = {
                "format": "xlplag-index",
                "version": 1,
                "n": self.n,
                "avgdl": self._avgdl,
                "cfg": self.cfg.to_dict(),
                "lang": self.lang,
                "dict_fingerprint": self.dict_fingerprint,
            }
            fh.write(json.dumps(header, ensure_ascii=False, sort_keys=True) + "\n")
            for ref, frag in enumerate(self._fragments):
                row = {
                    "record": "fragment",
                    "ref": ref,
                    "doc_id": frag.doc_id,
                    "kind": frag.kind,
                    "ordinal": frag.ordinal,
                    "start": frag.start,
                    "end": frag.end,
                    "text": frag.text,
                    "length": self._lengths[ref],
                }
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
            for term in sorted(self._postings):
                postings = self._postings[term]
                row = {
                    "record": "postings",
                    "term": term,
                    "items": [[ref, postings[ref]] for ref in sorted(postings)],
                }
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "InvertedIndex":
        with open(path, encoding="utf-8") as fh:
            header_line = fh.readline()
            if not header_line.strip():
                raise ValueError(f"{path}: empty index file")
            header = json.loads(header_line)
            if header.get("format") != "xlplag-index":
                raise ValueError(f"{path}: not an index file")
            idx = cls(cfg=RetrievalConfig.from_dict(header["cfg"]),
                      lang=header.get("lang"),
                      dict_fingerprint=header.get("dict_fingerprint"))
            lengths: list[int] = []
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                if row["record"] == "fragment":
                    frag = Fragment(doc_id=row["doc_id"], kind=row["kind"],
                                    ordinal=row["ordinal"], start=row["start"],
                                    end=row["end"], text=row["text"])
                    idx._fragments.append(frag)
                    lengths.append(row["length"])
                elif row["record"] == "postings":
                    idx._postings[row["term"]] = {int(ref): int(tf) for ref, tf in row["items"]}
                else:
                    raise ValueError(f"{path}: unknown record type {row['record']!r}")
            idx._lengths = lengths
            idx._sealed = True
            idx._avgdl = float(header["avgdl"])
            if idx.n != int(header["n"]):
                raise ValueError(f"{path}: fragment count mismatch")
            return idx
