"""Text segmentation and normalization.

Documents are split into fragments (sentences or paragraphs) whose char
spans index back into the original text. Fragment text then flows
through a normalization pipeline (tokenize, strip edge punctuation,
casefold, lemmatize, filter) and finally into concept space via a
cluster dictionary.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from typing import Iterable

from .thesaurus import ALL, ClusterDictionary

SENTENCE = "sentence"
PARAGRAPH = "paragraph"

# Tokens that end with '.' without ending the sentence.
DEFAULT_ABBREVIATIONS = frozenset({
    "dr.", "mr.", "mrs.", "ms.", "prof.", "st.", "jr.", "sr.", "vs.",
    "etc.", "e.g.", "i.e.", "no.", "fig.", "al.", "cf.", "approx.",
})

_PARAGRAPH_BREAK = re.compile(r"\n(?:[ \t\r]*\n)+")
_SENTENCE_END = re.compile(r"[.!?։]")


@dataclass(frozen=True)
class Document:
    id: str
    lang: str
    text: str


@dataclass(frozen=True)
class Fragment:
    """A contiguous slice of a document; text == document.text[start:end]."""
    doc_id: str
    kind: str
    ordinal: int
    start: int
    end: int
    text: str

    @property
    def char_span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True)
class TermSequence:
    """Concept-space terms for one fragment, in emission order."""
    terms: tuple[str, ...]
    fragment: Fragment | None = None


@dataclass
class LangResources:
    lang: str
    stopwords: frozenset[str] = frozenset()
    lemma_map: dict[str, str] | None = None

    @classmethod
    def empty(cls, lang: str) -> "LangResources":
        return cls(lang=lang, stopwords=frozenset(), lemma_map=None)


def load_stopwords(path) -> frozenset[str]:
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word:
                words.add(word.lower())
    return frozenset(words)


def load_lemma_map(path) -> dict[str, str]:
    mapping = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            cols = line.rstrip("\n").split("\t")
            if len(cols) != 2 or not cols[0] or not cols[1]:
                raise ValueError(f"{path}: line {lineno}: expected 'surface<TAB>lemma'")
            mapping[cols[0].lower()] = cols[1].lower()
    return mapping


def _trimmed_span(text: str, start: int, end: int) -> tuple[int, int]:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return start, end


def _split_paragraphs(text: str) -> list[tuple[int, int]]:
    spans = []
    pos = 0
    for match in _PARAGRAPH_BREAK.finditer(text):
        spans.append((pos, match.start()))
        pos = match.end()
    spans.append((pos, len(text)))
    return spans


def _is_abbreviation(text: str, dot_index: int, abbreviations: frozenset[str]) -> bool:
    start = dot_index
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    token = text[start:dot_index + 1].lower()
    return token in abbreviations


def _split_sentences(text: str, base: int, abbreviations: frozenset[str]) -> list[tuple[int, int]]:
    """Break after ./!/?/armenian full stop + whitespace + capital or digit."""
    spans = []
    start = 0
    for match in _SENTENCE_END.finditer(text):
        i = match.start()
        if match.group() == "." and _is_abbreviation(text, i, abbreviations):
            continue
        j = i + 1
        while j < len(text) and text[j] in " \t\r\n":
            j += 1
        if j == i + 1:
            continue  # no whitespace after the mark
        if j >= len(text):
            continue  # trailing whitespace; the tail closes the last span
        nxt = text[j]
        if nxt.isupper() or nxt.isdigit():
            spans.append((start, i + 1))
            start = j
    spans.append((start, len(text)))
    return [(base + s, base + e) for s, e in spans]


def segment(doc: Document, kind: str, abbreviations: frozenset[str] | None = None) -> list[Fragment]:
    """Split a document into sentence or paragraph fragments.

    Spans are trimmed to non-whitespace content, ordered, disjoint, and
    in bounds; whitespace-only stretches produce no fragment.
    """
    if kind not in (SENTENCE, PARAGRAPH):
        raise ValueError(f"unknown fragment kind {kind!r}")
    if abbreviations is None:
        abbreviations = DEFAULT_ABBREVIATIONS
    raw_spans: list[tuple[int, int]] = []
    for pstart, pend in _split_paragraphs(doc.text):
        if kind == PARAGRAPH:
            raw_spans.append((pstart, pend))
        else:
            block = doc.text[pstart:pend]
            raw_spans.extend(_split_sentences(block, pstart, abbreviations))
    fragments = []
    for start, end in raw_spans:
        start, end = _trimmed_span(doc.text, start, end)
        if start >= end:
            continue
        fragments.append(Fragment(doc_id=doc.id, kind=kind, ordinal=len(fragments),
                                  start=start, end=end, text=doc.text[start:end]))
    return fragments


def _has_punct_or_symbol(token: str) -> bool:
    return any(unicodedata.category(ch).startswith(("P", "S")) for ch in token)


def _strip_edges(token: str) -> str:
    start = 0
    end = len(token)
    while start < end and unicodedata.category(token[start]).startswith(("P", "S")):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith(("P", "S")):
        end -= 1
    return token[start:end]


def _is_number(token: str) -> bool:
    digits = token.replace(".", "").replace(",", "")
    return bool(digits) and digits.isdigit()


def normalize_text(text: str, resources: LangResources) -> list[str]:
    """Tokenize and normalize raw text into lemma tokens.

    Splits on whitespace, strips leading/trailing punctuation and
    symbols, casefolds, applies the lemma map (identity fallback), then
    drops stopwords, numbers, and tokens still containing punctuation
    or symbol characters.
    """
    lemma_map = resources.lemma_map or {}
    out = []
    for raw in text.split():
        token = _strip_edges(raw).casefold()
        if not token:
            continue
        lemma = lemma_map.get(token, token)
        if lemma in resources.stopwords:
            continue
        if _is_number(lemma):
            continue
        if _has_punct_or_symbol(lemma):
            continue
        out.append(lemma)
    return out


def normalize(fragment: Fragment, resources: LangResources) -> list[str]:
    return normalize_text(fragment.text, resources)


def conceptualize(lemmas: Iterable[str], lang: str, dictionary: ClusterDictionary,
                  fragment: Fragment | None = None) -> TermSequence:
    """Map lemmas to cluster ids; unmapped lemmas pass through unchanged.

    In all-merge mode a lemma can emit several terms (one per cluster);
    in top1 mode at most one.
    """
    terms: list[str] = []
    for lemma in lemmas:
        cids = dictionary.lookup(lang, lemma)
        if cids:
            terms.extend(cids)
        else:
            terms.append(lemma)
    return TermSequence(terms=tuple(terms), fragment=fragment)


def read_corpus(path) -> list[Document]:
    """Read a JSONL corpus of {"id", "lang", "text"} objects."""
    docs = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {lineno}: bad JSON: {exc}") from None
            for field in ("id", "lang", "text"):
                if field not in obj:
                    raise ValueError(f"{path}: line {lineno}: missing field {field!r}")
            if obj["id"] in seen:
                raise ValueError(f"{path}: line {lineno}: duplicate document id {obj['id']!r}")
            seen.add(obj["id"])
            docs.append(Document(id=str(obj["id"]), lang=str(obj["lang"]), text=str(obj["text"])))
    return docs


def write_corpus(docs: Iterable[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"id": doc.id, "lang": doc.lang, "text": doc.text},
                                ensure_ascii=False, sort_keys=True) + "\n")
