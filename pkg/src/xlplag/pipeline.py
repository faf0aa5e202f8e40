"""End-to-end detection: index reference docs, scan suspicious docs.

Reference documents are segmented into paragraphs, conceptualized, and
indexed once. Each suspicious document is segmented into sentences; per
sentence the index proposes top-k candidate paragraphs, the analysis
stage scores sentence pairs, and the best candidate clearing the
threshold becomes a detection mapping a suspicious char span to a source
char span.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .analysis import Scorer, _threshold_value, compare_fragments, select_best
from .index import IndexStateError, InvertedIndex, RetrievalConfig
from .textproc import (Document, Fragment, LangResources, PARAGRAPH, SENTENCE,
                       conceptualize, normalize, segment)
from .thesaurus import ClusterDictionary


class DictionaryMismatchError(ValueError):
    """Index was built with a different dictionary than the one supplied."""


@dataclass(frozen=True)
class Detection:
    susp_doc: str
    susp_span: tuple[int, int]
    src_doc: str
    src_span: tuple[int, int]
    score: float

    def to_dict(self) -> dict:
        return {
            "susp_doc": self.susp_doc,
            "susp_span": list(self.susp_span),
            "src_doc": self.src_doc,
            "src_span": list(self.src_span),
            "score": self.score,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Detection":
        return cls(susp_doc=str(obj["susp_doc"]),
                   susp_span=(int(obj["susp_span"][0]), int(obj["susp_span"][1])),
                   src_doc=str(obj["src_doc"]),
                   src_span=(int(obj["src_span"][0]), int(obj["src_span"][1])),
                   score=float(obj["score"]))


@dataclass
class Report:
    config: dict = field(default_factory=dict)
    detections: list[Detection] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"config": self.config,
                "detections": [d.to_dict() for d in self.detections]}

    @classmethod
    def from_dict(cls, obj: dict) -> "Report":
        return cls(config=dict(obj.get("config", {})),
                   detections=[Detection.from_dict(d) for d in obj.get("detections", [])])


def write_report(report: Report, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")


def read_report(path) -> Report:
    with open(path, encoding="utf-8") as fh:
        return Report.from_dict(json.load(fh))


def _resources_for(resources: Mapping[str, LangResources] | None, lang: str) -> LangResources:
    if resources and lang in resources:
        return resources[lang]
    return LangResources.empty(lang)


def index_reference(docs: Sequence[Document], dictionary: ClusterDictionary,
                    cfg: RetrievalConfig | None = None,
                    resources: Mapping[str, LangResources] | None = None,
                    abbreviations: frozenset[str] | None = None) -> InvertedIndex:
    """Index reference documents at paragraph granularity.

    All documents must share one language; errors raised while processing
    a document are re-raised with its id attached.
    """
    docs = list(docs)
    langs = {doc.lang for doc in docs}
    if len(langs) > 1:
        raise ValueError(f"reference corpus mixes languages: {sorted(langs)}")
    lang = next(iter(langs)) if langs else None
    idx = InvertedIndex(cfg=cfg, lang=lang, dict_fingerprint=dictionary.fingerprint())
    for doc in docs:
        try:
            res = _resources_for(resources, doc.lang)
            for para in segment(doc, PARAGRAPH, abbreviations):
                lemmas = normalize(para, res)
                seq = conceptualize(lemmas, doc.lang, dictionary, para)
                idx.add_fragment(para, seq.terms)
        except Exception as exc:
            raise type(exc)(f"document {doc.id!r}: {exc}") from exc
    return idx.seal()


def rank_sentences(susp_doc: Document, index: InvertedIndex,
                   dictionary: ClusterDictionary,
                   cfg: RetrievalConfig | None = None,
                   resources: Mapping[str, LangResources] | None = None,
                   abbreviations: frozenset[str] | None = None
                   ) -> list[tuple[Fragment, list]]:
    """Per suspicious sentence, the ranked candidate list from the index."""
    if not index.sealed:
        raise IndexStateError("retrieval requires a sealed index")
    res = _resources_for(resources, susp_doc.lang)
    out = []
    for sent in segment(susp_doc, SENTENCE, abbreviations):
        lemmas = normalize(sent, res)
        seq = conceptualize(lemmas, susp_doc.lang, dictionary, sent)
        out.append((sent, index.search(seq, cfg)))
    return out


def _check_dictionary(index: InvertedIndex, dictionary: ClusterDictionary) -> None:
    if index.dict_fingerprint and index.dict_fingerprint != dictionary.fingerprint():
        raise DictionaryMismatchError(
            "dictionary fingerprint does not match the one the index was built with")


def _merge_adjacent(detections: list[Detection], index: InvertedIndex) -> list[Detection]:
    """Fold runs of consecutive detections that hit the same source paragraph."""
    if not detections:
        return detections

    def paragraph_for(d: Detection) -> tuple[str, tuple[int, int]] | None:
        for ref in range(index.n):
            frag = index.fragment(ref)
            if frag.doc_id == d.src_doc and frag.start <= d.src_span[0] and d.src_span[1] <= frag.end:
                return (frag.doc_id, (frag.start, frag.end))
        return None

    merged: list[Detection] = []
    for det in detections:
        if merged:
            prev = merged[-1]
            same_para = (prev.src_doc == det.src_doc
                         and paragraph_for(prev) == paragraph_for(det))
            if same_para and prev.susp_doc == det.susp_doc:
                merged[-1] = Detection(
                    susp_doc=prev.susp_doc,
                    susp_span=(prev.susp_span[0], det.susp_span[1]),
                    src_doc=prev.src_doc,
                    src_span=(min(prev.src_span[0], det.src_span[0]),
                              max(prev.src_span[1], det.src_span[1])),
                    score=max(prev.score, det.score))
                continue
        merged.append(det)
    return merged


def detect(susp_doc: Document, index: InvertedIndex, dictionary: ClusterDictionary,
           scorer: Scorer, threshold, cfg: RetrievalConfig | None = None,
           resources: Mapping[str, LangResources] | None = None,
           abbreviations: frozenset[str] | None = None,
           trace: list | None = None,
           merge_adjacent: bool = False) -> Report:
    """Scan one suspicious document against a sealed reference index.

    For each sentence the best candidate clearing the threshold produces a
    Detection; sentences with no covered terms or no qualifying candidate
    produce none. Passing a list as ``trace`` records, per sentence, the
    ranked candidates that retrieval returned.
    """
    _check_dictionary(index, dictionary)
    cfg = cfg or index.cfg
    detections: list[Detection] = []
    for sent, candidates in rank_sentences(susp_doc, index, dictionary, cfg,
                                           resources, abbreviations):
        if trace is not None:
            trace.append({
                "susp_doc": susp_doc.id,
                "ordinal": sent.ordinal,
                "susp_span": [sent.start, sent.end],
                "candidates": [
                    {"ref": c.ref, "doc": index.fragment(c.ref).doc_id, "score": c.score}
                    for c in candidates
                ],
            })
        per_candidate = []
        for cand in candidates:
            frag = index.fragment(cand.ref)
            verdicts = compare_fragments(sent, susp_doc.lang, frag, index.lang or susp_doc.lang,
                                         scorer, threshold, abbreviations)
            per_candidate.append((cand.ref, verdicts))
        best = select_best(per_candidate)
        if best is None:
            continue
        ref, verdict = best
        src = index.fragment(ref)
        detections.append(Detection(
            susp_doc=susp_doc.id,
            susp_span=(sent.start, sent.end),
            src_doc=src.doc_id,
            src_span=(verdict.candidate.start, verdict.candidate.end),
            score=verdict.score))
    if merge_adjacent:
        detections = _merge_adjacent(detections, index)
    config = {
        "dictionary": dictionary.fingerprint(),
        "retrieval": cfg.to_dict(),
        "threshold": _threshold_value(threshold),
        "scorer": scorer.scorer_id,
    }
    return Report(config=config, detections=detections)


def detect_corpus(susp_docs: Sequence[Document], index: InvertedIndex,
                  dictionary: ClusterDictionary, scorer: Scorer, threshold,
                  cfg: RetrievalConfig | None = None,
                  resources: Mapping[str, LangResources] | None = None,
                  abbreviations: frozenset[str] | None = None,
                  trace: list | None = None,
                  merge_adjacent: bool = False,
                  jobs: int = 1) -> Report:
    """Detect over many suspicious documents; detections keep corpus order."""
    _check_dictionary(index, dictionary)
    cfg = cfg or index.cfg

    def run_one(doc: Document) -> tuple[Report, list]:
        local_trace: list | None = [] if trace is not None else None
        rep = detect(doc, index, dictionary, scorer, threshold, cfg, resources,
                     abbreviations, local_trace, merge_adjacent)
        return rep, (local_trace or [])

    results: list[tuple[Report, list]]
    if jobs > 1 and len(susp_docs) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_one, susp_docs))
    else:
        results = [run_one(doc) for doc in susp_docs]

    merged = Report(detections=[])
    for rep, sub_trace in results:
        merged.config = rep.config
        merged.detections.extend(rep.detections)
        if trace is not None:
            trace.extend(sub_trace)
    if not results:
        merged.config = {
            "dictionary": dictionary.fingerprint(),
            "retrieval": cfg.to_dict(),
            "threshold": _threshold_value(threshold),
            "scorer": scorer.scorer_id,
        }
    return merged
