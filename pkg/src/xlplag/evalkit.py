"""Evaluation harness and synthetic benchmark generation.

Covers three measurement surfaces: ranked retrieval (recall@k),
character-level detection quality (precision/recall/F1 over suspicious
char spans), and pair classification metrics. Also builds synthetic
benchmarks by planting translated sentences into host documents, and
labeled pair datasets from parallel corpora.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .analysis import Scorer, _threshold_value, score_pairs
from .pipeline import Report
from .textproc import Document, SENTENCE, segment


@dataclass(frozen=True)
class GoldAnnotation:
    """One known plagiarism case: suspicious span copied from a source span."""
    susp_doc: str
    susp_span: tuple[int, int]
    src_doc: str
    src_span: tuple[int, int]

    def to_dict(self) -> dict:
        return {"susp_doc": self.susp_doc, "susp_span": list(self.susp_span),
                "src_doc": self.src_doc, "src_span": list(self.src_span)}

    @classmethod
    def from_dict(cls, obj: dict) -> "GoldAnnotation":
        return cls(susp_doc=str(obj["susp_doc"]),
                   susp_span=(int(obj["susp_span"][0]), int(obj["susp_span"][1])),
                   src_doc=str(obj["src_doc"]),
                   src_span=(int(obj["src_span"][0]), int(obj["src_span"][1])))


@dataclass(frozen=True)
class PairExample:
    text_a: str
    lang_a: str
    text_b: str
    lang_b: str
    label: int  # 1 = translation pair, 0 = unrelated


def read_gold(path) -> list[GoldAnnotation]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return [GoldAnnotation.from_dict(obj) for obj in data]


def write_gold(annotations: Iterable[GoldAnnotation], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([a.to_dict() for a in annotations], fh, ensure_ascii=False,
                  sort_keys=True, indent=2)
        fh.write("\n")


def read_parallel(path) -> list[tuple[str, str]]:
    """Read a two-column TSV of aligned (l1, l2) texts."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ValueError(f"{path}: line {lineno}: expected exactly 2 tab-separated columns")
            pairs.append((cols[0], cols[1]))
    return pairs


def write_parallel(pairs: Iterable[tuple[str, str]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for l1, l2 in pairs:
            fh.write(f"{l1}\t{l2}\n")


def read_pairs(path) -> list[PairExample]:
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            label = int(obj["label"])
            if label not in (0, 1):
                raise ValueError(f"{path}: line {lineno}: label must be 0 or 1")
            examples.append(PairExample(text_a=str(obj["a"]), lang_a=str(obj["la"]),
                                        text_b=str(obj["b"]), lang_b=str(obj["lb"]),
                                        label=label))
    return examples


def write_pairs(examples: Iterable[PairExample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in examples:
            fh.write(json.dumps({"a": e.text_a, "la": e.lang_a, "b": e.text_b,
                                 "lb": e.lang_b, "label": e.label},
                                ensure_ascii=False, sort_keys=True) + "\n")


def recall_at_k(results: Mapping[str, Sequence[str]],
                gold: Mapping[str, Iterable[str]], k: int) -> float:
    """Mean over queries of |top-k hits| / |relevant|. k=0 gives 0.0."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if not gold:
        raise ValueError("no queries with relevant documents")
    total = 0.0
    for qid in gold:
        relevant = set(gold[qid])
        if not relevant:
            raise ValueError(f"query {qid!r} has an empty relevant set")
        ranked = list(results.get(qid, ()))[:k]
        total += len(set(ranked) & relevant) / len(relevant)
    return total / len(gold)


def _span_chars(doc: str, span: tuple[int, int]) -> Iterable[tuple[str, int]]:
    return ((doc, off) for off in range(span[0], span[1]))


def char_pr(report: Report, gold: Sequence[GoldAnnotation],
            doc_lengths: Mapping[str, int] | None = None) -> dict:
    """Character-level micro precision/recall/F1 over suspicious documents.

    A detected char counts as a true positive when some gold annotation
    covers it with the same source document. Span bounds are validated
    against doc_lengths when given.
    """
    def check(doc: str, span: tuple[int, int], what: str) -> None:
        if span[0] > span[1] or span[0] < 0:
            raise ValueError(f"{what}: bad span {span} in {doc!r}")
        if doc_lengths is not None:
            if doc not in doc_lengths:
                raise ValueError(f"{what}: unknown document {doc!r}")
            if span[1] > doc_lengths[doc]:
                raise ValueError(f"{what}: span {span} exceeds length of {doc!r}")

    det_srcs: dict[tuple[str, int], set[str]] = {}
    for det in report.detections:
        check(det.susp_doc, det.susp_span, "detection")
        for key in _span_chars(det.susp_doc, det.susp_span):
            det_srcs.setdefault(key, set()).add(det.src_doc)
    gold_srcs: dict[tuple[str, int], set[str]] = {}
    for ann in gold:
        check(ann.susp_doc, ann.susp_span, "gold annotation")
        for key in _span_chars(ann.susp_doc, ann.susp_span):
            gold_srcs.setdefault(key, set()).add(ann.src_doc)

    tp = sum(1 for key, srcs in det_srcs.items()
             if key in gold_srcs and srcs & gold_srcs[key])
    precision = tp / len(det_srcs) if det_srcs else 0.0
    recall = tp / len(gold_srcs) if gold_srcs else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def pair_metrics(examples: Sequence[PairExample], scorer: Scorer, threshold) -> dict:
    """Binary precision/recall/F1 of thresholded scores against pair labels."""
    labels = {e.label for e in examples}
    if labels != {0, 1}:
        raise ValueError("pair metrics need both positive and negative examples")
    t = _threshold_value(threshold)
    scores = score_pairs(scorer, [(e.text_a, e.lang_a, e.text_b, e.lang_b) for e in examples])
    tp = fp = fn = 0
    for example, score in zip(examples, scores):
        positive = score >= t
        if positive and example.label == 1:
            tp += 1
        elif positive and example.label == 0:
            fp += 1
        elif not positive and example.label == 1:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def _overlaps(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def trace_retrieval_eval(trace_entries: Sequence[dict], gold: Sequence[GoldAnnotation],
                         ks: Sequence[int]) -> dict[int, float]:
    """Recall@k of retrieval traces against gold, per k.

    Queries are the traced sentences overlapping at least one gold span;
    a query's relevant set is the source documents of those annotations.
    Ranked lists keep the first occurrence of each candidate document.
    """
    results: dict[str, list[str]] = {}
    gold_map: dict[str, set[str]] = {}
    for entry in trace_entries:
        doc = entry["susp_doc"]
        span = (int(entry["susp_span"][0]), int(entry["susp_span"][1]))
        relevant = {ann.src_doc for ann in gold
                    if ann.susp_doc == doc and _overlaps(ann.susp_span, span)}
        if not relevant:
            continue
        qid = f"{doc}#{entry['ordinal']}"
        ranked: list[str] = []
        for cand in entry["candidates"]:
            if cand["doc"] not in ranked:
                ranked.append(cand["doc"])
        results[qid] = ranked
        gold_map[qid] = relevant
    if not gold_map:
        raise ValueError("no traced sentences overlap the gold annotations")
    return {k: recall_at_k(results, gold_map, k) for k in ks}


@dataclass
class GenConfig:
    seed: int = 0
    n_suspicious: int = 10
    n_reference: int = 20
    frac: tuple[float, float] = (0.2, 0.8)
    sources: tuple[int, int] = (1, 10)

    def validate(self) -> None:
        if self.n_suspicious < 1:
            raise ValueError("n_suspicious must be >= 1")
        if self.n_reference < 1:
            raise ValueError("n_reference must be >= 1")
        lo, hi = self.frac
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError("frac bounds must satisfy 0 <= lo <= hi <= 1")
        slo, shi = self.sources
        if not (1 <= slo <= shi):
            raise ValueError("sources bounds must satisfy 1 <= lo <= hi")


def generate_dataset(hosts: Sequence[Document], parallel: Sequence[tuple[str, str]],
                     gen: GenConfig, ref_lang: str = "en"
                     ) -> tuple[list[Document], list[Document], list[GoldAnnotation]]:
    """Plant translated sentences into host documents, with exact gold spans.

    Each suspicious document replaces random host sentences with l2 sides
    of unused parallel pairs until the plagiarized character fraction
    reaches a target drawn from gen.frac. The matching l1 originals are
    split among 1..sources reference documents as paragraphs; leftover
    parallel pairs pad the reference corpus with distractor documents.
    Fully deterministic for a given seed.
    """
    gen.validate()
    if gen.n_suspicious > len(hosts):
        raise ValueError(f"need {gen.n_suspicious} host documents, have {len(hosts)}")
    host_langs = {h.lang for h in hosts}
    if len(host_langs) != 1:
        raise ValueError(f"host corpus mixes languages: {sorted(host_langs)}")
    susp_lang = hosts[0].lang

    rng = random.Random(gen.seed)
    pool = list(range(len(parallel)))
    rng.shuffle(pool)
    cursor = 0

    def next_pair() -> tuple[str, str]:
        nonlocal cursor
        if cursor >= len(pool):
            raise ValueError("not enough parallel pairs for the requested corpus")
        l1, l2 = parallel[pool[cursor]]
        cursor += 1
        return l1, l2

    chosen_hosts = rng.sample(range(len(hosts)), gen.n_suspicious)
    susp_docs: list[Document] = []
    ref_docs: list[Document] = []
    gold: list[GoldAnnotation] = []

    for si, host_index in enumerate(chosen_hosts):
        host = hosts[host_index]
        sents = segment(host, SENTENCE)
        if not sents:
            raise ValueError(f"host document {host.id!r} has no sentences")
        target = rng.uniform(*gen.frac)
        order = list(range(len(sents)))
        rng.shuffle(order)
        total = len(host.text)
        plag = 0
        replaced: dict[int, tuple[str, str]] = {}
        for idx in order:
            if total > 0 and plag / total >= target:
                if replaced or target == 0.0:
                    break
            l1, l2 = next_pair()
            sent = sents[idx]
            total += len(l2) - len(sent.text)
            plag += len(l2)
            replaced[idx] = (l1, l2)

        susp_id = f"susp-{si:04d}"
        pieces = []
        spans: dict[int, tuple[int, int]] = {}
        pos = 0
        out_len = 0
        for sent in sents:
            gap = host.text[pos:sent.start]
            pieces.append(gap)
            out_len += len(gap)
            if sent.ordinal in replaced:
                l2 = replaced[sent.ordinal][1]
                spans[sent.ordinal] = (out_len, out_len + len(l2))
                pieces.append(l2)
                out_len += len(l2)
            else:
                pieces.append(sent.text)
                out_len += len(sent.text)
            pos = sent.end
        pieces.append(host.text[pos:])
        susp_docs.append(Document(id=susp_id, lang=susp_lang, text="".join(pieces)))

        rep_indices = sorted(replaced)
        if rep_indices:
            n_rep = len(rep_indices)
            m = rng.randint(min(gen.sources[0], n_rep), min(gen.sources[1], n_rep))
            shuffled = rep_indices[:]
            rng.shuffle(shuffled)
            cuts = sorted(rng.sample(range(1, n_rep), m - 1)) if m > 1 else []
            bounds = [0] + cuts + [n_rep]
            for a, b in zip(bounds, bounds[1:]):
                chunk = sorted(shuffled[a:b])
                paras = [replaced[i][0] for i in chunk]
                ref_id = f"ref-{len(ref_docs):04d}"
                offset = 0
                for i, para in zip(chunk, paras):
                    gold.append(GoldAnnotation(susp_doc=susp_id, susp_span=spans[i],
                                               src_doc=ref_id,
                                               src_span=(offset, offset + len(para))))
                    offset += len(para) + 2  # the "\n\n" joiner
                ref_docs.append(Document(id=ref_id, lang=ref_lang, text="\n\n".join(paras)))

    if len(ref_docs) > gen.n_reference:
        raise ValueError(f"n_reference={gen.n_reference} too small; "
                         f"sources already produced {len(ref_docs)} documents")
    while len(ref_docs) < gen.n_reference:
        k = rng.randint(1, 3)
        paras = [next_pair()[0] for _ in range(k)]
        ref_docs.append(Document(id=f"ref-{len(ref_docs):04d}", lang=ref_lang,
                                 text="\n\n".join(paras)))
    return susp_docs, ref_docs, gold


def build_pair_dataset(parallel: Sequence[tuple[str, str]], negatives_per_positive: int,
                       seed: int, lang_a: str, lang_b: str) -> list[PairExample]:
    """Label parallel pairs positive and crossed pairs negative.

    Negatives pair each l1 side with l2 sides of other rows, never
    duplicating a pair. Deterministic for a given seed.
    """
    if negatives_per_positive < 0:
        raise ValueError("negatives_per_positive must be >= 0")
    seen = set()
    pairs = []
    for l1, l2 in parallel:
        if (l1, l2) in seen:
            continue
        seen.add((l1, l2))
        pairs.append((l1, l2))
    if len(pairs) < 2 and negatives_per_positive > 0:
        raise ValueError("need at least 2 distinct parallel pairs to draw negatives")

    rng = random.Random(seed)
    examples = [PairExample(text_a=l1, lang_a=lang_a, text_b=l2, lang_b=lang_b, label=1)
                for l1, l2 in pairs]
    emitted = {(l1, l2) for l1, l2 in pairs}
    for i, (l1, _l2) in enumerate(pairs):
        candidates = [j for j in range(len(pairs))
                      if j != i and (l1, pairs[j][1]) not in emitted]
        if len(candidates) < negatives_per_positive:
            raise ValueError(f"cannot draw {negatives_per_positive} distinct negatives "
                             f"for pair {i}")
        for j in rng.sample(candidates, negatives_per_positive):
            neg = (l1, pairs[j][1])
            emitted.add(neg)
            examples.append(PairExample(text_a=neg[0], lang_a=lang_a,
                                        text_b=neg[1], lang_b=lang_b, label=0))
    return examples
