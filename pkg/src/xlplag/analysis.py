"""Detailed analysis: translation-pair scoring and threshold calibration.

Retrieval hands over candidate paragraphs; this stage splits them into
sentences, scores (suspicious sentence, candidate sentence) pairs with a
pluggable scorer, and keeps the best candidate whose top pair clears the
decision threshold. The threshold itself is calibrated on labeled pairs
by maximizing F-beta with a precision-heavy beta.
"""

from __future__ import annotations

import json
import math
import socket
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .textproc import Document, Fragment, LangResources, SENTENCE, conceptualize, normalize_text, segment
from .thesaurus import ClusterDictionary

Pair = tuple[str, str, str, str]  # text_a, lang_a, text_b, lang_b


class Scorer:
    """Scores text pairs with values in [0, 1]; higher means more likely a translation."""

    scorer_id = "base"

    def score_batch(self, pairs: Sequence[Pair]) -> list[float]:
        raise NotImplementedError


class ScorerTransportError(RuntimeError):
    """Remote scorer failed; carries the ids of unanswered requests."""

    def __init__(self, message: str, failed_ids: Sequence[int] = ()):
        super().__init__(message)
        self.failed_ids = tuple(failed_ids)


def score_pairs(scorer: Scorer, pairs: Sequence[Pair]) -> list[float]:
    """Run the scorer and validate its contract (one score per pair, in [0, 1])."""
    scores = scorer.score_batch(pairs)
    if len(scores) != len(pairs):
        raise ValueError(f"scorer returned {len(scores)} scores for {len(pairs)} pairs")
    for s in scores:
        if not (isinstance(s, (int, float)) and not math.isnan(s) and 0.0 <= s <= 1.0):
            raise ValueError(f"scorer returned out-of-range score {s!r}")
    return [float(s) for s in scores]


class OverlapScorer(Scorer):
    """Jaccard overlap of the two texts' concept term sets.

    A cheap baseline: translations of the same sentence land on the same
    clusters, so their term sets overlap heavily. Two empty sets score 0.
    """

    scorer_id = "overlap"

    def __init__(self, dictionary: ClusterDictionary,
                 resources: Mapping[str, LangResources] | None = None):
        self.dictionary = dictionary
        self.resources = dict(resources or {})

    def _term_set(self, text: str, lang: str) -> frozenset[str]:
        res = self.resources.get(lang) or LangResources.empty(lang)
        lemmas = normalize_text(text, res)
        return frozenset(conceptualize(lemmas, lang, self.dictionary).terms)

    def score_batch(self, pairs: Sequence[Pair]) -> list[float]:
        scores = []
        for text_a, lang_a, text_b, lang_b in pairs:
            set_a = self._term_set(text_a, lang_a)
            set_b = self._term_set(text_b, lang_b)
            union = set_a | set_b
            if not union:
                scores.append(0.0)
            else:
                scores.append(len(set_a & set_b) / len(union))
        return scores


class RemoteScorer(Scorer):
    """Client for a line-delimited JSON scoring service over TCP.

    Sends {"id", "a", "la", "b", "lb"} requests, one per line, and reads
    {"id", "score"} responses until every id is answered. Responses may
    arrive in any order.
    """

    def __init__(self, address: str, timeout: float = 10.0, batch_size: int = 32):
        host, sep, port = address.rpartition(":")
        if not sep or not host:
            raise ValueError(f"bad scorer address {address!r}; expected host:port")
        self.host = host
        self.port = int(port)
        self.timeout = timeout
        self.batch_size = max(1, batch_size)
        self.scorer_id = f"remote:{address}"

    def _score_chunk(self, pairs: Sequence[Pair], base_id: int) -> list[float]:
        ids = list(range(base_id, base_id + len(pairs)))
        try:
            with socket.create_connection((self.host, self.port), timeout=self.timeout) as sock:
                sock.settimeout(self.timeout)
                payload = "".join(
                    json.dumps({"id": i, "a": a, "la": la, "b": b, "lb": lb},
                               ensure_ascii=False) + "\n"
                    for i, (a, la, b, lb) in zip(ids, pairs)
                )
                sock.sendall(payload.encode("utf-8"))
                sock.shutdown(socket.SHUT_WR)
                reader = sock.makefile("r", encoding="utf-8")
                answers: dict[int, float] = {}
                pending = set(ids)
                for line in reader:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    rid = int(obj["id"])
                    if rid in pending:
                        answers[rid] = float(obj["score"])
                        pending.discard(rid)
                    if not pending:
                        break
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            raise ScorerTransportError(f"scorer at {self.host}:{self.port} failed: {exc}",
                                       failed_ids=ids) from exc
        if pending:
            raise ScorerTransportError(
                f"scorer at {self.host}:{self.port} left {len(pending)} requests unanswered",
                failed_ids=sorted(pending))
        return [answers[i] for i in ids]

    def score_batch(self, pairs: Sequence[Pair]) -> list[float]:
        scores: list[float] = []
        for offset in range(0, len(pairs), self.batch_size):
            chunk = pairs[offset:offset + self.batch_size]
            scores.extend(self._score_chunk(chunk, base_id=offset))
        return scores


@dataclass(frozen=True)
class Threshold:
    value: float
    beta: float = 0.25


@dataclass(frozen=True)
class PairVerdict:
    """One scored (suspicious sentence, candidate sentence) pair."""
    susp: Fragment
    candidate: Fragment
    score: float
    is_translation: bool


def _threshold_value(threshold) -> float:
    if isinstance(threshold, Threshold):
        return threshold.value
    return float(threshold)


def compare_fragments(susp: Fragment, susp_lang: str, candidate: Fragment,
                      cand_lang: str, scorer: Scorer, threshold,
                      abbreviations: frozenset[str] | None = None) -> list[PairVerdict]:
    """Score the suspicious sentence against each sentence of the candidate.

    Candidate sentence spans are rebased into source-document coordinates.
    A candidate with no sentences yields no verdicts.
    """
    shell = Document(id=candidate.doc_id, lang=cand_lang, text=candidate.text)
    sentences = segment(shell, SENTENCE, abbreviations)
    if not sentences:
        return []
    rebased = [
        Fragment(doc_id=candidate.doc_id, kind=SENTENCE, ordinal=s.ordinal,
                 start=candidate.start + s.start, end=candidate.start + s.end,
                 text=s.text)
        for s in sentences
    ]
    pairs = [(susp.text, susp_lang, s.text, cand_lang) for s in rebased]
    scores = score_pairs(scorer, pairs)
    t = _threshold_value(threshold)
    return [PairVerdict(susp=susp, candidate=s, score=sc, is_translation=sc >= t)
            for s, sc in zip(rebased, scores)]


def best_pair(verdicts: Sequence[PairVerdict]) -> PairVerdict | None:
    """Max-scoring pair decides the fragment verdict; earliest sentence wins ties."""
    best = None
    for v in verdicts:
        if best is None or v.score > best.score:
            best = v
    return best


def select_best(per_candidate: Sequence[tuple[int, Sequence[PairVerdict]]]
                ) -> tuple[int, PairVerdict] | None:
    """Among candidates whose best pair is a translation, keep the top score.

    Ties go to the smaller fragment ref. Returns None when nothing clears
    the threshold.
    """
    chosen: tuple[int, PairVerdict] | None = None
    for ref, verdicts in per_candidate:
        top = best_pair(verdicts)
        if top is None or not top.is_translation:
            continue
        if chosen is None or top.score > chosen[1].score or \
                (top.score == chosen[1].score and ref < chosen[0]):
            chosen = (ref, top)
    return chosen


def f_beta(precision: float, recall: float, beta: float) -> float:
    b2 = beta * beta
    denom = b2 * precision + recall
    if denom == 0.0:
        return 0.0
    return (1.0 + b2) * precision * recall / denom


def _confusion(scored: Sequence[tuple[float, bool]], threshold: float) -> tuple[int, int, int]:
    tp = fp = fn = 0
    for score, label in scored:
        positive = score >= threshold
        if positive and label:
            tp += 1
        elif positive and not label:
            fp += 1
        elif not positive and label:
            fn += 1
    return tp, fp, fn


def f_beta_at(scored: Sequence[tuple[float, bool]], threshold: float, beta: float) -> float:
    """F-beta of predicting positive at score >= threshold on labeled scores."""
    tp, fp, fn = _confusion(scored, threshold)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return f_beta(precision, recall, beta)


def calibrate(dev_pairs: Sequence[tuple[float, bool]], beta: float = 0.25) -> Threshold:
    """Pick the decision threshold maximizing F-beta on labeled scores.

    Candidate thresholds are 0, 1, and midpoints between adjacent distinct
    scores; a fragment is positive when score >= threshold. Ties prefer
    the largest threshold. Requires both classes in the dev set.
    """
    labels = {label for _score, label in dev_pairs}
    if labels != {True, False}:
        raise ValueError("calibration needs both positive and negative examples")
    for score, _label in dev_pairs:
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"score {score!r} outside [0, 1]")
    distinct = sorted({score for score, _label in dev_pairs})
    candidates = {0.0, 1.0}
    for lo, hi in zip(distinct, distinct[1:]):
        candidates.add((lo + hi) / 2.0)
    best_t = None
    best_f = -1.0
    for t in sorted(candidates):
        f = f_beta_at(dev_pairs, t, beta)
        if f > best_f or (f == best_f and (best_t is None or t > best_t)):
            best_f = f
            best_t = t
    return Threshold(value=best_t, beta=beta)
