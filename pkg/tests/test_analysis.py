"""Pair scoring, best-candidate selection, and threshold calibration."""

import io
import json
import random
import socket
import threading

import pytest

from xlplag.analysis import (OverlapScorer, PairVerdict, RemoteScorer, Scorer,
                             ScorerTransportError, Threshold, best_pair,
                             calibrate, compare_fragments, f_beta, f_beta_at,
                             score_pairs, select_best)
from xlplag.textproc import Fragment, LangResources, SENTENCE
from xlplag.thesaurus import build_clusters, load_senses

SENSES = """\
c1\ten\tone\tNOUN\t0
c1\txx\tuno\tNOUN\t
c2\ten\ttwo\tNOUN\t0
c3\ten\tthree\tNOUN\t0
c3\txx\ttres\tNOUN\t
"""


@pytest.fixture(scope="module")
def dictionary():
    records = load_senses(io.BytesIO(SENSES.encode()))
    return build_clusters(records, mode="top1")


class ScriptedScorer(Scorer):
    """Returns canned scores keyed by (text_a, text_b)."""

    scorer_id = "scripted"

    def __init__(self, table, default=0.0):
        self.table = table
        self.default = default

    def score_batch(self, pairs):
        return [self.table.get((a, b), self.default) for a, _la, b, _lb in pairs]


class BrokenScorer(Scorer):
    scorer_id = "broken"

    def __init__(self, scores):
        self.scores = scores

    def score_batch(self, pairs):
        return self.scores


def sent(text, doc_id="susp", start=0):
    return Fragment(doc_id=doc_id, kind=SENTENCE, ordinal=0,
                    start=start, end=start + len(text), text=text)


class TestScorePairs:
    def test_wrong_count_rejected(self):
        with pytest.raises(ValueError):
            score_pairs(BrokenScorer([0.5]), [("a", "en", "b", "xx"),
                                              ("c", "en", "d", "xx")])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            score_pairs(BrokenScorer([1.5]), [("a", "en", "b", "xx")])

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            score_pairs(BrokenScorer([float("nan")]), [("a", "en", "b", "xx")])

    def test_ints_coerced(self):
        scores = score_pairs(BrokenScorer([1, 0]), [("a", "en", "b", "xx")] * 2)
        assert scores == [1.0, 0.0]
        assert all(isinstance(s, float) for s in scores)


class TestOverlapScorer:
    def test_identical_concept_sets(self, dictionary):
        scorer = OverlapScorer(dictionary)
        assert scorer.score_batch([("one three", "en", "uno tres", "xx")]) == [1.0]

    def test_disjoint_sets(self, dictionary):
        scorer = OverlapScorer(dictionary)
        assert scorer.score_batch([("two", "en", "tres", "xx")]) == [0.0]

    def test_one_of_three_shared(self, dictionary):
        # {c1, c2} vs {c1, c3}
        scorer = OverlapScorer(dictionary)
        assert scorer.score_batch([("one two", "en", "uno tres", "xx")]) == \
            [pytest.approx(1 / 3)]

    def test_both_empty(self, dictionary):
        scorer = OverlapScorer(dictionary)
        assert scorer.score_batch([("", "en", "  ", "xx")]) == [0.0]

    def test_unmapped_words_pass_through(self, dictionary):
        scorer = OverlapScorer(dictionary)
        assert scorer.score_batch([("zzz", "en", "zzz", "xx")]) == [1.0]

    def test_stopwords_removed_first(self, dictionary):
        res = {"en": LangResources(lang="en", stopwords=frozenset({"the"}),
                                   lemma_map={})}
        scorer = OverlapScorer(dictionary, resources=res)
        assert scorer.score_batch([("the one", "en", "uno", "xx")]) == [1.0]

    def test_symmetry(self, dictionary):
        scorer = OverlapScorer(dictionary)
        rng = random.Random(307)
        vocab = ["one", "two", "three", "uno", "tres", "zzz"]
        for _ in range(50):
            a = " ".join(rng.choices(vocab, k=rng.randint(0, 5)))
            b = " ".join(rng.choices(vocab, k=rng.randint(0, 5)))
            lang = rng.choice(["en", "xx"])
            fwd = scorer.score_batch([(a, lang, b, lang)])[0]
            rev = scorer.score_batch([(b, lang, a, lang)])[0]
            assert fwd == rev


class TestCompareFragments:
    def test_single_sentence_over_threshold(self):
        susp = sent("Query here.")
        cand = Fragment(doc_id="ref", kind="paragraph", ordinal=0,
                        start=40, end=51, text="Match here.")
        scorer = ScriptedScorer({("Query here.", "Match here."): 0.9})
        verdicts = compare_fragments(susp, "xx", cand, "en", scorer, 0.5)
        assert len(verdicts) == 1
        assert verdicts[0].is_translation
        assert verdicts[0].score == 0.9

    def test_best_sentence_decides(self):
        susp = sent("Query here.")
        text = "First one. Second two. Third three."
        cand = Fragment(doc_id="ref", kind="paragraph", ordinal=0,
                        start=100, end=100 + len(text), text=text)
        scorer = ScriptedScorer({
            ("Query here.", "First one."): 0.3,
            ("Query here.", "Second two."): 0.9,
            ("Query here.", "Third three."): 0.6,
        })
        verdicts = compare_fragments(susp, "xx", cand, "en", scorer, 0.5)
        assert len(verdicts) == 3
        top = best_pair(verdicts)
        assert top.score == 0.9
        assert top.is_translation
        assert top.candidate.text == "Second two."

    def test_all_below_threshold(self):
        susp = sent("Query here.")
        cand = Fragment(doc_id="ref", kind="paragraph", ordinal=0,
                        start=0, end=18, text="Only match. Here.")
        verdicts = compare_fragments(susp, "xx", cand, "en",
                                     ScriptedScorer({}, default=0.2), 0.5)
        assert verdicts and not any(v.is_translation for v in verdicts)
        assert best_pair(verdicts).is_translation is False

    def test_spans_rebased_to_source_document(self):
        text = "First one. Second two."
        cand = Fragment(doc_id="ref", kind="paragraph", ordinal=3,
                        start=100, end=100 + len(text), text=text)
        verdicts = compare_fragments(sent("Q."), "xx", cand, "en",
                                     ScriptedScorer({}, default=0.1), 0.5)
        assert [v.candidate.char_span for v in verdicts] == [(100, 110), (111, 122)]
        assert all(v.candidate.doc_id == "ref" for v in verdicts)

    def test_whitespace_candidate_yields_nothing(self):
        cand = Fragment(doc_id="ref", kind="paragraph", ordinal=0,
                        start=0, end=3, text="   ")
        assert compare_fragments(sent("Q."), "xx", cand, "en",
                                 ScriptedScorer({}), 0.5) == []

    def test_threshold_object_accepted(self):
        cand = Fragment(doc_id="ref", kind="paragraph", ordinal=0,
                        start=0, end=5, text="Hit.")
        verdicts = compare_fragments(sent("Q."), "xx", cand, "en",
                                     ScriptedScorer({}, default=0.7),
                                     Threshold(value=0.5))
        assert verdicts[0].is_translation


def verdict(score, positive, ref_ordinal=0):
    f = Fragment(doc_id="ref", kind=SENTENCE, ordinal=ref_ordinal,
                 start=0, end=1, text="x")
    return PairVerdict(susp=sent("q"), candidate=f, score=score,
                       is_translation=positive)


class TestSelectBest:
    def test_highest_positive_wins(self):
        picked = select_best([(0, [verdict(0.7, True)]),
                              (1, [verdict(0.9, True)])])
        assert picked[0] == 1
        assert picked[1].score == 0.9

    def test_no_positives(self):
        assert select_best([(0, [verdict(0.9, False)]),
                            (1, [verdict(0.4, False)])]) is None

    def test_tie_takes_smaller_ref(self):
        picked = select_best([(7, [verdict(0.8, True)]),
                              (3, [verdict(0.8, True)])])
        assert picked[0] == 3

    def test_empty_verdict_lists_skipped(self):
        assert select_best([(0, []), (1, [])]) is None
        picked = select_best([(0, []), (1, [verdict(0.6, True)])])
        assert picked[0] == 1

    def test_exhaustive_two_candidates(self):
        # Brute-force every score/label combination on a small grid.
        grid = [0.2, 0.5, 0.8]
        for s0 in grid:
            for s1 in grid:
                for p0 in (False, True):
                    for p1 in (False, True):
                        per = [(0, [verdict(s0, p0)]), (1, [verdict(s1, p1)])]
                        got = select_best(per)
                        want = None
                        if p0 and (not p1 or s0 >= s1):
                            want = 0
                        elif p1:
                            want = 1
                        if want is None:
                            assert got is None
                        else:
                            assert got[0] == want

    def test_winner_dominates_other_positives(self):
        rng = random.Random(311)
        for _ in range(60):
            per = []
            for ref in range(rng.randint(1, 6)):
                vs = [verdict(round(rng.random(), 3), rng.random() < 0.5,
                              ref_ordinal=j)
                      for j in range(rng.randint(1, 4))]
                per.append((ref, vs))
            got = select_best(per)
            positives = [best_pair(vs).score for _ref, vs in per
                         if best_pair(vs) and best_pair(vs).is_translation]
            if got is None:
                assert not positives
            else:
                assert all(got[1].score >= s for s in positives)


class TestFBeta:
    def test_perfect(self):
        for beta in (0.25, 0.5, 1.0, 2.0):
            assert f_beta(1.0, 1.0, beta) == pytest.approx(1.0)

    def test_pinned_value(self):
        got = f_beta(0.8, 0.5, 0.25)
        assert got == pytest.approx(0.425 / 0.55, abs=1e-12)
        assert got == pytest.approx(0.7727, abs=5e-5)

    def test_zero_denominator(self):
        assert f_beta(0.0, 0.0, 0.25) == 0.0

    def test_beta_below_one_weights_precision(self):
        assert f_beta(0.9, 0.3, 0.25) > f_beta(0.3, 0.9, 0.25)


class TestCalibrate:
    def test_midpoint_between_classes(self):
        t = calibrate([(0.9, True), (0.8, True), (0.7, False)])
        assert t.value == pytest.approx(0.75)
        assert t.beta == 0.25

    def test_tie_prefers_largest_threshold(self):
        # 0.75 and 1.0 both separate perfectly; the larger one is returned.
        dev = [(1.0, True), (0.5, False)]
        t = calibrate(dev)
        assert f_beta_at(dev, 0.75, 0.25) == f_beta_at(dev, 1.0, 0.25) == 1.0
        assert t.value == 1.0

    def test_one_class_rejected(self):
        with pytest.raises(ValueError):
            calibrate([(0.9, True), (0.1, True)])
        with pytest.raises(ValueError):
            calibrate([(0.9, False)])

    def test_out_of_range_score_rejected(self):
        with pytest.raises(ValueError):
            calibrate([(1.2, True), (0.1, False)])

    def test_beta_recorded(self):
        t = calibrate([(0.9, True), (0.1, False)], beta=1.0)
        assert t.beta == 1.0

    def test_never_beaten_by_grid_scan(self):
        rng = random.Random(313)
        for _ in range(80):
            n = rng.randint(2, 30)
            dev = [(round(rng.random(), 2), rng.random() < 0.5) for _ in range(n)]
            labels = {l for _s, l in dev}
            if labels != {True, False}:
                continue
            t = calibrate(dev)
            best = f_beta_at(dev, t.value, 0.25)
            for i in range(0, 1001):
                assert best >= f_beta_at(dev, i / 1000.0, 0.25) - 1e-12

    def test_invariant_under_monotone_transform(self):
        rng = random.Random(317)
        for _ in range(40):
            n = rng.randint(2, 20)
            dev = [(rng.random(), rng.random() < 0.5) for _ in range(n)]
            if {l for _s, l in dev} != {True, False}:
                continue
            a = rng.uniform(0.2, 3.0)
            mapped = [(s ** a, l) for s, l in dev]
            t1 = calibrate(dev)
            t2 = calibrate(mapped)
            for (s, _l), (m, _l2) in zip(dev, mapped):
                assert (s >= t1.value) == (m >= t2.value)


class NdjsonServer(threading.Thread):
    """One-shot scoring service: reads a full request batch, then replies."""

    def __init__(self, handler):
        super().__init__(daemon=True)
        self.handler = handler
        self.sock = socket.socket()
        self.sock.bind(("127.0.0.1", 0))
        self.sock.listen(8)
        self.port = self.sock.getsockname()[1]
        self.connections = 0
        self._halt = threading.Event()

    def run(self):
        self.sock.settimeout(0.05)
        while not self._halt.is_set():
            try:
                conn, _addr = self.sock.accept()
            except socket.timeout:
                continue
            self.connections += 1
            with conn:
                conn.settimeout(2.0)
                data = b""
                try:
                    while True:
                        chunk = conn.recv(65536)
                        if not chunk:
                            break
                        data += chunk
                    requests = [json.loads(line) for line in
                                data.decode("utf-8").splitlines() if line.strip()]
                    for line in self.handler(requests):
                        conn.sendall(line.encode("utf-8") + b"\n")
                except OSError:
                    pass

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self._halt.set()
        self.join(timeout=2.0)
        self.sock.close()


def echo_handler(requests):
    """Scores 1.0 for identical texts, 0.25 otherwise; replies out of order."""
    shuffled = list(requests)
    random.Random(0).shuffle(shuffled)
    out = ['{"id": 999999, "score": 0.5}', ""]  # unknown id and blank line
    for req in shuffled:
        score = 1.0 if req["a"] == req["b"] else 0.25
        out.append(json.dumps({"id": req["id"], "score": score, "extra": "x"}))
    return out


class TestRemoteScorer:
    def test_scores_reassembled_in_request_order(self):
        with NdjsonServer(echo_handler) as server:
            scorer = RemoteScorer(f"127.0.0.1:{server.port}", timeout=5.0)
            pairs = [("same", "en", "same", "xx"),
                     ("left", "en", "right", "xx"),
                     ("both", "en", "both", "xx")]
            assert scorer.score_batch(pairs) == [1.0, 0.25, 1.0]

    def test_batches_open_separate_connections(self):
        with NdjsonServer(echo_handler) as server:
            scorer = RemoteScorer(f"127.0.0.1:{server.port}", timeout=5.0,
                                  batch_size=2)
            pairs = [(f"p{i}", "en", f"p{i}", "xx") for i in range(5)]
            assert scorer.score_batch(pairs) == [1.0] * 5
            assert server.connections == 3

    def test_unanswered_ids_reported(self):
        def drop_odd(requests):
            return [json.dumps({"id": r["id"], "score": 0.5})
                    for r in requests if r["id"] % 2 == 0]

        with NdjsonServer(drop_odd) as server:
            scorer = RemoteScorer(f"127.0.0.1:{server.port}", timeout=5.0)
            pairs = [(f"p{i}", "en", "q", "xx") for i in range(4)]
            with pytest.raises(ScorerTransportError) as err:
                scorer.score_batch(pairs)
            assert err.value.failed_ids == (1, 3)

    def test_garbage_response_is_transport_error(self):
        with NdjsonServer(lambda reqs: ["this is not json"]) as server:
            scorer = RemoteScorer(f"127.0.0.1:{server.port}", timeout=5.0)
            with pytest.raises(ScorerTransportError) as err:
                scorer.score_batch([("a", "en", "b", "xx")])
            assert err.value.failed_ids == (0,)

    def test_connection_refused_is_transport_error(self):
        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
        probe.close()
        scorer = RemoteScorer(f"127.0.0.1:{port}", timeout=2.0)
        with pytest.raises(ScorerTransportError):
            scorer.score_batch([("a", "en", "b", "xx")])

    def test_bad_address_rejected_up_front(self):
        with pytest.raises(ValueError):
            RemoteScorer("no-port-here")
