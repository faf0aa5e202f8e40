"""Command line front end.

Subcommands cover the whole workflow: build and augment cluster
dictionaries, index a reference corpus, scan suspicious documents,
calibrate thresholds, evaluate reports/traces/pair sets, measure
coverage, and generate synthetic benchmarks.

Every command that writes outputs also writes a manifest JSON recording
the subcommand, argv, and resolved configuration; `rerun --manifest`
replays it. Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .analysis import OverlapScorer, RemoteScorer, Scorer, calibrate, f_beta_at, score_pairs
from .evalkit import (GenConfig, build_pair_dataset, char_pr, generate_dataset,
                      pair_metrics, read_gold, read_pairs, read_parallel,
                      trace_retrieval_eval, write_gold, write_pairs)
from .index import InvertedIndex, RetrievalConfig
from .pipeline import (DictionaryMismatchError, detect_corpus, index_reference,
                       read_report, write_report)
from .textproc import (Document, LangResources, load_lemma_map, load_stopwords,
                       normalize_text, read_corpus, write_corpus)
from .thesaurus import (MODES, ClusterDictionary, augment_clusters, build_clusters,
                        coverage, load_senses, load_translations)


class UsageError(ValueError):
    """Bad invocation or inconsistent inputs; maps to exit code 2."""


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")


def _write_manifest(path, subcommand: str, argv: list[str], config: dict) -> None:
    _write_json({
        "tool": "xlplag",
        "version": __version__,
        "subcommand": subcommand,
        "argv": argv,
        "config": config,
    }, path)


def _manifest_path(out_path: str) -> str:
    return out_path + ".manifest.json"


def _progress(enabled: bool, **fields) -> None:
    if enabled:
        print(json.dumps(fields, ensure_ascii=False, sort_keys=True), file=sys.stderr, flush=True)


def _parse_lang_paths(items: list[str] | None, what: str) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for item in items or []:
        lang, sep, path = item.partition("=")
        if not sep or not lang or not path:
            raise UsageError(f"bad {what} argument {item!r}; expected LANG=PATH")
        mapping[lang.lower()] = path
    return mapping


def _load_resources(stopword_args: list[str] | None, lemma_args: list[str] | None
                    ) -> dict[str, LangResources]:
    stop_paths = _parse_lang_paths(stopword_args, "--stopwords")
    lemma_paths = _parse_lang_paths(lemma_args, "--lemmas")
    resources: dict[str, LangResources] = {}
    for lang in sorted(set(stop_paths) | set(lemma_paths)):
        resources[lang] = LangResources(
            lang=lang,
            stopwords=load_stopwords(stop_paths[lang]) if lang in stop_paths else frozenset(),
            lemma_map=load_lemma_map(lemma_paths[lang]) if lang in lemma_paths else None)
    return resources


def _load_dictionary(path: str) -> ClusterDictionary:
    with open(path, "rb") as fh:
        return ClusterDictionary.from_tsv(fh)


def _make_scorer(spec: str, dictionary: ClusterDictionary,
                 resources: dict[str, LangResources]) -> Scorer:
    if spec == "overlap":
        return OverlapScorer(dictionary, resources)
    if spec.startswith("remote:"):
        return RemoteScorer(spec[len("remote:"):])
    raise UsageError(f"unknown scorer {spec!r}; use 'overlap' or 'remote:HOST:PORT'")


def _parse_range(text: str, what: str, cast):
    lo, sep, hi = text.partition(":")
    if not sep:
        raise UsageError(f"bad {what} {text!r}; expected LO:HI")
    try:
        return cast(lo), cast(hi)
    except ValueError:
        raise UsageError(f"bad {what} {text!r}; expected numeric LO:HI") from None


def cmd_build_clusters(args, argv) -> int:
    counters: dict[str, int] = {}
    records = []
    for path in args.senses:
        with open(path, "rb") as fh:
            records.extend(load_senses(fh, counters))
    dictionary = build_clusters(records, args.mode, counters)
    for path in args.translations or []:
        with open(path, "rb") as fh:
            table = load_translations(fh, counters)
        dictionary = augment_clusters(dictionary, table, counters)
    dictionary.write_tsv(args.out)
    _write_manifest(_manifest_path(args.out), "build-clusters", argv, {
        "mode": args.mode,
        "senses": list(args.senses),
        "translations": list(args.translations or []),
        "counters": counters,
        "fingerprint": dictionary.fingerprint(),
    })
    print(f"wrote {args.out}: {len(dictionary)} entries, "
          f"{len(dictionary.cluster_ids())} clusters")
    return 0


def cmd_index(args, argv) -> int:
    dictionary = _load_dictionary(args.dict)
    resources = _load_resources(args.stopwords, args.lemmas)
    cfg = RetrievalConfig(k1=args.k1, b=args.b, k=args.k, idf=args.idf)
    docs = read_corpus(args.corpus)
    _progress(args.progress, event="start", subcommand="index", docs=len(docs))
    idx = index_reference(docs, dictionary, cfg, resources)
    idx.save(args.out)
    _write_manifest(_manifest_path(args.out), "index", argv, {
        "corpus": args.corpus,
        "dict": args.dict,
        "dict_fingerprint": dictionary.fingerprint(),
        "retrieval": cfg.to_dict(),
        "fragments": idx.n,
    })
    _progress(args.progress, event="done", subcommand="index", fragments=idx.n)
    print(f"wrote {args.out}: {idx.n} fragments from {len(docs)} documents")
    return 0


def cmd_detect(args, argv) -> int:
    dictionary = _load_dictionary(args.dict)
    resources = _load_resources(args.stopwords, args.lemmas)
    index = InvertedIndex.load(args.index)
    cfg = index.cfg if args.k is None else RetrievalConfig(
        k1=index.cfg.k1, b=index.cfg.b, k=args.k, idf=index.cfg.idf)
    scorer = _make_scorer(args.scorer, dictionary, resources)
    susp_docs = read_corpus(args.susp)
    _progress(args.progress, event="start", subcommand="detect", docs=len(susp_docs))

    trace: list | None = [] if (args.trace or args.retrieval_only) else None
    if args.retrieval_only:
        from .pipeline import rank_sentences, Report
        report = Report(config={
            "dictionary": dictionary.fingerprint(),
            "retrieval": cfg.to_dict(),
            "threshold": args.threshold,
            "scorer": "none",
        })
        for doc in susp_docs:
            for sent, candidates in rank_sentences(doc, index, dictionary, cfg, resources):
                trace.append({
                    "susp_doc": doc.id,
                    "ordinal": sent.ordinal,
                    "susp_span": [sent.start, sent.end],
                    "candidates": [
                        {"ref": c.ref, "doc": index.fragment(c.ref).doc_id, "score": c.score}
                        for c in candidates
                    ],
                })
            _progress(args.progress, event="doc", id=doc.id)
    else:
        report = detect_corpus(susp_docs, index, dictionary, scorer, args.threshold,
                               cfg, resources, trace=trace,
                               merge_adjacent=args.merge_adjacent, jobs=args.jobs)
    write_report(report, args.out)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for entry in trace:
                fh.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")
    _write_manifest(_manifest_path(args.out), "detect", argv, {
        "susp": args.susp,
        "index": args.index,
        "dict": args.dict,
        "dict_fingerprint": dictionary.fingerprint(),
        "retrieval": cfg.to_dict(),
        "threshold": args.threshold,
        "scorer": args.scorer,
        "retrieval_only": args.retrieval_only,
        "merge_adjacent": args.merge_adjacent,
    })
    _progress(args.progress, event="done", subcommand="detect",
              detections=len(report.detections))
    print(f"wrote {args.out}: {len(report.detections)} detections "
          f"from {len(susp_docs)} suspicious documents")
    return 0


def _maybe_figure(flag: bool, render, out_path: str, suffix: str) -> list[str]:
    if not flag:
        return []
    base, _ext = os.path.splitext(out_path)
    fig_path = f"{base}.{suffix}.png"
    render(fig_path)
    return [fig_path]


def cmd_eval(args, argv) -> int:
    from . import figures
    written: list[str] = []
    if args.task == "pr":
        if not args.report or not args.gold:
            raise UsageError("eval --task pr needs --report and --gold")
        report = read_report(args.report)
        gold = read_gold(args.gold)
        metrics = char_pr(report, gold)
        _write_json(metrics, args.out)
        written += _maybe_figure(args.figures,
                                 lambda p: figures.metric_bars(metrics, p), args.out, "pr")
        config = {"task": "pr", "report": args.report, "gold": args.gold, "metrics": metrics}
    elif args.task == "retrieval":
        if not args.trace or not args.gold:
            raise UsageError("eval --task retrieval needs --trace and --gold")
        entries = []
        with open(args.trace, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    entries.append(json.loads(line))
        gold = read_gold(args.gold)
        ks = sorted({int(k) for k in args.ks.split(",") if k.strip()})
        if not ks:
            raise UsageError("--ks must name at least one cutoff")
        recall_at = trace_retrieval_eval(entries, gold, ks)
        payload = {"recall_at": {str(k): recall_at[k] for k in ks}}
        _write_json(payload, args.out)
        written += _maybe_figure(args.figures,
                                 lambda p: figures.recall_curve(recall_at, p),
                                 args.out, "recall")
        config = {"task": "retrieval", "trace": args.trace, "gold": args.gold,
                  "ks": ks, "recall_at": payload["recall_at"]}
    elif args.task == "pairs":
        if not args.pairs or not args.dict or args.threshold is None:
            raise UsageError("eval --task pairs needs --pairs, --dict, and --threshold")
        dictionary = _load_dictionary(args.dict)
        resources = _load_resources(args.stopwords, args.lemmas)
        scorer = _make_scorer(args.scorer, dictionary, resources)
        examples = read_pairs(args.pairs)
        metrics = pair_metrics(examples, scorer, args.threshold)
        _write_json(metrics, args.out)
        written += _maybe_figure(args.figures,
                                 lambda p: figures.metric_bars(metrics, p), args.out, "pairs")
        config = {"task": "pairs", "pairs": args.pairs, "threshold": args.threshold,
                  "scorer": args.scorer, "metrics": metrics}
    else:
        raise UsageError(f"unknown eval task {args.task!r}")
    _write_manifest(_manifest_path(args.out), "eval", argv, config)
    print(f"wrote {args.out}" + (f" and {', '.join(written)}" if written else ""))
    return 0


def cmd_calibrate(args, argv) -> int:
    dictionary = _load_dictionary(args.dict)
    resources = _load_resources(args.stopwords, args.lemmas)
    scorer = _make_scorer(args.scorer, dictionary, resources)
    examples = read_pairs(args.pairs)
    if not examples:
        raise UsageError(f"{args.pairs}: no examples")
    scores = score_pairs(scorer, [(e.text_a, e.lang_a, e.text_b, e.lang_b)
                                  for e in examples])
    scored = [(score, e.label == 1) for score, e in zip(scores, examples)]
    threshold = calibrate(scored, beta=args.beta)
    achieved = f_beta_at(scored, threshold.value, args.beta)
    payload = {"threshold": threshold.value, "beta": args.beta, "f_beta": achieved}
    _write_json(payload, args.out)
    _write_manifest(_manifest_path(args.out), "calibrate", argv, {
        "pairs": args.pairs, "scorer": args.scorer, **payload})
    print(f"wrote {args.out}: threshold {threshold.value:.4f} "
          f"(F_{args.beta} = {achieved:.4f})")
    return 0


def cmd_coverage(args, argv) -> int:
    from . import figures
    labeled: dict[str, str] = {}
    for item in args.dict:
        label, sep, path = item.partition("=")
        if not sep or not label or not path:
            raise UsageError(f"bad --dict argument {item!r}; expected LABEL=PATH")
        labeled[label] = path
    resources = _load_resources(args.stopwords, args.lemmas)
    docs = read_corpus(args.corpus)
    tokens: list[tuple[str, str]] = []
    for doc in docs:
        res = resources.get(doc.lang) or LangResources.empty(doc.lang)
        tokens.extend((doc.lang, lemma) for lemma in normalize_text(doc.text, res))
    results = {}
    for label in sorted(labeled):
        dictionary = _load_dictionary(labeled[label])
        results[label] = coverage(dictionary, tokens)
    _write_json(results, args.out)
    written = _maybe_figure(args.figures,
                            lambda p: figures.coverage_bars(results, p),
                            args.out, "coverage")
    _write_manifest(_manifest_path(args.out), "coverage", argv, {
        "corpus": args.corpus, "dicts": labeled, "tokens": len(tokens),
        "coverage": results})
    print(f"wrote {args.out}" + (f" and {written[0]}" if written else ""))
    return 0


def cmd_gen(args, argv) -> int:
    hosts = read_corpus(args.hosts)
    parallel = read_parallel(args.parallel)
    gen = GenConfig(seed=args.seed, n_suspicious=args.n_susp, n_reference=args.n_ref,
                    frac=_parse_range(args.frac, "--frac", float),
                    sources=_parse_range(args.sources, "--sources", int))
    try:
        gen.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    susp, refs, gold = generate_dataset(hosts, parallel, gen, ref_lang=args.ref_lang)
    os.makedirs(args.out_dir, exist_ok=True)
    susp_path = os.path.join(args.out_dir, "suspicious.jsonl")
    ref_path = os.path.join(args.out_dir, "reference.jsonl")
    gold_path = os.path.join(args.out_dir, "gold.json")
    write_corpus(susp, susp_path)
    write_corpus(refs, ref_path)
    write_gold(gold, gold_path)
    _write_manifest(os.path.join(args.out_dir, "manifest.json"), "gen", argv, {
        "hosts": args.hosts, "parallel": args.parallel, "seed": args.seed,
        "n_suspicious": args.n_susp, "n_reference": args.n_ref,
        "frac": list(gen.frac), "sources": list(gen.sources),
        "ref_lang": args.ref_lang, "annotations": len(gold),
    })
    print(f"wrote {susp_path}, {ref_path}, {gold_path}: "
          f"{len(susp)} suspicious, {len(refs)} reference, {len(gold)} annotations")
    return 0


def cmd_gen_pairs(args, argv) -> int:
    parallel = read_parallel(args.parallel)
    examples = build_pair_dataset(parallel, args.negatives, args.seed,
                                  lang_a=args.la, lang_b=args.lb)
    write_pairs(examples, args.out)
    positives = sum(1 for e in examples if e.label == 1)
    _write_manifest(_manifest_path(args.out), "gen-pairs", argv, {
        "parallel": args.parallel, "negatives": args.negatives, "seed": args.seed,
        "lang_a": args.la, "lang_b": args.lb,
        "positives": positives, "total": len(examples),
    })
    print(f"wrote {args.out}: {positives} positives, {len(examples) - positives} negatives")
    return 0


def cmd_rerun(args, argv) -> int:
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    stored = manifest.get("argv")
    if not isinstance(stored, list) or not stored:
        raise UsageError(f"{args.manifest}: no argv recorded")
    return main([str(a) for a in stored])


def _add_resource_args(sub) -> None:
    sub.add_argument("--stopwords", action="append", metavar="LANG=PATH",
                     help="stopword list for a language (repeatable)")
    sub.add_argument("--lemmas", action="append", metavar="LANG=PATH",
                     help="surface-to-lemma TSV for a language (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xlplag",
                                     description="cross-lingual plagiarism detection")
    parser.add_argument("--version", action="version", version=f"xlplag {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("build-clusters", help="compile a cluster dictionary from sense files")
    p.add_argument("--senses", action="append", required=True, help="sense TSV (repeatable)")
    p.add_argument("--mode", choices=MODES, default="top1")
    p.add_argument("--translations", action="append",
                   help="translation TSV to augment with (repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_clusters)

    p = subs.add_parser("index", help="index a reference corpus at paragraph level")
    p.add_argument("--corpus", required=True, help="reference corpus JSONL")
    p.add_argument("--dict", required=True, help="compiled cluster dictionary TSV")
    p.add_argument("--out", required=True)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--k", type=int, default=50, help="candidates kept per query")
    p.add_argument("--idf", choices=["nonnegative", "classic"], default="nonnegative")
    p.add_argument("--progress", action="store_true")
    _add_resource_args(p)
    p.set_defaults(func=cmd_index)

    p = subs.add_parser("detect", help="scan suspicious documents against an index")
    p.add_argument("--susp", required=True, help="suspicious corpus JSONL")
    p.add_argument("--index", required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--scorer", default="overlap", help="'overlap' or 'remote:HOST:PORT'")
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--k", type=int, default=None, help="override indexed candidate cutoff")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--trace", help="write per-sentence retrieval trace JSONL here")
    p.add_argument("--retrieval-only", action="store_true",
                   help="skip pair analysis; use with --trace")
    p.add_argument("--merge-adjacent", action="store_true",
                   help="merge consecutive detections hitting the same source paragraph")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="document-level parallelism (results independent of N)")
    p.add_argument("--progress", action="store_true")
    _add_resource_args(p)
    p.set_defaults(func=cmd_detect)

    p = subs.add_parser("eval", help="evaluate reports, traces, or pair sets")
    p.add_argument("--task", choices=["pr", "retrieval", "pairs"], required=True)
    p.add_argument("--report", help="report JSON (task pr)")
    p.add_argument("--gold", help="gold annotations JSON (tasks pr, retrieval)")
    p.add_argument("--trace", help="retrieval trace JSONL (task retrieval)")
    p.add_argument("--ks", default="1,5,10,50", help="comma-separated cutoffs (task retrieval)")
    p.add_argument("--pairs", help="pair dataset JSONL (task pairs)")
    p.add_argument("--dict", help="dictionary TSV (task pairs)")
    p.add_argument("--scorer", default="overlap")
    p.add_argument("--threshold", type=float)
    p.add_argument("--out", required=True, help="metrics JSON path")
    p.add_argument("--figures", action="store_true",
                   help="render figures next to the metrics file")
    _add_resource_args(p)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("calibrate", help="pick a decision threshold on labeled pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--scorer", default="overlap")
    p.add_argument("--beta", type=float, default=0.25)
    p.add_argument("--out", required=True)
    _add_resource_args(p)
    p.set_defaults(func=cmd_calibrate)

    p = subs.add_parser("coverage", help="lexical coverage of dictionaries on a corpus")
    p.add_argument("--dict", action="append", required=True, metavar="LABEL=PATH",
                   help="dictionary to measure (repeatable)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--figures", action="store_true")
    _add_resource_args(p)
    p.set_defaults(func=cmd_coverage)

    p = subs.add_parser("gen", help="generate a synthetic benchmark")
    p.add_argument("--hosts", required=True, help="host corpus JSONL (suspicious language)")
    p.add_argument("--parallel", required=True, help="aligned sentence TSV")
    p.add_argument("--ref-lang", default="en")
    p.add_argument("--n-susp", type=int, required=True)
    p.add_argument("--n-ref", type=int, required=True)
    p.add_argument("--frac", default="0.2:0.8", help="plagiarism fraction range LO:HI")
    p.add_argument("--sources", default="1:10", help="source documents per case LO:HI")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen)

    p = subs.add_parser("gen-pairs", help="build a labeled pair dataset from a parallel corpus")
    p.add_argument("--parallel", required=True)
    p.add_argument("--la", required=True, help="language of the first column")
    p.add_argument("--lb", required=True, help="language of the second column")
    p.add_argument("--negatives", type=int, default=1, help="negatives per positive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_pairs)

    p = subs.add_parser("rerun", help="replay a command from its manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_rerun)

    return parser


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, list(argv))
    except (UsageError, DictionaryMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
