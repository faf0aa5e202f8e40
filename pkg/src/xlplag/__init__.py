"""Cross-lingual plagiarism detection.

Two stages: concept-based candidate retrieval over an inverted index
(BM25 on multilingual word clusters), then pairwise translation scoring
of candidate sentences with a calibrated decision threshold.
"""

__version__ = "0.1.0"

from .analysis import (OverlapScorer, PairVerdict, RemoteScorer, Scorer,
                       ScorerTransportError, Threshold, calibrate,
                       compare_fragments, select_best)
from .evalkit import (GenConfig, GoldAnnotation, PairExample, build_pair_dataset,
                      char_pr, generate_dataset, pair_metrics, recall_at_k,
                      trace_retrieval_eval)
from .index import Candidate, IndexStateError, InvertedIndex, RetrievalConfig
from .pipeline import (Detection, DictionaryMismatchError, Report, detect,
                       detect_corpus, index_reference, rank_sentences)
from .textproc import (Document, Fragment, LangResources, PARAGRAPH, SENTENCE,
                       TermSequence, conceptualize, normalize, normalize_text,
                       read_corpus, segment, write_corpus)
from .thesaurus import (ALL, TOP1, ClusterDictionary, SenseRecord, TranslationTable,
                        augment_clusters, build_clusters, coverage, load_senses,
                        load_translations)
