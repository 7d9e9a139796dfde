"""Author disambiguation by bottom-up collaboration network reconstruction."""

from .corpus import (
    CorpusError,
    CorpusIndex,
    PaperRecord,
    RecordError,
    build_frequency_tables,
    extract_keywords,
    load_stopwords,
    parse_corpus,
    parse_corpus_file,
)
from .gcn import MergeEvent, merge_pass, recover_relations
from .incremental import IncrementalDecision, disambiguate_paper
from .metrics import MicroMetrics, load_gold, micro_metrics
from .model import (
    FitResult,
    FittingError,
    ModelParams,
    TrainingSet,
    em_fit,
    load_model,
    matching_score,
    posterior_match,
    sample_training_pairs,
    save_model,
)
from .network import CollabNetwork, CollabVertex
from .pipeline import RunConfig, StageError, run_full
from .scn import ScrSet, build_scn, cooccurrence_tail_probability, mine_scrs
from .similarity import (
    EmbeddingTable,
    SimilarityContext,
    SimilarityVector,
    UnscorablePair,
    similarity_vector,
)

__version__ = "0.1.0"
