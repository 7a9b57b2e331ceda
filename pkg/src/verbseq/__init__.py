"""Structure discovery in annotated verb sequences.

Verbs are encoded by (aspectual category, tense), consecutive verbs form
transition windows, and a batch self-organizing map, k-medoids clustering
and Markov models expose recurring transition profiles.
"""

from .analysis import (assign_transitions, association_test, crosstab, segment_text,
                       typical_pairs)
from .clusterer import cluster_prototypes, cluster_units, davies_bouldin, select_k
from .config import RunConfig
from .corpus import (Corpus, VerbToken, corpus_transitions, encode_pair, extract_sequences,
                     load_bundled, load_corpus, parse_corpus, tabulate_distributions,
                     validate_corpus, window_transitions)
from .markov import (HmmModel, baum_welch, empirical_transitions, forward_log_likelihood,
                     viterbi)
from .som import SomMap, best_matching_unit, quantization_error, train_som
from .synth import RegimeSpec, default_paper_spec, generate_corpus, implied_marginals

__version__ = "0.1.0"

__all__ = [
    "Corpus", "VerbToken", "parse_corpus", "load_corpus", "load_bundled", "validate_corpus",
    "extract_sequences", "encode_pair", "window_transitions", "corpus_transitions",
    "tabulate_distributions",
    "SomMap", "train_som", "best_matching_unit", "quantization_error",
    "HmmModel", "baum_welch", "forward_log_likelihood", "viterbi", "empirical_transitions",
    "cluster_prototypes", "davies_bouldin", "select_k", "cluster_units",
    "assign_transitions", "crosstab", "association_test", "typical_pairs", "segment_text",
    "RegimeSpec", "default_paper_spec", "generate_corpus", "implied_marginals",
    "RunConfig",
]
