"""mentionweb: cluster ambiguous name mentions into identities.

Builds similarity networks over precomputed mention embeddings and infers
identity clusters either with unsupervised community detection or with a
supervised sequential antecedent classifier, then scores the results with
standard coreference metrics.
"""

from .antecedent import (
    AntecedentModel,
    PairExample,
    TrainConfig,
    bce_loss,
    build_features,
    load_model,
    sample_pairs_nearest,
    sample_pairs_network,
    save_model,
    surface_match,
    train,
)
from .assignment import solve_max, solve_min
from .communities import (
    CommunityConfig,
    Partition,
    detect_communities,
    label_propagation,
    leiden,
    modularity,
)
from .corpus import (
    Corpus,
    Document,
    Mention,
    SplitSpec,
    SynthConfig,
    frequency_histogram,
    generate_synthetic,
    load_corpus,
    save_corpus,
    split,
)
from .embeddings import (
    EmbeddingMatrix,
    TokenGroup,
    average_tokens,
    cosine_distance,
    cosine_similarity,
    load_embeddings,
    save_embeddings,
)
from .graph import (
    GraphConfig,
    MentionGraph,
    build_gold_links,
    build_graph,
    build_knn,
    build_surface_form,
    load_graph,
    save_graph,
    threshold_edges,
    union_graphs,
)
from .inference import (
    Clustering,
    GoldOracleModel,
    InferenceConfig,
    antecedent_cluster,
    communities_to_clustering,
    gold_clustering,
    naive_cluster,
)
from .metrics import (
    EvalOptions,
    MetricReport,
    b_cubed,
    ceaf_e,
    conll,
    evaluate,
    filter_for_eval,
    muc,
)

__version__ = "0.1.0"
