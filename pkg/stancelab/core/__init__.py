# Core stance detection logic for Stancelab
from .errors import (
    ClusterLookupError,
    ConfigError,
    DataError,
    DomainError,
    FormatError,
    PreconditionError,
    StageError,
    StancelabError,
)
from .corpus import Corpus, PreprocessConfig, TopicSpec, Tweet, filter_topic, load_corpus, preprocess
from .labelprop import PropagationParams, Stance, StanceLabel, propagate
from .embed import HashEmbedder, HashEmbedderParams, hash_embed, load_embeddings, user_vectors
from .project import Layout2D, ProjectionParams, project
from .cluster import NOISE, ClusterAssignment, ClusterParams, cluster, subclusters
from .evaluate import ami, ami_matrix, jaccard_overlap, majority_label, prf
from .polarize import RwcResult, UserGraph, build_user_graph, rwc
from .lexicon import ProminenceEntry, prominence, term_stats, top_terms
from .synth import SynthCorpus, SynthParams, generate, plant_subgroups
from .config import ConfigManager, PipelineConfig, load_config
from .pipeline import PipelineResult, TopicReport, run_pipeline

__all__ = [
    'StancelabError', 'FormatError', 'PreconditionError', 'DataError', 'DomainError',
    'ConfigError', 'ClusterLookupError', 'StageError',
    'Tweet', 'Corpus', 'TopicSpec', 'PreprocessConfig', 'load_corpus', 'preprocess', 'filter_topic',
    'Stance', 'StanceLabel', 'PropagationParams', 'propagate',
    'HashEmbedder', 'HashEmbedderParams', 'hash_embed', 'load_embeddings', 'user_vectors',
    'Layout2D', 'ProjectionParams', 'project',
    'NOISE', 'ClusterAssignment', 'ClusterParams', 'cluster', 'subclusters',
    'majority_label', 'prf', 'jaccard_overlap', 'ami', 'ami_matrix',
    'UserGraph', 'RwcResult', 'build_user_graph', 'rwc',
    'ProminenceEntry', 'term_stats', 'prominence', 'top_terms',
    'SynthParams', 'SynthCorpus', 'generate', 'plant_subgroups',
    'ConfigManager', 'PipelineConfig', 'load_config',
    'TopicReport', 'PipelineResult', 'run_pipeline',
]
