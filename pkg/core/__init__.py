"""Core classifier, experiment and corpus components"""
from .classifier import (
    DEFAULT_ENSEMBLE,
    FEATURE_SPACES,
    MODEL_KINDS,
    TRADITIONAL_KINDS,
    ModelHyperparameters,
    TrainedModel,
    train_model,
)
from .corpus_gen import CorpusGenerator, SynthSpec, generate_corpus
from .ensemble import SoftVotingEnsemble, soft_vote
from .evaluator import (
    ExperimentRunner,
    MetricsReport,
    ablation_frame,
    aupr,
    auroc,
    basic_metrics,
    confusion,
    reports_frame,
    summarize_reports,
    train_test_split,
)

__all__ = [
    'DEFAULT_ENSEMBLE',
    'FEATURE_SPACES',
    'MODEL_KINDS',
    'TRADITIONAL_KINDS',
    'ModelHyperparameters',
    'TrainedModel',
    'train_model',
    'CorpusGenerator',
    'SynthSpec',
    'generate_corpus',
    'SoftVotingEnsemble',
    'soft_vote',
    'ExperimentRunner',
    'MetricsReport',
    'ablation_frame',
    'aupr',
    'auroc',
    'basic_metrics',
    'confusion',
    'reports_frame',
    'summarize_reports',
    'train_test_split',
]
