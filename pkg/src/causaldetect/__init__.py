"""Causal-graph based attack detection on multivariate sensor streams.

Per-window temporal causal discovery, a distribution-drift trigger, an
incrementally maintained attack graph with a replay buffer, and a small graph
convolutional classifier, plus synthetic scenarios and evaluation metrics.
"""

from .config import PipelineConfig, load_config
from .discovery import DiscoveryConfig, acyclicity_value, discover, fit
from .gcn import GcnModel, TrainConfig, classify, featurize, train
from .graph import CausalGraph, is_acyclic
from .incremental import (
    IncrementalConfig,
    IncrementalState,
    ReplayBuffer,
    causal_edge_reinforcement,
    incremental_step,
    laplacian,
    remove_cycles_protected,
    stopping_score,
)
from .ingest import PriorKnowledge, SeriesSchema, WindowedStream, load_csv, segment, standardize
from .metrics import MetricsReport, evaluate, structural_hamming
from .pipeline import PipelineError, run_pipeline
from .synth import AttackEpisode, ScenarioSpec, generate
from .trigger import TriggerState, check_trigger, js_divergence, similarity

__version__ = "0.1.0"
