"""gepnet: reference implementation of a self-evolving agent-to-agent
asset-sharing network, with its audit toolkit and economy simulator."""

from .core import (
    AgentId,
    AssetId,
    Capsule,
    EventKind,
    EvolutionEvent,
    Gene,
    IntrinsicSignals,
    LineageVerdict,
    RepairWithoutHistory,
    canonical_bytes,
    hash_asset,
    link_event,
    verify_lineage,
)
from .scoring import (
    GdiComponents,
    GdiWeights,
    OFFICIAL_WEIGHTS,
    REFITTED_WEIGHTS,
    UsageCounters,
    composite_gdi,
    freshness_score,
    intrinsic_ablation,
    intrinsic_score,
    refit_weights,
    sensitivity_sweep,
    social_score,
    usage_score,
)
from .hub import Hub, HubConfig, call_reward
from .evolver import CapsuleDraft, Evolver, EvolverConfig, ScriptedExecutor, Workspace
from .audit import (
    EmptyEnvExecutor,
    PatternCatalogue,
    audit_corpus,
    classify_command,
    classify_gene_static,
    default_catalogue,
    forge_configurations,
    run_forgery_study,
    sandbox_phase,
)
from .sim import ScenarioConfig, SimMetrics, StrategyKind, gini, run_scenario, top_share
from .service import Service, ServiceConfig, serve

__version__ = "0.1.0"
