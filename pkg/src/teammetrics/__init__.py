"""teammetrics: mine line-level edit histories and relate team size,
collaboration structure, and developer productivity.

The package is organised along the analysis pipeline:

- :mod:`teammetrics.catalog` -- project selection and stratified sampling
- :mod:`teammetrics.ingest` -- commit streams and identity resolution
- :mod:`teammetrics.ownership` -- line ownership replay and edit events
- :mod:`teammetrics.codemetrics` -- tokenization and code-based metrics
- :mod:`teammetrics.windows` -- 42-week windows and productivity measures
- :mod:`teammetrics.networks` -- co-editing networks and their measures
- :mod:`teammetrics.stats` -- correlations and the regression battery
- :mod:`teammetrics.synthkit` -- synthetic data and brute-force oracles
- :mod:`teammetrics.pipeline` / :mod:`teammetrics.cli` -- orchestration
"""

from .catalog import (
    FilterConfig,
    ProjectMeta,
    Stratum,
    apply_filters,
    compute_strata,
    purpose_filter,
    stratified_sample,
)
from .codemetrics import (
    FileMetricVector,
    Token,
    commit_code_delta,
    file_metrics,
    halstead_effort,
    tokenize,
)
from .ingest import (
    CommitRecord,
    FileChange,
    Identity,
    export_dump,
    extract_commit_stream,
    resolve_identities,
)
from .networks import (
    CoEditGraph,
    NetworkMetrics,
    build_coedit_graph,
    feature_cluster_select,
    flatten,
    network_metrics,
)
from .ownership import (
    EditEvent,
    OutlierConfig,
    filter_outlier_commits,
    levenshtein,
    pair_hunk_lines,
    replay_ownership,
)
from .profiles import CLIKE_PROFILE, PYTHON_PROFILE, LanguageProfile, load_profile
from .stats import (
    ModelSpec,
    RegressionResult,
    bonferroni,
    elasticity_per_doubling,
    marginal_effects,
    ols_fit,
    pearson_matrix,
    quadratic_vertex,
)
from .windows import (
    TransformSpec,
    WindowConfig,
    WindowObservation,
    aggregate_productivity,
    apply_transforms,
    moving_team_size,
    segment_windows,
    team_size,
)

__version__ = "0.1.0"

__all__ = [
    "CLIKE_PROFILE",
    "CoEditGraph",
    "CommitRecord",
    "EditEvent",
    "FileChange",
    "FileMetricVector",
    "FilterConfig",
    "Identity",
    "LanguageProfile",
    "ModelSpec",
    "NetworkMetrics",
    "OutlierConfig",
    "ProjectMeta",
    "PYTHON_PROFILE",
    "RegressionResult",
    "Stratum",
    "Token",
    "TransformSpec",
    "WindowConfig",
    "WindowObservation",
    "apply_filters",
    "apply_transforms",
    "aggregate_productivity",
    "bonferroni",
    "build_coedit_graph",
    "commit_code_delta",
    "compute_strata",
    "elasticity_per_doubling",
    "export_dump",
    "extract_commit_stream",
    "feature_cluster_select",
    "file_metrics",
    "filter_outlier_commits",
    "flatten",
    "halstead_effort",
    "levenshtein",
    "load_profile",
    "marginal_effects",
    "moving_team_size",
    "network_metrics",
    "ols_fit",
    "pair_hunk_lines",
    "pearson_matrix",
    "purpose_filter",
    "quadratic_vertex",
    "replay_ownership",
    "resolve_identities",
    "segment_windows",
    "stratified_sample",
    "team_size",
    "tokenize",
]
