"""File-based pipeline stages with manifest caching.

Stages communicate only through files under the output directory, one
subdirectory per stage, so every intermediate is inspectable and the whole
run is resumable: a stage whose manifest still matches its config and
input hashes is skipped. Changing the config against existing artifacts is
an error unless forced.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import stats as st
from ._util import (
    format_ts,
    parse_bool,
    parse_kv_file,
    parse_ts,
    sha256_file,
    sha256_text,
)
from .catalog import (
    FilterConfig,
    apply_filters,
    compute_strata,
    fill_team_sizes,
    read_catalog,
    stratified_sample,
    tally_strata,
    write_catalog,
)
from .codemetrics import METRIC_FIELDS, ZERO_VECTOR, FileMetricVector, file_metrics, commit_code_delta
from .errors import ConfigMismatchError, DataError, MissingUpstreamError
from .ingest import CommitRecord, extract_commit_stream, load_alias_map, resolve_identities
from .networks import build_coedit_graph, export_edges_csv, feature_cluster_select, network_metrics
from .ownership import (
    OutlierConfig,
    commit_lev_totals,
    export_events_csv,
    filter_outlier_commits,
    read_events_csv,
    replay_ownership,
)
from .profiles import profile_for_path
from .windows import (
    NETWORK_FIELDS,
    PRODUCTIVITY_FIELDS,
    TransformSpec,
    WindowConfig,
    aggregate_productivity,
    apply_transforms,
    drop_inactive,
    moving_team_size,
    read_observations,
    segment_windows,
    write_observations,
)

STAGES = ("filter", "sample", "mine", "window", "network", "stats", "report")

_UPSTREAM = {
    "filter": (),
    "sample": ("filter",),
    "mine": ("sample",),
    "window": ("mine",),
    "network": ("window",),
    "stats": ("network",),
    "report": ("stats",),
}


@dataclass
class PipelineConfig:
    """Everything a full run needs; loadable from a flat key-value file."""

    catalog: Path
    repos_dir: Path
    out_dir: Path
    alias_map: Path | None = None
    filter_cfg: FilterConfig = field(default_factory=FilterConfig)
    window_cfg: WindowConfig = field(default_factory=WindowConfig)
    outlier_cfg: OutlierConfig = field(default_factory=OutlierConfig)
    transforms: TransformSpec = field(default_factory=TransformSpec.default)
    strata_k: int = 10
    strata_min: int = 2
    quota: int = 28
    seed: int = 0
    jobs: int = 1
    name_merge: bool = True
    emit_merges: bool = False
    bonferroni_m: int | None = None
    families: tuple[str, ...] = ("a", "b", "c", "d", "e")
    targets: tuple[str, ...] = PRODUCTIVITY_FIELDS
    eigengap_kind: str = "adjacency"
    cluster_threshold: float = 0.7
    preferred_features: tuple[str, ...] = ("team_size", "ind", "fmodr")

    def canonical(self) -> dict:
        """A stable dict of every setting that affects outputs."""
        return {
            "catalog": str(self.catalog),
            "repos_dir": str(self.repos_dir),
            "alias_map": str(self.alias_map) if self.alias_map else None,
            "filter": {
                "min_developers": self.filter_cfg.min_developers,
                "min_commits": self.filter_cfg.min_commits,
                "min_span_days": self.filter_cfg.min_span_days,
                "min_age_days": self.filter_cfg.min_age_days,
                "exclude_forks": self.filter_cfg.exclude_forks,
                "activity_cutoff": format_ts(self.filter_cfg.activity_cutoff),
                "purpose_threshold": self.filter_cfg.purpose_threshold,
                "supported_languages": sorted(self.filter_cfg.supported_languages),
            },
            "window": {
                "window_days": self.window_cfg.window_days,
                "drop_partial_tail": self.window_cfg.drop_partial_tail,
                "moving_window_days": self.window_cfg.moving_window_days,
                "dt_scale": self.window_cfg.dt_scale,
            },
            "outliers": {"p_low": self.outlier_cfg.p_low, "p_high": self.outlier_cfg.p_high},
            "transforms": dict(sorted(self.transforms.per_measure.items())),
            "strata_k": self.strata_k,
            "strata_min": self.strata_min,
            "quota": self.quota,
            "seed": self.seed,
            "name_merge": self.name_merge,
            "emit_merges": self.emit_merges,
            "bonferroni_m": self.bonferroni_m,
            "families": list(self.families),
            "targets": list(self.targets),
            "eigengap_kind": self.eigengap_kind,
            "cluster_threshold": self.cluster_threshold,
            "preferred_features": list(self.preferred_features),
        }

    def config_hash(self) -> str:
        return sha256_text(json.dumps(self.canonical(), sort_keys=True))


def load_pipeline_config(path, seed: int | None = None, jobs: int | None = None) -> PipelineConfig:
    """Read a pipeline config file; CLI-level seed/jobs override its values."""
    raw = parse_kv_file(path)
    base = Path(path).parent

    def path_of(key):
        value = Path(raw[key])
        return value if value.is_absolute() else base / value

    for key in ("catalog", "repos_dir", "out_dir"):
        if key not in raw:
            raise DataError(f"{path}: config must set {key}")

    filter_kwargs = {}
    for key in ("min_developers", "min_commits", "min_span_days", "min_age_days"):
        if key in raw:
            filter_kwargs[key] = int(raw[key])
    if "exclude_forks" in raw:
        filter_kwargs["exclude_forks"] = parse_bool(raw["exclude_forks"])
    if "activity_cutoff" in raw:
        filter_kwargs["activity_cutoff"] = parse_ts(raw["activity_cutoff"])
    if "purpose_threshold" in raw:
        filter_kwargs["purpose_threshold"] = float(raw["purpose_threshold"])
    if "supported_languages" in raw:
        filter_kwargs["supported_languages"] = frozenset(
            v.strip() for v in raw["supported_languages"].split(",") if v.strip()
        )

    window_kwargs = {}
    for key in ("window_days", "moving_window_days"):
        if key in raw:
            window_kwargs[key] = int(raw[key])
    if "drop_partial_tail" in raw:
        window_kwargs["drop_partial_tail"] = parse_bool(raw["drop_partial_tail"])
    if "dt_scale" in raw:
        window_kwargs["dt_scale"] = float(raw["dt_scale"])

    outlier_kwargs = {}
    if "p_low" in raw:
        outlier_kwargs["p_low"] = float(raw["p_low"])
    if "p_high" in raw:
        outlier_kwargs["p_high"] = float(raw["p_high"])

    spec = dict(TransformSpec.default().per_measure)
    for key, value in raw.items():
        if key.startswith("transform_"):
            spec[key[len("transform_"):]] = value

    cfg = PipelineConfig(
        catalog=path_of("catalog"),
        repos_dir=path_of("repos_dir"),
        out_dir=path_of("out_dir"),
        alias_map=path_of("alias_map") if "alias_map" in raw else None,
        filter_cfg=FilterConfig(**filter_kwargs),
        window_cfg=WindowConfig(**window_kwargs),
        outlier_cfg=OutlierConfig(**outlier_kwargs),
        transforms=TransformSpec(per_measure=spec),
    )
    for key in ("strata_k", "strata_min", "quota", "seed", "jobs"):
        if key in raw:
            setattr(cfg, key, int(raw[key]))
    if "name_merge" in raw:
        cfg.name_merge = parse_bool(raw["name_merge"])
    if "emit_merges" in raw:
        cfg.emit_merges = parse_bool(raw["emit_merges"])
    if "bonferroni_m" in raw:
        cfg.bonferroni_m = int(raw["bonferroni_m"])
    if "families" in raw:
        cfg.families = tuple(v.strip() for v in raw["families"].split(",") if v.strip())
    if "targets" in raw:
        cfg.targets = tuple(v.strip() for v in raw["targets"].split(",") if v.strip())
    if "eigengap_kind" in raw:
        cfg.eigengap_kind = raw["eigengap_kind"]
    if "cluster_threshold" in raw:
        cfg.cluster_threshold = float(raw["cluster_threshold"])
    if "preferred_features" in raw:
        cfg.preferred_features = tuple(
            v.strip() for v in raw["preferred_features"].split(",") if v.strip()
        )
    if seed is not None:
        cfg.seed = seed
    if jobs is not None:
        cfg.jobs = jobs
    return cfg


# -- manifests ----------------------------------------------------------------

def _stage_dir(cfg: PipelineConfig, stage: str) -> Path:
    return Path(cfg.out_dir) / stage


def _manifest_path(cfg, stage) -> Path:
    return _stage_dir(cfg, stage) / "manifest.json"


def _write_manifest(cfg, stage, inputs: dict[str, str], counts: dict) -> None:
    stage_dir = _stage_dir(cfg, stage)
    outputs = {}
    for file in sorted(stage_dir.rglob("*")):
        if file.is_file() and file.name != "manifest.json":
            outputs[str(file.relative_to(stage_dir))] = sha256_file(file)
    manifest = {
        "stage": stage,
        "config_hash": cfg.config_hash(),
        "inputs": inputs,
        "outputs": outputs,
        "counts": counts,
        "created": datetime.now(timezone.utc).isoformat(),
    }
    _manifest_path(cfg, stage).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _manifest_match(cfg, stage, inputs: dict[str, str], force: bool) -> bool:
    """True when the stage can be skipped; raises on a config mismatch."""
    path = _manifest_path(cfg, stage)
    if not path.exists():
        return False
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("config_hash") != cfg.config_hash():
        if force:
            return False
        raise ConfigMismatchError(
            f"{stage}: existing artifacts were built with a different config "
            "(pass --force to rebuild)"
        )
    if manifest.get("inputs") != inputs:
        return False
    stage_dir = _stage_dir(cfg, stage)
    for rel, digest in manifest.get("outputs", {}).items():
        file = stage_dir / rel
        if not file.is_file() or sha256_file(file) != digest:
            return False
    return True


def _hash_inputs(paths: list[Path]) -> dict[str, str]:
    return {str(p): sha256_file(p) for p in sorted(paths)}


def _require_upstream(cfg, stage) -> None:
    for dep in _UPSTREAM[stage]:
        if not _manifest_path(cfg, dep).exists():
            raise MissingUpstreamError(
                f"stage {stage!r} needs {dep!r} artifacts; run that stage first"
            )


def run_stage(stage: str, cfg: PipelineConfig, force: bool = False) -> Path:
    """Run one pipeline stage (or skip it when its manifest still matches)."""
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}")
    _require_upstream(cfg, stage)
    runner = {
        "filter": _stage_filter,
        "sample": _stage_sample,
        "mine": _stage_mine,
        "window": _stage_window,
        "network": _stage_network,
        "stats": _stage_stats,
        "report": _stage_report,
    }[stage]
    inputs = runner(cfg, dry=True)
    stage_dir = _stage_dir(cfg, stage)
    if _manifest_match(cfg, stage, inputs, force):
        return stage_dir
    stage_dir.mkdir(parents=True, exist_ok=True)
    counts = runner(cfg, dry=False)
    _write_manifest(cfg, stage, inputs, counts)
    return stage_dir


def run_all(cfg: PipelineConfig, force: bool = False) -> list[Path]:
    return [run_stage(stage, cfg, force=force) for stage in STAGES]


# -- stage implementations -----------------------------------------------------

def _stage_filter(cfg, dry: bool):
    catalog_path = Path(cfg.catalog)
    if not catalog_path.is_file():
        raise DataError(f"catalog not found: {catalog_path}")
    if dry:
        return _hash_inputs([catalog_path])
    rows = read_catalog(catalog_path)
    kept = apply_filters(rows, cfg.filter_cfg)
    write_catalog(_stage_dir(cfg, "filter") / "filtered_catalog.csv", kept)
    return {"total": len(rows), "retained": len(kept), "dropped": len(rows) - len(kept)}


def _dump_path(cfg, project_id: str) -> Path:
    return Path(cfg.repos_dir) / f"{project_id}.commits.jsonl"


def _project_source(cfg, project_id: str) -> Path:
    dump = _dump_path(cfg, project_id)
    if dump.is_file():
        return dump
    repo = Path(cfg.repos_dir) / project_id
    if repo.is_dir():
        return repo
    raise DataError(f"no dump or repository for project {project_id!r}")


def _stage_sample(cfg, dry: bool):
    filtered = _stage_dir(cfg, "filter") / "filtered_catalog.csv"
    if dry:
        return _hash_inputs([filtered])
    rows = read_catalog(filtered)

    sizes = {}
    for row in rows:
        stream = extract_commit_stream(_project_source(cfg, row.project_id))
        stream, _ = resolve_identities(
            stream,
            load_alias_map(cfg.alias_map) if cfg.alias_map else None,
            name_merge=cfg.name_merge,
        )
        sizes[row.project_id] = moving_team_size(
            stream, row.last_commit_ts, cfg.window_cfg
        )
    rows = fill_team_sizes(rows, sizes)
    rows = [r for r in rows if r.team_size_latest and r.team_size_latest >= 1]
    if not rows:
        raise DataError("no projects with a computable team size")

    max_ts = max(r.team_size_latest for r in rows)
    lo = min(cfg.strata_min, max_ts)
    k = min(cfg.strata_k, max_ts - lo + 1)
    strata = compute_strata(lo, max_ts, k)
    tally_strata(rows, strata, cfg.quota)
    sample = stratified_sample(rows, strata, cfg.quota, cfg.seed)

    stage_dir = _stage_dir(cfg, "sample")
    write_catalog(stage_dir / "sampled_catalog.csv", sample)
    with open(stage_dir / "strata.csv", "w", encoding="utf-8") as fh:
        fh.write("lower,upper,project_count,sample_quota\n")
        for s in strata:
            fh.write(f"{s.lower},{s.upper},{s.project_count},{s.sample_quota}\n")
    with open(stage_dir / "team_sizes.csv", "w", encoding="utf-8") as fh:
        fh.write("project_id,team_size_latest\n")
        for row in sample:
            fh.write(f"{row.project_id},{row.team_size_latest}\n")
    return {"strata": len(strata), "sampled": len(sample)}


def _mine_one(args) -> dict:
    """Mine one project; standalone function so it can run in a worker."""
    cfg, project_id = args
    stage_dir = _stage_dir(cfg, "mine")
    stream = extract_commit_stream(_project_source(cfg, project_id))
    alias = load_alias_map(cfg.alias_map) if cfg.alias_map else None
    stream, identities = resolve_identities(stream, alias, name_merge=cfg.name_merge)
    events, _ = replay_ownership(stream, emit_merges=cfg.emit_merges, keep_states=False)

    totals = commit_lev_totals(stream, events)
    retained = filter_outlier_commits(totals, cfg.outlier_cfg)

    deltas: dict[str, FileMetricVector] = {}
    per_file_rows = []
    for rec in stream:
        if rec.is_merge and not cfg.emit_merges:
            continue
        commit_total = ZERO_VECTOR
        for change in rec.changes:
            profile = profile_for_path(change.path)
            if profile is None or change.is_binary:
                continue
            pre = file_metrics(change.pre_text, profile) if change.pre_text else ZERO_VECTOR
            post = file_metrics(change.post_text, profile) if change.post_text else ZERO_VECTOR
            delta = commit_code_delta(pre, post)
            commit_total = commit_total + delta
            per_file_rows.append((rec.hash, change.path, delta))
        deltas[rec.hash] = commit_total

    events_tmp = stage_dir / f".{project_id}.events.csv.tmp"
    export_events_csv(events, stream, events_tmp)
    os.replace(events_tmp, stage_dir / f"{project_id}.events.csv")

    with open(stage_dir / f".{project_id}.commits.csv.tmp", "w", encoding="utf-8") as fh:
        fh.write("commit_hash,author_id,timestamp,is_merge,retained,total_levd\n")
        for rec in stream:
            merge = "true" if rec.is_merge else "false"
            keep = "true" if rec.hash in retained else "false"
            total = totals.get(rec.hash, 0)
            fh.write(
                f"{rec.hash},{rec.author_id},{format_ts(rec.timestamp)},"
                f"{merge},{keep},{total}\n"
            )
    os.replace(stage_dir / f".{project_id}.commits.csv.tmp",
               stage_dir / f"{project_id}.commits.csv")

    with open(stage_dir / f".{project_id}.metrics.csv.tmp", "w", encoding="utf-8") as fh:
        fh.write("commit_hash,path,nloc,tokens,functions,cyclomatic,"
                 "eta1,eta2,n1,n2,effort\n")
        for hash_, path, d in per_file_rows:
            fh.write(
                f"{hash_},{path},{d.nloc},{d.token_count},{d.function_count},"
                f"{d.cyclomatic},{d.eta1},{d.eta2},{d.n1},{d.n2},{d.effort!r}\n"
            )
    os.replace(stage_dir / f".{project_id}.metrics.csv.tmp",
               stage_dir / f"{project_id}.metrics.csv")

    return {
        "project_id": project_id,
        "commits": len(stream),
        "retained": len(retained),
        "events": len(events),
        "identities": len(identities),
    }


def _stage_mine(cfg, dry: bool):
    sampled = _stage_dir(cfg, "sample") / "sampled_catalog.csv"
    if dry:
        inputs = [sampled]
        for row in read_catalog(sampled):
            source = _project_source(cfg, row.project_id)
            if source.is_file():
                inputs.append(source)
        return _hash_inputs(inputs)
    projects = sorted(row.project_id for row in read_catalog(sampled))
    tasks = [(cfg, pid) for pid in projects]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            summaries = sorted(pool.map(_mine_one, tasks), key=lambda s: s["project_id"])
    else:
        summaries = [_mine_one(task) for task in tasks]
    with open(_stage_dir(cfg, "mine") / "mine_summary.csv", "w", encoding="utf-8") as fh:
        fh.write("project_id,commits,retained,events,identities\n")
        for s in summaries:
            fh.write(f"{s['project_id']},{s['commits']},{s['retained']},"
                     f"{s['events']},{s['identities']}\n")
    return {"projects": len(summaries)}


def _read_commits_csv(path) -> list[dict]:
    import csv as _csv

    with open(path, newline="", encoding="utf-8") as fh:
        return list(_csv.DictReader(fh))


def _read_metrics_csv(path) -> dict[str, FileMetricVector]:
    import csv as _csv

    deltas: dict[str, FileMetricVector] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in _csv.DictReader(fh):
            vec = FileMetricVector(
                nloc=int(rec["nloc"]), token_count=int(rec["tokens"]),
                function_count=int(rec["functions"]), cyclomatic=int(rec["cyclomatic"]),
                eta1=int(rec["eta1"]), eta2=int(rec["eta2"]),
                n1=int(rec["n1"]), n2=int(rec["n2"]), effort=float(rec["effort"]),
            )
            deltas[rec["commit_hash"]] = deltas.get(rec["commit_hash"], ZERO_VECTOR) + vec
    return deltas


def _retained_commit_records(mine_dir: Path, project_id: str) -> list[CommitRecord]:
    records = []
    for rec in _read_commits_csv(mine_dir / f"{project_id}.commits.csv"):
        if rec["retained"] == "true" and rec["is_merge"] == "false":
            records.append(
                CommitRecord(
                    hash=rec["commit_hash"],
                    parents=[],
                    author_name="",
                    author_email=rec["author_id"],
                    timestamp=parse_ts(rec["timestamp"]),
                    author_id=rec["author_id"],
                )
            )
    return records


def _stage_window(cfg, dry: bool):
    mine_dir = _stage_dir(cfg, "mine")
    sampled = _stage_dir(cfg, "sample") / "sampled_catalog.csv"
    if dry:
        inputs = [sampled, mine_dir / "mine_summary.csv"]
        for row in read_catalog(sampled):
            for kind in ("commits", "events", "metrics"):
                inputs.append(mine_dir / f"{row.project_id}.{kind}.csv")
        return _hash_inputs([p for p in inputs if p.exists()] or [sampled])

    stage_dir = _stage_dir(cfg, "window")
    observations = []
    assignments = []
    for project_id in sorted(row.project_id for row in read_catalog(sampled)):
        commits = _retained_commit_records(mine_dir, project_id)
        if not commits:
            continue
        deltas = _read_metrics_csv(mine_dir / f"{project_id}.metrics.csv")
        for rec in commits:
            deltas.setdefault(rec.hash, ZERO_VECTOR)
        events_by_commit: dict[str, list] = {}
        for ev in read_events_csv(mine_dir / f"{project_id}.events.csv"):
            events_by_commit.setdefault(ev.commit_hash, []).append(ev)
        slices = segment_windows(commits, cfg.window_cfg)
        for window in slices:
            obs = aggregate_productivity(
                window, project_id, deltas, events_by_commit, cfg.window_cfg
            )
            observations.append(obs)
            for rec in window.commits:
                assignments.append((project_id, window.index, rec.hash))

    observations = drop_inactive(observations)
    write_observations(stage_dir / "observations_prod.csv", observations)
    with open(stage_dir / "assignments.csv", "w", encoding="utf-8") as fh:
        fh.write("project_id,window_index,commit_hash\n")
        for project_id, index, hash_ in assignments:
            fh.write(f"{project_id},{index},{hash_}\n")
    meta = {name: cfg.transforms.transform_of(name)
            for name in (*PRODUCTIVITY_FIELDS, "team_size", *NETWORK_FIELDS)}
    with open(stage_dir / "transforms.kv", "w", encoding="utf-8") as fh:
        for name in sorted(meta):
            fh.write(f"{name} = {meta[name]}\n")
    return {"observations": len(observations)}


def _stage_network(cfg, dry: bool):
    window_dir = _stage_dir(cfg, "window")
    mine_dir = _stage_dir(cfg, "mine")
    sampled = _stage_dir(cfg, "sample") / "sampled_catalog.csv"
    if dry:
        inputs = [window_dir / "observations_prod.csv", window_dir / "assignments.csv"]
        inputs.extend(sorted(mine_dir.glob("*.events.csv")))
        return _hash_inputs([p for p in inputs if p.exists()])

    stage_dir = _stage_dir(cfg, "network")
    edges_dir = stage_dir / "edges"
    edges_dir.mkdir(parents=True, exist_ok=True)

    window_of: dict[tuple[str, str], int] = {}
    import csv as _csv

    with open(window_dir / "assignments.csv", newline="", encoding="utf-8") as fh:
        for rec in _csv.DictReader(fh):
            window_of[(rec["project_id"], rec["commit_hash"])] = int(rec["window_index"])

    observations = read_observations(window_dir / "observations_prod.csv")
    team_of = {(obs.project_id, obs.window_index): obs.team_size for obs in observations}
    graphs: dict[tuple[str, int], list] = {}
    for project_id in sorted({obs.project_id for obs in observations}):
        for ev in read_events_csv(mine_dir / f"{project_id}.events.csv"):
            key = (project_id, window_of.get((project_id, ev.commit_hash)))
            if key[1] is None:
                continue  # events from commits outside retained windows
            graphs.setdefault(key, []).append(ev)

    for obs in observations:
        key = (obs.project_id, obs.window_index)
        graph = build_coedit_graph(graphs.get(key, []))
        obs.network = network_metrics(graph, obs.team_size, cfg.eigengap_kind)
        export_edges_csv(graph, edges_dir / f"{obs.project_id}_w{obs.window_index}.csv")

    write_observations(stage_dir / "observations.csv", observations)
    return {"observations": len(observations), "graphs": len(graphs)}


def _stage_stats(cfg, dry: bool):
    obs_path = _stage_dir(cfg, "network") / "observations.csv"
    if dry:
        return _hash_inputs([obs_path] if obs_path.exists() else [])
    stage_dir = _stage_dir(cfg, "stats")
    observations = read_observations(obs_path)
    # log transforms need strictly positive values; windows without the
    # corresponding activity (e.g. no co-edits at all) cannot enter models
    # that use that feature in log space
    log_features = [
        name
        for name in (*PRODUCTIVITY_FIELDS, "team_size", *NETWORK_FIELDS)
        if cfg.transforms.transform_of(name) == "log"
    ]

    def _usable(obs):
        for name in log_features:
            value = obs.team_size if name == "team_size" else (
                getattr(obs, name) if name in PRODUCTIVITY_FIELDS
                else getattr(obs.network, name)
            )
            if value <= 0:
                return False
        return True

    usable = [obs for obs in observations if _usable(obs)]
    n_dropped = len(observations) - len(usable)
    observations = usable
    if len(observations) < 3:
        raise DataError(f"only {len(observations)} observations: too few for statistics")
    table, meta = apply_transforms(observations, cfg.transforms)
    table["ts"] = table.pop("team_size")

    prod_feats = list(PRODUCTIVITY_FIELDS)
    net_feats = ["ts" if f == "team_size" else f for f in ("team_size", *NETWORK_FIELDS)]
    corr_prod = st.pearson_matrix(table, prod_feats)
    corr_net = st.pearson_matrix(table, net_feats)
    cross = st.pearson_matrix(table, prod_feats + net_feats)

    st.write_correlation_csv(stage_dir / "corr_productivity.csv", corr_prod, prod_feats)
    st.write_plot_data(stage_dir / "corr_productivity.plotdata.json", corr_prod, prod_feats)
    st.write_correlation_csv(stage_dir / "corr_network.csv", corr_net, net_feats)
    st.write_plot_data(stage_dir / "corr_network.plotdata.json", corr_net, net_feats)
    st.write_correlation_csv(stage_dir / "corr_cross.csv", cross, prod_feats + net_feats)
    st.write_plot_data(stage_dir / "corr_cross.plotdata.json", cross, prod_feats + net_feats)

    preferred = ["ts" if f == "team_size" else f for f in cfg.preferred_features]
    reps = feature_cluster_select(corr_net, net_feats, cfg.cluster_threshold, preferred)
    (stage_dir / "selected_features.json").write_text(
        json.dumps({"threshold": cfg.cluster_threshold, "representatives": reps},
                   indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    fits = {}
    for family in cfg.families:
        m = cfg.bonferroni_m
        if m is None:
            m = len(cfg.targets) * (len(st.FAMILY_TERMS[family]) - 1)
        for target in cfg.targets:
            result = st.ols_fit(st.ModelSpec(target=target, family=family), table, m=m)
            fits[f"{family}:{target}"] = result
            payload = json.dumps(result.to_json_dict(), indent=2, sort_keys=True) + "\n"
            (stage_dir / f"fit_{family}_{target}.json").write_text(payload, encoding="utf-8")
    combined = {
        key: fits[key].to_json_dict() for key in sorted(fits)
    }
    (stage_dir / "regressions.json").write_text(
        json.dumps(combined, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (stage_dir / "transforms_applied.kv").write_text(
        "".join(f"{name} = {meta[name]}\n" for name in sorted(meta)), encoding="utf-8"
    )
    return {
        "observations": len(observations),
        "dropped_nonpositive": n_dropped,
        "fits": len(fits),
    }


def _stage_report(cfg, dry: bool):
    stats_dir = _stage_dir(cfg, "stats")
    if dry:
        reg = stats_dir / "regressions.json"
        return _hash_inputs([reg] if reg.exists() else [])
    stage_dir = _stage_dir(cfg, "report")
    raw = json.loads((stats_dir / "regressions.json").read_text(encoding="utf-8"))

    results: dict[str, dict[str, dict]] = {}
    for key, payload in raw.items():
        family, target = key.split(":", 1)
        results.setdefault(family, {})[target] = payload

    tables = []
    family_titles = {
        "a": "a) Linear relationship",
        "b": "b) Quadratic relationship",
        "c": "c) Linear relationship controlling for network properties",
        "d": "d) Quadratic relationship controlling for network properties",
        "e": "e) Linear relationship with controls and interaction effects",
    }
    for family in cfg.families:
        fits = [
            _result_from_json(results[family][target])
            for target in cfg.targets
            if family in results and target in results[family]
        ]
        if fits:
            tables.append(st.render_table(fits, family_titles.get(family, family)))
    (stage_dir / "tables.txt").write_text("\n".join(tables), encoding="utf-8")

    derived: dict = {"elasticity_per_doubling": {}, "optimal_team_size": {},
                     "marginal_effects": {}}
    for target in cfg.targets:
        if "c" in results and target in results.get("c", {}):
            fit = _result_from_json(results["c"][target])
            derived["elasticity_per_doubling"][target] = st.elasticity_per_doubling(
                fit.coef("ts").beta
            )
        if "b" in results and target in results.get("b", {}):
            fit = _result_from_json(results["b"][target])
            vertex = st.quadratic_vertex(fit.coef("ts").beta, fit.coef("ts2").beta)
            derived["optimal_team_size"][target] = vertex
        if "e" in results and target in results.get("e", {}):
            fit = _result_from_json(results["e"][target])
            lines = st.marginal_effects(fit, [0.0, 1.0, 2.0])
            derived["marginal_effects"][target] = [
                {"log_ind": v, "intercept": ic, "slope": sl}
                for v, (ic, sl) in zip([0.0, 1.0, 2.0], lines)
            ]
    (stage_dir / "derived.json").write_text(
        json.dumps(derived, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return {"families": len(results)}


def _result_from_json(payload: dict) -> st.RegressionResult:
    spec = st.ModelSpec(target=payload["target"], family=payload["family"])
    terms = [
        st.TermEstimate(
            name=t["name"], beta=t["beta"], se=t["se"], t=t["t"],
            p=t["p"], p_adj=t["p_adj"], stars=t["stars"],
        )
        for t in payload["terms"]
    ]
    return st.RegressionResult(
        spec=spec, terms=terms, r2=payload["r2"], adj_r2=payload["adj_r2"],
        n=payload["n"], m=payload["bonferroni_m"],
        term_means=payload.get("term_means", {}),
    )
