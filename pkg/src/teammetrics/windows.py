"""Fixed 42-week windows: team size and normalized productivity per window.

Each project's history splits into non-overlapping windows anchored at its
first commit. Window length is a whole number of weeks so weekly activity
rhythms cannot alias into the measures. All eight productivity measures
are raw sums over the window divided by the window length factor and by
team size.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from typing import Iterable, Mapping

import numpy as np

from ._util import format_ts, parse_ts
from .codemetrics import ZERO_VECTOR, FileMetricVector
from .ingest import CommitRecord
from .networks import NetworkMetrics
from .ownership import EditEvent

PRODUCTIVITY_FIELDS = ("comms", "events", "levd", "nloc", "tokens", "funcs", "cycc", "haleff")
NETWORK_FIELDS = ("n", "edges", "dens", "diam", "clustc", "ind", "fmodr", "eigg")

OBSERVATION_COLUMNS = (
    "project_id", "window_index", "start_ts", "end_ts", "team_size",
    *PRODUCTIVITY_FIELDS, *NETWORK_FIELDS,
)


@dataclass(frozen=True)
class WindowConfig:
    """Windowing parameters; 294 days = 42 weeks."""

    window_days: int = 294
    anchor: datetime | None = None  # None: the project's first commit
    drop_partial_tail: bool = True
    moving_window_days: int = 294
    dt_scale: float = 1.0  # window-length divisor; 1.0 = per-window units

    def __post_init__(self):
        if self.window_days <= 0 or self.window_days % 7 != 0:
            raise ValueError("window_days must be a positive multiple of 7")
        if self.dt_scale <= 0:
            raise ValueError("dt_scale must be positive")


@dataclass
class WindowObservation:
    """One (project, window) row: the unit of all downstream statistics."""

    project_id: str
    window_index: int
    start_ts: datetime
    end_ts: datetime
    team_size: int
    comms: float = 0.0
    events: float = 0.0
    levd: float = 0.0
    nloc: float = 0.0
    tokens: float = 0.0
    funcs: float = 0.0
    cycc: float = 0.0
    haleff: float = 0.0
    network: NetworkMetrics | None = None
    transforms_applied: bool = False

    def productivity(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in PRODUCTIVITY_FIELDS}


@dataclass(frozen=True)
class TransformSpec:
    """Per-measure skew transform: identity, log (natural), or sqrt.

    Defaults follow the reporting convention of the analysis: all eight
    productivity measures and team size and mean indegree are
    log-transformed, the foreign modification ratio stays untransformed.
    """

    per_measure: Mapping[str, str] = field(default_factory=dict)

    _ALLOWED = ("identity", "log", "sqrt")

    @classmethod
    def default(cls) -> "TransformSpec":
        spec = {name: "log" for name in PRODUCTIVITY_FIELDS}
        spec["team_size"] = "log"
        spec["ind"] = "log"
        spec["fmodr"] = "identity"
        return cls(per_measure=spec)

    def transform_of(self, measure: str) -> str:
        return self.per_measure.get(measure, "identity")

    def apply(self, measure: str, values):
        kind = self.transform_of(measure)
        if kind not in self._ALLOWED:
            raise ValueError(f"unknown transform {kind!r} for {measure}")
        arr = np.asarray(values, dtype=float)
        if kind == "identity":
            return arr.copy()
        if kind == "log":
            if np.any(arr <= 0):
                raise ValueError(f"{measure}: log transform needs strictly positive values")
            return np.log(arr)
        if np.any(arr < 0):
            raise ValueError(f"{measure}: sqrt transform needs non-negative values")
        return np.sqrt(arr)


@dataclass
class WindowSlice:
    """A window interval plus the commits that fall into it."""

    index: int
    start_ts: datetime
    end_ts: datetime
    commits: list[CommitRecord] = field(default_factory=list)


def segment_windows(commits: list[CommitRecord], cfg: WindowConfig) -> list[WindowSlice]:
    """Assign commits to non-overlapping windows of cfg.window_days.

    Window j covers [anchor + j*dt, anchor + (j+1)*dt). With
    drop_partial_tail, only windows fully covered by the history span
    (first to last commit) are returned, so a project must span at least
    one full window to produce any observation.
    """
    if not commits:
        raise ValueError("empty history: nothing to segment")
    anchor = cfg.anchor or min(c.timestamp for c in commits)
    last = max(c.timestamp for c in commits)
    dt = timedelta(days=cfg.window_days)
    span = last - anchor
    full = int(span / dt)
    count = full if cfg.drop_partial_tail else full + 1
    slices = [
        WindowSlice(index=j, start_ts=anchor + j * dt, end_ts=anchor + (j + 1) * dt)
        for j in range(count)
    ]
    for commit in commits:
        j = int((commit.timestamp - anchor) / dt)
        if commit.timestamp < anchor:
            continue
        if j < count:
            slices[j].commits.append(commit)
    return slices


def team_size(commits: Iterable[CommitRecord]) -> int:
    """Distinct resolved contributors among the given commits."""
    return len({c.author_id or c.author_email for c in commits})


def moving_team_size(
    commits: Iterable[CommitRecord], t: datetime, cfg: WindowConfig
) -> int:
    """Distinct contributors with a commit in (t - moving_window_days, t]."""
    lo = t - timedelta(days=cfg.moving_window_days)
    return len(
        {c.author_id or c.author_email for c in commits if lo < c.timestamp <= t}
    )


def aggregate_productivity(
    window: WindowSlice,
    project_id: str,
    deltas: Mapping[str, FileMetricVector],
    events_by_commit: Mapping[str, list[EditEvent]],
    cfg: WindowConfig,
) -> WindowObservation:
    """Sum the window's activity and normalise by window length and team size.

    ``deltas`` maps every retained commit to its summed code delta and
    must cover each commit in the window (a missing key is an error, a
    zero vector is fine). Commit-based measures come straight from the
    events; code-based measures from the deltas.
    """
    ts = team_size(window.commits)
    obs = WindowObservation(
        project_id=project_id,
        window_index=window.index,
        start_ts=window.start_ts,
        end_ts=window.end_ts,
        team_size=ts,
    )
    if not window.commits:
        return obs

    total_delta = ZERO_VECTOR
    n_events = 0
    total_lev = 0
    for commit in window.commits:
        if commit.hash not in deltas:
            raise KeyError(f"missing code delta for retained commit {commit.hash}")
        total_delta = total_delta + deltas[commit.hash]
        for ev in events_by_commit.get(commit.hash, ()):
            n_events += 1
            total_lev += ev.lev_distance

    norm = cfg.dt_scale * ts
    obs.comms = len(window.commits) / norm
    obs.events = n_events / norm
    obs.levd = total_lev / norm
    obs.nloc = total_delta.nloc / norm
    obs.tokens = total_delta.token_count / norm
    obs.funcs = total_delta.function_count / norm
    obs.cycc = total_delta.cyclomatic / norm
    obs.haleff = total_delta.effort / norm
    return obs


def drop_inactive(observations: list[WindowObservation]) -> list[WindowObservation]:
    """Drop windows in which the team was inactive.

    A window is dropped when ALL eight productivity measures are zero
    (the conservative reading; a window with any activity survives).
    """
    return [
        obs
        for obs in observations
        if any(value != 0 for value in obs.productivity().values())
    ]


def apply_transforms(
    observations: list[WindowObservation], spec: TransformSpec
) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Turn observations into transformed feature columns for statistics.

    Returns (table, metadata): the table maps measure name to a transformed
    column; the metadata records which transform was applied to each
    column. Inactive windows must already be dropped, otherwise the log
    transform of a zero measure fails.
    """
    table: dict[str, np.ndarray] = {}
    meta: dict[str, str] = {}
    columns: dict[str, list[float]] = {name: [] for name in PRODUCTIVITY_FIELDS}
    columns["team_size"] = []
    has_network = all(obs.network is not None for obs in observations)
    if has_network:
        for name in NETWORK_FIELDS:
            columns[name] = []
    for obs in observations:
        for name in PRODUCTIVITY_FIELDS:
            columns[name].append(getattr(obs, name))
        columns["team_size"].append(obs.team_size)
        if has_network:
            for name in NETWORK_FIELDS:
                columns[name].append(getattr(obs.network, name))
    for name, values in columns.items():
        table[name] = spec.apply(name, values)
        meta[name] = spec.transform_of(name)
    return table, meta


# -- observation table I/O ----------------------------------------------------

def write_observations(path, observations: list[WindowObservation]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(OBSERVATION_COLUMNS)
        for obs in observations:
            net = obs.network
            row = [
                obs.project_id,
                obs.window_index,
                format_ts(obs.start_ts),
                format_ts(obs.end_ts),
                obs.team_size,
            ]
            row.extend(repr(getattr(obs, name)) for name in PRODUCTIVITY_FIELDS)
            if net is None:
                row.extend([""] * len(NETWORK_FIELDS))
            else:
                row.extend(
                    [net.n, net.edges, repr(net.dens), net.diam, repr(net.clustc),
                     repr(net.ind), repr(net.fmodr), repr(net.eigg)]
                )
            writer.writerow(row)


def read_observations(path) -> list[WindowObservation]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            obs = WindowObservation(
                project_id=rec["project_id"],
                window_index=int(rec["window_index"]),
                start_ts=parse_ts(rec["start_ts"]),
                end_ts=parse_ts(rec["end_ts"]),
                team_size=int(rec["team_size"]),
            )
            for name in PRODUCTIVITY_FIELDS:
                setattr(obs, name, float(rec[name]))
            if rec["n"] != "":
                obs.network = NetworkMetrics(
                    n=int(rec["n"]),
                    edges=int(rec["edges"]),
                    dens=float(rec["dens"]),
                    diam=int(rec["diam"]),
                    clustc=float(rec["clustc"]),
                    ind=float(rec["ind"]),
                    fmodr=float(rec["fmodr"]),
                    eigg=float(rec["eigg"]),
                )
            out.append(obs)
    return out
