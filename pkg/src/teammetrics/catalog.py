"""Project catalog: metadata filtering, log2 strata, and seeded sampling.

A catalog is a local CSV file with one row per repository. Filtering keeps
original, collaborative, active software projects; stratification splits
the team-size range into geometrically spaced bins so a fixed per-stratum
quota yields a sample that covers the whole range instead of being
dominated by the small-team majority.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from pathlib import Path

from ._util import format_ts, parse_bool, parse_kv_file, parse_ts, utc

# Default language allow-list for the purpose filter. The exact 17-language
# set used by common code-analysis tooling is not pinned anywhere stable,
# so this is a documented, configurable default rather than a canonical set.
DEFAULT_LANGUAGES = frozenset(
    {
        "C", "C++", "C#", "Go", "Java", "JavaScript", "TypeScript",
        "Objective-C", "PHP", "Python", "Ruby", "Rust", "Scala",
        "Swift", "Kotlin", "Lua", "Perl",
    }
)

_FRACTION_EPS = 1e-9

CATALOG_COLUMNS = (
    "project_id",
    "commit_count",
    "developer_count",
    "first_commit_ts",
    "last_commit_ts",
    "is_fork",
    "root_commit_hash",
    "language_fractions",
)


@dataclass(frozen=True)
class ProjectMeta:
    """One catalog row: the metadata used for selection and sampling."""

    project_id: str
    commit_count: int
    developer_count: int
    first_commit_ts: datetime
    last_commit_ts: datetime
    is_fork: bool
    language_fractions: dict[str, float] = field(default_factory=dict)
    root_commit_hash: str | None = None
    team_size_latest: int | None = None

    def __post_init__(self):
        if self.commit_count < 0 or self.developer_count < 0:
            raise ValueError(f"{self.project_id}: negative counts")
        if self.last_commit_ts < self.first_commit_ts:
            raise ValueError(f"{self.project_id}: last commit precedes first")
        total = sum(self.language_fractions.values())
        if total > 1.0 + _FRACTION_EPS:
            raise ValueError(f"{self.project_id}: language fractions sum to {total}")
        if any(f < 0 for f in self.language_fractions.values()):
            raise ValueError(f"{self.project_id}: negative language fraction")

    @property
    def span_days(self) -> float:
        return (self.last_commit_ts - self.first_commit_ts) / timedelta(days=1)


@dataclass(frozen=True)
class FilterConfig:
    """Thresholds for keeping a project in the analysis corpus."""

    min_developers: int = 2
    min_commits: int = 50
    min_span_days: int = 100
    min_age_days: int = 294
    exclude_forks: bool = True
    activity_cutoff: datetime = utc(2020, 5, 1)
    purpose_threshold: float = 0.75
    supported_languages: frozenset[str] = DEFAULT_LANGUAGES

    def __post_init__(self):
        if not 0.0 <= self.purpose_threshold <= 1.0:
            raise ValueError("purpose_threshold must be in [0, 1]")
        for name in ("min_developers", "min_commits", "min_span_days", "min_age_days"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass
class Stratum:
    """One team-size bin; bounds are inclusive."""

    lower: int
    upper: int
    project_count: int = 0
    sample_quota: int = 0

    def contains(self, team_size: int) -> bool:
        return self.lower <= team_size <= self.upper


def purpose_filter(fractions: dict[str, float], supported, threshold: float) -> bool:
    """True when at least `threshold` of the code is in supported languages."""
    covered = sum(frac for lang, frac in fractions.items() if lang in supported)
    return covered >= threshold


def apply_filters(rows: list[ProjectMeta], cfg: FilterConfig) -> list[ProjectMeta]:
    """Keep rows describing original, collaborative, active software projects.

    Thresholds are inclusive (a project with exactly `min_commits` commits
    is retained); activity requires the last commit strictly after the
    cutoff. Row order is preserved and the input list is not modified.
    """
    kept = []
    for row in rows:
        if row.developer_count < cfg.min_developers:
            continue
        if row.commit_count < cfg.min_commits:
            continue
        if row.span_days < cfg.min_span_days or row.span_days < cfg.min_age_days:
            continue
        if cfg.exclude_forks and row.is_fork:
            continue
        if row.last_commit_ts <= cfg.activity_cutoff:
            continue
        if not purpose_filter(row.language_fractions, cfg.supported_languages,
                              cfg.purpose_threshold):
            continue
        kept.append(row)
    return kept


def compute_strata(min_ts: int, max_ts: int, k: int) -> list[Stratum]:
    """Split [min_ts, max_ts] into k contiguous geometrically spaced strata.

    Upper bounds follow round-half-even(min_ts * r**j) with
    r = (max_ts/min_ts)**(1/k), so consecutive strata grow by a constant
    factor (team size roughly doubles per stratum when the range spans
    ten doublings). The last upper bound is pinned to max_ts.
    """
    if k < 1:
        raise ValueError(f"invalid k: {k}")
    if min_ts > max_ts or min_ts < 1:
        raise ValueError(f"invalid range: [{min_ts}, {max_ts}]")
    if k > max_ts - min_ts + 1:
        raise ValueError(f"cannot split {max_ts - min_ts + 1} integers into {k} strata")

    ratio = (max_ts / min_ts) ** (1.0 / k)
    uppers = [round(min_ts * ratio**j) for j in range(1, k)]
    uppers.append(max_ts)
    # Rounding can collapse neighbours on short ranges; restore strict
    # monotonicity without moving the pinned endpoints.
    for j in range(1, k):
        if uppers[j] <= uppers[j - 1]:
            uppers[j] = uppers[j - 1] + 1
    for j in range(k - 2, -1, -1):
        if uppers[j] >= uppers[j + 1]:
            uppers[j] = uppers[j + 1] - 1

    strata = []
    lower = min_ts
    for upper in uppers:
        strata.append(Stratum(lower=lower, upper=upper))
        lower = upper + 1
    return strata


def tally_strata(rows: list[ProjectMeta], strata: list[Stratum], quota: int) -> None:
    """Fill project_count and sample_quota in place from the given rows."""
    for stratum in strata:
        count = sum(
            1
            for row in rows
            if row.team_size_latest is not None and stratum.contains(row.team_size_latest)
        )
        stratum.project_count = count
        stratum.sample_quota = min(quota, count)


def _partial_shuffle(indices: list[int], take: int, rng: random.Random) -> list[int]:
    # Partial Fisher-Yates: after the loop the first `take` slots hold a
    # uniform without-replacement draw. Kept as the documented draw
    # algorithm so an independent implementation can reproduce it.
    n = len(indices)
    for i in range(min(take, n)):
        j = rng.randrange(i, n)
        indices[i], indices[j] = indices[j], indices[i]
    return indices[:take]


def stratified_sample(
    rows: list[ProjectMeta],
    strata: list[Stratum],
    quota: int,
    seed: int,
) -> list[ProjectMeta]:
    """Draw up to `quota` projects per stratum, uniformly without replacement.

    Every row must carry team_size_latest; rows outside all strata are not
    part of the sampling frame. The draw is deterministic for a fixed seed
    (one partial Fisher-Yates shuffle per stratum, strata in order). After
    drawing, rows sharing a root_commit_hash are collapsed to the one with
    the earliest first commit, a cheap deterministic stand-in for manual
    clone removal.
    """
    if quota < 1:
        raise ValueError("quota must be >= 1")
    for row in rows:
        if row.team_size_latest is None:
            raise ValueError(f"{row.project_id}: missing team_size_latest")

    rng = random.Random(seed)
    picked: list[ProjectMeta] = []
    for stratum in strata:
        members = [r for r in rows if stratum.contains(r.team_size_latest)]
        take = min(quota, len(members))
        chosen = _partial_shuffle(list(range(len(members))), take, rng)
        picked.extend(members[i] for i in sorted(chosen))

    slot_by_root: dict[str, int] = {}
    deduped: list[ProjectMeta] = []
    for row in picked:
        key = row.root_commit_hash
        if key is None:
            deduped.append(row)
            continue
        slot = slot_by_root.get(key)
        if slot is None:
            slot_by_root[key] = len(deduped)
            deduped.append(row)
        else:
            best = deduped[slot]
            if (row.first_commit_ts, row.project_id) < (best.first_commit_ts, best.project_id):
                deduped[slot] = row
    return deduped


def fill_team_sizes(rows: list[ProjectMeta], sizes: dict[str, int]) -> list[ProjectMeta]:
    """Return rows with team_size_latest filled from a project_id -> size map."""
    return [
        replace(row, team_size_latest=sizes[row.project_id]) if row.project_id in sizes else row
        for row in rows
    ]


# -- catalog file format -----------------------------------------------------

def _encode_fractions(fractions: dict[str, float]) -> str:
    return ";".join(f"{lang}:{frac!r}" for lang, frac in sorted(fractions.items()))


def _decode_fractions(text: str) -> dict[str, float]:
    out: dict[str, float] = {}
    if not text.strip():
        return out
    for item in text.split(";"):
        lang, sep, frac = item.partition(":")
        if not sep or not lang:
            raise ValueError(f"malformed language_fractions entry: {item!r}")
        out[lang] = float(frac)
    return out


def read_catalog(path) -> list[ProjectMeta]:
    """Load a catalog CSV (see CATALOG_COLUMNS for the header)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(CATALOG_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: catalog missing columns {sorted(missing)}")
        for rec in reader:
            rows.append(
                ProjectMeta(
                    project_id=rec["project_id"],
                    commit_count=int(rec["commit_count"]),
                    developer_count=int(rec["developer_count"]),
                    first_commit_ts=parse_ts(rec["first_commit_ts"]),
                    last_commit_ts=parse_ts(rec["last_commit_ts"]),
                    is_fork=parse_bool(rec["is_fork"]),
                    root_commit_hash=rec["root_commit_hash"] or None,
                    language_fractions=_decode_fractions(rec["language_fractions"]),
                )
            )
    return rows


def write_catalog(path, rows: list[ProjectMeta]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CATALOG_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.project_id,
                    row.commit_count,
                    row.developer_count,
                    format_ts(row.first_commit_ts),
                    format_ts(row.last_commit_ts),
                    "true" if row.is_fork else "false",
                    row.root_commit_hash or "",
                    _encode_fractions(row.language_fractions),
                ]
            )


def load_filter_config(path) -> FilterConfig:
    """Read a FilterConfig from a plain key-value file (all keys optional)."""
    raw = parse_kv_file(path)
    kwargs = {}
    for key in ("min_developers", "min_commits", "min_span_days", "min_age_days"):
        if key in raw:
            kwargs[key] = int(raw[key])
    if "exclude_forks" in raw:
        kwargs["exclude_forks"] = parse_bool(raw["exclude_forks"])
    if "activity_cutoff" in raw:
        kwargs["activity_cutoff"] = parse_ts(raw["activity_cutoff"])
    if "purpose_threshold" in raw:
        kwargs["purpose_threshold"] = float(raw["purpose_threshold"])
    if "supported_languages" in raw:
        kwargs["supported_languages"] = frozenset(
            lang.strip() for lang in raw["supported_languages"].split(",") if lang.strip()
        )
    return FilterConfig(**kwargs)
