"""Synthetic data with planted ground truth, plus brute-force oracles.

The repository generator builds commit dumps line by line, so team sizes,
foreign-modification ratios, and co-edit edge counts per window are known
exactly and recorded in a sidecar; tests never recompute planted values by
hand. Every line of generated text is globally unique and edits preserve
line order, which makes the diff between consecutive versions unambiguous.

The oracles reimplement production computations by the most direct
exhaustive method, sharing no code with the production path. They refuse
sizes beyond desk scale so a misuse cannot silently turn into a slow test.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from ._util import format_ts, parse_kv_file, utc
from .catalog import ProjectMeta, write_catalog
from .ingest import CommitRecord, FileChange, export_dump
from .ownership import ADDITION, DELETION, MODIFICATION, EditEvent

# -- synthetic repositories ---------------------------------------------------


@dataclass(frozen=True)
class SyntheticPlan:
    """Recipe for one synthetic project with planted collaboration structure."""

    seed: int
    project_id: str = "synthetic"
    team_trajectory: tuple[int, ...] = (3, 3)
    commits_per_dev: int = 4
    foreign_edit_prob: float = 0.3
    self_edit_prob: float = 0.2
    delete_prob: float = 0.05
    partner_count: int = 2
    file_count: int = 3
    max_lines_per_commit: int = 3
    window_days: int = 294
    start_ts: datetime = utc(2021, 1, 4)

    def __post_init__(self):
        for name in ("foreign_edit_prob", "self_edit_prob", "delete_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.foreign_edit_prob + self.self_edit_prob + self.delete_prob > 1.0:
            raise ValueError("event probabilities sum to more than 1")
        if not self.team_trajectory or min(self.team_trajectory) < 1:
            raise ValueError("team sizes must be >= 1")
        if self.commits_per_dev < 1 or self.file_count < 1 or self.max_lines_per_commit < 1:
            raise ValueError("counts must be >= 1")
        if self.foreign_edit_prob > 0 and max(self.team_trajectory) == 1:
            raise ValueError("foreign edits are infeasible with a one-developer team")


def load_plan(path) -> SyntheticPlan:
    """Read a SyntheticPlan from a key-value file (team_trajectory is
    comma-separated)."""
    raw = parse_kv_file(path)
    kwargs: dict = {}
    for key in ("seed", "commits_per_dev", "partner_count", "file_count",
                "max_lines_per_commit", "window_days"):
        if key in raw:
            kwargs[key] = int(raw[key])
    for key in ("foreign_edit_prob", "self_edit_prob", "delete_prob"):
        if key in raw:
            kwargs[key] = float(raw[key])
    if "project_id" in raw:
        kwargs["project_id"] = raw["project_id"]
    if "team_trajectory" in raw:
        kwargs["team_trajectory"] = tuple(
            int(v) for v in raw["team_trajectory"].split(",") if v.strip()
        )
    if "start_ts" in raw:
        from ._util import parse_ts

        kwargs["start_ts"] = parse_ts(raw["start_ts"])
    if "seed" not in kwargs:
        raise ValueError("plan file must set a seed")
    return SyntheticPlan(**kwargs)


def _dev_email(i: int) -> str:
    return f"dev{i:02d}@example.org"


def _dev_name(i: int) -> str:
    return f"Dev {i:02d}"


class _WindowTruth:
    """Exact bookkeeping of the events the generator intends to create."""

    def __init__(self, index: int):
        self.index = index
        self.authors: set[str] = set()
        self.commits = 0
        self.events = 0
        self.edges: list[tuple[str, str]] = []
        self.in_all: dict[str, int] = {}
        self.in_foreign: dict[str, int] = {}
        self.nodes: set[str] = set()

    def record_commit(self, author: str):
        self.authors.add(author)
        self.commits += 1

    def record_event(self, editor: str, owner: str | None, kind: str):
        self.events += 1
        self.nodes.add(editor)
        if owner is not None:
            self.nodes.add(owner)
            if kind != ADDITION:
                self.edges.append((owner, editor))
                self.in_all[editor] = self.in_all.get(editor, 0) + 1
                if owner != editor:
                    self.in_foreign[editor] = self.in_foreign.get(editor, 0) + 1

    def summary(self) -> dict:
        preds: dict[str, set[str]] = {node: set() for node in self.nodes}
        for owner, editor in self.edges:
            preds[editor].add(owner)
        mean_ind = (
            sum(len(p) for p in preds.values()) / len(self.nodes) if self.nodes else 0.0
        )
        team = len(self.authors)
        fmodr = (
            sum(
                self.in_foreign.get(node, 0) / total
                for node, total in self.in_all.items()
            )
            / team
            if team
            else 0.0
        )
        return {
            "window_index": self.index,
            "team_size": team,
            "commits": self.commits,
            "events": self.events,
            "coedit_edges": len(self.edges),
            "mean_indegree": mean_ind,
            "fmodr": fmodr,
        }


def generate_repo(plan: SyntheticPlan) -> tuple[list[CommitRecord], dict]:
    """Build the commit stream and its exact ground-truth record.

    Commits are strictly ordered in time; the first commit sits exactly at
    the plan's start timestamp and a final boundary commit closes the last
    window so the intended span is exact. Each commit is one of: additions
    (append fresh lines), self-modification, foreign modification (a
    partner's line), or deletion.
    """
    rng = random.Random(plan.seed)
    files: dict[str, list[tuple[str, str]]] = {}
    counter = 0
    records: list[CommitRecord] = []
    truths: list[_WindowTruth] = []

    def fresh_line() -> str:
        nonlocal counter
        counter += 1
        return f"v{counter} = {counter}"

    def commit_hash() -> str:
        return hashlib.sha1(
            f"{plan.project_id}:{plan.seed}:{len(records)}".encode()
        ).hexdigest()

    def make_commit(author_i: int, when: datetime, changes: list[FileChange]):
        records.append(
            CommitRecord(
                hash=commit_hash(),
                parents=[records[-1].hash] if records else [],
                author_name=_dev_name(author_i),
                author_email=_dev_email(author_i),
                timestamp=when,
                changes=changes,
            )
        )

    def owned_by(owners: set[str]) -> list[tuple[str, int]]:
        found = []
        for path in sorted(files):
            for idx, (owner, _) in enumerate(files[path]):
                if owner in owners:
                    found.append((path, idx))
        return found

    window_len = timedelta(days=plan.window_days)
    for w, size in enumerate(plan.team_trajectory):
        truth = _WindowTruth(w)
        truths.append(truth)
        start = plan.start_ts + w * window_len
        jobs = [
            (dev, k) for k in range(plan.commits_per_dev) for dev in range(size)
        ]
        spacing = window_len / (len(jobs) + 1)
        for slot, (dev, _) in enumerate(jobs):
            when = start if slot == 0 and w == 0 else start + (slot + 1) * spacing
            email = _dev_email(dev)
            partners = {
                _dev_email((dev + off) % size) for off in range(1, plan.partner_count + 1)
            } - {email} if size > 1 else set()

            roll = rng.random()
            if roll < plan.foreign_edit_prob:
                kind = "foreign"
            elif roll < plan.foreign_edit_prob + plan.self_edit_prob:
                kind = "self"
            elif roll < plan.foreign_edit_prob + plan.self_edit_prob + plan.delete_prob:
                kind = "delete"
            else:
                kind = "add"

            changes: list[FileChange] = []
            truth.record_commit(email)
            if kind in ("foreign", "self"):
                targets = owned_by(partners if kind == "foreign" else {email})
                if targets:
                    path, idx = targets[rng.randrange(len(targets))]
                    lines = files[path]
                    pre = "\n".join(text for _, text in lines) + "\n"
                    owner = lines[idx][0]
                    new_text = fresh_line()
                    lines[idx] = (email, new_text)
                    post = "\n".join(text for _, text in lines) + "\n"
                    changes.append(
                        FileChange(path=path, action="modify", pre_text=pre, post_text=post)
                    )
                    truth.record_event(email, owner, MODIFICATION)
                else:
                    kind = "add"
            if kind == "delete":
                targets = owned_by(partners | {email})
                # keep files from vanishing entirely: only delete from files
                # with at least two lines
                targets = [(p, i) for p, i in targets if len(files[p]) > 1]
                if targets:
                    path, idx = targets[rng.randrange(len(targets))]
                    lines = files[path]
                    pre = "\n".join(text for _, text in lines) + "\n"
                    owner = lines[idx][0]
                    del lines[idx]
                    post = "\n".join(text for _, text in lines) + "\n"
                    changes.append(
                        FileChange(path=path, action="modify", pre_text=pre, post_text=post)
                    )
                    truth.record_event(email, owner, DELETION)
                else:
                    kind = "add"
            if kind == "add":
                path = f"src/module_{rng.randrange(plan.file_count)}.py"
                new_lines = [fresh_line() for _ in range(rng.randint(1, plan.max_lines_per_commit))]
                if path in files:
                    lines = files[path]
                    pre = "\n".join(text for _, text in lines) + "\n"
                    lines.extend((email, text) for text in new_lines)
                    post = "\n".join(text for _, text in lines) + "\n"
                    changes.append(
                        FileChange(path=path, action="modify", pre_text=pre, post_text=post)
                    )
                else:
                    files[path] = [(email, text) for text in new_lines]
                    post = "\n".join(text for _, text in files[path]) + "\n"
                    changes.append(FileChange(path=path, action="add", post_text=post))
                for text in new_lines:
                    truth.record_event(email, None, ADDITION)
            make_commit(dev, when, changes)

    # boundary commit: closes the final window so the intended span is exact
    end = plan.start_ts + len(plan.team_trajectory) * window_len
    tail_path = "src/tail.py"
    tail_lines = [fresh_line() for _ in range(2)]
    make_commit(
        0,
        end,
        [FileChange(path=tail_path, action="add", post_text="\n".join(tail_lines) + "\n")],
    )

    truth = {
        "project_id": plan.project_id,
        "seed": plan.seed,
        "window_days": plan.window_days,
        "start_ts": format_ts(plan.start_ts),
        "team_trajectory": list(plan.team_trajectory),
        "windows": [t.summary() for t in truths],
        "total_commits": len(records),
        "developer_count": max(plan.team_trajectory),
    }
    return records, truth


def gen_synthetic_repo(plan: SyntheticPlan, out_dir) -> tuple[Path, Path]:
    """Write ``<project_id>.commits.jsonl`` plus its ground-truth sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, truth = generate_repo(plan)
    dump_path = out / f"{plan.project_id}.commits.jsonl"
    truth_path = out / f"{plan.project_id}.truth.json"
    export_dump(records, dump_path)
    truth_path.write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return dump_path, truth_path


# -- the Simpson's-paradox dataset --------------------------------------------


def gen_simpson_dataset(
    seed: int,
    groups: list[tuple[float, float, float]] | None = None,
    n_per_group: int = 200,
    ts_spacing: float = 1.5,
    ts_sd: float = 0.5,
    ind_sd: float = 0.05,
    noise_sd: float = 0.3,
) -> dict[str, np.ndarray]:
    """Observations whose pooled team-size slope reverses under control.

    Each group g has mean log team size g * ts_spacing, its own mean log
    indegree, intercept, and a negative within-group slope; rising
    intercepts across groups make the pooled simple regression slope
    positive. The pooled slope is verified analytically before any data is
    drawn, so an infeasible layout fails fast. Columns are already in
    transformed (log) space: ts, ind, fmodr, prod, group.
    """
    if groups is None:
        groups = [(0.5, 3.0, -0.4), (1.5, 5.0, -0.4), (2.5, 7.0, -0.4)]
    if n_per_group < 3:
        raise ValueError("need at least 3 rows per group")
    slopes = [g[2] for g in groups]
    if any(s >= 0 for s in slopes):
        raise ValueError("within-group slopes must all be negative")

    mu_ts = np.array([g * ts_spacing for g in range(len(groups))])
    intercepts = np.array([g[1] for g in groups])
    slope_arr = np.array(slopes)
    mu_prod = intercepts + slope_arr * mu_ts
    var_between = float(np.var(mu_ts))
    cov_between = float(np.mean((mu_ts - mu_ts.mean()) * (mu_prod - mu_prod.mean())))
    pooled_slope = (float(np.mean(slope_arr)) * ts_sd**2 + cov_between) / (
        ts_sd**2 + var_between
    )
    if pooled_slope <= 0:
        raise ValueError(
            f"infeasible group layout: analytic pooled slope {pooled_slope:.4f} <= 0"
        )

    rng = np.random.default_rng(seed)
    ts, ind, fmodr, prod, labels = [], [], [], [], []
    for g, (mean_log_ind, intercept, slope) in enumerate(groups):
        x = rng.normal(mu_ts[g], ts_sd, n_per_group)
        ts.append(x)
        ind.append(rng.normal(mean_log_ind, ind_sd, n_per_group))
        fmodr.append(rng.uniform(0.1, 0.9, n_per_group))
        prod.append(intercept + slope * x + rng.normal(0.0, noise_sd, n_per_group))
        labels.append(np.full(n_per_group, g))
    return {
        "ts": np.concatenate(ts),
        "ind": np.concatenate(ind),
        "fmodr": np.concatenate(fmodr),
        "prod": np.concatenate(prod),
        "group": np.concatenate(labels),
    }


def load_simpson_spec(path) -> dict:
    """Read a Simpson-dataset spec file: seed, n_per_group, and groups as
    ``logind:intercept:slope`` triples separated by semicolons."""
    raw = parse_kv_file(path)
    out: dict = {"seed": int(raw["seed"])}
    if "n_per_group" in raw:
        out["n_per_group"] = int(raw["n_per_group"])
    if "groups" in raw:
        groups = []
        for item in raw["groups"].split(";"):
            parts = [float(v) for v in item.split(":")]
            if len(parts) != 3:
                raise ValueError(f"group spec needs 3 values, got {item!r}")
            groups.append(tuple(parts))
        out["groups"] = groups
    return out


def write_simpson_csv(path, table: dict[str, np.ndarray]) -> None:
    names = ["ts", "ind", "fmodr", "prod", "group"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(len(table["ts"])):
            fh.write(
                ",".join(
                    str(int(table[n][i])) if n == "group" else repr(float(table[n][i]))
                    for n in names
                )
                + "\n"
            )


# -- brute-force oracles -------------------------------------------------------


def dp_levenshtein(a: str, b: str, max_len: int = 2000) -> int:
    """Textbook full-matrix edit distance (the oracle for the fast version)."""
    if len(a) > max_len or len(b) > max_len:
        raise ValueError(f"oracle limited to strings of length {max_len}")
    rows, cols = len(a) + 1, len(b) + 1
    d = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        d[i][0] = i
    for j in range(cols):
        d[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost)
    return d[-1][-1]


def _oracle_components(adj: dict[str, set[str]]) -> list[set[str]]:
    # union-find, deliberately different from the production BFS
    parent = {node: node for node in adj}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for node, neigh in adj.items():
        for other in neigh:
            ra, rb = find(node), find(other)
            if ra != rb:
                parent[rb] = ra
    groups: dict[str, set[str]] = {}
    for node in adj:
        groups.setdefault(find(node), set()).add(node)
    return list(groups.values())


def _oracle_largest(adj: dict[str, set[str]]) -> set[str]:
    comps = _oracle_components(adj)
    if not comps:
        return set()
    return min(comps, key=lambda c: (-len(c), min(c)))


def apsp_diameter(adj: dict[str, set[str]], max_nodes: int = 64) -> int:
    """Diameter of the largest component via Floyd-Warshall over all pairs."""
    if len(adj) > max_nodes:
        raise ValueError(f"oracle limited to {max_nodes} nodes")
    comp = sorted(_oracle_largest(adj))
    if len(comp) <= 1:
        return 0
    index = {node: i for i, node in enumerate(comp)}
    n = len(comp)
    inf = float("inf")
    dist = [[inf] * n for _ in range(n)]
    for i in range(n):
        dist[i][i] = 0
    for node in comp:
        for other in adj[node]:
            if other in index:
                dist[index[node]][index[other]] = 1
    for k in range(n):
        for i in range(n):
            dk = dist[i][k]
            if dk == inf:
                continue
            row = dist[i]
            for j in range(n):
                alt = dk + dist[k][j]
                if alt < row[j]:
                    row[j] = alt
    best = max(dist[i][j] for i in range(n) for j in range(n))
    return int(best)


def triple_clustering(adj: dict[str, set[str]], max_nodes: int = 64) -> float:
    """Mean local clustering by exhaustive neighbour-pair enumeration."""
    if len(adj) > max_nodes:
        raise ValueError(f"oracle limited to {max_nodes} nodes")
    if not adj:
        return 0.0
    total = 0.0
    for node in adj:
        neigh = sorted(adj[node])
        pairs = 0
        closed = 0
        for i in range(len(neigh)):
            for j in range(i + 1, len(neigh)):
                pairs += 1
                if neigh[j] in adj[neigh[i]]:
                    closed += 1
        if pairs:
            total += closed / pairs
    return total / len(adj)


def dense_eigengap(adj: dict[str, set[str]], max_nodes: int = 32) -> float:
    """Eigengap from the characteristic polynomial (Faddeev-LeVerrier),
    solved as polynomial roots rather than a symmetric eigendecomposition."""
    if len(adj) > max_nodes:
        raise ValueError(f"oracle limited to {max_nodes} nodes")
    comp = sorted(_oracle_largest(adj))
    if len(comp) <= 1:
        return 0.0
    index = {node: i for i, node in enumerate(comp)}
    n = len(comp)
    a = np.zeros((n, n))
    for node in comp:
        for other in adj[node]:
            if other in index:
                a[index[node], index[other]] = 1.0
    coeffs = [1.0]
    m = np.zeros((n, n))
    for k in range(1, n + 1):
        m = a @ (m + coeffs[-1] * np.eye(n)) if k > 1 else a.copy()
        coeffs.append(float(-np.trace(m) / k))
    roots = np.roots(coeffs)
    eigvals = sorted(roots.real, reverse=True)
    return float(eigvals[0] - eigvals[1])


def _lcs_hunks(pre: list[str], post: list[str]):
    """Hunks from an exact LCS alignment (quadratic DP)."""
    n, m = len(pre), len(post)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if pre[i] == post[j]:
                dp[i][j] = dp[i + 1][j + 1] + 1
            else:
                dp[i][j] = max(dp[i + 1][j], dp[i][j + 1])
    hunks = []
    i = j = 0
    start_i = start_j = 0
    removed: list[str] = []
    added: list[str] = []

    def flush():
        nonlocal removed, added
        if removed or added:
            hunks.append((start_i, removed, start_j, added))
            removed, added = [], []

    while i < n or j < m:
        if i < n and j < m and pre[i] == post[j]:
            flush()
            i += 1
            j += 1
            start_i, start_j = i, j
        elif j == m or (i < n and dp[i + 1][j] >= dp[i][j + 1]):
            removed.append(pre[i])
            i += 1
        else:
            added.append(post[j])
            j += 1
    flush()
    return hunks


def naive_ownership_replay(
    stream: list[CommitRecord], max_commits: int = 100
) -> tuple[list[EditEvent], dict[str, dict[str, list[tuple[str, str]]]]]:
    """Recompute ownership from scratch for every commit.

    For each commit the full first-parent prefix is replayed against an
    empty state, with its own LCS-based diff and its own state handling.
    Quadratic in history length by design; refuses more than
    ``max_commits`` commits.
    """
    if len(stream) > max_commits:
        raise ValueError(f"oracle limited to {max_commits} commits")
    by_hash = {rec.hash: rec for rec in stream}
    chains: dict[str, list[CommitRecord]] = {}
    for rec in stream:
        chain = [rec]
        cursor = rec
        while cursor.parents and cursor.parents[0] in by_hash:
            cursor = by_hash[cursor.parents[0]]
            chain.append(cursor)
        chains[rec.hash] = chain[::-1]

    all_events: list[EditEvent] = []
    states: dict[str, dict[str, list[tuple[str, str]]]] = {}
    for rec in stream:
        state: dict[str, list[tuple[str, str]]] = {}
        events_of_last: list[EditEvent] = []
        for ancestor in chains[rec.hash]:
            events_of_last = _oracle_apply(ancestor, state)
        states[rec.hash] = state
        if rec.is_merge:
            for ev in events_of_last:
                ev.from_merge = True
        else:
            all_events.extend(events_of_last)
    return all_events, states


def _oracle_split(text: str | None) -> list[str]:
    if not text:
        return []
    parts = text.split("\n")
    return parts[:-1] if parts and parts[-1] == "" else parts


def _oracle_apply(rec: CommitRecord, state) -> list[EditEvent]:
    editor = rec.author_id or rec.author_email
    events: list[EditEvent] = []
    for change in rec.changes:
        if change.is_binary:
            continue
        if change.action == "rename" and change.old_path in state:
            state[change.path] = state.pop(change.old_path)
        if change.action == "add":
            lines = _oracle_split(change.post_text)
            state[change.path] = [(editor, ln) for ln in lines]
            for idx, ln in enumerate(lines):
                events.append(
                    EditEvent(
                        commit_hash=rec.hash, editor=editor, path=change.path,
                        kind=ADDITION, post_line_text=ln, lev_distance=len(ln),
                        pre_index=0, post_index=idx,
                    )
                )
            continue
        if change.action == "delete":
            owned = state.pop(change.path, [])
            for idx, (owner, ln) in enumerate(owned):
                events.append(
                    EditEvent(
                        commit_hash=rec.hash, editor=editor, path=change.path,
                        kind=DELETION, pre_line_text=ln, previous_owner=owner,
                        lev_distance=len(ln), pre_index=idx,
                    )
                )
            continue
        pre_lines = _oracle_split(change.pre_text)
        post_lines = _oracle_split(change.post_text)
        owned = state.get(change.path, [(None, ln) for ln in pre_lines])
        rebuilt: list[tuple[str, str]] = []
        cursor = 0
        for pre_start, removed, post_start, added in _lcs_hunks(pre_lines, post_lines):
            rebuilt.extend(owned[cursor:pre_start])
            cursor = pre_start + len(removed)
            paired = min(len(removed), len(added))
            for off in range(paired):
                owner = owned[pre_start + off][0] if pre_start + off < len(owned) else None
                events.append(
                    EditEvent(
                        commit_hash=rec.hash, editor=editor, path=change.path,
                        kind=MODIFICATION, pre_line_text=removed[off],
                        post_line_text=added[off], previous_owner=owner,
                        lev_distance=dp_levenshtein(removed[off], added[off]),
                        pre_index=pre_start + off, post_index=post_start + off,
                    )
                )
                rebuilt.append((editor, added[off]))
            for off in range(paired, len(removed)):
                owner = owned[pre_start + off][0] if pre_start + off < len(owned) else None
                events.append(
                    EditEvent(
                        commit_hash=rec.hash, editor=editor, path=change.path,
                        kind=DELETION, pre_line_text=removed[off],
                        previous_owner=owner, lev_distance=len(removed[off]),
                        pre_index=pre_start + off,
                    )
                )
            for off in range(paired, len(added)):
                events.append(
                    EditEvent(
                        commit_hash=rec.hash, editor=editor, path=change.path,
                        kind=ADDITION, post_line_text=added[off],
                        lev_distance=len(added[off]), pre_index=pre_start,
                        post_index=post_start + off,
                    )
                )
                rebuilt.append((editor, added[off]))
        rebuilt.extend(owned[cursor:])
        state[change.path] = rebuilt
    return events


# -- the shipped mini corpus ---------------------------------------------------


def mini_corpus_plans(seed: int = 20210) -> list[SyntheticPlan]:
    """Plans for the synthetic mini corpus: 12 projects spanning team sizes
    2 to 12, each with enough commits to clear the default filters."""
    shapes = [
        ("alder", (2, 2)),
        ("birch", (3, 3, 3)),
        ("cedar", (4, 5)),
        ("dogwood", (2, 3, 4)),
        ("elm", (6, 6)),
        ("fir", (8, 8)),
        ("ginkgo", (5, 4, 3)),
        ("hazel", (10, 10)),
        ("ironwood", (3, 2)),
        ("juniper", (7, 7, 7)),
        ("katsura", (12, 12)),
        ("larch", (2, 2, 2, 2)),
    ]
    plans = []
    for offset, (name, trajectory) in enumerate(shapes):
        total_devs = sum(trajectory)
        commits_per_dev = max(4, -(-50 // total_devs))  # ceil division
        plans.append(
            SyntheticPlan(
                seed=seed + offset,
                project_id=name,
                team_trajectory=trajectory,
                commits_per_dev=commits_per_dev,
                foreign_edit_prob=0.35,
                self_edit_prob=0.2,
                delete_prob=0.05,
                partner_count=2,
                file_count=3,
            )
        )
    return plans


def build_mini_corpus(out_dir, seed: int = 20210) -> tuple[Path, Path]:
    """Generate the mini corpus: dumps plus a catalog that also contains
    rows designed to fail each filter. Returns (catalog_path, dumps_dir)."""
    out = Path(out_dir)
    dumps = out / "dumps"
    dumps.mkdir(parents=True, exist_ok=True)
    rows = []
    for plan in mini_corpus_plans(seed):
        records, truth = generate_repo(plan)
        export_dump(records, dumps / f"{plan.project_id}.commits.jsonl")
        (dumps / f"{plan.project_id}.truth.json").write_text(
            json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        authors = {rec.author_email for rec in records}
        rows.append(
            ProjectMeta(
                project_id=plan.project_id,
                commit_count=len(records),
                developer_count=len(authors),
                first_commit_ts=records[0].timestamp,
                last_commit_ts=records[-1].timestamp,
                is_fork=False,
                language_fractions={"Python": 1.0},
                root_commit_hash=records[0].hash,
            )
        )

    # rows that must fall to each filter (no dumps needed: they are never
    # sampled)
    rows.append(ProjectMeta("solo-project", 400, 1, utc(2021, 1, 1), utc(2022, 6, 1),
                            False, {"Python": 1.0}, "feedfeed01"))
    rows.append(ProjectMeta("tiny-project", 12, 3, utc(2021, 1, 1), utc(2022, 6, 1),
                            False, {"Python": 1.0}, "feedfeed02"))
    rows.append(ProjectMeta("young-project", 80, 3, utc(2022, 1, 1), utc(2022, 3, 1),
                            False, {"Python": 1.0}, "feedfeed03"))
    rows.append(ProjectMeta("forked-project", 300, 6, utc(2021, 1, 1), utc(2022, 6, 1),
                            True, {"Python": 1.0}, "feedfeed04"))
    rows.append(ProjectMeta("stale-project", 300, 6, utc(2015, 1, 1), utc(2019, 6, 1),
                            False, {"Python": 1.0}, "feedfeed05"))
    rows.append(ProjectMeta("website-project", 300, 6, utc(2021, 1, 1), utc(2022, 6, 1),
                            False, {"HTML": 0.9, "Python": 0.1}, "feedfeed06"))

    catalog_path = out / "catalog.csv"
    write_catalog(catalog_path, rows)
    return catalog_path, dumps
