"""Line-ownership replay over a commit stream.

Replaying a stream yields one EditEvent per line-level addition, deletion,
or modification, carrying the editing developer, the previous owner of the
line, and the character-level Levenshtein distance of the change. Ownership
states derive from the first parent only, so the per-commit state is a pure
function of the stream prefix.
"""

from __future__ import annotations

import csv
import difflib
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .ingest import CommitRecord

ADDITION = "addition"
DELETION = "deletion"
MODIFICATION = "modification"

# One owned line: (owner canonical id, line text).
OwnedLine = tuple[str, str]
# Ownership state: path -> ordered owned lines.
OwnershipState = dict[str, list[OwnedLine]]


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance between two strings.

    Two-row dynamic program with common prefix/suffix stripping; O(len(a)
    * len(b)) worst case, which is fine at line granularity.
    """
    if a == b:
        return 0
    # strip common prefix and suffix; they never contribute edits
    lo = 0
    hi_a, hi_b = len(a), len(b)
    while lo < hi_a and lo < hi_b and a[lo] == b[lo]:
        lo += 1
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    a, b = a[lo:hi_a], b[lo:hi_b]
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def split_lines(text: str | None) -> list[str]:
    """Split on newline without inventing a phantom line for a trailing one."""
    if not text:
        return []
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


@dataclass
class EditEvent:
    """One line-level edit: who changed whose line, and by how much."""

    commit_hash: str
    editor: str
    path: str
    kind: str
    pre_line_text: str | None = None
    post_line_text: str | None = None
    previous_owner: str | None = None
    lev_distance: int = 0
    from_merge: bool = False
    # positions used only for deterministic export ordering
    pre_index: int | None = None
    post_index: int | None = None


@dataclass(frozen=True)
class OutlierConfig:
    """Percentile bounds for trimming unusually large commits per project."""

    p_low: float = 2.5
    p_high: float = 97.5
    scope: str = "per-project"

    def __post_init__(self):
        if not 0.0 <= self.p_low < self.p_high <= 100.0:
            raise ValueError("need 0 <= p_low < p_high <= 100")


def pair_hunk_lines(
    removed: list[str], added: list[str]
) -> tuple[list[tuple[str, str]], list[str], list[str]]:
    """Pair one replace-hunk positionally: i-th removed with i-th added.

    Leftover removed lines are pure deletions, leftover added lines pure
    additions. Positional pairing is deterministic and cheap; it makes no
    attempt at similarity matching.
    """
    k = min(len(removed), len(added))
    pairs = list(zip(removed[:k], added[:k]))
    return pairs, removed[k:], added[k:]


def hunks_from_texts(pre_lines: list[str], post_lines: list[str]):
    """Diff two line lists into (pre_start, removed, post_start, added) hunks."""
    matcher = difflib.SequenceMatcher(a=pre_lines, b=post_lines, autojunk=False)
    hunks = []
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        hunks.append((i1, pre_lines[i1:i2], j1, post_lines[j1:j2]))
    return hunks


@dataclass
class ReplayCounters:
    """Non-fatal anomalies observed while replaying a stream."""

    binary_skipped: int = 0
    path_conflicts: int = 0
    untracked_pre_lines: int = 0


def replay_ownership(
    stream: list[CommitRecord],
    emit_merges: bool = False,
    keep_states: bool = True,
    counters: ReplayCounters | None = None,
) -> tuple[list[EditEvent], dict[str, OwnershipState]]:
    """Replay a resolved, topologically ordered stream into edit events.

    Each commit's state derives from its FIRST parent's state (empty for
    roots). Additions set the editor as owner; modifications and deletions
    emit events whose previous_owner is the line's owner in the parent
    state (a self-event when owner == editor). Renames carry ownership to
    the new path. Merge commits update ownership but their events are
    excluded from the returned list unless ``emit_merges``.
    """
    states: dict[str, OwnershipState] = {}
    events: list[EditEvent] = []
    counters = counters if counters is not None else ReplayCounters()
    seen: dict[str, OwnershipState] = {}
    in_stream = {rec.hash for rec in stream}
    # number of in-stream children still waiting on each commit's state
    waiters: dict[str, int] = {rec.hash: 0 for rec in stream}
    for rec in stream:
        for parent in rec.parents:
            if parent in waiters:
                waiters[parent] += 1

    for rec in stream:
        editor = rec.author_id or rec.author_email
        if rec.parents:
            first = rec.parents[0]
            if first in seen:
                base = seen[first]
            elif first not in in_stream:
                base = {}  # parent outside the stream: start from empty
            else:
                raise KeyError(f"state missing for parent {first}")
        else:
            base = {}
        state: OwnershipState = dict(base)
        commit_events = _apply_commit(rec, editor, state, counters)
        seen[rec.hash] = state
        if keep_states:
            states[rec.hash] = state
        else:
            for parent in rec.parents:
                if parent in waiters:
                    waiters[parent] -= 1
                    if waiters[parent] == 0:
                        seen.pop(parent, None)
        if rec.is_merge:
            for ev in commit_events:
                ev.from_merge = True
            if emit_merges:
                events.extend(commit_events)
        else:
            events.extend(commit_events)
    return events, states


def _apply_commit(rec, editor, state, counters) -> list[EditEvent]:
    out: list[EditEvent] = []
    for change in rec.changes:
        if change.is_binary:
            counters.binary_skipped += 1
            continue
        if change.action == "rename":
            if change.path in state:
                counters.path_conflicts += 1
            if change.old_path in state:
                state[change.path] = state.pop(change.old_path)
        if change.action == "add":
            lines = split_lines(change.post_text)
            state[change.path] = [(editor, ln) for ln in lines]
            for idx, ln in enumerate(lines):
                out.append(
                    EditEvent(
                        commit_hash=rec.hash, editor=editor, path=change.path,
                        kind=ADDITION, post_line_text=ln,
                        lev_distance=len(ln), pre_index=0, post_index=idx,
                    )
                )
            continue
        if change.action == "delete":
            owned = state.pop(change.path, None)
            if owned is None:
                owned = [(None, ln) for ln in split_lines(change.pre_text)]
                counters.untracked_pre_lines += len(owned)
            for idx, (owner, ln) in enumerate(owned):
                out.append(
                    EditEvent(
                        commit_hash=rec.hash, editor=editor, path=change.path,
                        kind=DELETION, pre_line_text=ln, previous_owner=owner,
                        lev_distance=len(ln), pre_index=idx,
                    )
                )
            continue
        # modify, or rename with content changes
        pre_lines = split_lines(change.pre_text)
        post_lines = split_lines(change.post_text)
        owned = state.get(change.path)
        if owned is None:
            owned = [(None, ln) for ln in pre_lines]
            counters.untracked_pre_lines += len(owned)
        new_owned = list(owned)
        shift = 0  # accumulated index shift from earlier hunks
        for pre_start, removed, post_start, added in hunks_from_texts(pre_lines, post_lines):
            pairs, deletions, additions = pair_hunk_lines(removed, added)
            replacement: list[OwnedLine] = []
            for offset, (pre_ln, post_ln) in enumerate(pairs):
                owner = _owner_at(owned, pre_start + offset, counters)
                out.append(
                    EditEvent(
                        commit_hash=rec.hash, editor=editor, path=change.path,
                        kind=MODIFICATION, pre_line_text=pre_ln,
                        post_line_text=post_ln, previous_owner=owner,
                        lev_distance=levenshtein(pre_ln, post_ln),
                        pre_index=pre_start + offset,
                        post_index=post_start + offset,
                    )
                )
                replacement.append((editor, post_ln))
            for offset, pre_ln in enumerate(deletions, len(pairs)):
                owner = _owner_at(owned, pre_start + offset, counters)
                out.append(
                    EditEvent(
                        commit_hash=rec.hash, editor=editor, path=change.path,
                        kind=DELETION, pre_line_text=pre_ln, previous_owner=owner,
                        lev_distance=len(pre_ln), pre_index=pre_start + offset,
                    )
                )
            for offset, post_ln in enumerate(additions, len(pairs)):
                out.append(
                    EditEvent(
                        commit_hash=rec.hash, editor=editor, path=change.path,
                        kind=ADDITION, post_line_text=post_ln,
                        lev_distance=len(post_ln), pre_index=pre_start,
                        post_index=post_start + offset,
                    )
                )
                replacement.append((editor, post_ln))
            lo = pre_start + shift
            new_owned[lo : lo + len(removed)] = replacement
            shift += len(added) - len(removed)
        state[change.path] = new_owned
    return out


def _owner_at(owned: list[OwnedLine], index: int, counters) -> str | None:
    if 0 <= index < len(owned):
        return owned[index][0]
    counters.untracked_pre_lines += 1
    return None


def commit_lev_totals(
    stream: list[CommitRecord], events: Iterable[EditEvent]
) -> dict[str, int]:
    """Total Levenshtein distance per non-merge commit (0 when no events)."""
    totals = {rec.hash: 0 for rec in stream if not rec.is_merge}
    for ev in events:
        if not ev.from_merge and ev.commit_hash in totals:
            totals[ev.commit_hash] += ev.lev_distance
    return totals


def filter_outlier_commits(
    commit_totals: Mapping[str, float], cfg: OutlierConfig
) -> set[str]:
    """Retain commits with totals inside the configured percentile band.

    Percentiles use linear interpolation between closest ranks over the
    project's own totals; bounds are inclusive.
    """
    if not commit_totals:
        raise ValueError("no commit totals: cannot compute percentiles")
    values = np.array(list(commit_totals.values()), dtype=float)
    lo = np.percentile(values, cfg.p_low, method="linear")
    hi = np.percentile(values, cfg.p_high, method="linear")
    return {h for h, total in commit_totals.items() if lo <= total <= hi}


EVENT_COLUMNS = ("commit_hash", "editor", "path", "kind", "previous_owner", "lev_distance")


def export_events_csv(events: list[EditEvent], stream: list[CommitRecord], path) -> None:
    """Write events as CSV, ordered by commit order, path, then line index."""
    order = {rec.hash: i for i, rec in enumerate(stream)}
    ranked = sorted(
        events,
        key=lambda ev: (
            order.get(ev.commit_hash, len(order)),
            ev.path,
            ev.pre_index if ev.pre_index is not None else 0,
            ev.post_index if ev.post_index is not None else -1,
            ev.kind,
        ),
    )
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVENT_COLUMNS)
        for ev in ranked:
            writer.writerow(
                [
                    ev.commit_hash,
                    ev.editor,
                    ev.path,
                    ev.kind,
                    ev.previous_owner or "",
                    ev.lev_distance,
                ]
            )


def read_events_csv(path) -> list[EditEvent]:
    """Load an exported events CSV (texts are not round-tripped)."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            out.append(
                EditEvent(
                    commit_hash=rec["commit_hash"],
                    editor=rec["editor"],
                    path=rec["path"],
                    kind=rec["kind"],
                    previous_owner=rec["previous_owner"] or None,
                    lev_distance=int(rec["lev_distance"]),
                )
            )
    return out
