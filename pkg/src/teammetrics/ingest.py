"""Commit-stream extraction and author identity resolution.

Two sources produce the same canonical stream: an on-disk git repository
(read by shelling out to ``git``) or a portable ``.commits.jsonl`` dump
with one commit per line and full pre/post texts for every changed file.
The dump format makes the whole downstream pipeline testable without a
version-control installation.
"""

from __future__ import annotations

import csv
import heapq
import json
import re
import subprocess
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path

from ._util import format_ts, parse_ts
from .errors import CyclicHistoryError, UnreadableSourceError

DUMP_SUFFIX = ".commits.jsonl"

ACTIONS = ("add", "delete", "modify", "rename")


@dataclass
class FileChange:
    """One changed path within a commit, with full pre/post text."""

    path: str
    action: str
    old_path: str | None = None
    pre_text: str | None = None
    post_text: str | None = None
    is_binary: bool = False

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")
        if self.action == "add" and self.pre_text is not None:
            raise ValueError(f"{self.path}: added file cannot have pre_text")
        if self.action == "delete" and self.post_text is not None:
            raise ValueError(f"{self.path}: deleted file cannot have post_text")
        if self.action == "rename" and self.old_path is None:
            raise ValueError(f"{self.path}: rename without old_path")
        if self.is_binary and (self.pre_text is not None or self.post_text is not None):
            raise ValueError(f"{self.path}: binary change cannot carry text")


@dataclass
class CommitRecord:
    """One commit in the canonical stream (changes are vs the first parent)."""

    hash: str
    parents: list[str]
    author_name: str
    author_email: str
    timestamp: datetime
    changes: list[FileChange] = field(default_factory=list)
    author_id: str | None = None

    @property
    def is_merge(self) -> bool:
        return len(self.parents) >= 2


@dataclass
class Identity:
    """A resolved developer: one canonical id covering all observed aliases."""

    canonical_id: str
    aliases: set[tuple[str, str]] = field(default_factory=set)


def extract_commit_stream(source) -> list[CommitRecord]:
    """Read a repository or dump file into a topologically ordered stream.

    Parents precede children; ties are broken by (timestamp, hash)
    ascending, so two extractions of the same source are identical.
    Non-merge commits carry the diff against their first parent (against
    the empty tree for roots); merge commits carry the diff against their
    first parent as well.
    """
    src = Path(source)
    if src.is_dir():
        return _extract_from_git(src)
    if src.is_file():
        return _toposort(_read_dump(src))
    raise UnreadableSourceError(f"no such repository or dump: {source}")


def export_dump(stream: list[CommitRecord], path) -> None:
    """Write the stream in the portable JSON Lines dump format."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in stream:
            fh.write(json.dumps(_commit_to_json(rec), ensure_ascii=True))
            fh.write("\n")


def _commit_to_json(rec: CommitRecord) -> dict:
    return {
        "hash": rec.hash,
        "parents": list(rec.parents),
        "author_name": rec.author_name,
        "author_email": rec.author_email,
        "timestamp": format_ts(rec.timestamp),
        "is_merge": rec.is_merge,
        "changes": [
            {
                "path": ch.path,
                "old_path": ch.old_path,
                "action": ch.action,
                "pre_text": ch.pre_text,
                "post_text": ch.post_text,
                "is_binary": ch.is_binary,
            }
            for ch in rec.changes
        ],
    }


def _read_dump(path) -> list[CommitRecord]:
    records = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UnreadableSourceError(f"cannot read dump {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise UnreadableSourceError(f"{path}:{lineno}: bad JSON: {exc}") from exc
        changes = [
            FileChange(
                path=ch["path"],
                old_path=ch.get("old_path"),
                action=ch["action"],
                pre_text=ch.get("pre_text"),
                post_text=ch.get("post_text"),
                is_binary=bool(ch.get("is_binary", False)),
            )
            for ch in obj.get("changes", [])
        ]
        rec = CommitRecord(
            hash=obj["hash"],
            parents=list(obj.get("parents", [])),
            author_name=obj.get("author_name", ""),
            author_email=obj.get("author_email", ""),
            timestamp=parse_ts(obj["timestamp"]),
            changes=changes,
        )
        if "is_merge" in obj and bool(obj["is_merge"]) != rec.is_merge:
            raise UnreadableSourceError(
                f"{path}:{lineno}: is_merge flag contradicts parent count"
            )
        records.append(rec)
    return records


def _toposort(records: list[CommitRecord]) -> list[CommitRecord]:
    """Order parents before children; ties by (timestamp, hash)."""
    by_hash = {}
    for rec in records:
        if rec.hash in by_hash:
            raise UnreadableSourceError(f"duplicate commit hash {rec.hash}")
        by_hash[rec.hash] = rec

    children: dict[str, list[str]] = {h: [] for h in by_hash}
    pending: dict[str, int] = {}
    for rec in records:
        known_parents = [p for p in rec.parents if p in by_hash]
        pending[rec.hash] = len(known_parents)
        for parent in known_parents:
            children[parent].append(rec.hash)

    ready = [
        (rec.timestamp, rec.hash) for rec in records if pending[rec.hash] == 0
    ]
    heapq.heapify(ready)
    ordered = []
    while ready:
        _, h = heapq.heappop(ready)
        rec = by_hash[h]
        ordered.append(rec)
        for child in children[h]:
            pending[child] -= 1
            if pending[child] == 0:
                heapq.heappush(ready, (by_hash[child].timestamp, child))
    if len(ordered) != len(records):
        stuck = sorted(h for h, n in pending.items() if n > 0)
        raise CyclicHistoryError(f"commit history contains a cycle: {stuck[:5]}")
    return ordered


# -- git extraction -----------------------------------------------------------

_EMPTY_TREE = "4b825dc642cb6eb9a060e54bf8d69288fbee4904"


def _git(repo: Path, *args: str, binary: bool = False):
    try:
        out = subprocess.run(
            ["git", "-C", str(repo), *args],
            check=True,
            capture_output=True,
        )
    except FileNotFoundError as exc:
        raise UnreadableSourceError("git executable not found") from exc
    except subprocess.CalledProcessError as exc:
        stderr = exc.stderr.decode("utf-8", "replace").strip()
        raise UnreadableSourceError(f"git {' '.join(args)} failed: {stderr}") from exc
    return out.stdout if binary else out.stdout.decode("utf-8", "replace")


def _blob_text(repo: Path, commit: str, path: str) -> tuple[str | None, bool]:
    """Fetch one file version; (None, True) marks undecodable/binary content."""
    data = _git(repo, "show", f"{commit}:{path}", binary=True)
    if b"\x00" in data:
        return None, True
    try:
        return data.decode("utf-8"), False
    except UnicodeDecodeError:
        return None, True


def _extract_from_git(repo: Path) -> list[CommitRecord]:
    log = _git(
        repo, "log", "--all", "--format=%H%x00%P%x00%an%x00%ae%x00%aI"
    )
    records = []
    for line in log.splitlines():
        if not line.strip():
            continue
        hash_, parents, name, email, when = line.split("\x00")
        records.append(
            CommitRecord(
                hash=hash_,
                parents=parents.split() if parents else [],
                author_name=name,
                author_email=email,
                timestamp=parse_ts(when),
            )
        )
    ordered = _toposort(records)
    for rec in ordered:
        base = rec.parents[0] if rec.parents else _EMPTY_TREE
        rec.changes = _git_changes(repo, base, rec.hash)
    return ordered


def _git_changes(repo: Path, base: str, commit: str) -> list[FileChange]:
    raw = _git(
        repo, "diff-tree", "-r", "--find-renames", "--name-status",
        "-z", base, commit,
    )
    fields = raw.split("\x00")
    changes = []
    i = 0
    while i < len(fields) and fields[i]:
        status = fields[i]
        if status.startswith("R"):
            old_path, new_path = fields[i + 1], fields[i + 2]
            i += 3
            pre, pre_bin = _blob_text(repo, base, old_path)
            post, post_bin = _blob_text(repo, commit, new_path)
            binary = pre_bin or post_bin
            changes.append(
                FileChange(
                    path=new_path, old_path=old_path, action="rename",
                    pre_text=None if binary else pre,
                    post_text=None if binary else post,
                    is_binary=binary,
                )
            )
            continue
        path = fields[i + 1]
        i += 2
        if status == "A":
            post, binary = _blob_text(repo, commit, path)
            changes.append(
                FileChange(path=path, action="add",
                           post_text=None if binary else post, is_binary=binary)
            )
        elif status == "D":
            pre, binary = _blob_text(repo, base, path)
            changes.append(
                FileChange(path=path, action="delete",
                           pre_text=None if binary else pre, is_binary=binary)
            )
        elif status == "M" or status == "T":
            pre, pre_bin = _blob_text(repo, base, path)
            post, post_bin = _blob_text(repo, commit, path)
            binary = pre_bin or post_bin
            changes.append(
                FileChange(path=path, action="modify",
                           pre_text=None if binary else pre,
                           post_text=None if binary else post,
                           is_binary=binary)
            )
        # other statuses (copies, unmerged) do not occur with --find-renames
        # against a single parent; skip defensively
    changes.sort(key=lambda ch: ch.path)
    return changes


# -- identity resolution ------------------------------------------------------

_PUNCT = re.compile(r"[^0-9a-z]+")


def _normalize_name(name: str) -> str:
    return _PUNCT.sub("", name.casefold())


def load_alias_map(path) -> dict[tuple[str, str], str]:
    """Read an alias map CSV with header ``name,email,canonical_id``."""
    mapping: dict[tuple[str, str], str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"name", "email", "canonical_id"}
        if not required <= set(reader.fieldnames or ()):
            raise ValueError(f"{path}: alias map needs columns {sorted(required)}")
        for rec in reader:
            if rec["canonical_id"] is None or not rec["canonical_id"].strip():
                raise ValueError(f"{path}: empty canonical_id for {rec['email']!r}")
            mapping[(rec["name"], rec["email"])] = rec["canonical_id"].strip()
    return mapping


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def resolve_identities(
    stream: list[CommitRecord],
    alias_map: dict[tuple[str, str], str] | None = None,
    name_merge: bool = True,
) -> tuple[list[CommitRecord], list[Identity]]:
    """Merge author aliases and return a stream with author_id filled.

    Pairs merge when (in order of precedence) an explicit alias map sends
    them to the same canonical id, their case-folded emails match, or --
    with the name heuristic enabled -- their case-folded,
    punctuation-stripped names match. The canonical id of a group is the
    explicit mapped id when one exists, otherwise its lexicographically
    smallest email. This is a declared stand-in for dedicated
    disambiguation tooling, not a reimplementation of one.
    """
    alias_map = alias_map or {}
    pairs = sorted({(rec.author_name, rec.author_email) for rec in stream})
    uf = _UnionFind()
    for pair in pairs:
        uf.find(pair)

    by_email: dict[str, tuple[str, str]] = {}
    by_name: dict[str, tuple[str, str]] = {}
    by_target: dict[str, tuple[str, str]] = {}
    for pair in pairs:
        name, email = pair
        email_key = email.casefold()
        if email_key in by_email:
            uf.union(by_email[email_key], pair)
        else:
            by_email[email_key] = pair
        if name_merge:
            name_key = _normalize_name(name)
            if name_key:
                if name_key in by_name:
                    uf.union(by_name[name_key], pair)
                else:
                    by_name[name_key] = pair
        if pair in alias_map:
            target = alias_map[pair]
            if target in by_target:
                uf.union(by_target[target], pair)
            else:
                by_target[target] = pair

    groups: dict[tuple[str, str], set[tuple[str, str]]] = {}
    for pair in pairs:
        groups.setdefault(uf.find(pair), set()).add(pair)

    canonical: dict[tuple[str, str], str] = {}
    identities = []
    for members in groups.values():
        explicit = sorted({alias_map[p] for p in members if p in alias_map})
        if explicit:
            cid = explicit[0]
        else:
            cid = min(email.casefold() for _, email in members)
        for pair in members:
            canonical[pair] = cid
        identities.append(Identity(canonical_id=cid, aliases=set(members)))
    identities.sort(key=lambda ident: ident.canonical_id)

    resolved = [
        replace(rec, author_id=canonical[(rec.author_name, rec.author_email)])
        for rec in stream
    ]
    return resolved, identities
