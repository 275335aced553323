"""Commit-stream parsing, eligibility filtering, labeling, and balancing.

Input arrives as exported text, never via a git binary: either the
record format documented below or JSONL.  Export records look like::

    \\x01COMMIT\\x01
    id: <40-hex>
    parents: <space-separated 40-hex, possibly empty>
    author: <name>
    email: <address>
    date: <epoch seconds>
    <blank line>
    <message lines>
    \\x01DIFF\\x01
    <unified diff, preserved byte-exactly>

A converter from ``git log`` output to this format is a one-liner with
``--format`` and is documented in the README; the library consumes only
the exported text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np

from .core import (
    COMMIT_ID_RE,
    CodeLine,
    FileDiff,
    FileSnapshot,
    Hunk,
    Label,
    LabeledDataset,
    RawCommit,
)

COMMIT_SEP = "\x01COMMIT\x01"
DIFF_SEP = "\x01DIFF\x01"

RE_COMMIT_SEP = re.compile(r"(?m)^\x01COMMIT\x01$")
RE_HEADER = re.compile(r"^(id|parents|author|email|date): ?(.*)$")
RE_DIFF_GIT = re.compile(r"^diff --git (?:a/)?(\S+) (?:b/)?(\S+)")
RE_OLD_FILE = re.compile(r"^--- (?:a/)?(.*?)(?:\t.*)?$")
RE_NEW_FILE = re.compile(r"^\+\+\+ (?:b/)?(.*?)(?:\t.*)?$")
RE_HUNK_HEADER = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@(.*)$")
RE_BINARY = re.compile(r"^(Binary files .* differ|GIT binary patch)$")

# Pattern stable maintainers use to cite the mainline commit.
RE_BACK_LINK = re.compile(r"commit\s+([0-9a-fA-F]{40})\s+upstream[.,;:!]?", re.IGNORECASE)

MAX_REPORTED_DIFF_LINES = 100

# Ineligibility reasons (EligibilityReport.reasons entries).
MERGE_COMMIT = "MergeCommit"
NO_C_OR_H_FILE_MODIFIED = "NoCOrHFileModified"
ONLY_ADDS_OR_REMOVES_FILES = "OnlyAddsOrRemovesFiles"
TOO_LONG = "TooLong"
OTHER = "Other"


class ParseError(Exception):
    """Raised on malformed export records or diff headers."""

    def __init__(self, message: str, offset: int | None = None, lineno: int | None = None):
        self.message = message
        self.offset = offset
        self.lineno = lineno
        where = ""
        if offset is not None:
            where = f" at byte offset {offset}"
        elif lineno is not None:
            where = f" at line {lineno}"
        super().__init__(message + where)


@dataclass(frozen=True)
class EligibilityReport:
    """Outcome of the dataset filters for one commit."""

    eligible: bool
    reasons: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.eligible != (len(self.reasons) == 0):
            raise ValueError("eligible must hold exactly when reasons is empty")

    @classmethod
    def from_reasons(cls, reasons: tuple[str, ...]) -> "EligibilityReport":
        return cls(eligible=not reasons, reasons=reasons)


@dataclass(frozen=True)
class StableEvidence:
    """Everything known about which mainline commits reached stable trees."""

    back_links: frozenset[str]
    author_subject_pairs: frozenset[tuple[str, str]]
    rc_commit_ids: frozenset[str]


def parse_commit_stream(text: str) -> list[RawCommit]:
    """Parse an export stream into RawCommits, preserving record order.

    Diff text is preserved byte-exactly.  Malformed headers raise
    ParseError naming the byte offset of the offending line.
    """
    commits: list[RawCommit] = []
    if not text.strip():
        return commits
    seps = [m.start() for m in RE_COMMIT_SEP.finditer(text)]
    if not seps:
        raise ParseError("no record separator found", offset=0)
    if text[: seps[0]].strip():
        raise ParseError("content before first record separator", offset=0)
    for i, start in enumerate(seps):
        newline = text.find("\n", start)
        if newline < 0:
            raise ParseError("record separator at end of input", offset=start)
        end = seps[i + 1] if i + 1 < len(seps) else len(text)
        commits.append(_parse_record(text, newline + 1, end))
    return commits


def _parse_record(text: str, start: int, end: int) -> RawCommit:
    """Parse one record from text[start:end]; offsets are absolute."""
    header: dict[str, str] = {}
    pos = start
    for name in ("id", "parents", "author", "email", "date"):
        eol = text.find("\n", pos, end)
        if eol < 0:
            raise ParseError(f"record truncated before {name!r} header", offset=pos)
        m = RE_HEADER.match(text[pos:eol])
        if not m or m.group(1) != name:
            raise ParseError(f"expected {name!r} header line", offset=pos)
        header[name] = m.group(2)
        pos = eol + 1

    commit_id = header["id"].strip().lower()
    if not COMMIT_ID_RE.match(commit_id):
        raise ParseError(f"malformed commit id {header['id']!r}", offset=start)
    parent_ids = tuple(p.lower() for p in header["parents"].split())
    try:
        date = int(header["date"].strip())
    except ValueError:
        raise ParseError(f"malformed date {header['date']!r}", offset=start) from None

    eol = text.find("\n", pos, end)
    if eol < 0 or text[pos:eol].strip():
        raise ParseError("expected blank line after headers", offset=pos)
    pos = eol + 1

    # Message lines run until the diff separator line.
    message_lines: list[str] = []
    diff_text = ""
    found_diff = False
    while pos < end:
        eol = text.find("\n", pos, end)
        line = text[pos : eol if eol >= 0 else end]
        if line == DIFF_SEP:
            diff_start = (eol + 1) if eol >= 0 else end
            diff_text = text[diff_start:end]
            found_diff = True
            break
        message_lines.append(line.rstrip("\r"))
        if eol < 0:
            break
        pos = eol + 1
    if not found_diff:
        raise ParseError("record missing diff separator", offset=start)

    subject = ""
    body_lines: list[str] = []
    for j, line in enumerate(message_lines):
        if line.strip():
            subject = line.strip()
            body_lines = message_lines[j + 1 :]
            break
    while body_lines and not body_lines[0].strip():
        body_lines.pop(0)
    while body_lines and not body_lines[-1].strip():
        body_lines.pop()

    return RawCommit(
        commit_id=commit_id,
        parent_ids=parent_ids,
        author_name=header["author"].strip(),
        author_email=header["email"].strip(),
        date=date,
        subject=subject,
        body="\n".join(body_lines),
        diff_text=diff_text,
    )


def parse_unified_diff(diff_text: str) -> list[FileDiff]:
    """Parse unified-diff text into per-file hunk structures.

    Line numbers are computed from each @@ header's starts plus the
    running offset; context advances both sides.  Binary changes yield
    a FileDiff with zero hunks.  A malformed @@ header raises
    ParseError with its 1-based line number.
    """
    lines = diff_text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()

    files: list[FileDiff] = []
    # Per-file accumulation state.
    old_path: str | None = None
    new_path: str | None = None
    hunks: list[Hunk] = []
    is_new = False
    is_deleted = False
    seen_file = False
    # Per-hunk state.
    in_hunk = False
    old_line = new_line = 0
    removed: list[CodeLine] = []
    added: list[CodeLine] = []
    hunk_header: tuple[int, int, int, int] | None = None

    def close_hunk() -> None:
        nonlocal in_hunk, hunk_header
        if in_hunk and hunk_header is not None:
            a, b, c, d = hunk_header
            hunks.append(
                Hunk(
                    index=len(hunks) + 1,
                    old_start=a,
                    old_count=b,
                    new_start=c,
                    new_count=d,
                    removed=tuple(removed),
                    added=tuple(added),
                )
            )
        in_hunk = False
        hunk_header = None

    def close_file() -> None:
        nonlocal seen_file, old_path, new_path, hunks, is_new, is_deleted
        close_hunk()
        if not seen_file:
            return
        path = new_path if new_path not in (None, "/dev/null") else old_path
        path = path or ""
        files.append(
            FileDiff(
                path=path,
                hunks=tuple(hunks),
                language_relevant=path.endswith((".c", ".h")),
                old_path="" if old_path in (None, "/dev/null") else old_path,
                is_new_file=is_new or old_path == "/dev/null",
                is_deleted_file=is_deleted or new_path == "/dev/null",
            )
        )
        seen_file = False
        old_path = new_path = None
        hunks = []
        is_new = is_deleted = False

    for lineno, line in enumerate(lines, start=1):
        if line.startswith("diff --git"):
            close_file()
            seen_file = True
            m = RE_DIFF_GIT.match(line)
            if m:
                old_path, new_path = m.group(1), m.group(2)
            continue
        if line.startswith("@@"):
            m = RE_HUNK_HEADER.match(line)
            if not m:
                raise ParseError(f"malformed hunk header {line!r}", lineno=lineno)
            close_hunk()
            seen_file = True
            a = int(m.group(1))
            b = int(m.group(2)) if m.group(2) is not None else 1
            c = int(m.group(3))
            d = int(m.group(4)) if m.group(4) is not None else 1
            hunk_header = (a, b, c, d)
            in_hunk = True
            old_line = a if a > 0 else 1
            new_line = c if c > 0 else 1
            removed = []
            added = []
            continue
        if line.startswith("--- ") and not in_hunk:
            if seen_file and hunks:
                close_file()
            seen_file = True
            m = RE_OLD_FILE.match(line)
            old_path = m.group(1) if m else None
            continue
        if line.startswith("+++ ") and not in_hunk:
            seen_file = True
            m = RE_NEW_FILE.match(line)
            new_path = m.group(1) if m else None
            continue
        if in_hunk:
            if line.startswith("-"):
                removed.append(CodeLine(old_line, line[1:], "-"))
                old_line += 1
                continue
            if line.startswith("+"):
                added.append(CodeLine(new_line, line[1:], "+"))
                new_line += 1
                continue
            if line.startswith(" ") or line == "":
                old_line += 1
                new_line += 1
                continue
            if line.startswith("\\"):
                continue  # "\ No newline at end of file"
            close_hunk()
        if line.startswith("new file mode"):
            is_new = True
        elif line.startswith("deleted file mode"):
            is_deleted = True
        elif RE_BINARY.match(line):
            seen_file = True
    close_file()
    return files


def diff_reported_length(diff_text: str) -> int:
    """Diff length as a diff tool reports it: changed plus context lines.

    Per hunk this equals old_count + len(added): old_count covers the
    context and removed lines, added lines are the rest.
    """
    total = 0
    for fd in parse_unified_diff(diff_text):
        for h in fd.hunks:
            total += h.old_count + len(h.added)
    return total


def changed_line_count(diff_text: str) -> int:
    """Number of '-' and '+' lines inside hunks (context excluded)."""
    total = 0
    for fd in parse_unified_diff(diff_text):
        for h in fd.hunks:
            total += len(h.removed) + len(h.added)
    return total


def check_eligibility(c: RawCommit) -> EligibilityReport:
    """Apply the dataset filters: not a merge, modifies a .c/.h file
    in place, and the reported diff is at most 100 lines."""
    reasons: list[str] = []
    if len(c.parent_ids) > 1:
        reasons.append(MERGE_COMMIT)
    try:
        files = parse_unified_diff(c.diff_text)
        relevant = [fd for fd in files if fd.language_relevant]
        if not relevant:
            reasons.append(NO_C_OR_H_FILE_MODIFIED)
        elif not any(fd.is_modification for fd in relevant):
            reasons.append(ONLY_ADDS_OR_REMOVES_FILES)
        if diff_reported_length(c.diff_text) > MAX_REPORTED_DIFF_LINES:
            reasons.append(TOO_LONG)
    except ParseError as exc:
        reasons.append(f"{OTHER}: {exc}")
    return EligibilityReport.from_reasons(tuple(reasons))


def extract_stable_evidence(
    stable_commits: "list[RawCommit] | tuple[RawCommit, ...]",
    rc_ids: "set[str] | frozenset[str]" = frozenset(),
) -> StableEvidence:
    """Collect back links and (author, subject) pairs from stable-tree
    commits; rc ids pass through normalized."""
    back_links: set[str] = set()
    pairs: set[tuple[str, str]] = set()
    for c in stable_commits:
        for m in RE_BACK_LINK.finditer(c.message):
            back_links.add(m.group(1).lower())
        pairs.add((c.author_name.strip(), c.subject.strip()))
    return StableEvidence(
        back_links=frozenset(back_links),
        author_subject_pairs=frozenset(pairs),
        rc_commit_ids=frozenset(i.lower() for i in rc_ids),
    )


def label_commit(c: RawCommit, ev: StableEvidence) -> Label:
    """Stable iff cited by a back link, matched by (author, subject),
    or listed among rc2+ commit ids."""
    if c.commit_id in ev.back_links:
        return Label.STABLE
    if (c.author_name.strip(), c.subject.strip()) in ev.author_subject_pairs:
        return Label.STABLE
    if c.commit_id in ev.rc_commit_ids:
        return Label.STABLE
    return Label.NON_STABLE


def build_balanced_dataset(
    labeled: "list[tuple[RawCommit, Label]]", seed: int = 0
) -> LabeledDataset:
    """Keep every stable commit and match each with the unused non-stable
    commit of closest changed-line count.

    Stable commits are processed in (date, commit_id) order; candidate
    ties break to the earlier date, then the lexicographically smaller
    id.  The procedure is deterministic and invariant under permutation
    of the input; the seed is recorded in provenance only.
    """
    if not labeled:
        raise ValueError("labeled sequence is empty")

    seen: set[str] = set()
    unique: list[tuple[RawCommit, Label]] = []
    for c, lab in labeled:
        if c.commit_id not in seen:
            seen.add(c.commit_id)
            unique.append((c, lab))

    stable = sorted(
        (c for c, lab in unique if lab is Label.STABLE),
        key=lambda c: (c.date, c.commit_id),
    )
    pool = sorted(
        (c for c, lab in unique if lab is Label.NON_STABLE),
        key=lambda c: (c.date, c.commit_id),
    )

    notes = [f"{len(stable)} stable, {len(pool)} non-stable candidates, seed={seed}"]
    if not stable:
        notes.append("WARNING: no stable commits in input")
        return LabeledDataset(items=[], provenance="; ".join(notes))

    if len(pool) <= len(stable):
        if len(pool) < len(stable):
            notes.append(
                f"WARNING: only {len(pool)} non-stable for {len(stable)} stable"
            )
        chosen = list(range(len(pool)))
    else:
        sizes = np.array([changed_line_count(c.diff_text) for c in pool], dtype=np.int64)
        dates = np.array([c.date for c in pool], dtype=np.int64)
        ids = np.array([c.commit_id for c in pool], dtype="U40")
        used = np.zeros(len(pool), dtype=bool)
        chosen = []
        for s in stable:
            dist = np.abs(sizes - changed_line_count(s.diff_text))
            order = np.lexsort((ids, dates, dist))
            for idx in order:
                if not used[idx]:
                    used[idx] = True
                    chosen.append(int(idx))
                    break
        chosen.sort(key=lambda i: (pool[i].date, pool[i].commit_id))

    items = [(c, Label.STABLE) for c in stable]
    items.extend((pool[i], Label.NON_STABLE) for i in chosen)
    notes.append(f"selected {len(chosen)} non-stable matches")
    return LabeledDataset(items=items, provenance="; ".join(notes))


# ---------------------------------------------------------------------------
# JSONL and id-file IO


def commit_to_json_obj(c: RawCommit, label: Label | None = None) -> dict:
    obj = {
        "commit_id": c.commit_id,
        "parents": list(c.parent_ids),
        "author_name": c.author_name,
        "author_email": c.author_email,
        "date": c.date,
        "subject": c.subject,
        "body": c.body,
        "diff": c.diff_text,
    }
    if c.file_snapshots:
        obj["files"] = [
            {"path": s.path, "before": s.before, "after": s.after}
            for s in c.file_snapshots
        ]
    lab = label if label is not None else c.label
    if lab is not None:
        obj["label"] = lab.value
    return obj


def commit_from_json_obj(obj: dict) -> RawCommit:
    snapshots = tuple(
        FileSnapshot(f["path"], f.get("before"), f.get("after"))
        for f in obj.get("files", [])
    )
    label = Label.from_string(obj["label"]) if "label" in obj else None
    return RawCommit(
        commit_id=obj["commit_id"],
        parent_ids=tuple(obj.get("parents", [])),
        author_name=obj.get("author_name", ""),
        author_email=obj.get("author_email", ""),
        date=int(obj["date"]),
        subject=obj.get("subject", ""),
        body=obj.get("body", ""),
        diff_text=obj.get("diff", ""),
        file_snapshots=snapshots,
        label=label,
    )


def read_commits_jsonl(path: str) -> list[RawCommit]:
    commits = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                commits.append(commit_from_json_obj(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ParseError(f"bad JSONL record: {exc}", lineno=lineno) from exc
    return commits


def write_commits_jsonl(path: str, items) -> None:
    """Write commits (or (commit, label) pairs, or a LabeledDataset)."""
    if isinstance(items, LabeledDataset):
        items = items.items
    with open(path, "w", encoding="utf-8") as fh:
        for entry in items:
            if isinstance(entry, tuple):
                c, label = entry
            else:
                c, label = entry, None
            fh.write(json.dumps(commit_to_json_obj(c, label)) + "\n")


def load_commits(path: str) -> list[RawCommit]:
    """Read commits from either supported format, sniffing by first byte."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        commits = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                commits.append(commit_from_json_obj(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ParseError(f"bad JSONL record: {exc}", lineno=lineno) from exc
        return commits
    return parse_commit_stream(text)


def read_rc_ids(path: str) -> set[str]:
    """Read release-candidate commit ids, one per line; '#' comments allowed."""
    ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            entry = line.split("#", 1)[0].strip().lower()
            if not entry:
                continue
            if not COMMIT_ID_RE.match(entry):
                raise ParseError(f"malformed commit id {entry!r}", lineno=lineno)
            ids.add(entry)
    return ids
