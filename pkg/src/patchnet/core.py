"""Domain types for commit ingestion and patch classification.

Everything downstream (parsing, preprocessing, the model, evaluation)
speaks in terms of these types.  They are deliberately plain: frozen
dataclasses holding strings, ints, and tuples, so they hash, compare,
and serialize without ceremony.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

COMMIT_ID_RE = re.compile(r"^[0-9a-f]{40}$")


class Label(enum.Enum):
    """Ground-truth or predicted class of a patch."""

    STABLE = "stable"
    NON_STABLE = "non-stable"

    @classmethod
    def from_string(cls, text: str) -> "Label":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown label {text!r}")

    def to_int(self) -> int:
        return 1 if self is Label.STABLE else 0

    @classmethod
    def from_int(cls, value: int) -> "Label":
        if value == 1:
            return cls.STABLE
        if value == 0:
            return cls.NON_STABLE
        raise ValueError(f"label int must be 0 or 1, got {value}")


class LineKind(enum.Enum):
    """Coarse role of a changed source line, used to annotate code tokens."""

    ERROR_CHECKING = "chk"
    ERROR_HANDLING = "hnd"
    NORMAL = "nrm"


@dataclass(frozen=True)
class CodeLine:
    """One changed line inside a hunk.

    ``line_number`` is the 1-based position in the old file for removed
    lines and in the new file for added lines.  ``sign`` is '-' or '+'.
    ``kind`` defaults to NORMAL at parse time; preprocessing refines it.
    """

    line_number: int
    text: str
    sign: str
    kind: LineKind = LineKind.NORMAL

    def __post_init__(self) -> None:
        if self.sign not in ("-", "+"):
            raise ValueError(f"sign must be '-' or '+', got {self.sign!r}")
        if self.line_number < 1:
            raise ValueError(f"line number must be >= 1, got {self.line_number}")
        if "\n" in self.text:
            raise ValueError("line text contains a newline")


@dataclass(frozen=True)
class Hunk:
    """A contiguous change region of one file.

    ``index`` is the 1-based position of the hunk within its file diff.
    Starts and counts echo the @@ header.  ``removed`` and ``added``
    hold only the changed lines; context lines are not retained beyond
    their effect on line numbering.
    """

    index: int
    old_start: int
    old_count: int
    new_start: int
    new_count: int
    removed: tuple[CodeLine, ...]
    added: tuple[CodeLine, ...]


@dataclass(frozen=True)
class FileDiff:
    """All hunks of one file touched by a commit.

    ``language_relevant`` marks files whose path ends in .c or .h; only
    those feed the code channel of the model.  A binary or otherwise
    opaque change is represented with an empty ``hunks`` tuple, which
    validation reports but parsing permits.  ``old_path`` is the ---
    side ("" when the file is newly added); ``path`` prefers the +++
    side and falls back to the --- side for deletions.
    """

    path: str
    hunks: tuple[Hunk, ...]
    language_relevant: bool
    old_path: str = ""
    is_new_file: bool = False
    is_deleted_file: bool = False

    @property
    def is_modification(self) -> bool:
        """True when both diff sides name a real path (not /dev/null)."""
        return not (self.is_new_file or self.is_deleted_file)


@dataclass(frozen=True)
class FileSnapshot:
    """Optional full before/after text of one file touched by a commit."""

    path: str
    before: str | None = None
    after: str | None = None


@dataclass(frozen=True)
class RawCommit:
    """A commit as parsed from an export stream, before preprocessing."""

    commit_id: str
    parent_ids: tuple[str, ...]
    author_name: str
    author_email: str
    date: int
    subject: str
    body: str
    diff_text: str
    file_snapshots: tuple[FileSnapshot, ...] = ()
    label: "Label | None" = None

    @property
    def message(self) -> str:
        """Subject and body joined the way the preprocessors consume them."""
        if self.body:
            return self.subject + "\n" + self.body
        return self.subject


@dataclass
class LabeledDataset:
    """Commits paired with labels, plus a human-readable provenance note.

    Invariants: every item carries a definite label and commit ids are
    unique; builders are responsible for both.
    """

    items: list[tuple[RawCommit, Label]] = field(default_factory=list)
    provenance: str = ""

    def __len__(self) -> int:
        return len(self.items)

    def counts(self) -> tuple[int, int]:
        """(stable, non_stable) item counts."""
        stable = sum(1 for _, lab in self.items if lab is Label.STABLE)
        return stable, len(self.items) - stable


def validate_commit(c: RawCommit) -> list[str]:
    """Check structural invariants of a RawCommit.

    Returns a list of violation descriptions; an empty list means the
    commit is well formed.  Violations are data findings, not faults:
    callers decide whether to skip, repair, or abort.
    """
    violations: list[str] = []
    if len(c.commit_id) != 40:
        violations.append(f"commit_id length {len(c.commit_id)} != 40")
    elif not COMMIT_ID_RE.match(c.commit_id):
        violations.append("commit_id charset not lowercase hex")
    for p in c.parent_ids:
        if not COMMIT_ID_RE.match(p):
            violations.append(f"parent id malformed: {p!r}")
    if "\n" in c.subject:
        violations.append("subject newline")
    if c.date < 0:
        violations.append(f"date negative: {c.date}")
    return violations


def validate_file_diff(fd: FileDiff) -> list[str]:
    """Check structural invariants of a FileDiff (empty list = well formed)."""
    violations: list[str] = []
    if not fd.hunks:
        violations.append(f"file {fd.path}: no hunks")
    for i, h in enumerate(fd.hunks, start=1):
        if h.index != i:
            violations.append(f"file {fd.path}: hunk index {h.index} at position {i}")
        for line in h.removed:
            if line.sign != "-":
                violations.append(
                    f"file {fd.path} hunk {h.index}: removed line with sign {line.sign!r}"
                )
        for line in h.added:
            if line.sign != "+":
                violations.append(
                    f"file {fd.path} hunk {h.index}: added line with sign {line.sign!r}"
                )
    return violations
