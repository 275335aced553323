"""Commit-message preprocessing: tag stripping and token normalization."""

from __future__ import annotations

import re

from .stemmer import porter_stem
from .stopwords import STOP_WORDS

MSG_LEN = 512
PAD_TOKEN = "<pad>"

TAG_PREFIXES = (
    "cc:",
    "fixes:",
    "signed-off-by:",
    "reviewed-by:",
    "acked-by:",
    "tested-by:",
    "reported-by:",
    "suggested-by:",
    "link:",
)

RE_SPLIT = re.compile(r"[^a-z0-9]+")


def strip_tags(message_body: str) -> str:
    """Remove whole lines whose prefix is a known metadata tag.

    Matching is case-insensitive on the line's leading non-blank text.
    """
    kept = []
    for line in message_body.split("\n"):
        lowered = line.lstrip().lower()
        if any(lowered.startswith(p) for p in TAG_PREFIXES):
            continue
        kept.append(line)
    return "\n".join(kept)


def message_tokens(message: str) -> list[str]:
    """Lowercase, split on non-alphanumeric, drop stop words, stem."""
    tokens = []
    for raw in RE_SPLIT.split(message.lower()):
        if not raw or raw in STOP_WORDS:
            continue
        tokens.append(porter_stem(raw))
    return tokens


def normalize_message(message: str, msg_len: int = MSG_LEN) -> list[str]:
    """Token sequence of exactly msg_len entries, PAD-filled at the tail.

    Expects tags to be stripped already (strip_tags).
    """
    tokens = message_tokens(message)[:msg_len]
    tokens.extend([PAD_TOKEN] * (msg_len - len(tokens)))
    return tokens
