"""Word↔index vocabularies for the message and code channels.

Index 0 is PAD, index 1 is UNK; real words start at 2, ordered by
descending frequency with lexicographic tie-breaks so builds are
reproducible.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

PAD_INDEX = 0
UNK_INDEX = 1
PAD_WORD = "<pad>"
UNK_WORD = "<unk>"

CHANNELS = ("message", "code")


@dataclass(frozen=True)
class Vocabulary:
    channel: str
    index_to_word: tuple[str, ...]
    word_to_index: dict[str, int] = field(compare=False)

    def __post_init__(self) -> None:
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}, got {self.channel!r}")

    def __len__(self) -> int:
        return len(self.index_to_word)

    @property
    def words(self) -> tuple[str, ...]:
        """Real words only (indices 2..size-1)."""
        return self.index_to_word[2:]

    @classmethod
    def from_words(cls, channel: str, words) -> "Vocabulary":
        index_to_word = (PAD_WORD, UNK_WORD, *words)
        return cls(
            channel=channel,
            index_to_word=index_to_word,
            word_to_index={w: i for i, w in enumerate(index_to_word) if i >= 2},
        )


def build_vocab(token_stream, channel: str, min_count: int = 1) -> Vocabulary:
    """Index tokens by descending frequency, ties lexicographic.

    The stream must come from the training split only.  The reserved
    PAD/UNK words never enter the counts.
    """
    counts = Counter(
        t for t in token_stream if t not in (PAD_WORD, UNK_WORD)
    )
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary.from_words(
        channel, (w for w, k in ordered if k >= min_count)
    )


def index_of(v: Vocabulary, word: str) -> int:
    """Mapped index, or UNK for anything unknown."""
    if word == PAD_WORD:
        return PAD_INDEX
    return v.word_to_index.get(word, UNK_INDEX)


def save_vocab(v: Vocabulary, path: str) -> None:
    """Write one vocabulary as {channel, words} (position = index - 2)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(vocab_to_json_obj(v), fh)
        fh.write("\n")


def load_vocab(path: str) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        return vocab_from_json_obj(json.load(fh))


def vocab_to_json_obj(v: Vocabulary) -> dict:
    return {"channel": v.channel, "words": list(v.words)}


def vocab_from_json_obj(obj: dict) -> Vocabulary:
    return Vocabulary.from_words(obj["channel"], obj["words"])


def save_vocab_pair(message_vocab: Vocabulary, code_vocab: Vocabulary, path: str) -> None:
    """Write both channels to one file as a two-element JSON array."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([vocab_to_json_obj(message_vocab), vocab_to_json_obj(code_vocab)], fh)
        fh.write("\n")


def load_vocab_pair(path: str) -> tuple[Vocabulary, Vocabulary]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    by_channel = {obj["channel"]: vocab_from_json_obj(obj) for obj in data}
    missing = [c for c in CHANNELS if c not in by_channel]
    if missing:
        raise ValueError(f"vocabulary file {path} missing channels: {missing}")
    return by_channel["message"], by_channel["code"]
