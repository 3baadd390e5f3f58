"""Whitespace + byte-pair-encoding tokenization with word-boundary tracking.

Subword pieces come in two classes: word-initial pieces are stored verbatim,
word-internal continuation pieces carry a leading marker (``##`` by default).
The class of every vocabulary entry is therefore recoverable from its string
alone, which is what lets the completion machinery distinguish "can start a
word" from "can only extend one".

Unknown characters never raise: they map to the unk token so an interactive
caller can always tokenize whatever a user has typed so far.
"""

from __future__ import annotations

import json
import unicodedata
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

CONTINUATION_MARKER = "##"

PAD_TOKEN = "<pad>"
BOS_TOKEN = "<s>"
EOS_TOKEN = "</s>"
UNK_TOKEN = "<unk>"

SPECIAL_TOKENS = {"pad": PAD_TOKEN, "bos": BOS_TOKEN, "eos": EOS_TOKEN, "unk": UNK_TOKEN}

KIND_SPECIAL = 0
KIND_INITIAL = 1
KIND_CONTINUATION = 2


def normalize_ws(text: str) -> str:
    """NFC-normalize and collapse all whitespace runs to single spaces."""
    return " ".join(unicodedata.normalize("NFC", text).split())


@dataclass(frozen=True)
class Piece:
    """One subword piece of an encoded word, with its source char span."""

    id: int
    start: int
    end: int


@dataclass(frozen=True)
class SubwordSeq:
    """Token-id sequence plus the (start, end) id-index range of each word."""

    ids: tuple[int, ...]
    word_spans: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.ids)

    @staticmethod
    def empty() -> "SubwordSeq":
        return SubwordSeq(ids=(), word_spans=())


class Vocabulary:
    """Immutable subword vocabulary with dense ids and piece-class indexes.

    Entry order is: the four specials (pad, bos, eos, unk), then the
    remaining entries in the order given. Ids are positions in that list.
    """

    def __init__(self, pieces: list[str], continuation_marker: str = CONTINUATION_MARKER):
        if not continuation_marker:
            raise ValueError("continuation marker must be non-empty")
        self.continuation_marker = continuation_marker
        specials = [PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN]
        self.entries: list[str] = list(specials)
        seen = set(specials)
        for piece in pieces:
            if piece in seen:
                raise ValueError(f"duplicate vocabulary entry: {piece!r}")
            if not piece or piece == continuation_marker:
                raise ValueError("vocabulary entries must have a non-empty surface")
            seen.add(piece)
            self.entries.append(piece)
        self.id_of: dict[str, int] = {e: i for i, e in enumerate(self.entries)}
        self.pad = self.id_of[PAD_TOKEN]
        self.bos = self.id_of[BOS_TOKEN]
        self.eos = self.id_of[EOS_TOKEN]
        self.unk = self.id_of[UNK_TOKEN]

        marker = continuation_marker
        self._kind: list[int] = []
        self._surface: list[str] = []
        for i, entry in enumerate(self.entries):
            if i < len(specials):
                self._kind.append(KIND_SPECIAL)
                self._surface.append("")
            elif entry.startswith(marker):
                self._kind.append(KIND_CONTINUATION)
                self._surface.append(entry[len(marker):])
            else:
                self._kind.append(KIND_INITIAL)
                self._surface.append(entry)

        # surface -> id lookup per class, used by the greedy matcher
        self._initial_of: dict[str, int] = {}
        self._cont_of: dict[str, int] = {}
        for i, surf in enumerate(self._surface):
            if self._kind[i] == KIND_INITIAL:
                self._initial_of[surf] = i
            elif self._kind[i] == KIND_CONTINUATION:
                self._cont_of[surf] = i
        self._max_initial = max((len(s) for s in self._initial_of), default=0)
        self._max_cont = max((len(s) for s in self._cont_of), default=0)

        # sorted (surface, id) indexes per class, used for prefix-range scans
        self.initial_index = sorted((s, i) for s, i in self._initial_of.items())
        self.continuation_index = sorted((s, i) for s, i in self._cont_of.items())

    def __len__(self) -> int:
        return len(self.entries)

    def kind(self, token_id: int) -> int:
        return self._kind[token_id]

    def surface(self, token_id: int) -> str:
        """Entry string with the continuation marker stripped."""
        return self._surface[token_id]

    def is_special(self, token_id: int) -> bool:
        return self._kind[token_id] == KIND_SPECIAL

    def is_word_initial(self, token_id: int) -> bool:
        return self._kind[token_id] == KIND_INITIAL

    def is_continuation(self, token_id: int) -> bool:
        return self._kind[token_id] == KIND_CONTINUATION

    def check_ids(self, ids) -> None:
        for i in ids:
            if not 0 <= i < len(self.entries):
                raise ValueError("id out of range")

    def encode_word(self, word: str) -> list[Piece]:
        """Greedy longest-match segmentation of a single word.

        The first piece is matched against word-initial entries, later pieces
        against continuation entries. Characters no entry covers become unk
        pieces of length one.
        """
        pieces: list[Piece] = []
        pos = 0
        n = len(word)
        while pos < n:
            if pos == 0:
                table, cap = self._initial_of, self._max_initial
            else:
                table, cap = self._cont_of, self._max_cont
            match_id = None
            for length in range(min(cap, n - pos), 0, -1):
                candidate = table.get(word[pos:pos + length])
                if candidate is not None:
                    match_id = candidate
                    pieces.append(Piece(candidate, pos, pos + length))
                    pos += length
                    break
            if match_id is None:
                pieces.append(Piece(self.unk, pos, pos + 1))
                pos += 1
        return pieces

    def prefix_hits(self, raw_prefix: str, word_initial: bool) -> list[int]:
        """Ids of all entries of the given class whose surface starts with raw_prefix."""
        index = self.initial_index if word_initial else self.continuation_index
        hits = []
        lo = bisect_left(index, (raw_prefix, -1))
        for surf, token_id in index[lo:]:
            if not surf.startswith(raw_prefix):
                break
            hits.append(token_id)
        return hits

    def to_json(self) -> dict:
        return {
            "entries": list(self.entries),
            "specials": dict(SPECIAL_TOKENS),
            "continuation_marker": self.continuation_marker,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Vocabulary":
        entries = data["entries"]
        specials = data.get("specials", SPECIAL_TOKENS)
        expected = [specials["pad"], specials["bos"], specials["eos"], specials["unk"]]
        if entries[:4] != expected:
            raise ValueError("vocabulary file must list pad/bos/eos/unk first")
        return cls(entries[4:], continuation_marker=data["continuation_marker"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _word_symbols(word: str, marker: str) -> tuple[str, ...]:
    return tuple(ch if i == 0 else marker + ch for i, ch in enumerate(word))


def train_bpe(corpus: list[str], merges: int, continuation_marker: str = CONTINUATION_MARKER) -> Vocabulary:
    """Greedy pair-merge BPE over whitespace-split words.

    Each merge step joins the most frequent adjacent symbol pair, breaking
    count ties by lexicographic pair order, so training is deterministic for
    a fixed corpus. Every character seen anywhere in the corpus enters the
    vocabulary in both its word-initial and continuation form.
    """
    if not corpus:
        raise ValueError("empty corpus")
    if merges < 0:
        raise ValueError("merges must be >= 0")
    word_counts: Counter[str] = Counter()
    for sentence in corpus:
        word_counts.update(normalize_ws(sentence).split())
    if not word_counts:
        raise ValueError("empty corpus")

    marker = continuation_marker
    chars = sorted({ch for word in word_counts for ch in word})
    entries = [ch for ch in chars] + [marker + ch for ch in chars]
    entry_set = set(entries)

    splits: dict[str, tuple[str, ...]] = {w: _word_symbols(w, marker) for w in word_counts}
    for _ in range(merges):
        pair_counts: Counter[tuple[str, str]] = Counter()
        for word, symbols in splits.items():
            count = word_counts[word]
            for a, b in zip(symbols, symbols[1:]):
                pair_counts[(a, b)] += count
        if not pair_counts:
            break
        best_count = max(pair_counts.values())
        best = min(p for p, c in pair_counts.items() if c == best_count)
        left, right = best
        merged = left + right[len(marker):]
        for word, symbols in splits.items():
            if best[0] not in symbols:
                continue
            out: list[str] = []
            i = 0
            while i < len(symbols):
                if i + 1 < len(symbols) and symbols[i] == left and symbols[i + 1] == right:
                    out.append(merged)
                    i += 2
                else:
                    out.append(symbols[i])
                    i += 1
            splits[word] = tuple(out)
        if merged not in entry_set:
            entries.append(merged)
            entry_set.add(merged)

    return Vocabulary(entries, continuation_marker=marker)


def tokenize(text: str, vocab: Vocabulary) -> SubwordSeq:
    """Whitespace pre-tokenization followed by greedy subword matching."""
    ids: list[int] = []
    spans: list[tuple[int, int]] = []
    for word in normalize_ws(text).split():
        start = len(ids)
        ids.extend(p.id for p in vocab.encode_word(word))
        spans.append((start, len(ids)))
    return SubwordSeq(ids=tuple(ids), word_spans=tuple(spans))


def detokenize(seq: SubwordSeq | tuple[int, ...] | list[int], vocab: Vocabulary) -> str:
    """Inverse of tokenize: continuation pieces glue to the previous piece.

    Special tokens are dropped, so sequences containing bos/eos/pad/unk
    detokenize to the surface text alone.
    """
    ids = seq.ids if isinstance(seq, SubwordSeq) else seq
    vocab.check_ids(ids)
    parts: list[str] = []
    for token_id in ids:
        if vocab.is_special(token_id):
            continue
        surf = vocab.surface(token_id)
        if vocab.is_continuation(token_id) and parts:
            parts[-1] += surf
        else:
            parts.append(surf)
    return " ".join(parts)


def seq_from_ids(ids, vocab: Vocabulary) -> SubwordSeq:
    """Rebuild word spans for a raw id sequence (specials stay span-free)."""
    vocab.check_ids(ids)
    spans: list[tuple[int, int]] = []
    open_start = None
    for idx, token_id in enumerate(ids):
        if vocab.is_special(token_id):
            if open_start is not None:
                spans.append((open_start, idx))
                open_start = None
            continue
        if vocab.is_word_initial(token_id) or open_start is None:
            if open_start is not None:
                spans.append((open_start, idx))
            open_start = idx
    if open_start is not None:
        spans.append((open_start, len(ids)))
    return SubwordSeq(ids=tuple(ids), word_spans=tuple(spans))


def last_piece_is_dangling(raw_target: str) -> bool:
    """True when the user is mid-word: text is non-empty and does not end in whitespace."""
    return bool(raw_target) and not raw_target[-1].isspace()
