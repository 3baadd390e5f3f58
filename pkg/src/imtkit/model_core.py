"""Deterministic toy sequence models behind one step contract.

Two realizations of the same interface: a lexicon+bigram translation model
(optionally conditioned on one retrieved TM pair) and a target-side bigram
language model. Both are pure functions of their inputs — identical calls
return bitwise-identical distributions and context vectors — which is what
makes nearest-neighbor lookups over context vectors reproducible.

Context vectors are feature hashes of (previous two target tokens, the
diagonally aligned source token), computed with a keyed blake2b digest so
they are stable across processes and hosts.
"""

from __future__ import annotations

import abc
import hashlib
import json
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tokenizer import SubwordSeq, Vocabulary, normalize_ws, tokenize

DEFAULT_DIM = 64
DEFAULT_HASH_SEED = 9172
DEFAULT_SMOOTHING = 0.1
DEFAULT_TM_GAMMA = 0.3

MODEL_FORMAT_VERSION = 1

_ROLE_PREV1 = 1
_ROLE_PREV2 = 2
_ROLE_SRC = 3


@dataclass(frozen=True)
class TmContext:
    """Top-ranked retrieved TM pair fed alongside the source sentence."""

    retrieved_source: SubwordSeq
    retrieved_target: SubwordSeq
    match_rate: float


@dataclass(frozen=True)
class ModelState:
    context_vector: np.ndarray
    step: int


def _hash_component(seed: int, role: int, value: int, dim: int) -> tuple[int, float]:
    digest = hashlib.blake2b(struct.pack("<qqq", seed, role, value), digest_size=8).digest()
    n = int.from_bytes(digest, "little")
    return n % dim, 1.0 if n & (1 << 63) == 0 else -1.0


def feature_hash(features: list[tuple[int, int]], dim: int, seed: int) -> np.ndarray:
    vec = np.zeros(dim, dtype=np.float64)
    for role, value in features:
        idx, sign = _hash_component(seed, role, value, dim)
        vec[idx] += sign
    return vec


class SequenceModel(abc.ABC):
    """Step contract shared by every decoding feature.

    ``vocab`` is the target-side vocabulary the distributions range over.
    """

    vocab: Vocabulary
    dim: int

    @abc.abstractmethod
    def step(self, source: SubwordSeq, target_prefix, tm_context: TmContext | None = None
             ) -> tuple[np.ndarray, ModelState]:
        ...


def model_step(model: SequenceModel, source: SubwordSeq, target_prefix,
               tm_context: TmContext | None = None) -> tuple[np.ndarray, ModelState]:
    """Next-token distribution and context vector for one decode position."""
    return model.step(source, target_prefix, tm_context)


def _prefix_ids(target_prefix) -> tuple[int, ...]:
    if isinstance(target_prefix, SubwordSeq):
        return target_prefix.ids
    return tuple(target_prefix)


def _check_prefix(ids: tuple[int, ...], vocab_size: int) -> None:
    for i in ids:
        if not 0 <= i < vocab_size:
            raise ValueError("invalid prefix token")


class _CountTable:
    """Additively smoothed conditional distributions p(y | context)."""

    def __init__(self, vocab_size: int, smoothing: float):
        self.vocab_size = vocab_size
        self.smoothing = smoothing
        self.counts: dict[int, Counter[int]] = {}
        self.totals: dict[int, int] = {}
        self._cache: dict[int, np.ndarray] = {}

    def observe(self, context: int, outcome: int) -> None:
        self.counts.setdefault(context, Counter())[outcome] += 1
        self.totals[context] = self.totals.get(context, 0) + 1
        self._cache.pop(context, None)

    def row(self, context: int) -> np.ndarray:
        cached = self._cache.get(context)
        if cached is not None:
            return cached
        probs = np.full(self.vocab_size, self.smoothing, dtype=np.float64)
        total = self.totals.get(context, 0)
        for outcome, count in self.counts.get(context, {}).items():
            probs[outcome] += count
        probs /= total + self.smoothing * self.vocab_size
        probs.setflags(write=False)
        self._cache[context] = probs
        return probs

    def to_json(self) -> dict:
        return {str(ctx): {str(y): c for y, c in row.items()} for ctx, row in self.counts.items()}

    @classmethod
    def from_json(cls, data: dict, vocab_size: int, smoothing: float) -> "_CountTable":
        table = cls(vocab_size, smoothing)
        for ctx, row in data.items():
            counter = Counter({int(y): int(c) for y, c in row.items()})
            table.counts[int(ctx)] = counter
            table.totals[int(ctx)] = sum(counter.values())
        return table


def apply_tm_conditioning(base: np.ndarray, tm_context: TmContext, target_prefix,
                          gamma: float = DEFAULT_TM_GAMMA) -> np.ndarray:
    """Blend a copy distribution over unemitted retrieved-target tokens into base.

    The copy weight is gamma scaled by the TM match rate, so weak matches
    barely nudge the model while an exact match at gamma=1 copies outright.
    When every retrieved token has already been emitted the copy component
    falls back to base, leaving the distribution unchanged.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must be in [0, 1]")
    weight = gamma * tm_context.match_rate
    if weight == 0.0:
        return base
    remaining = Counter(tm_context.retrieved_target.ids)
    remaining.subtract(_prefix_ids(target_prefix))
    copy = np.zeros_like(base)
    total = 0
    for token_id, count in remaining.items():
        if count > 0:
            copy[token_id] = count
            total += count
    if total == 0:
        return base
    copy /= total
    mixed = (1.0 - weight) * base + weight * copy
    return mixed / mixed.sum()


class LexiconModel(SequenceModel):
    """Co-occurrence lexicon mixed with a target bigram model.

    The next-token distribution is 0.5 * p_lex(y | source token on the
    decoding diagonal) + 0.5 * p_bigram(y | last prefix token); with an
    empty source only the bigram component applies. A TmContext, when
    given, reshapes the result through apply_tm_conditioning.
    """

    def __init__(self, src_vocab: Vocabulary, vocab: Vocabulary,
                 smoothing: float = DEFAULT_SMOOTHING, dim: int = DEFAULT_DIM,
                 hash_seed: int = DEFAULT_HASH_SEED, tm_gamma: float = DEFAULT_TM_GAMMA):
        self.src_vocab = src_vocab
        self.vocab = vocab
        self.smoothing = smoothing
        self.dim = dim
        self.hash_seed = hash_seed
        self.tm_gamma = tm_gamma
        self.lexicon = _CountTable(len(vocab), smoothing)
        self.bigram = _CountTable(len(vocab), smoothing)

    def _diag(self, step: int, src_len: int) -> int:
        return min(step, src_len - 1)

    def state_for(self, source: SubwordSeq, prefix: tuple[int, ...]) -> ModelState:
        step = len(prefix)
        prev1 = prefix[-1] if len(prefix) >= 1 else self.vocab.bos
        prev2 = prefix[-2] if len(prefix) >= 2 else self.vocab.bos
        src_tok = source.ids[self._diag(step, len(source.ids))] if source.ids else self.src_vocab.bos
        vec = feature_hash(
            [(_ROLE_PREV1, prev1), (_ROLE_PREV2, prev2), (_ROLE_SRC, src_tok)],
            self.dim, self.hash_seed,
        )
        return ModelState(context_vector=vec, step=step)

    def step(self, source: SubwordSeq, target_prefix, tm_context: TmContext | None = None
             ) -> tuple[np.ndarray, ModelState]:
        prefix = _prefix_ids(target_prefix)
        _check_prefix(prefix, len(self.vocab))
        prev1 = prefix[-1] if prefix else self.vocab.bos
        probs = self.bigram.row(prev1)
        if source.ids:
            src_tok = source.ids[self._diag(len(prefix), len(source.ids))]
            probs = 0.5 * self.lexicon.row(src_tok) + 0.5 * probs
        else:
            probs = probs.copy()
        if tm_context is not None:
            probs = apply_tm_conditioning(probs, tm_context, prefix, self.tm_gamma)
        return probs, self.state_for(source, prefix)

    def to_json(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "lexicon",
            "dim": self.dim,
            "hash_seed": self.hash_seed,
            "smoothing": self.smoothing,
            "tm_gamma": self.tm_gamma,
            "src_vocab_size": len(self.src_vocab),
            "tgt_vocab_size": len(self.vocab),
            "lexicon": self.lexicon.to_json(),
            "bigram": self.bigram.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict, src_vocab: Vocabulary, vocab: Vocabulary) -> "LexiconModel":
        if data.get("kind") != "lexicon":
            raise ValueError("not a lexicon model file")
        if data["src_vocab_size"] != len(src_vocab) or data["tgt_vocab_size"] != len(vocab):
            raise ValueError("vocabulary size mismatch")
        model = cls(src_vocab, vocab, smoothing=data["smoothing"], dim=data["dim"],
                    hash_seed=data["hash_seed"], tm_gamma=data.get("tm_gamma", DEFAULT_TM_GAMMA))
        model.lexicon = _CountTable.from_json(data["lexicon"], len(vocab), model.smoothing)
        model.bigram = _CountTable.from_json(data["bigram"], len(vocab), model.smoothing)
        return model


class BigramLM(SequenceModel):
    """Target-only bigram model; the source argument is ignored."""

    def __init__(self, vocab: Vocabulary, smoothing: float = DEFAULT_SMOOTHING,
                 dim: int = DEFAULT_DIM, hash_seed: int = DEFAULT_HASH_SEED):
        self.vocab = vocab
        self.smoothing = smoothing
        self.dim = dim
        self.hash_seed = hash_seed
        self.bigram = _CountTable(len(vocab), smoothing)

    def step(self, source: SubwordSeq, target_prefix, tm_context: TmContext | None = None
             ) -> tuple[np.ndarray, ModelState]:
        prefix = _prefix_ids(target_prefix)
        _check_prefix(prefix, len(self.vocab))
        prev1 = prefix[-1] if prefix else self.vocab.bos
        prev2 = prefix[-2] if len(prefix) >= 2 else self.vocab.bos
        probs = self.bigram.row(prev1).copy()
        vec = feature_hash([(_ROLE_PREV1, prev1), (_ROLE_PREV2, prev2)], self.dim, self.hash_seed)
        return probs, ModelState(context_vector=vec, step=len(prefix))

    def to_json(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "bigram_lm",
            "dim": self.dim,
            "hash_seed": self.hash_seed,
            "smoothing": self.smoothing,
            "vocab_size": len(self.vocab),
            "bigram": self.bigram.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict, vocab: Vocabulary) -> "BigramLM":
        if data.get("kind") != "bigram_lm":
            raise ValueError("not a bigram LM file")
        if data["vocab_size"] != len(vocab):
            raise ValueError("vocabulary size mismatch")
        model = cls(vocab, smoothing=data["smoothing"], dim=data["dim"], hash_seed=data["hash_seed"])
        model.bigram = _CountTable.from_json(data["bigram"], len(vocab), model.smoothing)
        return model


def _observe_bigrams(table: _CountTable, ids: tuple[int, ...], bos: int, eos: int) -> None:
    prev = bos
    for token_id in ids:
        table.observe(prev, token_id)
        prev = token_id
    table.observe(prev, eos)


def build_lexicon_model(parallel_corpus, vocab_src: Vocabulary, vocab_tgt: Vocabulary,
                        smoothing: float = DEFAULT_SMOOTHING, dim: int = DEFAULT_DIM,
                        hash_seed: int = DEFAULT_HASH_SEED,
                        tm_gamma: float = DEFAULT_TM_GAMMA) -> LexiconModel:
    """Estimate the lexicon and bigram tables from aligned sentence pairs.

    Lexicon counts pair each target token (and the closing eos) with the
    source token at the length-proportional diagonal position.
    """
    pairs = list(parallel_corpus)
    if not pairs:
        raise ValueError("empty corpus")
    model = LexiconModel(vocab_src, vocab_tgt, smoothing=smoothing, dim=dim,
                         hash_seed=hash_seed, tm_gamma=tm_gamma)
    for src_text, tgt_text in pairs:
        src = tokenize(src_text, vocab_src)
        tgt = tokenize(tgt_text, vocab_tgt)
        if not tgt.ids:
            continue
        _observe_bigrams(model.bigram, tgt.ids, vocab_tgt.bos, vocab_tgt.eos)
        if not src.ids:
            continue
        s_len, t_len = len(src.ids), len(tgt.ids)
        for t in range(t_len + 1):
            outcome = tgt.ids[t] if t < t_len else vocab_tgt.eos
            j = min(t * s_len // t_len, s_len - 1) if t < t_len else s_len - 1
            model.lexicon.observe(src.ids[j], outcome)
    return model


def build_toy_lm(mono_corpus, vocab: Vocabulary, smoothing: float = DEFAULT_SMOOTHING,
                 dim: int = DEFAULT_DIM, hash_seed: int = DEFAULT_HASH_SEED) -> BigramLM:
    """Estimate a smoothed bigram LM from monolingual sentences."""
    sentences = [normalize_ws(s) for s in mono_corpus]
    sentences = [s for s in sentences if s]
    if not sentences:
        raise ValueError("empty corpus")
    model = BigramLM(vocab, smoothing=smoothing, dim=dim, hash_seed=hash_seed)
    for sentence in sentences:
        ids = tokenize(sentence, vocab).ids
        if ids:
            _observe_bigrams(model.bigram, ids, vocab.bos, vocab.eos)
    return model


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_json()), encoding="utf-8")


def load_lexicon_model(path: str | Path, src_vocab: Vocabulary, vocab: Vocabulary) -> LexiconModel:
    return LexiconModel.from_json(json.loads(Path(path).read_text(encoding="utf-8")), src_vocab, vocab)


def load_toy_lm(path: str | Path, vocab: Vocabulary) -> BigramLM:
    return BigramLM.from_json(json.loads(Path(path).read_text(encoding="utf-8")), vocab)
