"""Subword-prefix constrained decoding.

A decode request carries a fully confirmed target prefix (locked) plus,
optionally, the characters of an unfinished word (dangling). Locked tokens
are force-fed through the model with their probabilities recorded; the
dangling word is completed by masking the next-token distribution with a
hit vector over vocabulary entries that extend what the user typed; the
remainder is ordinary beam search with GNMT-style length normalization.

Every step function used here has the shape
``step_fn(source: SubwordSeq, prefix_ids: tuple[int, ...]) -> probs`` and
must be a pure function, which is what makes forced decoding, batching and
replayed completions exactly reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tokenizer import SubwordSeq, Vocabulary, seq_from_ids

DEFAULT_BEAM = 4
DEFAULT_LENGTH_NORM_ALPHA = 0.6
DEFAULT_TOPK = 10
DEFAULT_LM_WORDS = 4
HIGHLIGHT_THRESHOLD = 0.6

_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class PrefixSpec:
    """Locked target prefix plus the typed characters of an unfinished word."""

    locked: SubwordSeq
    dangling: str | None = None

    def __post_init__(self):
        if self.dangling is not None:
            if not self.dangling or any(c.isspace() for c in self.dangling):
                raise ValueError("dangling must be non-empty and contain no whitespace")


@dataclass(frozen=True)
class HitVector:
    """Binary vocabulary mask for entries that extend the typed word piece."""

    bits: np.ndarray
    piece_raw: str
    word_initial: bool


@dataclass(frozen=True)
class CompletedWord:
    token_id: int
    probability: float
    fallback: bool


@dataclass
class Hypothesis:
    tokens: SubwordSeq
    score: float
    per_token_prob: list[float]
    finished: bool

    def normalized_score(self, alpha: float = DEFAULT_LENGTH_NORM_ALPHA) -> float:
        return self.score / length_penalty(len(self.tokens.ids), alpha)


@dataclass
class DecodeResult:
    nbest: list[Hypothesis]
    completed_word: str | None
    completion_end: int  # token index where the post-completion ghost text begins


def length_penalty(length: int, alpha: float = DEFAULT_LENGTH_NORM_ALPHA) -> float:
    return ((5.0 + length) / 6.0) ** alpha


def _dangling_pieces(vocab: Vocabulary, dangling: str):
    """Greedy segmentation of the dangling text: (forced ids, last id, last char start).

    A trailing run of unk pieces is folded into one literal piece so that
    characters the vocabulary cannot segment still match as the text the
    user actually typed.
    """
    pieces = vocab.encode_word(dangling)
    last_idx = len(pieces) - 1
    while last_idx > 0 and pieces[last_idx].id == vocab.unk and pieces[last_idx - 1].id == vocab.unk:
        last_idx -= 1
    forced = tuple(p.id for p in pieces[:last_idx])
    return forced, pieces[last_idx].id, pieces[last_idx].start


def build_hit_vector(vocab: Vocabulary, dangling: str) -> HitVector:
    """Mask of vocabulary entries whose surface extends the last typed piece.

    The dangling text is segmented greedily; only its last piece is matched,
    and only against entries of the same word-position class, so a
    mid-word fragment can never "complete" as the start of a new word.
    """
    if not dangling or any(c.isspace() for c in dangling):
        raise ValueError("dangling must be non-empty and contain no whitespace")
    _, _, last_start = _dangling_pieces(vocab, dangling)
    raw = dangling[last_start:]
    word_initial = last_start == 0
    bits = np.zeros(len(vocab), dtype=np.float64)
    for token_id in vocab.prefix_hits(raw, word_initial):
        bits[token_id] = 1.0
    return HitVector(bits=bits, piece_raw=raw, word_initial=word_initial)


def complete_current_word(step_fn, source: SubwordSeq, spec: PrefixSpec, hit: HitVector,
                          vocab: Vocabulary) -> CompletedWord:
    """Pick the highest-probability vocabulary entry among the hit bits.

    The returned probability is the unmasked model probability of the chosen
    token. If the mask leaves no probability mass, the user's literal last
    piece is returned with fallback=True so typing is never blocked.
    """
    if spec.dangling is None:
        raise ValueError("spec has no dangling text")
    forced, last_id, _ = _dangling_pieces(vocab, spec.dangling)
    prefix = spec.locked.ids + forced
    probs = step_fn(source, prefix)
    masked = probs * hit.bits
    if masked.sum() > 0.0:
        token_id = int(np.argmax(masked))
        return CompletedWord(token_id, float(probs[token_id]), fallback=False)
    return CompletedWord(last_id, float(probs[last_id]), fallback=True)


class _Beam:
    """One growing hypothesis: ids, per-token probs, running log score."""

    __slots__ = ("ids", "probs", "score")

    def __init__(self, ids=(), probs=(), score=0.0):
        self.ids = tuple(ids)
        self.probs = tuple(probs)
        self.score = score

    def extend(self, token_id: int, prob: float) -> "_Beam":
        return _Beam(self.ids + (token_id,), self.probs + (prob,),
                     self.score + math.log(max(prob, _LOG_FLOOR)))


def _force_tokens(step_fn, source, beam: _Beam, token_ids) -> _Beam:
    for token_id in token_ids:
        probs = step_fn(source, beam.ids)
        beam = beam.extend(int(token_id), float(probs[token_id]))
    return beam


def _resolve_dangling(step_fn, source, beam: _Beam, spec: PrefixSpec, vocab: Vocabulary):
    """Force pre-final dangling pieces, complete the word, extend it greedily.

    Returns the grown beam and the surface string of the completed word.
    """
    forced, _, last_start = _dangling_pieces(vocab, spec.dangling)
    beam = _force_tokens(step_fn, source, beam, forced)
    hit = build_hit_vector(vocab, spec.dangling)
    done = complete_current_word(step_fn, source, spec, hit, vocab)
    beam = beam.extend(done.token_id, done.probability)
    if done.fallback:
        word = spec.dangling
    else:
        word = spec.dangling[:last_start] + vocab.surface(done.token_id)
    # keep appending continuation pieces while they are the outright argmax;
    # capped so a degenerate model cannot extend a word forever
    for _ in range(16):
        probs = step_fn(source, beam.ids)
        top = int(np.argmax(probs))
        if not vocab.is_continuation(top):
            break
        beam = beam.extend(top, float(probs[top]))
        word += vocab.surface(top)
    return beam, word


def beam_decode(step_fn, source: SubwordSeq, spec: PrefixSpec, vocab: Vocabulary,
                max_len: int, beam: int = DEFAULT_BEAM,
                length_norm_alpha: float = DEFAULT_LENGTH_NORM_ALPHA) -> DecodeResult:
    """Forced prefix + dangling-word completion + standard beam search.

    max_len caps the total token count including eos; a hypothesis one step
    short of the cap is closed with a forced eos so decoding always ends.
    The n-best list holds up to `beam` finished hypotheses ranked by
    length-normalized score.
    """
    if beam < 1:
        raise ValueError("beam must be >= 1")
    if max_len <= len(spec.locked.ids):
        raise ValueError("max_len must exceed the locked prefix length")
    vocab.check_ids(spec.locked.ids)

    seed = _force_tokens(step_fn, source, _Beam(), spec.locked.ids)
    completed_word = None
    if spec.dangling is not None:
        seed, completed_word = _resolve_dangling(step_fn, source, seed, spec, vocab)
    completion_end = len(seed.ids)

    live = [seed]
    finished: list[_Beam] = []
    while live:
        candidates: list[tuple[float, int, int, _Beam, float]] = []
        for parent_idx, hyp in enumerate(live):
            probs = step_fn(source, hyp.ids)
            if len(hyp.ids) >= max_len - 1:
                choices = [vocab.eos]
            else:
                order = np.argsort(-probs, kind="stable")[:beam]
                choices = [int(t) for t in order]
            for token_id in choices:
                prob = float(probs[token_id])
                score = hyp.score + math.log(max(prob, _LOG_FLOOR))
                candidates.append((-score, parent_idx, token_id, hyp, prob))
        candidates.sort(key=lambda c: (c[0], c[1], c[2]))
        next_live = []
        for _, _, token_id, hyp, prob in candidates[:beam]:
            grown = hyp.extend(token_id, prob)
            if token_id == vocab.eos:
                finished.append(grown)
            else:
                next_live.append(grown)
        live = next_live

    hyps = [
        Hypothesis(tokens=seq_from_ids(b.ids, vocab), score=b.score,
                   per_token_prob=list(b.probs), finished=True)
        for b in finished
    ]
    hyps.sort(key=lambda h: -h.normalized_score(length_norm_alpha))
    return DecodeResult(nbest=hyps[:beam], completed_word=completed_word,
                        completion_end=completion_end)


def topk_sample_decode(lm_step_fn, spec: PrefixSpec, vocab: Vocabulary,
                       k: int = DEFAULT_TOPK, words: int = DEFAULT_LM_WORDS,
                       seed: int = 0, max_tokens: int = 64) -> Hypothesis:
    """Sample a short continuation from the k most probable tokens per step.

    The returned hypothesis holds only the generated tokens (not the locked
    prefix); generation stops at eos or once `words` complete surface words
    have been produced. A dangling word is completed first, hit-masked
    before the top-k truncation, and counts as the first word.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    prefix = list(spec.locked.ids)
    generated: list[int] = []
    gen_probs: list[float] = []
    words_started = 0

    def emit(token_id: int, prob: float) -> None:
        nonlocal words_started
        prefix.append(token_id)
        generated.append(token_id)
        gen_probs.append(prob)
        if not vocab.is_continuation(token_id):
            words_started += 1

    def sample_from(probs: np.ndarray) -> tuple[int, float]:
        order = np.lexsort((np.arange(len(probs)), -probs))[:k]
        top = probs[order]
        total = top.sum()
        if total <= 0.0:
            return int(order[0]), float(probs[order[0]])
        token_id = int(rng.choice(order, p=top / total))
        return token_id, float(probs[token_id])

    if spec.dangling is not None:
        forced, last_id, _ = _dangling_pieces(vocab, spec.dangling)
        for token_id in forced:
            probs = lm_step_fn(prefix)
            emit(int(token_id), float(probs[token_id]))
        hit = build_hit_vector(vocab, spec.dangling)
        probs = lm_step_fn(prefix)
        masked = probs * hit.bits
        if masked.sum() > 0.0:
            token_id, _ = sample_from(masked)
            emit(token_id, float(probs[token_id]))
        else:
            emit(last_id, float(probs[last_id]))

    while len(generated) < max_tokens:
        probs = lm_step_fn(prefix)
        token_id, prob = sample_from(probs)
        if token_id == vocab.eos:
            break
        if not vocab.is_continuation(token_id) and words_started >= words:
            break
        emit(token_id, prob)

    score = sum(math.log(max(p, _LOG_FLOOR)) for p in gen_probs)
    return Hypothesis(tokens=seq_from_ids(generated, vocab), score=score,
                      per_token_prob=gen_probs, finished=True)


def batch_step(step_fn, requests, pad_id: int) -> list[np.ndarray]:
    """Left-padded batched stepping; each row must equal its unbatched call.

    Shorter prefixes are aligned to the right of an (n, max_len) id matrix
    with pad tokens on the left; the pad columns are excluded from the
    context before the model is stepped, so outputs are bitwise-identical
    to per-request calls.
    """
    reqs = list(requests)
    if not reqs:
        raise ValueError("batch must contain at least one request")
    lengths = [len(prefix) for _, prefix in reqs]
    width = max(lengths)
    matrix = np.full((len(reqs), width), pad_id, dtype=np.int64)
    for row, (_, prefix) in enumerate(reqs):
        if lengths[row]:
            matrix[row, width - lengths[row]:] = prefix
    out = []
    for row, (source, _) in enumerate(reqs):
        real = tuple(int(t) for t in matrix[row, width - lengths[row]:])
        out.append(step_fn(source, real))
    return out


def highlight_span(hypothesis: Hypothesis, start: int,
                   threshold: float = HIGHLIGHT_THRESHOLD) -> int:
    """Length of the run of consecutive tokens from `start` with prob > threshold."""
    probs = hypothesis.per_token_prob
    if not 0 <= start <= len(probs):
        raise IndexError("start out of bounds")
    length = 0
    for p in probs[start:]:
        if p > threshold:
            length += 1
        else:
            break
    return length
