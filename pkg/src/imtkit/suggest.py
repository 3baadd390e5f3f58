"""Suggestion box assembly for the post-editing UI.

The box shows the rank-1 continuation inline (with its high-confidence
highlight run), up to three deduplicated three-word previews of the lower
ranked hypotheses, and — only once the confirmed prefix is longer than ten
words — a four-word sample from the fluency LM.
"""

from __future__ import annotations

from dataclasses import dataclass

from .decoder import (
    DecodeResult,
    HIGHLIGHT_THRESHOLD,
    Hypothesis,
    PrefixSpec,
    highlight_span,
    topk_sample_decode,
)
from .model_core import SequenceModel
from .tokenizer import SubwordSeq, Vocabulary, detokenize

LM_GATE_WORDS = 10
ALTERNATE_WORDS = 3
ALTERNATE_SLOTS = 3
LM_WORDS = 4


@dataclass
class SuggestionSet:
    inline: Hypothesis
    inline_preview: str
    alternates: list[str]
    lm_suggestion: str | None
    highlight_len: int


def _first_words(text: str, n: int) -> str:
    return " ".join(text.split()[:n])


def lm_gate_open(spec: PrefixSpec, vocab: Vocabulary) -> bool:
    """The LM only speaks up once more than ten words are confirmed."""
    return len(detokenize(spec.locked, vocab).split()) > LM_GATE_WORDS


def build_suggestions(decode_result: DecodeResult, lm: SequenceModel | None,
                      spec: PrefixSpec, seed: int, vocab: Vocabulary,
                      highlight_threshold: float = HIGHLIGHT_THRESHOLD,
                      lm_topk: int = 10) -> SuggestionSet:
    """Assemble the suggestion box from an n-best list and the fluency LM.

    Alternates are the rank-2+ continuations truncated to their first three
    words, deduplicated against each other and against the inline preview,
    in rank order, at most three of them.
    """
    if not decode_result.nbest:
        raise ValueError("decode result has no hypotheses")
    locked_len = len(spec.locked.ids)
    inline = decode_result.nbest[0]
    inline_preview = _first_words(detokenize(inline.tokens.ids[locked_len:], vocab),
                                  ALTERNATE_WORDS)
    alternates: list[str] = []
    seen = {inline_preview}
    for hyp in decode_result.nbest[1:]:
        preview = _first_words(detokenize(hyp.tokens.ids[locked_len:], vocab),
                               ALTERNATE_WORDS)
        if not preview or preview in seen:
            continue
        seen.add(preview)
        alternates.append(preview)
        if len(alternates) == ALTERNATE_SLOTS:
            break

    lm_suggestion = None
    if lm is not None and lm_gate_open(spec, vocab):
        empty = SubwordSeq.empty()

        def lm_step(prefix_ids):
            return lm.step(empty, tuple(prefix_ids), None)[0]

        sampled = topk_sample_decode(lm_step, spec, vocab, k=lm_topk,
                                     words=LM_WORDS, seed=seed)
        lm_suggestion = _first_words(detokenize(sampled.tokens, vocab), LM_WORDS) or None

    highlight_len = highlight_span(inline, decode_result.completion_end, highlight_threshold)
    return SuggestionSet(inline=inline, inline_preview=inline_preview,
                         alternates=alternates, lm_suggestion=lm_suggestion,
                         highlight_len=highlight_len)
