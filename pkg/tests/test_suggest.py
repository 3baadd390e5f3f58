"""Suggestion box: alternates, dedup, the >10-word LM gate, highlighting."""

import math

import pytest

from imtkit.decoder import DecodeResult, Hypothesis, PrefixSpec, beam_decode
from imtkit.suggest import build_suggestions, lm_gate_open
from imtkit.tokenizer import SubwordSeq, seq_from_ids, tokenize


def make_step(model):
    return lambda source, prefix: model.step(source, prefix, None)[0]


def hyp_from_text(text, vocab, probs=None):
    ids = tokenize(text, vocab).ids
    probs = probs if probs is not None else [0.9] * len(ids)
    return Hypothesis(tokens=seq_from_ids(ids, vocab), score=sum(math.log(p) for p in probs),
                      per_token_prob=list(probs), finished=True)


def result_from_texts(texts, vocab, completion_end=0):
    return DecodeResult(nbest=[hyp_from_text(t, vocab) for t in texts],
                        completed_word=None, completion_end=completion_end)


class TestBuildSuggestions:
    def test_single_hypothesis_means_no_alternates(self, flush_vocabs):
        _, vocab = flush_vocabs
        result = result_from_texts(["flush for oil"], vocab)
        out = build_suggestions(result, None, PrefixSpec(locked=SubwordSeq.empty()),
                                seed=0, vocab=vocab)
        assert out.alternates == []
        assert out.inline is result.nbest[0]

    def test_identical_truncations_deduplicate(self, flush_vocabs):
        _, vocab = flush_vocabs
        # ranks 2..4 all truncate to the same three words
        result = result_from_texts(
            ["flush for oil bar", "flush form oil bar", "flush form oil baz",
             "flush form oil"], vocab)
        out = build_suggestions(result, None, PrefixSpec(locked=SubwordSeq.empty()),
                                seed=0, vocab=vocab)
        assert out.alternates == ["flush form oil"]

    def test_alternate_distinct_from_inline_preview(self, flush_vocabs):
        _, vocab = flush_vocabs
        result = result_from_texts(["flush for oil bar", "flush for oil baz"], vocab)
        out = build_suggestions(result, None, PrefixSpec(locked=SubwordSeq.empty()),
                                seed=0, vocab=vocab)
        # rank 2 truncates to the inline preview, so it is suppressed
        assert out.inline_preview == "flush for oil"
        assert out.alternates == []

    def test_caps_three_alternates_of_three_words(self, flush_model, flush_vocabs):
        vocab_src, vocab = flush_vocabs
        source = tokenize("c1 c2 c3", vocab_src)
        spec = PrefixSpec(locked=SubwordSeq.empty())
        result = beam_decode(make_step(flush_model), source, spec, vocab,
                             max_len=14, beam=6)
        out = build_suggestions(result, None, spec, seed=0, vocab=vocab)
        assert len(out.alternates) <= 3
        for alt in out.alternates:
            assert len(alt.split()) <= 3
        assert len(set(out.alternates)) == len(out.alternates)

    def test_lm_gate_closed_at_ten_words_open_at_eleven(self, flush_model, flush_lm,
                                                        flush_vocabs):
        vocab_src, vocab = flush_vocabs
        source = tokenize("c1 c2 c3", vocab_src)
        ten = "flush for oil flush for oil flush for oil flush"
        eleven = ten + " for"
        assert len(ten.split()) == 10 and len(eleven.split()) == 11
        for text, expect_lm in ((ten, False), (eleven, True)):
            spec = PrefixSpec(locked=tokenize(text, vocab))
            assert lm_gate_open(spec, vocab) is expect_lm
            result = beam_decode(make_step(flush_model), source, spec, vocab,
                                 max_len=len(spec.locked.ids) + 8, beam=2)
            out = build_suggestions(result, flush_lm, spec, seed=3, vocab=vocab)
            assert (out.lm_suggestion is not None) is expect_lm
            if out.lm_suggestion is not None:
                assert len(out.lm_suggestion.split()) <= 4

    def test_deterministic_given_seed(self, flush_model, flush_lm, flush_vocabs):
        vocab_src, vocab = flush_vocabs
        source = tokenize("c1 c2 c3", vocab_src)
        locked = tokenize("flush for oil flush for oil flush for oil flush for", vocab)
        spec = PrefixSpec(locked=locked)
        result = beam_decode(make_step(flush_model), source, spec, vocab,
                             max_len=len(locked.ids) + 8, beam=3)
        a = build_suggestions(result, flush_lm, spec, seed=42, vocab=vocab)
        b = build_suggestions(result, flush_lm, spec, seed=42, vocab=vocab)
        assert a.alternates == b.alternates
        assert a.lm_suggestion == b.lm_suggestion
        assert a.highlight_len == b.highlight_len

    def test_highlight_len_counts_confident_ghost_run(self, flush_vocabs):
        _, vocab = flush_vocabs
        ids = tokenize("flush for oil bar", vocab).ids
        hyp = Hypothesis(tokens=seq_from_ids(ids, vocab), score=0.0,
                         per_token_prob=[0.2, 0.9, 0.7, 0.3], finished=True)
        result = DecodeResult(nbest=[hyp], completed_word="flush", completion_end=1)
        out = build_suggestions(result, None,
                                PrefixSpec(locked=SubwordSeq.empty(), dangling="fl"),
                                seed=0, vocab=vocab)
        assert out.highlight_len == 2

    def test_empty_nbest_rejected(self, flush_vocabs):
        _, vocab = flush_vocabs
        result = DecodeResult(nbest=[], completed_word=None, completion_end=0)
        with pytest.raises(ValueError):
            build_suggestions(result, None, PrefixSpec(locked=SubwordSeq.empty()),
                              seed=0, vocab=vocab)
