"""Toy model contracts: valid distributions, purity, count-based oracles."""

import json
from collections import Counter

import numpy as np
import pytest

from imtkit.model_core import (
    BigramLM,
    LexiconModel,
    TmContext,
    apply_tm_conditioning,
    build_lexicon_model,
    build_toy_lm,
    load_lexicon_model,
    load_toy_lm,
    model_step,
    save_model,
)
from imtkit.tokenizer import SubwordSeq, tokenize, train_bpe

from conftest import FLUSH_PAIRS, FLUSH_TGT


def assert_distribution(probs):
    assert np.all(probs >= 0.0)
    assert not np.any(np.isnan(probs))
    assert probs.sum() == pytest.approx(1.0, abs=1e-9)


class TestModelStep:
    def test_probs_sum_to_one(self, flush_model, flush_vocabs):
        vocab_src, vocab_tgt = flush_vocabs
        source = tokenize("c1 c2 c3", vocab_src)
        for prefix_text in ("", "flush", "flush for"):
            prefix = tokenize(prefix_text, vocab_tgt)
            probs, _ = model_step(flush_model, source, prefix)
            assert_distribution(probs)

    def test_empty_source_empty_prefix_equals_start_unigram_oracle(self, flush_model,
                                                                   flush_vocabs):
        _, vocab_tgt = flush_vocabs
        probs, state = model_step(flush_model, SubwordSeq.empty(), ())
        # oracle: recompute smoothed first-token counts from the raw corpus
        counts = Counter()
        for sentence in FLUSH_TGT:
            counts[tokenize(sentence, vocab_tgt).ids[0]] += 1
        total = sum(counts.values())
        alpha = flush_model.smoothing
        for token_id in range(len(vocab_tgt)):
            expected = (counts.get(token_id, 0) + alpha) / (total + alpha * len(vocab_tgt))
            assert probs[token_id] == pytest.approx(expected, abs=1e-12)
        assert state.step == 0

    def test_determinism_bitwise_over_repeated_calls(self, flush_model, flush_vocabs):
        vocab_src, vocab_tgt = flush_vocabs
        source = tokenize("c1 c2 c3", vocab_src)
        prefix = tokenize("flush for", vocab_tgt).ids
        first_probs, first_state = model_step(flush_model, source, prefix)
        for _ in range(100):
            probs, state = model_step(flush_model, source, prefix)
            assert probs.tobytes() == first_probs.tobytes()
            assert state.context_vector.tobytes() == first_state.context_vector.tobytes()

    def test_invalid_prefix_token_rejected(self, flush_model, flush_vocabs):
        vocab_src, _ = flush_vocabs
        source = tokenize("c1", vocab_src)
        with pytest.raises(ValueError, match="invalid prefix token"):
            model_step(flush_model, source, (10_000,))


class TestBuildLexiconModel:
    def test_identical_pairs_greedy_decode_recovers_target(self):
        vocab_src = train_bpe(["a b"], 4)
        vocab_tgt = train_bpe(["A B"], 4)
        model = build_lexicon_model([("a b", "A B")] * 3, vocab_src, vocab_tgt)
        source = tokenize("a b", vocab_src)
        prefix: list[int] = []
        decoded = []
        for _ in range(5):
            probs, _ = model.step(source, tuple(prefix))
            token = int(np.argmax(probs))
            if token == vocab_tgt.eos:
                break
            decoded.append(vocab_tgt.entries[token])
            prefix.append(token)
        assert decoded == ["A", "B"]

    def test_smoothing_gives_full_support(self, flush_model, flush_vocabs):
        vocab_src, _ = flush_vocabs
        probs, _ = flush_model.step(tokenize("c1 c2 c3", vocab_src), ())
        assert np.all(probs > 0.0)

    def test_context_vector_identical_across_instances(self, flush_vocabs):
        vocab_src, vocab_tgt = flush_vocabs
        m1 = build_lexicon_model(FLUSH_PAIRS, vocab_src, vocab_tgt)
        m2 = build_lexicon_model(FLUSH_PAIRS, vocab_src, vocab_tgt)
        source = tokenize("c1 c2 c3", vocab_src)
        prefix = tokenize("flush for", vocab_tgt).ids
        _, s1 = m1.step(source, prefix)
        _, s2 = m2.step(source, prefix)
        assert s1.context_vector.tobytes() == s2.context_vector.tobytes()

    def test_empty_corpus_rejected(self, flush_vocabs):
        vocab_src, vocab_tgt = flush_vocabs
        with pytest.raises(ValueError, match="empty corpus"):
            build_lexicon_model([], vocab_src, vocab_tgt)


class TestTmConditioning:
    def _context(self, vocab_tgt, target_text, rate):
        return TmContext(
            retrieved_source=SubwordSeq.empty(),
            retrieved_target=tokenize(target_text, vocab_tgt),
            match_rate=rate,
        )

    def test_gamma_zero_is_identity(self, flush_model, flush_vocabs):
        vocab_src, vocab_tgt = flush_vocabs
        base, _ = flush_model.step(tokenize("c1 c2 c3", vocab_src), ())
        ctx = self._context(vocab_tgt, "flush for oil", 1.0)
        out = apply_tm_conditioning(base, ctx, (), gamma=0.0)
        assert out.tobytes() == base.tobytes()

    def test_full_copy_single_token_is_one_hot(self, flush_vocabs):
        vocab_src, vocab_tgt = flush_vocabs
        base = np.full(len(vocab_tgt), 1.0 / len(vocab_tgt))
        ctx = self._context(vocab_tgt, "oil", 1.0)
        out = apply_tm_conditioning(base, ctx, (), gamma=1.0)
        oil = vocab_tgt.id_of["oil"]
        assert out[oil] == pytest.approx(1.0)
        assert out.sum() == pytest.approx(1.0)

    def test_mixture_arithmetic_oracle(self, flush_vocabs):
        _, vocab_tgt = flush_vocabs
        n = len(vocab_tgt)
        base = np.full(n, 1.0 / n)
        ctx = self._context(vocab_tgt, "for oil", 0.8)
        out = apply_tm_conditioning(base, ctx, (), gamma=0.3)
        weight = 0.3 * 0.8
        for_id, oil_id = vocab_tgt.id_of["for"], vocab_tgt.id_of["oil"]
        for token_id in range(n):
            copy = 0.5 if token_id in (for_id, oil_id) else 0.0
            assert out[token_id] == pytest.approx((1 - weight) / n + weight * copy, abs=1e-12)

    def test_emitted_tokens_leave_copy_set(self, flush_vocabs):
        _, vocab_tgt = flush_vocabs
        n = len(vocab_tgt)
        base = np.full(n, 1.0 / n)
        ctx = self._context(vocab_tgt, "for oil", 1.0)
        prefix = (vocab_tgt.id_of["for"],)
        out = apply_tm_conditioning(base, ctx, prefix, gamma=1.0)
        assert out[vocab_tgt.id_of["oil"]] == pytest.approx(1.0)

    def test_exhausted_copy_set_falls_back_to_base(self, flush_vocabs):
        _, vocab_tgt = flush_vocabs
        n = len(vocab_tgt)
        base = np.full(n, 1.0 / n)
        ctx = self._context(vocab_tgt, "oil", 1.0)
        prefix = (vocab_tgt.id_of["oil"],)
        out = apply_tm_conditioning(base, ctx, prefix, gamma=1.0)
        assert out.tobytes() == base.tobytes()

    def test_support_preserved_when_weight_below_one(self, flush_model, flush_vocabs):
        vocab_src, vocab_tgt = flush_vocabs
        base, _ = flush_model.step(tokenize("c1 c2 c3", vocab_src), ())
        ctx = self._context(vocab_tgt, "flush for oil", 0.9)
        out = apply_tm_conditioning(base, ctx, (), gamma=0.3)
        assert np.all(out[base > 0.0] > 0.0)


class TestToyLm:
    def test_next_after_the_matches_count_argmax(self):
        corpus = ["the cat sat", "the cat ran", "the dog sat", "a dog sat"]
        vocab = train_bpe(corpus, 30)
        lm = build_toy_lm(corpus, vocab)
        the = vocab.id_of["the"]
        probs, _ = lm.step(SubwordSeq.empty(), (the,))
        # oracle: "cat" follows "the" twice, "dog" once
        assert int(np.argmax(probs)) == vocab.id_of["cat"]

    def test_unseen_context_backs_off_to_smoothed_uniform(self):
        corpus = ["the cat sat"]
        vocab = train_bpe(corpus, 20)
        lm = build_toy_lm(corpus, vocab)
        sat = vocab.id_of["sat"]
        probs, _ = lm.step(SubwordSeq.empty(), (vocab.id_of["cat"], sat, sat))
        assert_distribution(probs)

    def test_determinism(self, flush_lm):
        a, _ = flush_lm.step(SubwordSeq.empty(), ())
        b, _ = flush_lm.step(SubwordSeq.empty(), ())
        assert a.tobytes() == b.tobytes()

    def test_empty_corpus_rejected(self, flush_vocabs):
        _, vocab_tgt = flush_vocabs
        with pytest.raises(ValueError, match="empty corpus"):
            build_toy_lm(["   "], vocab_tgt)


class TestPersistence:
    def test_lexicon_model_round_trip_drives_identical_steps(self, tmp_path, flush_model,
                                                             flush_vocabs):
        vocab_src, vocab_tgt = flush_vocabs
        path = tmp_path / "lexicon_model.json"
        save_model(flush_model, path)
        reloaded = load_lexicon_model(path, vocab_src, vocab_tgt)
        source = tokenize("c1 c2 c3", vocab_src)
        prefix = tokenize("flush", vocab_tgt).ids
        p1, s1 = flush_model.step(source, prefix)
        p2, s2 = reloaded.step(source, prefix)
        assert p1.tobytes() == p2.tobytes()
        assert s1.context_vector.tobytes() == s2.context_vector.tobytes()

    def test_lm_round_trip(self, tmp_path, flush_lm, flush_vocabs):
        _, vocab_tgt = flush_vocabs
        path = tmp_path / "lm.json"
        save_model(flush_lm, path)
        reloaded = load_toy_lm(path, vocab_tgt)
        p1, _ = flush_lm.step(SubwordSeq.empty(), ())
        p2, _ = reloaded.step(SubwordSeq.empty(), ())
        assert p1.tobytes() == p2.tobytes()

    def test_format_version_present(self, flush_model):
        data = flush_model.to_json()
        assert data["format_version"] == 1
        json.dumps(data)  # must be serializable as-is
