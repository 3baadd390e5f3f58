"""kNN augmentation: datastore construction, interpolation arithmetic, decoding."""

import math
import random

import numpy as np
import pytest

from imtkit.decoder import PrefixSpec, beam_decode
from imtkit.knn_augment import (
    KnnConfig,
    KnnDatastore,
    build_datastore,
    knn_decode,
    knn_step,
    nearest_neighbors,
)
from imtkit.tm_index import TmEntry
from imtkit.tokenizer import SubwordSeq, detokenize, tokenize


def entry(i, source, target):
    return TmEntry(id=i, source=source, target=target, origin="uploaded", created_seq=i)


class TestKnnConfig:
    def test_defaults(self):
        config = KnnConfig()
        assert (config.k, config.lam, config.temperature, config.tau) == (4, 0.4, 5.0, 5.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            KnnConfig(k=0)
        with pytest.raises(ValueError):
            KnnConfig(lam=1.5)
        with pytest.raises(ValueError):
            KnnConfig(temperature=0.0)


class TestBuildDatastore:
    def test_empty_pool(self, flush_model):
        ds = build_datastore(flush_model, [])
        assert len(ds) == 0

    def test_record_count_is_target_length_plus_eos(self, flush_model):
        ds = build_datastore(flush_model, [entry(0, "c1 c2 c3", "flush for oil")])
        assert len(ds) == 4  # 3 tokens + eos

    def test_identical_pairs_give_byte_equal_duplicated_keys(self, flush_model):
        pair = entry(0, "c1 c2 c3", "flush for oil")
        ds = build_datastore(flush_model, [pair, entry(1, "c1 c2 c3", "flush for oil")])
        assert len(ds) == 8
        for i in range(4):
            assert ds.keys[i].tobytes() == ds.keys[i + 4].tobytes()
            assert ds.values[i] == ds.values[i + 4]

    def test_untokenizable_pair_skipped(self, flush_model):
        ds = build_datastore(flush_model, [entry(0, "   ", "flush for oil"),
                                           entry(1, "c1 c2", "flush for")])
        assert {p[0] for p in ds.provenance} == {1}

    def test_pool_size_capped(self, flush_model):
        pool = [entry(i, "c1", "flush") for i in range(17)]
        with pytest.raises(ValueError):
            build_datastore(flush_model, pool)

    def test_eos_transitions_recorded(self, flush_model, flush_vocabs):
        _, vocab_tgt = flush_vocabs
        ds = build_datastore(flush_model, [entry(0, "c1 c2 c3", "flush for oil")])
        assert ds.values[-1] == vocab_tgt.eos


class TestKnnStep:
    def _source(self, flush_vocabs):
        vocab_src, _ = flush_vocabs
        return tokenize("c1 c2 c3", vocab_src)

    def test_lambda_zero_is_bitwise_identity(self, flush_model, flush_vocabs):
        source = self._source(flush_vocabs)
        ds = build_datastore(flush_model, [entry(0, "c1 c2 c3", "flush for oil")])
        config = KnnConfig(lam=0.0)
        base, _ = flush_model.step(source, ())
        out = knn_step(flush_model, ds, config, source, ())
        assert out.tobytes() == base.tobytes()

    def test_tau_zero_excludes_even_exact_matches(self, flush_model, flush_vocabs):
        source = self._source(flush_vocabs)
        ds = build_datastore(flush_model, [entry(0, "c1 c2 c3", "flush for oil")])
        config = KnnConfig(tau=0.0)
        base, _ = flush_model.step(source, ())
        out = knn_step(flush_model, ds, config, source, ())
        assert out.tobytes() == base.tobytes()

    def test_single_exact_neighbor_lambda_one_is_one_hot(self, flush_model, flush_vocabs):
        source = self._source(flush_vocabs)
        _, state = flush_model.step(source, ())
        target = 7
        ds = KnnDatastore(keys=state.context_vector[None, :].copy(),
                          values=[target], provenance=[(0, 0)])
        config = KnnConfig(k=1, lam=1.0)
        out = knn_step(flush_model, ds, config, source, ())
        assert out[target] == pytest.approx(1.0)
        assert out.sum() == pytest.approx(1.0)

    def test_two_neighbor_arithmetic_oracle(self, flush_model, flush_vocabs):
        source = self._source(flush_vocabs)
        base, state = flush_model.step(source, ())
        q = state.context_vector
        key1 = q.copy(); key1[0] += 1.0          # squared distance 1
        key2 = q.copy(); key2[0] += 1.0; key2[1] += 1.0  # squared distance 2
        t1, t2 = 5, 9
        ds = KnnDatastore(keys=np.stack([key1, key2]), values=[t1, t2],
                          provenance=[(0, 0), (0, 1)])
        config = KnnConfig(k=4, lam=0.4, temperature=5.0, tau=5.0)
        out = knn_step(flush_model, ds, config, source, ())
        # independent arithmetic: exp(-d/T) weights, normalized, mixed at lambda
        w1, w2 = math.exp(-1.0 / 5.0), math.exp(-2.0 / 5.0)
        p1, p2 = w1 / (w1 + w2), w2 / (w1 + w2)
        for token_id in range(len(out)):
            knn_mass = p1 * (token_id == t1) + p2 * (token_id == t2)
            expected = 0.4 * knn_mass + 0.6 * base[token_id]
            assert out[token_id] == pytest.approx(expected, abs=1e-12)

    def test_normalization_across_configs(self, flush_model, flush_vocabs):
        source = self._source(flush_vocabs)
        ds = build_datastore(flush_model, [entry(0, "c1 c2 c3", "flush for oil"),
                                           entry(1, "c1 c2", "flush form")])
        rng = random.Random(19)
        prefixes = [(), tokenize("flush", flush_model.vocab).ids]
        for _ in range(50):
            config = KnnConfig(k=rng.randint(1, 8), lam=rng.random(),
                               temperature=rng.uniform(0.1, 10.0),
                               tau=rng.uniform(0.0, 10.0))
            for prefix in prefixes:
                out = knn_step(flush_model, ds, config, source, prefix)
                assert out.sum() == pytest.approx(1.0, abs=1e-9)
                assert np.all(out >= 0.0)

    def test_at_most_k_records_contribute(self, flush_model, flush_vocabs):
        source = self._source(flush_vocabs)
        _, state = flush_model.step(source, ())
        q = state.context_vector
        t1, t2 = 3, 4
        keys = np.stack([q.copy() for _ in range(10)])
        values = [t1, t1, t1] + [t2] * 7
        ds = KnnDatastore(keys=keys, values=values,
                          provenance=[(0, i) for i in range(10)])
        config = KnnConfig(k=3, lam=1.0)
        out = knn_step(flush_model, ds, config, source, ())
        # stable tie-break keeps the first three records, all voting t1
        assert out[t1] == pytest.approx(1.0)
        assert out[t2] == pytest.approx(0.0)

    def test_dimension_mismatch_rejected(self, flush_model, flush_vocabs):
        source = self._source(flush_vocabs)
        ds = KnnDatastore(keys=np.zeros((1, 3)), values=[0], provenance=[(0, 0)])
        with pytest.raises(ValueError, match="datastore/model mismatch"):
            knn_step(flush_model, ds, KnnConfig(), source, ())

    def test_nearest_neighbors_equals_brute_force_scan(self, flush_model):
        rng = np.random.default_rng(29)
        dim = flush_model.dim
        keys = rng.normal(size=(200, dim))
        ds = KnnDatastore(keys=keys, values=list(range(200)),
                          provenance=[(0, i) for i in range(200)])
        for _ in range(25):
            query = rng.normal(size=dim)
            k = int(rng.integers(1, 12))
            got = nearest_neighbors(ds, query, k)
            dists = [float(((keys[i] - query) ** 2).sum()) for i in range(200)]
            expected = sorted(range(200), key=lambda i: (dists[i], i))[:k]
            assert [i for i, _ in got] == expected
            for i, d in got:
                assert d == pytest.approx(dists[i], rel=1e-12)


class TestKnnDecode:
    def test_empty_datastore_equals_plain_decode(self, flush_model, flush_vocabs):
        vocab_src, vocab_tgt = flush_vocabs
        source = tokenize("c1 c2 c3", vocab_src)
        spec = PrefixSpec(locked=SubwordSeq.empty())
        ds = KnnDatastore.empty(flush_model.dim)
        knn_result = knn_decode(flush_model, ds, KnnConfig(), source, spec,
                                max_len=14, beam=3)
        plain_result = beam_decode(lambda s, p: flush_model.step(s, p, None)[0],
                                   source, spec, vocab_tgt, max_len=14, beam=3)
        assert [h.tokens.ids for h in knn_result.nbest] == \
               [h.tokens.ids for h in plain_result.nbest]
        assert [h.score for h in knn_result.nbest] == \
               [h.score for h in plain_result.nbest]

    def test_domain_shift_recovery(self, shift_setup):
        model, store, test_set = shift_setup
        vocab_tgt = model.vocab
        config = KnnConfig()  # paper-style defaults suffice on exact TM hits
        for source_text, reference in test_set[:4]:
            source = tokenize(source_text, model.src_vocab)
            pool = store.retrieve_pool(source_text, 16, 0.7)
            ds = build_datastore(model, [m.entry for m in pool])
            spec = PrefixSpec(locked=SubwordSeq.empty())
            knn_out = detokenize(
                knn_decode(model, ds, config, source, spec, max_len=14, beam=1).nbest[0].tokens,
                vocab_tgt)
            plain_out = detokenize(
                beam_decode(lambda s, p: model.step(s, p, None)[0], source, spec,
                            vocab_tgt, max_len=14, beam=1).nbest[0].tokens,
                vocab_tgt)
            assert knn_out == reference
            assert plain_out != reference

    def test_datastore_from_exact_pair_forces_its_target(self, flush_model, flush_vocabs):
        vocab_src, vocab_tgt = flush_vocabs
        source_text, target_text = "c1 c2 c3", "flush form oil"
        ds = build_datastore(flush_model, [entry(0, source_text, target_text)])
        config = KnnConfig(k=1, lam=1.0, temperature=5.0, tau=float("inf"))
        result = knn_decode(flush_model, ds, config, tokenize(source_text, vocab_src),
                            PrefixSpec(locked=SubwordSeq.empty()), max_len=14, beam=1)
        assert detokenize(result.nbest[0].tokens, vocab_tgt) == target_text
