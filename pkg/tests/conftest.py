"""Shared toy corpora and trained fixtures.

The "flush" corpus is rigged so that, after the word "flush", the model
ranks for > form > fox among the words a typed "fo" can hit. The shift
corpora put one lexicon (A targets) in model training and a disjoint one
(B targets) only in the translation memory, so nearest-neighbor augmented
decoding can recover translations the bare model cannot produce.
"""

from __future__ import annotations

import pytest

from imtkit.model_core import build_lexicon_model, build_toy_lm
from imtkit.tm_index import TmStore
from imtkit.tokenizer import train_bpe

FLUSH_SRC = ["c1 c2 c3"] * 9 + ["c4 c5"]
FLUSH_TGT = (
    ["flush for oil"] * 5
    + ["flush form oil"] * 3
    + ["flush fox oil"] * 1
    + ["bar baz"]
)
FLUSH_PAIRS = list(zip(FLUSH_SRC, FLUSH_TGT))


def shift_sources(n: int = 10) -> list[str]:
    return [" ".join(f"s{(i + d) % n}" for d in range(4)) for i in range(n)]


def shift_targets(prefix: str, n: int = 10) -> list[str]:
    return [" ".join(f"{prefix}{(i + d) % n}" for d in range(4)) for i in range(n)]


@pytest.fixture(scope="session")
def flush_vocabs():
    vocab_src = train_bpe(FLUSH_SRC, 30)
    vocab_tgt = train_bpe(FLUSH_TGT, 60)
    return vocab_src, vocab_tgt


@pytest.fixture(scope="session")
def flush_model(flush_vocabs):
    vocab_src, vocab_tgt = flush_vocabs
    return build_lexicon_model(FLUSH_PAIRS, vocab_src, vocab_tgt)


@pytest.fixture(scope="session")
def flush_lm(flush_vocabs):
    _, vocab_tgt = flush_vocabs
    return build_toy_lm(FLUSH_TGT, vocab_tgt)


@pytest.fixture(scope="session")
def shift_setup():
    """Model trained on domain A, TM store holding domain B."""
    sources = shift_sources()
    targets_a = shift_targets("A")
    targets_b = shift_targets("B")
    vocab_src = train_bpe(sources, 40)
    vocab_tgt = train_bpe(targets_a + targets_b, 120)
    model = build_lexicon_model(list(zip(sources, targets_a)), vocab_src, vocab_tgt)
    store = TmStore()
    store.add_entries(list(zip(sources, targets_b)), origin="uploaded")
    test_set = list(zip(sources, targets_b))
    return model, store, test_set
