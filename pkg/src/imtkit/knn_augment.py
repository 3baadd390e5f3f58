"""Nearest-neighbor augmentation of the base model from retrieved TM pairs.

For each source sentence a private condensed datastore is built by
force-decoding the targets of at most 16 retrieved TM pairs and recording
(context vector, next token) at every step including the closing eos. At
decode time the k nearest records by squared L2 distance vote on the next
token through exp(-distance / temperature) weights; records at or beyond
the distance threshold tau are dropped, and when none survive the base
distribution passes through untouched.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .decoder import DecodeResult, PrefixSpec, beam_decode
from .model_core import SequenceModel, TmContext
from .tokenizer import SubwordSeq, tokenize

logger = logging.getLogger(__name__)

MAX_POOL = 16


@dataclass(frozen=True)
class KnnConfig:
    k: int = 4
    lam: float = 0.4
    temperature: float = 5.0
    tau: float = 5.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must be in [0, 1]")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")
        if self.tau < 0.0:
            raise ValueError("tau must be non-negative")

    def to_json(self) -> dict:
        return {"k": self.k, "lambda": self.lam,
                "temperature": self.temperature, "tau": self.tau}

    @classmethod
    def from_json(cls, data: dict) -> "KnnConfig":
        return cls(k=data.get("k", 4), lam=data.get("lambda", data.get("lam", 0.4)),
                   temperature=data.get("temperature", 5.0), tau=data.get("tau", 5.0))


@dataclass
class KnnDatastore:
    """Per-source-sentence record set; never shared between sentences."""

    keys: np.ndarray  # (n, dim)
    values: list[int]
    provenance: list[tuple[int, int]]  # (tm entry id, step)

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def empty(cls, dim: int) -> "KnnDatastore":
        return cls(keys=np.zeros((0, dim), dtype=np.float64), values=[], provenance=[])


def build_datastore(model: SequenceModel, tm_pool) -> KnnDatastore:
    """Force-decode each TM pair's target, recording one key per step plus eos.

    Pairs whose source or target tokenizes to nothing are skipped with a
    warning; they cannot contribute usable records.
    """
    pool = list(tm_pool)
    if len(pool) > MAX_POOL:
        raise ValueError(f"tm_pool larger than {MAX_POOL}")
    src_vocab = getattr(model, "src_vocab", model.vocab)
    keys: list[np.ndarray] = []
    values: list[int] = []
    provenance: list[tuple[int, int]] = []
    for entry in pool:
        source = tokenize(entry.source, src_vocab)
        target = tokenize(entry.target, model.vocab)
        if not source.ids or not target.ids:
            logger.warning("skipping TM entry %s: empty after tokenization", entry.id)
            continue
        steps = target.ids + (model.vocab.eos,)
        for step, next_token in enumerate(steps):
            _, state = model.step(source, target.ids[:step], None)
            keys.append(state.context_vector)
            values.append(int(next_token))
            provenance.append((entry.id, step))
    if not keys:
        return KnnDatastore.empty(model.dim)
    return KnnDatastore(keys=np.stack(keys), values=values, provenance=provenance)


def nearest_neighbors(datastore: KnnDatastore, query: np.ndarray, k: int
                      ) -> list[tuple[int, float]]:
    """The k records nearest to query by squared L2 distance.

    Ties resolve to the earlier record, so identical keys are returned in
    insertion order.
    """
    if datastore.keys.shape[1] != query.shape[0]:
        raise ValueError("datastore/model mismatch")
    deltas = datastore.keys - query
    distances = np.einsum("ij,ij->i", deltas, deltas)
    order = np.argsort(distances, kind="stable")[:k]
    return [(int(i), float(distances[i])) for i in order]


def knn_step(model: SequenceModel, datastore: KnnDatastore, config: KnnConfig,
             source: SubwordSeq, target_prefix, tm_context: TmContext | None = None
             ) -> np.ndarray:
    """Interpolate the base distribution with a kNN vote over the datastore.

    Neighbors are the k records nearest to this step's context vector by
    squared L2 distance, filtered to distance strictly below tau; survivors
    vote with weight exp(-distance / temperature). With no survivors (or
    lambda = 0, or an empty datastore) the base distribution is returned
    unchanged.
    """
    base, state = model.step(source, target_prefix, tm_context)
    if len(datastore) == 0 or config.lam == 0.0:
        return base
    kept = [(i, d) for i, d in nearest_neighbors(datastore, state.context_vector, config.k)
            if d < config.tau]
    if not kept:
        return base
    knn = np.zeros_like(base)
    for i, d in kept:
        knn[datastore.values[i]] += np.exp(-d / config.temperature)
    knn /= knn.sum()
    return config.lam * knn + (1.0 - config.lam) * base


def knn_decode(model: SequenceModel, datastore: KnnDatastore, config: KnnConfig,
               source: SubwordSeq, prefix_spec: PrefixSpec, max_len: int,
               beam: int = 4, length_norm_alpha: float = 0.6) -> DecodeResult:
    """Beam decoding with knn_step supplying every per-step distribution."""

    def step_fn(src, prefix_ids):
        return knn_step(model, datastore, config, src, prefix_ids, None)

    return beam_decode(step_fn, source, prefix_spec, model.vocab, max_len,
                       beam=beam, length_norm_alpha=length_norm_alpha)
