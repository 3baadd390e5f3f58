"""The translation engine: one code path behind the service, CLI and metrics.

An engine binds a translation model, an optional fluency LM, a TM store and
a termbase under a settings bundle. Every request resolves its engine mode
at admission time: "plain" steps the bare model, "tm_conditioned" feeds the
best TM match above the minimum match rate into the model, and "knn" builds
a fresh condensed datastore from the retrieval pool and interpolates
nearest-neighbor votes. Datastores are rebuilt per request, so a TM pair
confirmed a moment ago is already visible to the next completion.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .decoder import (
    DEFAULT_BEAM,
    DEFAULT_LENGTH_NORM_ALPHA,
    DecodeResult,
    HIGHLIGHT_THRESHOLD,
    PrefixSpec,
    beam_decode,
)
from .knn_augment import KnnConfig, KnnDatastore, build_datastore, knn_step
from .model_core import BigramLM, LexiconModel, TmContext
from .suggest import SuggestionSet, build_suggestions
from .termbase import Termbase, find_terms
from .tm_index import MatchResult, TmStore
from .tokenizer import SubwordSeq, detokenize, tokenize

ENGINE_MODES = ("plain", "tm_conditioned", "knn")
MAX_LEN_PAD = 8


@dataclass(frozen=True)
class EngineSettings:
    engine: str = "plain"
    min_match_rate: float = 0.7
    beam: int = DEFAULT_BEAM
    highlight_threshold: float = HIGHLIGHT_THRESHOLD
    knn: KnnConfig = field(default_factory=KnnConfig)
    length_norm_alpha: float = DEFAULT_LENGTH_NORM_ALPHA
    lm_topk: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.engine not in ENGINE_MODES:
            raise ValueError(f"engine must be one of {ENGINE_MODES}")
        if not 0.0 <= self.min_match_rate <= 1.0:
            raise ValueError("min_match_rate must be in [0, 1]")
        if self.beam < 1:
            raise ValueError("beam must be >= 1")
        if not 0.0 <= self.highlight_threshold <= 1.0:
            raise ValueError("highlight_threshold must be in [0, 1]")


@dataclass
class CompletionResult:
    decode: DecodeResult
    suggestions: SuggestionSet
    tm_match: MatchResult | None
    term_hits: list
    engine: str


@dataclass
class CandidateSuggestions:
    """Word-level view of everything the box displays, for the metrics."""

    inline_words: list[str]
    alternate_words: list[list[str]]
    lm_words: list[str] | None


class TranslationEngine:
    def __init__(self, model: LexiconModel, lm: BigramLM | None,
                 tm_store: TmStore | None = None, termbase: Termbase | None = None,
                 settings: EngineSettings | None = None):
        self.model = model
        self.lm = lm
        self.tm_store = tm_store if tm_store is not None else TmStore()
        self.termbase = termbase if termbase is not None else Termbase()
        self.settings = settings if settings is not None else EngineSettings()

    # -- request preparation -------------------------------------------------

    def _tm_context(self, source_text: str) -> tuple[MatchResult | None, TmContext | None]:
        match = self.tm_store.best_match(source_text, self.settings.min_match_rate)
        if match is None:
            return None, None
        ctx = TmContext(
            retrieved_source=tokenize(match.entry.source, self.model.src_vocab),
            retrieved_target=tokenize(match.entry.target, self.model.vocab),
            match_rate=match.match_rate,
        )
        return match, ctx

    def _datastore(self, source_text: str) -> KnnDatastore:
        pool = self.tm_store.retrieve_pool(source_text, min_match_rate=self.settings.min_match_rate)
        return build_datastore(self.model, [m.entry for m in pool])

    def _step_fn(self, mode: str, tm_ctx: TmContext | None, datastore: KnnDatastore | None):
        if mode == "plain":
            return lambda src, prefix: self.model.step(src, prefix, None)[0]
        if mode == "tm_conditioned":
            return lambda src, prefix: self.model.step(src, prefix, tm_ctx)[0]
        if mode == "knn":
            cfg = self.settings.knn
            return lambda src, prefix: knn_step(self.model, datastore, cfg, src, prefix, None)
        raise ValueError(f"unknown engine mode: {mode}")

    def _max_len(self, source: SubwordSeq, spec: PrefixSpec) -> int:
        budget = 2 * len(source.ids) + MAX_LEN_PAD
        return max(budget, len(spec.locked.ids) + len(spec.dangling or "") + MAX_LEN_PAD)

    # -- decoding ------------------------------------------------------------

    def decode(self, source_text: str, locked_text: str = "", dangling: str | None = None,
               beam: int | None = None) -> tuple[DecodeResult, MatchResult | None]:
        mode = self.settings.engine
        source = tokenize(source_text, self.model.src_vocab)
        spec = PrefixSpec(locked=tokenize(locked_text, self.model.vocab), dangling=dangling)
        match, tm_ctx = self._tm_context(source_text)
        datastore = self._datastore(source_text) if mode == "knn" else None
        step_fn = self._step_fn(mode, tm_ctx if mode == "tm_conditioned" else None, datastore)
        result = beam_decode(step_fn, source, spec, self.model.vocab,
                             max_len=self._max_len(source, spec),
                             beam=beam if beam is not None else self.settings.beam,
                             length_norm_alpha=self.settings.length_norm_alpha)
        return result, match

    def draft(self, source_text: str) -> str:
        """Unconstrained top-1 translation, as shown before editing starts."""
        result, _ = self.decode(source_text)
        return detokenize(result.nbest[0].tokens, self.model.vocab)

    def complete(self, source_text: str, locked_text: str = "", dangling: str | None = None,
                 seed: int | None = None) -> CompletionResult:
        """Full interactive payload: n-best, suggestion box, TM and term display."""
        result, match = self.decode(source_text, locked_text, dangling)
        spec = PrefixSpec(locked=tokenize(locked_text, self.model.vocab), dangling=dangling)
        suggestions = build_suggestions(
            result, self.lm, spec,
            seed=self.settings.seed if seed is None else seed,
            vocab=self.model.vocab,
            highlight_threshold=self.settings.highlight_threshold,
            lm_topk=self.settings.lm_topk,
        )
        term_hits = find_terms(self.termbase, source_text)
        return CompletionResult(decode=result, suggestions=suggestions,
                                tm_match=match, term_hits=term_hits,
                                engine=self.settings.engine)

    def with_settings(self, **changes) -> "TranslationEngine":
        return TranslationEngine(self.model, self.lm, self.tm_store, self.termbase,
                                 replace(self.settings, **changes))

    # -- word-level adapters used by the evaluation harness -------------------

    def propose(self, source_text: str, prefix_words: list[str]) -> list[str]:
        """Greedy continuation words after a fully-formed word prefix."""
        locked = " ".join(prefix_words)
        result, _ = self.decode(source_text, locked, beam=1)
        locked_len = len(tokenize(locked, self.model.vocab).ids)
        text = detokenize(result.nbest[0].tokens.ids[locked_len:], self.model.vocab)
        return text.split()

    def complete_word(self, source_text: str, prefix_words: list[str],
                      dangling: str) -> str | None:
        result, _ = self.decode(source_text, " ".join(prefix_words), dangling, beam=1)
        return result.completed_word

    def reference_tokens(self, reference: str) -> tuple[int, ...]:
        return tokenize(reference, self.model.vocab).ids

    def propose_tokens(self, source_text: str, prefix_ids, n: int) -> list[int]:
        """Greedy continuation of n subword tokens from a raw token prefix."""
        mode = self.settings.engine
        source = tokenize(source_text, self.model.src_vocab)
        match, tm_ctx = self._tm_context(source_text)
        datastore = self._datastore(source_text) if mode == "knn" else None
        step_fn = self._step_fn(mode, tm_ctx if mode == "tm_conditioned" else None, datastore)
        prefix = list(prefix_ids)
        out: list[int] = []
        for _ in range(n):
            probs = step_fn(source, tuple(prefix))
            token = int(np.argmax(probs))
            if token == self.model.vocab.eos:
                break
            out.append(token)
            prefix.append(token)
        return out

    def suggestions(self, source_text: str, prefix_words: list[str]) -> CandidateSuggestions:
        """Displayed suggestions as word lists; alternates keep their full tail."""
        locked = " ".join(prefix_words)
        completion = self.complete(source_text, locked)
        locked_len = len(tokenize(locked, self.model.vocab).ids)
        vocab = self.model.vocab
        continuations = [
            detokenize(h.tokens.ids[locked_len:], vocab).split()
            for h in completion.decode.nbest
        ]
        inline_words = continuations[0] if continuations else []
        lm_words = None
        if completion.suggestions.lm_suggestion is not None:
            lm_words = completion.suggestions.lm_suggestion.split()
        return CandidateSuggestions(inline_words=inline_words,
                                    alternate_words=continuations[1:],
                                    lm_words=lm_words)
