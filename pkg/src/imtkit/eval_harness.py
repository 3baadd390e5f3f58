"""Static and dynamic evaluation: BLEU, prefix-replay N-gram accuracy, and a
simulated post-editor.

BLEU follows multi-bleu conventions: case-sensitive 4-gram clipped counts
over whitespace tokens, geometric mean, exp(1 - r/h) brevity penalty, and a
hard zero when any order has no matches.

N-gram accuracy enumerates every word position of every reference, locks
the words before it, has the engine greedily predict the next N words, and
scores a hit on exact equality. The simulated editor replays the accept /
type-through loop of an interactive session and reports saved keystrokes —
an explicit desk-scale proxy, not a reproduction of human timing studies.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field

from .tokenizer import normalize_ws

logger = logging.getLogger(__name__)

BLEU_ORDER = 4


@dataclass
class EvalReport:
    bleu: float | None = None
    ngram_acc: dict[int, float] = field(default_factory=dict)
    keystroke_savings: float | None = None
    counts: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "bleu": self.bleu,
            "ngram_acc": {str(n): v for n, v in self.ngram_acc.items()},
            "keystroke_savings": self.keystroke_savings,
            "counts": dict(self.counts),
        }


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(hypotheses: list[str], references: list[str]) -> float:
    """Corpus-level 4-gram BLEU on whitespace tokens, scaled to 0..100."""
    if not hypotheses or len(hypotheses) != len(references):
        raise ValueError("need equally many hypotheses and references, at least one pair")
    matched = [0] * BLEU_ORDER
    total = [0] * BLEU_ORDER
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens = normalize_ws(hyp).split()
        ref_tokens = normalize_ws(ref).split()
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, BLEU_ORDER + 1):
            hyp_counts = _ngrams(hyp_tokens, n)
            ref_counts = _ngrams(ref_tokens, n)
            total[n - 1] += sum(hyp_counts.values())
            matched[n - 1] += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    if hyp_len == 0:
        return 0.0
    if any(m == 0 for m in matched):
        return 0.0
    log_precision = sum(math.log(m / t) for m, t in zip(matched, total)) / BLEU_ORDER
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_precision)


def ngram_accuracy_counts(engine, test_set, n: int, unit: str = "word") -> tuple[int, int]:
    """(hits, denominator) for greedy N-item prediction over enumerated prefixes.

    The default unit is surface words; unit="subword" enumerates and compares
    the engine's subword tokens instead (the engine must offer propose_tokens).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if unit not in ("word", "subword"):
        raise ValueError("unit must be 'word' or 'subword'")
    hits = 0
    denom = 0
    for source, reference in test_set:
        if unit == "word":
            ref_items = normalize_ws(reference).split()
        else:
            ref_items = list(engine.reference_tokens(reference))
        length = len(ref_items)
        denom += max(length - n + 1, 0)
        for t in range(0, length - n + 1):
            try:
                if unit == "word":
                    predicted = engine.propose(source, ref_items[:t])[:n]
                else:
                    predicted = engine.propose_tokens(source, ref_items[:t], n)
            except Exception:
                logger.warning("engine failed on prefix %r; counted as miss", ref_items[:t])
                continue
            if list(predicted) == ref_items[t:t + n]:
                hits += 1
    return hits, denom


def ngram_accuracy(engine, test_set, n: int, unit: str = "word") -> float:
    hits, denom = ngram_accuracy_counts(engine, test_set, n, unit)
    return hits / denom if denom else 0.0


def suggestion_ngram_accuracy_counts(engine, test_set, n: int,
                                     include_lm: bool = True) -> tuple[int, int, int]:
    """(inline_hits, any_hits, denominator) under the displayed-suggestion rule.

    A prefix instance scores an "any" hit when the inline prediction, any
    lower-ranked alternate (its full continuation, so short previews are
    padded by what follows), or the truncated LM suggestion matches the
    reference N words. Inline hits use the same displayed rank-1 hypothesis,
    so the any-hit metric can never fall below the inline metric.
    """
    inline_hits = 0
    any_hits = 0
    denom = 0
    for source, reference in test_set:
        ref_words = normalize_ws(reference).split()
        length = len(ref_words)
        denom += max(length - n + 1, 0)
        for t in range(0, length - n + 1):
            target = ref_words[t:t + n]
            try:
                cands = engine.suggestions(source, ref_words[:t])
            except Exception:
                logger.warning("engine failed on prefix %r; counted as miss", ref_words[:t])
                continue
            inline_ok = cands.inline_words[:n] == target
            candidates = [cands.inline_words[:n]] + [a[:n] for a in cands.alternate_words]
            if include_lm and cands.lm_words is not None:
                candidates.append(cands.lm_words[:n])
            if inline_ok:
                inline_hits += 1
            if any(c == target for c in candidates):
                any_hits += 1
    return inline_hits, any_hits, denom


def simulate_post_edit(engine, test_set, policy: str = "accept_prefix") -> float:
    """Keystroke savings of a simulated translator against the references.

    Accounting, per segment, under policy "accept_prefix":
      * each correctly proposed word accepted with TAB costs 1 keystroke;
      * a wrong word is typed character by character (1 keystroke each),
        re-querying the completion after every character — when the
        completion matches the target word, one TAB finishes it;
      * a fully hand-typed word costs one trailing space unless it ends
        the segment.
    Policy "type_through" types every character of the reference.
    Savings = 1 - typed_keystrokes / total_reference_chars.
    """
    if policy not in ("accept_prefix", "type_through"):
        raise ValueError("policy must be 'accept_prefix' or 'type_through'")
    if not test_set:
        raise ValueError("empty test set")
    typed = 0
    total_chars = 0
    for source, reference in test_set:
        ref_text = normalize_ws(reference)
        ref_words = ref_text.split()
        total_chars += len(ref_text)
        if policy == "type_through":
            typed += len(ref_text)
            continue
        committed: list[str] = []
        while committed != ref_words:
            remaining = ref_words[len(committed):]
            try:
                proposal = engine.propose(source, committed)
            except Exception:
                proposal = []
            accepted = 0
            for prop, want in zip(proposal, remaining):
                if prop != want:
                    break
                accepted += 1
            if accepted:
                typed += accepted  # one TAB per accepted word
                committed.extend(remaining[:accepted])
                continue
            word = remaining[0]
            partial = ""
            hand_typed = True
            while partial != word:
                partial += word[len(partial)]
                typed += 1
                if partial == word:
                    break
                try:
                    completed = engine.complete_word(source, committed, partial)
                except Exception:
                    completed = None
                if completed == word:
                    typed += 1  # TAB accepts the completion
                    hand_typed = False
                    break
            committed.append(word)
            if hand_typed and len(committed) < len(ref_words):
                typed += 1  # the space that commits a hand-typed word
    return 1.0 - typed / total_chars if total_chars else 0.0
