"""Translation-memory store with two-stage fuzzy retrieval.

Stage one is a BM25-scored coarse search over an in-memory inverted index
that returns at most 64 candidates; stage two reranks those candidates by
normalized edit distance (the match rate) against a minimum threshold.
Confirmed post-edits are appended like any other entry, so a merge is
retrievable by the very next query.

The store optionally mirrors itself to a JSONL append-log so online entries
survive a restart.
"""

from __future__ import annotations

import json
import math
import threading
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .tokenizer import normalize_ws

BM25_K1 = 1.2
BM25_B = 0.75
COARSE_LIMIT = 64
POOL_LIMIT = 16


@dataclass(frozen=True)
class TmEntry:
    id: int
    source: str
    target: str
    origin: str  # "uploaded" | "online"
    created_seq: int

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "source": self.source,
            "target": self.target,
            "origin": self.origin,
            "created_seq": self.created_seq,
        }


@dataclass(frozen=True)
class MatchResult:
    entry: TmEntry
    match_rate: float
    coarse_score: float


def levenshtein(a, b) -> int:
    """Unit-cost edit distance; works on strings or token sequences."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a):
        cur = [i + 1]
        for j, cb in enumerate(b):
            cur.append(min(prev[j + 1] + 1, cur[j] + 1, prev[j] + (ca != cb)))
        prev = cur
    return prev[-1]


def match_rate(a: str, b: str, granularity: str = "char") -> float:
    """1 - editdist / max length, on whitespace-normalized text.

    Granularity "char" compares characters (the default); "word" compares
    whitespace tokens.
    """
    a = normalize_ws(a)
    b = normalize_ws(b)
    if granularity == "word":
        a, b = a.split(), b.split()
    denom = max(len(a), len(b))
    if denom == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / denom


class TmStore:
    """Append-only multiset of bilingual pairs with an inverted index.

    Writes are serialized behind a lock; lookups only read committed state,
    so they may run concurrently with each other.
    """

    def __init__(self, log_path: str | Path | None = None, granularity: str = "char"):
        if granularity not in ("char", "word"):
            raise ValueError("granularity must be 'char' or 'word'")
        self.entries: dict[int, TmEntry] = {}
        self.postings: dict[str, list[int]] = {}
        self.doc_lengths: dict[int, int] = {}
        self.term_freqs: dict[int, Counter[str]] = {}
        self.granularity = granularity
        self._total_len = 0
        self._next_id = 0
        self._next_seq = 0
        self._lock = threading.Lock()
        self._log_path = Path(log_path) if log_path is not None else None

    def __len__(self) -> int:
        return len(self.entries)

    def add_entries(self, pairs, origin: str = "uploaded"):
        """Index (source, target) pairs; returns (ids, skipped).

        Pairs whose source or target is empty after whitespace normalization
        are skipped and reported by their position in the input.
        """
        if origin not in ("uploaded", "online"):
            raise ValueError(f"unknown origin: {origin!r}")
        ids: list[int] = []
        skipped: list[int] = []
        with self._lock:
            log_lines: list[str] = []
            for pos, (source, target) in enumerate(pairs):
                source = normalize_ws(source)
                target = normalize_ws(target)
                if not source or not target:
                    skipped.append(pos)
                    continue
                entry = TmEntry(
                    id=self._next_id,
                    source=source,
                    target=target,
                    origin=origin,
                    created_seq=self._next_seq,
                )
                self._next_id += 1
                self._next_seq += 1
                self._index(entry)
                ids.append(entry.id)
                log_lines.append(json.dumps(entry.to_json(), ensure_ascii=False))
            if log_lines and self._log_path is not None:
                with self._log_path.open("a", encoding="utf-8") as fh:
                    fh.write("\n".join(log_lines) + "\n")
        return ids, skipped

    def _index(self, entry: TmEntry) -> None:
        self.entries[entry.id] = entry
        tokens = entry.source.split()
        self.doc_lengths[entry.id] = len(tokens)
        self.term_freqs[entry.id] = Counter(tokens)
        self._total_len += len(tokens)
        for token in set(tokens):
            self.postings.setdefault(token, []).append(entry.id)

    def coarse_retrieve(self, query_source: str, limit: int = COARSE_LIMIT) -> list[MatchResult]:
        """BM25 top-`limit` over entry sources; ties broken by lower id.

        Only entries sharing at least one token with the query are scored,
        so a lexically disjoint query returns an empty list.
        """
        if limit < 1:
            raise ValueError("limit must be >= 1")
        query_tokens = normalize_ws(query_source).split()
        if not query_tokens or not self.entries:
            return []
        n_docs = len(self.entries)
        avgdl = self._total_len / n_docs
        scores: dict[int, float] = {}
        for token in Counter(query_tokens):
            ids = self.postings.get(token)
            if not ids:
                continue
            df = len(ids)
            idf = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
            for entry_id in ids:
                tf = self.term_freqs[entry_id][token]
                dl = self.doc_lengths[entry_id]
                denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * dl / avgdl)
                scores[entry_id] = scores.get(entry_id, 0.0) + idf * tf * (BM25_K1 + 1.0) / denom
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:limit]
        return [MatchResult(self.entries[i], 0.0, score) for i, score in ranked]

    def _rerank(self, query_source: str, min_match_rate: float) -> list[MatchResult]:
        if not 0.0 <= min_match_rate <= 1.0:
            raise ValueError("min_match_rate must be in [0, 1]")
        query = normalize_ws(query_source)
        out = []
        for cand in self.coarse_retrieve(query, COARSE_LIMIT):
            rate = match_rate(query, cand.entry.source, self.granularity)
            if rate >= min_match_rate:
                out.append(MatchResult(cand.entry, rate, cand.coarse_score))
        out.sort(key=lambda m: (-m.match_rate, -m.entry.created_seq, m.entry.id))
        return out

    def best_match(self, query_source: str, min_match_rate: float) -> MatchResult | None:
        """Highest-match-rate candidate above the threshold, freshest first on ties."""
        ranked = self._rerank(query_source, min_match_rate)
        return ranked[0] if ranked else None

    def retrieve_pool(self, query_source: str, max_pool: int = POOL_LIMIT,
                      min_match_rate: float = 0.0) -> list[MatchResult]:
        """Up to max_pool qualifying candidates, descending match rate."""
        if max_pool < 1:
            raise ValueError("max_pool must be >= 1")
        return self._rerank(query_source, min_match_rate)[:max_pool]

    @classmethod
    def load(cls, log_path: str | Path, granularity: str = "char") -> "TmStore":
        """Rebuild a store by replaying its JSONL append-log."""
        store = cls(log_path=None, granularity=granularity)
        path = Path(log_path)
        if path.exists():
            for line in path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                entry = TmEntry(
                    id=rec["id"],
                    source=rec["source"],
                    target=rec["target"],
                    origin=rec["origin"],
                    created_seq=rec["created_seq"],
                )
                store._index(entry)
                store._next_id = max(store._next_id, entry.id + 1)
                store._next_seq = max(store._next_seq, entry.created_seq + 1)
        store._log_path = path
        return store


def parse_pairs(text: str) -> tuple[list[tuple[str, str]], list[str]]:
    """Parse TM/termbase upload content: JSONL or tab-separated lines.

    Returns (pairs, warnings); malformed lines are reported, not fatal.
    """
    pairs: list[tuple[str, str]] = []
    warnings: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("{"):
            try:
                rec = json.loads(line)
                src = rec.get("source", rec.get("source_term"))
                tgt = rec.get("target", rec.get("target_term"))
                if not src or not tgt:
                    raise KeyError("source/target")
                pairs.append((str(src), str(tgt)))
            except (json.JSONDecodeError, KeyError):
                warnings.append(f"line {lineno}: malformed JSON record")
        else:
            cols = line.split("\t")
            if len(cols) != 2 or not cols[0].strip() or not cols[1].strip():
                warnings.append(f"line {lineno}: expected two tab-separated fields")
            else:
                pairs.append((cols[0], cols[1]))
    return pairs, warnings
