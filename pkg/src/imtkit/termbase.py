"""Bilingual terminology store with exact substring lookup.

Terms are matched case-sensitively inside the whitespace-normalized source
sentence; every occurrence of every term is returned so the UI can display
all of them, longest term first when several start at the same offset.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TermEntry:
    source_term: str
    target_term: str
    id: int


class Termbase:
    def __init__(self):
        self.entries: list[TermEntry] = []
        self._seen: set[tuple[str, str]] = set()

    def __len__(self) -> int:
        return len(self.entries)

    def add_terms(self, pairs) -> tuple[int, list[int]]:
        """Add (source_term, target_term) pairs; duplicates and empties are skipped."""
        from .tokenizer import normalize_ws

        added = 0
        skipped: list[int] = []
        for pos, (src, tgt) in enumerate(pairs):
            src = normalize_ws(src)
            tgt = normalize_ws(tgt)
            if not src or not tgt or (src, tgt) in self._seen:
                skipped.append(pos)
                continue
            self._seen.add((src, tgt))
            self.entries.append(TermEntry(src, tgt, len(self.entries)))
            added += 1
        return added, skipped


def find_terms(termbase: Termbase, source_sentence: str) -> list[tuple[TermEntry, int]]:
    """All (term, char_offset) occurrences in the normalized sentence.

    Results are ordered by offset, then longer term first, then term id.
    """
    from .tokenizer import normalize_ws

    sentence = normalize_ws(source_sentence)
    hits: list[tuple[TermEntry, int]] = []
    for term in termbase.entries:
        start = 0
        while True:
            offset = sentence.find(term.source_term, start)
            if offset < 0:
                break
            hits.append((term, offset))
            start = offset + 1
    hits.sort(key=lambda h: (h[1], -len(h[0].source_term), h[0].id))
    return hits
