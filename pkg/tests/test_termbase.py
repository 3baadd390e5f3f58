"""Termbase exact matching against a brute-force substring oracle."""

import random

from imtkit.termbase import Termbase, find_terms


def make_termbase(pairs) -> Termbase:
    tb = Termbase()
    tb.add_terms(pairs)
    return tb


def brute_force_hits(terms, sentence):
    hits = []
    for term in terms:
        for offset in range(len(sentence) - len(term.source_term) + 1):
            if sentence[offset:offset + len(term.source_term)] == term.source_term:
                hits.append((term, offset))
    hits.sort(key=lambda h: (h[1], -len(h[0].source_term), h[0].id))
    return hits


class TestFindTerms:
    def test_single_exact_substring(self):
        tb = make_termbase([("flush valve", "VALVE-T")])
        hits = find_terms(tb, "replace the flush valve now")
        assert len(hits) == 1
        term, offset = hits[0]
        assert term.target_term == "VALVE-T"
        assert "replace the flush valve now"[offset:offset + len(term.source_term)] == "flush valve"

    def test_term_appearing_twice(self):
        tb = make_termbase([("valve", "V")])
        hits = find_terms(tb, "valve to valve")
        assert [off for _, off in hits] == [0, 9]

    def test_overlapping_terms_longest_first_at_same_offset(self):
        tb = make_termbase([("flush", "F"), ("flush valve", "FV")])
        sentence = "flush valve"
        hits = find_terms(tb, sentence)
        assert [(h[0].source_term, h[1]) for h in hits] == [("flush valve", 0), ("flush", 0)]
        assert hits == brute_force_hits(tb.entries, sentence)

    def test_completeness_against_brute_force(self):
        rng = random.Random(13)
        words = ["gear", "box", "gear box", "oil", "pump", "oil pump", "pipe"]
        tb = make_termbase([(w, w.upper()) for w in words])
        for _ in range(100):
            sentence = " ".join(rng.choice(["gear", "box", "oil", "pump", "pipe", "runs"])
                                for _ in range(rng.randint(1, 10)))
            assert find_terms(tb, sentence) == brute_force_hits(tb.entries, sentence)

    def test_no_false_positives(self):
        tb = make_termbase([("pump", "P")])
        for term, offset in find_terms(tb, "the pumpkin pump pumps"):
            assert "the pumpkin pump pumps"[offset:offset + len(term.source_term)] == term.source_term

    def test_case_sensitive(self):
        tb = make_termbase([("Pump", "P")])
        assert find_terms(tb, "the pump") == []


class TestAddTerms:
    def test_duplicates_skipped(self):
        tb = Termbase()
        added, skipped = tb.add_terms([("a", "x"), ("a", "x"), ("a", "y")])
        assert added == 2 and skipped == [1]

    def test_empty_terms_skipped(self):
        tb = Termbase()
        added, skipped = tb.add_terms([("", "x"), ("b", " ")])
        assert added == 0 and skipped == [0, 1]
