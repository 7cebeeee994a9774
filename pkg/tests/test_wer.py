"""Tests for tokenization and WER scoring against a brute-force oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asrdapt.errors import EmptyCorpus, EmptyReference, InvalidArgument
from asrdapt.wer import (align_counts, compute_wer, estimate_baseline_wer,
                         tokenize)


def brute_force_distance(ref, hyp):
    """Independent Wagner-Fischer edit distance (no count tracking)."""
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, start=1):
        cur = [i]
        for j, h in enumerate(hyp, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (r != h)))
        prev = cur
    return prev[-1]


# ---------------------------------------------------------------------------
# Tokenize
# ---------------------------------------------------------------------------


class TestTokenize:
    def test_word_with_normalization(self):
        assert tokenize("Hello, world", "word", normalize=True) == ["hello", "world"]

    def test_word_keeps_case_without_normalization(self):
        assert tokenize("Hello, world") == ["Hello,", "world"]

    def test_char_mode_cjk(self):
        assert tokenize("你好吗", "char") == ["你", "好", "吗"]

    def test_char_mode_drops_whitespace(self):
        assert tokenize("a b", "char") == ["a", "b"]

    def test_char_mode_keeps_combining_marks_together(self):
        # Thai vowel/tone marks must stay attached to their base consonant
        assert tokenize("ที่", "char") == ["ที่"]

    def test_empty_string(self):
        assert tokenize("") == []
        assert tokenize("", "char") == []

    def test_nfc_applied(self):
        decomposed = "é"  # e + combining acute
        assert tokenize(decomposed, "char") == ["é"]

    def test_punctuation_set(self):
        assert tokenize('(a) "b." [c]!?', "word", normalize=True) == ["a", "b", "c"]

    def test_bad_mode(self):
        with pytest.raises(InvalidArgument):
            tokenize("x", mode="phoneme")


# ---------------------------------------------------------------------------
# compute_wer
# ---------------------------------------------------------------------------


class TestComputeWer:
    def test_sub_and_deletion(self):
        report = compute_wer(["a b c d"], ["a x c"])
        assert (report.substitutions, report.deletions, report.insertions) == (1, 1, 0)
        assert report.wer == pytest.approx(50.0)

    def test_identical(self):
        assert compute_wer(["the quick fox"], ["the quick fox"]).wer == 0.0

    def test_insertion_heavy_exceeds_100(self):
        report = compute_wer(["a"], ["a b c"])
        assert report.insertions == 2
        assert report.wer == pytest.approx(200.0)

    def test_empty_hypothesis_all_deletions(self):
        report = compute_wer(["a b c"], [""])
        assert report.deletions == 3
        assert report.wer == pytest.approx(100.0)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgument):
            compute_wer(["a", "b"], ["a"])

    def test_empty_reference_flagged_and_excluded(self):
        report = compute_wer(["", "a b"], ["x", "a b"])
        assert report.empty_references == 1
        assert report.ref_tokens == 2
        assert report.wer == 0.0

    def test_all_empty_references_raise(self):
        with pytest.raises(EmptyReference):
            compute_wer(["", "  "], ["a", "b"])

    def test_micro_average_concatenation(self):
        refs1, hyps1 = ["a b c"], ["a b x"]
        refs2, hyps2 = ["d e"], ["d"]
        joint = compute_wer(refs1 + refs2, hyps1 + hyps2)
        r1 = compute_wer(refs1, hyps1)
        r2 = compute_wer(refs2, hyps2)
        assert joint.errors == r1.errors + r2.errors
        assert joint.ref_tokens == r1.ref_tokens + r2.ref_tokens
        assert joint.wer == pytest.approx(
            100 * (r1.errors + r2.errors) / (r1.ref_tokens + r2.ref_tokens))

    def test_per_utterance_counts_sum_to_aggregate(self):
        report = compute_wer(["a b", "c d e"], ["a x", "c e"], keep_per_utterance=True)
        assert sum(u.substitutions for u in report.per_utterance) == report.substitutions
        assert sum(u.deletions for u in report.per_utterance) == report.deletions
        assert sum(u.insertions for u in report.per_utterance) == report.insertions

    def test_char_mode(self):
        report = compute_wer(["你好吗"], ["你好"], mode="char")
        assert report.deletions == 1
        assert report.wer == pytest.approx(100 / 3)


# ---------------------------------------------------------------------------
# Oracle equivalence and properties
# ---------------------------------------------------------------------------

_tokens = st.lists(st.sampled_from("abcde"), max_size=12)


class TestAlignmentProperties:
    @settings(max_examples=300, deadline=None)
    @given(ref=st.lists(st.sampled_from("abcde"), min_size=1, max_size=12), hyp=_tokens)
    def test_matches_brute_force_distance(self, ref, hyp):
        score = align_counts(ref, hyp)
        assert score.errors == brute_force_distance(ref, hyp)

    @settings(max_examples=100, deadline=None)
    @given(ref=st.lists(st.sampled_from("abcde"), min_size=1, max_size=12), hyp=_tokens)
    def test_triangle_bound(self, ref, hyp):
        score = align_counts(ref, hyp)
        assert score.wer <= 100.0 * (len(ref) + len(hyp)) / len(ref)
        assert score.substitutions + score.deletions <= len(ref)

    @settings(max_examples=50, deadline=None)
    @given(x=st.lists(st.sampled_from("abcde"), min_size=1, max_size=12))
    def test_self_distance_zero(self, x):
        assert align_counts(x, x).errors == 0

    @settings(max_examples=50, deadline=None)
    @given(x=st.lists(st.sampled_from("abcde"), min_size=1, max_size=12))
    def test_empty_hypothesis_is_all_deletions(self, x):
        score = align_counts(x, [])
        assert score.deletions == len(x)
        assert score.wer == 100.0


# ---------------------------------------------------------------------------
# Baseline estimation
# ---------------------------------------------------------------------------


class TestEstimateBaseline:
    def _corpus(self, n=20):
        pairs = []
        for i in range(n):
            ref = " ".join(f"w{j}" for j in range(5))
            hyp = " ".join(f"w{j}" if j != i % 5 else "x" for j in range(5))
            pairs.append((ref, hyp))
        return pairs

    def test_sample_covering_corpus_equals_full(self):
        pairs = self._corpus()
        full = compute_wer(*map(list, zip(*pairs))).wer
        assert estimate_baseline_wer(pairs, sample_n=1000, seed=3) == pytest.approx(full)

    def test_seeded_determinism(self):
        pairs = self._corpus(50)
        a = estimate_baseline_wer(pairs, sample_n=10, seed=42)
        b = estimate_baseline_wer(pairs, sample_n=10, seed=42)
        assert a == b

    def test_matches_enumerated_sample(self):
        pairs = self._corpus(50)
        idx = np.sort(np.random.default_rng(7).choice(50, size=10, replace=False))
        subset = [pairs[i] for i in idx]
        expected = compute_wer(*map(list, zip(*subset))).wer
        assert estimate_baseline_wer(pairs, sample_n=10, seed=7) == pytest.approx(expected)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            estimate_baseline_wer([])

    def test_default_sample_size_is_200(self):
        pairs = self._corpus(300)
        explicit = estimate_baseline_wer(pairs, sample_n=200, seed=0)
        assert estimate_baseline_wer(pairs, seed=0) == explicit
