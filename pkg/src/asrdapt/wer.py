"""Word/character error rate over reference/hypothesis pairs.

WER is micro-averaged: edit counts are summed over all utterances before
dividing by the total reference token count, matching standard ASR
benchmark practice. Tokenization is explicit (word or grapheme mode, no
language auto-detection) and applies Unicode NFC first.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field

import numpy as np
import regex

from .errors import EmptyCorpus, EmptyReference, InvalidArgument

_PUNCTUATION = set(".,!?;:\"'()[]")
_GRAPHEME = regex.compile(r"\X")

MODES = ("word", "char")


def tokenize(text: str, mode: str = "word", normalize: bool = False) -> list[str]:
    """Split text into word or grapheme-cluster tokens.

    normalize lowercases and deletes the fixed punctuation set
    .,!?;:"'()[] before splitting. Char mode yields one token per
    extended grapheme cluster with whitespace clusters dropped.
    """
    if mode not in MODES:
        raise InvalidArgument(f"mode must be one of {MODES}, got {mode!r}")
    text = unicodedata.normalize("NFC", text)
    if normalize:
        text = "".join(c for c in text.lower() if c not in _PUNCTUATION)
    if mode == "word":
        return text.split()
    return [g for g in _GRAPHEME.findall(text) if not g.isspace()]


@dataclass(frozen=True)
class UtteranceScore:
    substitutions: int
    insertions: int
    deletions: int
    ref_tokens: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        return 100.0 * self.errors / self.ref_tokens


@dataclass(frozen=True)
class WerReport:
    substitutions: int
    insertions: int
    deletions: int
    ref_tokens: int
    empty_references: int = 0
    per_utterance: list[UtteranceScore] | None = field(default=None, repr=False)

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        return 100.0 * self.errors / self.ref_tokens

    def to_dict(self) -> dict:
        return {
            "wer": self.wer,
            "substitutions": self.substitutions,
            "insertions": self.insertions,
            "deletions": self.deletions,
            "ref_tokens": self.ref_tokens,
            "empty_references": self.empty_references,
        }


def align_counts(ref: list[str], hyp: list[str]) -> UtteranceScore:
    """Levenshtein alignment with unit costs, returning S/I/D counts.

    Backtrace ties are broken deterministically: match/substitution,
    then deletion, then insertion.
    """
    m, n = len(ref), len(hyp)
    dist = np.zeros((m + 1, n + 1), dtype=np.int64)
    dist[:, 0] = np.arange(m + 1)
    dist[0, :] = np.arange(n + 1)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            sub = dist[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1])
            dist[i, j] = min(sub, dist[i - 1, j] + 1, dist[i, j - 1] + 1)

    subs = ins = dels = 0
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i, j] == dist[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]):
            subs += ref[i - 1] != hyp[j - 1]
            i, j = i - 1, j - 1
        elif i > 0 and dist[i, j] == dist[i - 1, j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return UtteranceScore(subs, ins, dels, m)


def compute_wer(refs: list[str], hyps: list[str], mode: str = "word",
                normalize: bool = False, keep_per_utterance: bool = False) -> WerReport:
    """Micro-averaged WER over parallel reference/hypothesis lists.

    Utterances whose reference tokenizes to nothing are excluded and
    tallied in empty_references; raises EmptyReference if that leaves
    no scorable utterance.
    """
    if len(refs) != len(hyps):
        raise InvalidArgument(f"got {len(refs)} references but {len(hyps)} hypotheses")

    scores: list[UtteranceScore] = []
    empty = 0
    for ref_text, hyp_text in zip(refs, hyps):
        ref = tokenize(ref_text, mode, normalize)
        if not ref:
            empty += 1
            continue
        scores.append(align_counts(ref, tokenize(hyp_text, mode, normalize)))
    if not scores:
        raise EmptyReference("every reference tokenized to nothing")

    return WerReport(
        substitutions=sum(s.substitutions for s in scores),
        insertions=sum(s.insertions for s in scores),
        deletions=sum(s.deletions for s in scores),
        ref_tokens=sum(s.ref_tokens for s in scores),
        empty_references=empty,
        per_utterance=scores if keep_per_utterance else None,
    )


def estimate_baseline_wer(pairs: list[tuple[str, str]], sample_n: int = 200,
                          seed: int = 0, mode: str = "word",
                          normalize: bool = False) -> float:
    """Micro WER over a seeded uniform sample of min(sample_n, len(pairs))."""
    if not pairs:
        raise EmptyCorpus("no reference/hypothesis pairs")
    if sample_n < 1:
        raise InvalidArgument(f"sample_n must be >= 1, got {sample_n}")
    if sample_n >= len(pairs):
        chosen = list(pairs)
    else:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(len(pairs), size=sample_n, replace=False))
        chosen = [pairs[i] for i in idx]
    refs, hyps = zip(*chosen)
    return compute_wer(list(refs), list(hyps), mode, normalize).wer
