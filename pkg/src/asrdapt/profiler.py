"""Corpus analysis: run the acoustic metrics over a manifest and
aggregate them into a serializable profile.

A profile captures, per descriptor, population statistics (mean/std/
min/max) plus multisets of the container-level attributes (sample rates,
bit depths, channel counts). Files that fail decoding or metric
preconditions are skipped and reported, not fatal. Profiling is
order-invariant: entries are sorted by path before sampling and
aggregation, so a permuted manifest yields an identical profile.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import TechnicalAttributes, decode_wav, mixdown_mono
from .errors import (EmptyCorpus, InvalidArgument, ParseError, ToolkitError,
                     UnsupportedVersion)
from .metrics import AcousticDescriptors, measure_descriptors

PROFILE_SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    audio_path: str
    transcript: str | None = None
    duration: float | None = None


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        paths = [e.audio_path for e in self.entries]
        if any(not p for p in paths):
            raise InvalidArgument("manifest contains an empty audio path")
        if len(set(paths)) != len(paths):
            raise InvalidArgument("manifest contains duplicate audio paths")

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "CorpusManifest":
        """One JSON object per line: {"audio": ..., "text": ..., "duration": ...}."""
        entries = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                entries.append(ManifestEntry(
                    audio_path=str(obj["audio"]),
                    transcript=obj.get("text"),
                    duration=obj.get("duration"),
                ))
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(f"{path}:{lineno}: bad manifest line") from exc
        if not entries:
            raise EmptyCorpus(f"manifest {path} has no entries")
        return cls(tuple(entries))

    @classmethod
    def from_directory(cls, path: str | Path) -> "CorpusManifest":
        """Recursive *.wav scan, sorted lexicographically."""
        files = sorted(str(p) for p in Path(path).rglob("*.wav"))
        if not files:
            raise EmptyCorpus(f"no .wav files under {path}")
        return cls(tuple(ManifestEntry(audio_path=p) for p in files))

    @classmethod
    def load(cls, path: str | Path) -> "CorpusManifest":
        p = Path(path)
        return cls.from_directory(p) if p.is_dir() else cls.from_jsonl(p)


# ---------------------------------------------------------------------------
# Profile
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StatBlock:
    mean: float
    std: float
    min: float
    max: float

    def __post_init__(self):
        if not self.min <= self.mean <= self.max:
            raise InvalidArgument(f"need min <= mean <= max, got {self}")
        if self.std < 0:
            raise InvalidArgument(f"std must be >= 0, got {self.std}")

    @classmethod
    def from_values(cls, values: list[float]) -> "StatBlock":
        """Population statistics; a single value gives std 0."""
        arr = np.asarray(values, dtype=np.float64)
        lo, hi = float(np.min(arr)), float(np.max(arr))
        # pairwise summation can put the mean a ULP outside [lo, hi], and
        # identical values must report exactly zero spread
        mean = min(max(float(np.mean(arr)), lo), hi)
        std = 0.0 if lo == hi else float(np.std(arr))
        return cls(mean=mean, std=std, min=lo, max=hi)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std, "min": self.min, "max": self.max}


@dataclass(frozen=True)
class AcousticProfile:
    num_files: int
    sample_rates: dict[int, int]
    bit_depths: dict[int, int]
    channel_counts: dict[int, int]
    snr_db: StatBlock
    lufs: StatBlock
    spectral_centroid_hz: StatBlock
    spectral_rolloff_hz: StatBlock

    def __post_init__(self):
        if self.num_files < 1:
            raise InvalidArgument("profile needs num_files >= 1")
        for name in ("sample_rates", "bit_depths", "channel_counts"):
            counts = getattr(self, name)
            if sum(counts.values()) != self.num_files:
                raise InvalidArgument(f"{name} counts must sum to num_files")

    def to_dict(self) -> dict:
        return {
            "version": PROFILE_SCHEMA_VERSION,
            "num_files": self.num_files,
            "sample_rates": {str(k): v for k, v in sorted(self.sample_rates.items())},
            "bit_depths": {str(k): v for k, v in sorted(self.bit_depths.items())},
            "channel_counts": {str(k): v for k, v in sorted(self.channel_counts.items())},
            "snr_db": self.snr_db.to_dict(),
            "lufs": self.lufs.to_dict(),
            "spectral_centroid_hz": self.spectral_centroid_hz.to_dict(),
            "spectral_rolloff_hz": self.spectral_rolloff_hz.to_dict(),
        }


def write_profile(profile: AcousticProfile, path: str | Path) -> None:
    Path(path).write_text(json.dumps(profile.to_dict(), indent=2) + "\n")


def read_profile(path: str | Path) -> AcousticProfile:
    """Parse and validate a profile document; exact inverse of write_profile."""
    try:
        doc = json.loads(Path(path).read_text())
    except ValueError as exc:
        raise ParseError(f"{path}: not valid JSON") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise ParseError(f"{path}: missing version field")
    if doc["version"] != PROFILE_SCHEMA_VERSION:
        raise UnsupportedVersion(f"{path}: schema version {doc['version']}, expected {PROFILE_SCHEMA_VERSION}")
    try:
        return AcousticProfile(
            num_files=int(doc["num_files"]),
            sample_rates={int(k): int(v) for k, v in doc["sample_rates"].items()},
            bit_depths={int(k): int(v) for k, v in doc["bit_depths"].items()},
            channel_counts={int(k): int(v) for k, v in doc["channel_counts"].items()},
            snr_db=StatBlock(**doc["snr_db"]),
            lufs=StatBlock(**doc["lufs"]),
            spectral_centroid_hz=StatBlock(**doc["spectral_centroid_hz"]),
            spectral_rolloff_hz=StatBlock(**doc["spectral_rolloff_hz"]),
        )
    except InvalidArgument:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: malformed profile document") from exc


# ---------------------------------------------------------------------------
# Per-file analysis and aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FileAnalysis:
    path: str
    attributes: TechnicalAttributes
    descriptors: AcousticDescriptors


@dataclass
class ProfileRun:
    profile: AcousticProfile
    analyzed: int
    skipped: list[tuple[str, str]] = field(default_factory=list)


def analyze_file(path: str) -> FileAnalysis:
    """Decode one WAV and measure its attributes and descriptors."""
    buf = decode_wav(Path(path).read_bytes())
    return FileAnalysis(
        path=path,
        attributes=buf.technical_attributes(),
        descriptors=measure_descriptors(mixdown_mono(buf)),
    )


def _analyze_or_error(path: str):
    try:
        return analyze_file(path)
    except (ToolkitError, OSError) as exc:
        return (path, f"{type(exc).__name__}: {exc}")


def aggregate(analyses: list[FileAnalysis]) -> AcousticProfile:
    """Reduce per-file analyses into a profile (population statistics)."""
    if not analyses:
        raise EmptyCorpus("no analyses to aggregate")
    analyses = sorted(analyses, key=lambda a: a.path)

    def multiset(values):
        counts: dict[int, int] = {}
        for v in values:
            counts[v] = counts.get(v, 0) + 1
        return counts

    return AcousticProfile(
        num_files=len(analyses),
        sample_rates=multiset(a.attributes.sample_rate for a in analyses),
        bit_depths=multiset(a.attributes.bit_depth for a in analyses),
        channel_counts=multiset(a.attributes.channel_count for a in analyses),
        snr_db=StatBlock.from_values([a.descriptors.snr_db for a in analyses]),
        lufs=StatBlock.from_values([a.descriptors.lufs for a in analyses]),
        spectral_centroid_hz=StatBlock.from_values(
            [a.descriptors.spectral_centroid_hz for a in analyses]),
        spectral_rolloff_hz=StatBlock.from_values(
            [a.descriptors.spectral_rolloff_hz for a in analyses]),
    )


def profile_corpus(manifest: CorpusManifest, sample_limit: int | None = None,
                   seed: int = 0, jobs: int = 1) -> ProfileRun:
    """Analyze (a seeded subset of) a corpus and aggregate the profile.

    Entries are processed in path-sorted order, so the result does not
    depend on manifest order or worker count. Per-file failures are
    collected in the skip report; raises EmptyCorpus if nothing survives.
    """
    if len(manifest) == 0:
        raise EmptyCorpus("manifest is empty")
    paths = sorted(e.audio_path for e in manifest.entries)
    if sample_limit is not None:
        if sample_limit < 1:
            raise InvalidArgument(f"sample_limit must be >= 1, got {sample_limit}")
        if sample_limit < len(paths):
            rng = np.random.default_rng(seed)
            idx = np.sort(rng.choice(len(paths), size=sample_limit, replace=False))
            paths = [paths[i] for i in idx]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_analyze_or_error, paths))
    else:
        results = [_analyze_or_error(p) for p in paths]

    analyses = [r for r in results if isinstance(r, FileAnalysis)]
    skipped = [r for r in results if not isinstance(r, FileAnalysis)]
    if not analyses:
        raise EmptyCorpus("no analyzable files (all skipped)")
    return ProfileRun(profile=aggregate(analyses), analyzed=len(analyses), skipped=skipped)
