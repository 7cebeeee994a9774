"""asrdapt: acoustic corpus profiling, profile-driven augmentation, WER
evaluation and metric-driven learning-rate control for ASR domain
adaptation."""

from .audio import AudioBuffer, TechnicalAttributes, decode_wav, encode_wav, mixdown_mono, requantize
from .metrics import (AcousticDescriptors, estimate_snr, measure_descriptors, measure_lufs,
                      spectral_centroid, spectral_rolloff)
from .profiler import (AcousticProfile, CorpusManifest, ManifestEntry, StatBlock,
                       profile_corpus, read_profile, write_profile)
from .resample import resample
from .wer import WerReport, compute_wer, estimate_baseline_wer, tokenize

__version__ = "0.1.0"

__all__ = [
    "AcousticDescriptors",
    "AcousticProfile",
    "AudioBuffer",
    "CorpusManifest",
    "ManifestEntry",
    "StatBlock",
    "TechnicalAttributes",
    "WerReport",
    "compute_wer",
    "decode_wav",
    "encode_wav",
    "estimate_baseline_wer",
    "estimate_snr",
    "measure_descriptors",
    "measure_lufs",
    "mixdown_mono",
    "profile_corpus",
    "read_profile",
    "requantize",
    "resample",
    "spectral_centroid",
    "spectral_rolloff",
    "tokenize",
    "write_profile",
]
