"""Profile-driven augmentation: reproducible plans and the operator chain.

Every output file is produced by the fixed composition

    resample/requantize -> reverb -> noise mix -> [saturation] ->
    loudness normalization -> spectral filter

with all stochastic choices frozen into a per-file PlanEntry up front.
A plan is a pure function of (profile, source list, master seed), and a
plan entry plus the asset bank fully determines the output bytes, so
runs are repeatable and distributable across workers.

Randomness uses the counter-based Philox generator keyed on (seed,
stream) so independent draws never share state.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from .audio import AudioBuffer, decode_wav, encode_wav, mixdown_mono, requantize
from .errors import InvalidArgument, SilentInput, ToolkitError
from .metrics import SILENCE_PEAK, measure_lufs
from .profiler import AcousticProfile, CorpusManifest
from .resample import resample

PEAK_LIMIT = 0.999

# Reverb probability p = clip(coeff / max(mean_snr, floor), 0, 1), in dB.
DEFAULT_REVERB_COEFF = 5.0
REVERB_SNR_FLOOR = 1.0

# Philox stream tags: one per independent random purpose.
_STREAM_PLAN = 0
_STREAM_CROP = 1
_STREAM_WHITE = 2
_STREAM_DITHER = 3


def _philox(seed: int, stream: int) -> np.random.Generator:
    key = np.array([seed & (2**64 - 1), stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _derive_seed(seed: int, stream: int) -> int:
    return int(_philox(seed, stream).integers(0, 2**63))


# ---------------------------------------------------------------------------
# Plan records
# ---------------------------------------------------------------------------

FILTER_KINDS = ("none", "lowpass", "highpass", "bandpass")


@dataclass(frozen=True)
class FilterSpec:
    kind: str = "none"
    cutoff_hz: float | None = None
    low_hz: float | None = None
    high_hz: float | None = None

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise InvalidArgument(f"filter kind must be one of {FILTER_KINDS}, got {self.kind!r}")
        if self.kind in ("lowpass", "highpass") and not self.cutoff_hz:
            raise InvalidArgument(f"{self.kind} filter needs cutoff_hz")
        if self.kind == "bandpass" and not (self.low_hz and self.high_hz and self.low_hz < self.high_hz):
            raise InvalidArgument("bandpass filter needs low_hz < high_hz")

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.cutoff_hz is not None:
            d["cutoff_hz"] = self.cutoff_hz
        if self.low_hz is not None:
            d["low_hz"] = self.low_hz
            d["high_hz"] = self.high_hz
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FilterSpec":
        return cls(kind=d.get("kind", "none"), cutoff_hz=d.get("cutoff_hz"),
                   low_hz=d.get("low_hz"), high_hz=d.get("high_hz"))


@dataclass(frozen=True)
class PlanEntry:
    """All sampled parameters needed to reproduce one file's augmentation."""

    source_path: str
    seed: int
    target_sample_rate: int
    target_bit_depth: int
    apply_reverb: bool
    rir_id: str | None
    target_snr_db: float
    noise_id: str
    target_lufs: float | None
    filter: FilterSpec
    saturation_drive: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.target_snr_db):
            raise InvalidArgument("target_snr_db must be finite")
        nyquist = self.target_sample_rate / 2
        for cutoff in (self.filter.cutoff_hz, self.filter.low_hz, self.filter.high_hz):
            if cutoff is not None and not 0 < cutoff < nyquist:
                raise InvalidArgument(f"filter cutoff {cutoff} outside (0, {nyquist})")

    def to_dict(self) -> dict:
        return {
            "source_path": self.source_path,
            "seed": self.seed,
            "target_sample_rate": self.target_sample_rate,
            "target_bit_depth": self.target_bit_depth,
            "apply_reverb": self.apply_reverb,
            "rir_id": self.rir_id,
            "target_snr_db": self.target_snr_db,
            "noise_id": self.noise_id,
            "target_lufs": self.target_lufs,
            "filter": self.filter.to_dict(),
            "saturation_drive": self.saturation_drive,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlanEntry":
        d = dict(d)
        d["filter"] = FilterSpec.from_dict(d["filter"])
        return cls(**{k: d[k] for k in (
            "source_path", "seed", "target_sample_rate", "target_bit_depth",
            "apply_reverb", "rir_id", "target_snr_db", "noise_id",
            "target_lufs", "filter", "saturation_drive")})


def plan_to_jsonl(plan: list[PlanEntry]) -> str:
    return "".join(json.dumps(e.to_dict()) + "\n" for e in plan)


def plan_from_jsonl(text: str) -> list[PlanEntry]:
    return [PlanEntry.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


# ---------------------------------------------------------------------------
# Asset bank
# ---------------------------------------------------------------------------


@dataclass
class AssetBank:
    """Room impulse responses (unit energy) and noise beds, keyed by id."""

    rirs: dict[str, AudioBuffer] = field(default_factory=dict)
    noises: dict[str, AudioBuffer] = field(default_factory=dict)

    @classmethod
    def from_dirs(cls, rir_dir: str | Path | None = None,
                  noise_dir: str | Path | None = None) -> "AssetBank":
        for d in (rir_dir, noise_dir):
            if d is not None and not Path(d).is_dir():
                raise InvalidArgument(f"asset directory not found: {d}")
        bank = cls()
        if rir_dir is not None:
            for p in sorted(Path(rir_dir).rglob("*.wav")):
                buf = mixdown_mono(decode_wav(p.read_bytes()))
                energy = float(np.sum(buf.mono() ** 2))
                if energy <= 0:
                    raise InvalidArgument(f"silent RIR: {p}")
                bank.rirs[p.stem] = buf.replace_samples(buf.samples / math.sqrt(energy))
        if noise_dir is not None:
            for p in sorted(Path(noise_dir).rglob("*.wav")):
                buf = mixdown_mono(decode_wav(p.read_bytes()))
                if buf.peak() < SILENCE_PEAK:
                    raise InvalidArgument(f"silent noise bed: {p}")
                bank.noises[p.stem] = buf
        return bank


def white_noise(frames: int, sample_rate: int, seed: int) -> AudioBuffer:
    """Seeded Gaussian noise at -20 dBFS RMS; counter-based, so portable."""
    rng = _philox(seed, _STREAM_WHITE)
    return AudioBuffer(rng.standard_normal(frames) * 0.1, sample_rate)


# ---------------------------------------------------------------------------
# Plan sampling
# ---------------------------------------------------------------------------


def reverb_probability(mean_snr_db: float, coeff: float = DEFAULT_REVERB_COEFF,
                       floor: float = REVERB_SNR_FLOOR) -> float:
    """Probability of applying reverb, inversely tied to the profile SNR."""
    return min(max(coeff / max(mean_snr_db, floor), 0.0), 1.0)


def _weighted_pick(rng: np.random.Generator, counts: dict[int, int]) -> int:
    keys = sorted(counts)
    weights = np.array([counts[k] for k in keys], dtype=np.float64)
    return int(rng.choice(keys, p=weights / weights.sum()))


def sample_plan(profile: AcousticProfile, sources: CorpusManifest, bank: AssetBank,
                master_seed: int, reverb_coeff: float = DEFAULT_REVERB_COEFF) -> list[PlanEntry]:
    """Draw per-file augmentation parameters from the profile's distributions.

    Target rate and depth follow the profile multisets proportionally to
    their counts; reverb is Bernoulli with probability inverse to the mean
    SNR (dropped when the bank holds no RIRs); the noise SNR is uniform on
    the profile's [min, max]; the loudness target is normal around the
    profile mean, clamped at three sigma; the filter follows the rolloff
    rule (low rolloff: lowpass near the rolloff; otherwise an occasional
    low-cut highpass). Identical inputs and master seed give an identical
    plan, file by file.
    """
    p_rev = reverb_probability(profile.snr_db.mean, reverb_coeff)
    rir_ids = sorted(bank.rirs)
    noise_ids = sorted(bank.noises)
    plan = []
    for index, entry in enumerate(sources.entries):
        rng = _philox(master_seed, _STREAM_PLAN + (index << 8))
        rate = _weighted_pick(rng, profile.sample_rates)
        depth = _weighted_pick(rng, profile.bit_depths)

        wants_reverb = bool(rng.random() < p_rev)
        use_reverb = wants_reverb and bool(rir_ids)
        rir_id = str(rng.choice(rir_ids)) if use_reverb else None

        snr = float(rng.uniform(profile.snr_db.min, profile.snr_db.max))

        mu, sigma = profile.lufs.mean, profile.lufs.std
        lufs = float(np.clip(rng.normal(mu, sigma), mu - 3 * sigma, mu + 3 * sigma))

        nyquist = rate / 2
        rolloff = profile.spectral_rolloff_hz.mean
        if rolloff < 0.6 * nyquist:
            cutoff = float(np.clip(rng.uniform(0.8 * rolloff, 1.2 * rolloff), 300.0, 0.95 * nyquist))
            filt = FilterSpec("lowpass", cutoff_hz=cutoff)
        elif rng.random() < 0.5:
            filt = FilterSpec("highpass", cutoff_hz=float(rng.uniform(50.0, 300.0)))
        else:
            filt = FilterSpec("none")

        noise_id = str(rng.choice(noise_ids)) if noise_ids else "white"
        plan.append(PlanEntry(
            source_path=entry.audio_path,
            seed=int(rng.integers(0, 2**63)),
            target_sample_rate=rate,
            target_bit_depth=depth,
            apply_reverb=use_reverb,
            rir_id=rir_id,
            target_snr_db=snr,
            noise_id=noise_id,
            target_lufs=lufs,
            filter=filt,
        ))
    return plan


@dataclass(frozen=True)
class PresetTemplate:
    """Fixed channel recipe; only SNR and drive are sampled per file."""

    name: str
    target_sample_rate: int
    target_bit_depth: int
    filter: FilterSpec
    snr_range: tuple[float, float]
    drive_range: tuple[float, float] | None = None
    noise_id: str = "white"
    target_lufs: float | None = None


def telephony_preset(bit_depth: int = 16) -> PresetTemplate:
    """Narrow-band telephone channel: 8 kHz, 300-3400 Hz, noisy, saturated."""
    if bit_depth not in (8, 16):
        raise InvalidArgument(f"telephony preset supports 8 or 16 bits, got {bit_depth}")
    return PresetTemplate(
        name="telephony",
        target_sample_rate=8000,
        target_bit_depth=bit_depth,
        filter=FilterSpec("bandpass", low_hz=300.0, high_hz=3400.0),
        snr_range=(15.0, 30.0),
        drive_range=(1.0, 2.0),
    )


def sample_preset_plan(template: PresetTemplate, sources: CorpusManifest,
                       master_seed: int) -> list[PlanEntry]:
    """Instantiate a preset template into per-file plan entries."""
    plan = []
    for index, entry in enumerate(sources.entries):
        rng = _philox(master_seed, _STREAM_PLAN + (index << 8))
        snr = float(rng.uniform(*template.snr_range))
        drive = float(rng.uniform(*template.drive_range)) if template.drive_range else None
        plan.append(PlanEntry(
            source_path=entry.audio_path,
            seed=int(rng.integers(0, 2**63)),
            target_sample_rate=template.target_sample_rate,
            target_bit_depth=template.target_bit_depth,
            apply_reverb=False,
            rir_id=None,
            target_snr_db=snr,
            noise_id=template.noise_id,
            target_lufs=template.target_lufs,
            filter=template.filter,
            saturation_drive=drive,
        ))
    return plan


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


def _peak_protect(x: np.ndarray) -> tuple[np.ndarray, float]:
    """Scale down to the peak limit if exceeded; returns (signal, scale)."""
    peak = float(np.max(np.abs(x))) if x.size else 0.0
    if peak > PEAK_LIMIT:
        scale = PEAK_LIMIT / peak
        return x * scale, scale
    return x, 1.0


def apply_reverb(buf: AudioBuffer, rir: AudioBuffer) -> AudioBuffer:
    """Convolve with a room impulse response, truncated to the input length.

    The RIR is resampled to the buffer's rate if needed; it is applied
    as-is, so callers should hand in energy-normalized responses.
    """
    if rir.peak() < 1e-9:
        raise InvalidArgument("RIR is silent")
    if rir.sample_rate != buf.sample_rate:
        rir = resample(rir, buf.sample_rate)
    wet = signal.fftconvolve(buf.mono(), rir.mono())[:buf.frames]
    wet, _ = _peak_protect(wet)
    return buf.replace_samples(wet)


@dataclass(frozen=True)
class MixReport:
    noise_gain: float
    realized_snr_db: float
    peak_scale: float


def mix_noise(buf: AudioBuffer, noise: AudioBuffer, target_snr_db: float,
              seed: int) -> tuple[AudioBuffer, MixReport]:
    """Add noise scaled so the mixture hits target_snr_db exactly.

    The noise bed is looped and/or seeded-cropped to the signal length;
    the gain is computed from full-buffer mean powers, so the realized
    (ground-truth) SNR in the report equals the target by construction.
    Peak protection rescales the whole mixture, preserving the ratio.
    """
    if not math.isfinite(target_snr_db):
        raise InvalidArgument(f"target SNR must be finite, got {target_snr_db}")
    x = buf.mono()
    if buf.peak() < SILENCE_PEAK:
        raise SilentInput("cannot set an SNR against a silent signal")
    n = noise.mono()
    if float(np.max(np.abs(n))) < SILENCE_PEAK:
        raise InvalidArgument("noise bed is silent")

    rng = _philox(seed, _STREAM_CROP)
    if len(n) < buf.frames:
        n = np.tile(n, math.ceil((buf.frames + len(n)) / len(n)))
    start = int(rng.integers(0, len(n) - buf.frames + 1))
    n = n[start:start + buf.frames]

    p_signal = float(np.mean(x * x))
    p_noise = float(np.mean(n * n))
    if p_noise <= 0:
        raise InvalidArgument("cropped noise segment is silent")
    gain = math.sqrt(p_signal / (p_noise * 10.0 ** (target_snr_db / 10.0)))
    scaled = gain * n
    mixture = x + scaled
    realized = 10.0 * math.log10(p_signal / float(np.mean(scaled * scaled)))
    mixture, peak_scale = _peak_protect(mixture)
    return buf.replace_samples(mixture), MixReport(gain, realized, peak_scale)


@dataclass(frozen=True)
class LoudnessReport:
    measured_lufs: float
    gain_db: float
    shortfall_db: float


def normalize_lufs(buf: AudioBuffer, target_lufs: float) -> tuple[AudioBuffer, LoudnessReport]:
    """Apply the gain that moves integrated loudness to target_lufs.

    If that gain would push the peak past the limit, the gain is reduced
    to hit the limit and the difference is reported as shortfall_db.
    """
    measured = measure_lufs(buf)
    wanted_db = target_lufs - measured
    gain = 10.0 ** (wanted_db / 20.0)
    peak = buf.peak() * gain
    shortfall = 0.0
    if peak > PEAK_LIMIT:
        limited = gain * PEAK_LIMIT / peak
        shortfall = 20.0 * math.log10(gain / limited)
        gain = limited
    return (buf.replace_samples(buf.samples * gain),
            LoudnessReport(measured, 20.0 * math.log10(gain), shortfall))


def apply_filter(buf: AudioBuffer, spec: FilterSpec) -> AudioBuffer:
    """4th-order Butterworth shaping; bandpass is highpass then lowpass."""
    if spec.kind == "none":
        return buf
    nyquist = buf.sample_rate / 2

    def butter_sos(cutoff: float, btype: str) -> np.ndarray:
        if not 0 < cutoff < nyquist:
            raise InvalidArgument(f"cutoff {cutoff} Hz outside (0, {nyquist})")
        return signal.butter(4, cutoff, btype=btype, fs=buf.sample_rate, output="sos")

    x = buf.mono()
    if spec.kind == "lowpass":
        x = signal.sosfilt(butter_sos(spec.cutoff_hz, "lowpass"), x)
    elif spec.kind == "highpass":
        x = signal.sosfilt(butter_sos(spec.cutoff_hz, "highpass"), x)
    else:
        x = signal.sosfilt(butter_sos(spec.low_hz, "highpass"), x)
        x = signal.sosfilt(butter_sos(spec.high_hz, "lowpass"), x)
    return buf.replace_samples(x)


def apply_saturation(buf: AudioBuffer, drive: float) -> AudioBuffer:
    """Soft clipping y = tanh(drive * x); identity-like for small signals."""
    if drive <= 0:
        raise InvalidArgument(f"drive must be positive, got {drive}")
    return buf.replace_samples(np.tanh(drive * buf.samples))


# ---------------------------------------------------------------------------
# The chain
# ---------------------------------------------------------------------------


@dataclass
class AugmentReport:
    source_path: str
    realized_snr_db: float
    noise_gain: float
    realized_lufs: float | None
    lufs_gain_db: float | None
    lufs_shortfall_db: float | None
    mix_peak_scale: float
    final_peak_scale: float


def augment_file(buf: AudioBuffer, entry: PlanEntry, bank: AssetBank) -> tuple[AudioBuffer, AugmentReport]:
    """Run the full operator chain for one plan entry.

    Stage order is fixed: rate/depth conversion, reverb, noise,
    (saturation when the entry carries a drive), loudness, filter.
    """
    x = mixdown_mono(buf)
    x = resample(x, entry.target_sample_rate)
    if entry.target_bit_depth == 32:
        x = x.replace_samples(x.samples, source_bit_depth=32)
    else:
        x = requantize(x, entry.target_bit_depth, seed=_derive_seed(entry.seed, _STREAM_DITHER))

    if entry.apply_reverb and entry.rir_id is not None:
        x = apply_reverb(x, bank.rirs[entry.rir_id])

    if entry.noise_id == "white":
        noise = white_noise(x.frames, x.sample_rate, entry.seed)
    else:
        noise = bank.noises[entry.noise_id]
    x, mix = mix_noise(x, noise, entry.target_snr_db, seed=entry.seed)

    if entry.saturation_drive is not None:
        x = apply_saturation(x, entry.saturation_drive)

    realized_lufs = gain_db = shortfall_db = None
    if entry.target_lufs is not None:
        x, loud = normalize_lufs(x, entry.target_lufs)
        realized_lufs = measure_lufs(x)
        gain_db = loud.gain_db
        shortfall_db = loud.shortfall_db

    x = apply_filter(x, entry.filter)
    samples, final_scale = _peak_protect(x.samples)
    x = x.replace_samples(samples)

    return x, AugmentReport(
        source_path=entry.source_path,
        realized_snr_db=mix.realized_snr_db,
        noise_gain=mix.noise_gain,
        realized_lufs=realized_lufs,
        lufs_gain_db=gain_db,
        lufs_shortfall_db=shortfall_db,
        mix_peak_scale=mix.peak_scale,
        final_peak_scale=final_scale,
    )


# ---------------------------------------------------------------------------
# Corpus driver
# ---------------------------------------------------------------------------

REPORT_FILENAME = "augmentation_report.jsonl"


@dataclass
class AugmentSummary:
    processed: int
    failed: int
    report_path: str
    failures: list[tuple[str, str]] = field(default_factory=list)


def _output_path(source: str, common_root: str, out_root: Path) -> Path:
    rel = os.path.relpath(source, common_root)
    return (out_root / rel).with_suffix(".wav")


def _augment_one(args) -> tuple[str, dict | str]:
    entry_dict, bank, common_root, out_root = args
    entry = PlanEntry.from_dict(entry_dict)
    try:
        buf = decode_wav(Path(entry.source_path).read_bytes())
        out, report = augment_file(buf, entry, bank)
        dest = _output_path(entry.source_path, common_root, Path(out_root))
        dest.parent.mkdir(parents=True, exist_ok=True)
        bit_depth = entry.target_bit_depth if entry.target_bit_depth in (8, 16, 24, 32) else 16
        dest.write_bytes(encode_wav(out, bit_depth))
        return entry.source_path, {
            **entry.to_dict(),
            # relative to the output root so the report is location-independent
            "output_path": str(dest.relative_to(out_root)),
            "realized_snr_db": report.realized_snr_db,
            "noise_gain": report.noise_gain,
            "realized_lufs": report.realized_lufs,
            "lufs_gain_db": report.lufs_gain_db,
            "lufs_shortfall_db": report.lufs_shortfall_db,
            "mix_peak_scale": report.mix_peak_scale,
            "final_peak_scale": report.final_peak_scale,
        }
    except (ToolkitError, OSError) as exc:
        return entry.source_path, f"{type(exc).__name__}: {exc}"


def augment_corpus(plan: list[PlanEntry], bank: AssetBank, out_root: str | Path,
                   jobs: int = 1) -> AugmentSummary:
    """Render every plan entry to a WAV under out_root plus a JSONL report.

    The output tree mirrors the sources relative to their common parent.
    Per-file failures are recorded and skipped; the report file carries
    one line per successful file (plan fields plus realized metrics).
    """
    if not plan:
        raise InvalidArgument("empty augmentation plan")
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    common_root = os.path.commonpath([os.path.dirname(os.path.abspath(e.source_path)) or "."
                                      for e in plan])

    tasks = [(e.to_dict(), bank, common_root, str(out_root)) for e in plan]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_augment_one, tasks))
    else:
        results = [_augment_one(t) for t in tasks]

    report_path = out_root / REPORT_FILENAME
    failures = []
    lines = []
    for path, outcome in results:
        if isinstance(outcome, dict):
            lines.append(json.dumps(outcome) + "\n")
        else:
            failures.append((path, outcome))
    report_path.write_text("".join(lines))
    return AugmentSummary(
        processed=len(lines),
        failed=len(failures),
        report_path=str(report_path),
        failures=failures,
    )
