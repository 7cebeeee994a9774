"""Acoustic descriptors computed on mono buffers.

Four measurements drive corpus profiling:

* estimate_snr   -- blind SNR from framed energies (lowest-decile noise
                    floor, burst frames as signal), clamped to [0, 60] dB.
* measure_lufs   -- integrated loudness: K-weighting pre-filter, 400 ms
                    blocks with 75% overlap, -70 LUFS absolute gate and
                    -10 LU relative gate.
* spectral_centroid -- magnitude-weighted mean frequency per frame.
* spectral_rolloff  -- frequency below which `threshold` of the framed
                    spectral energy lies.

All functions require mono input (mix down first) and raise SilentInput
when there is nothing to measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .audio import AudioBuffer
from .errors import InvalidArgument, SilentInput

SILENCE_PEAK = 1e-6

# Analysis framing shared by centroid and rolloff.
_FFT_FRAME = 2048
_FFT_HOP = 512
_ENERGETIC_RMS = 1e-5


@dataclass(frozen=True)
class AcousticDescriptors:
    snr_db: float
    lufs: float
    spectral_centroid_hz: float
    spectral_rolloff_hz: float


def measure_descriptors(buf: AudioBuffer, rolloff_threshold: float = 0.85) -> AcousticDescriptors:
    """All four descriptors of a mono buffer in one pass."""
    return AcousticDescriptors(
        snr_db=estimate_snr(buf),
        lufs=measure_lufs(buf),
        spectral_centroid_hz=spectral_centroid(buf),
        spectral_rolloff_hz=spectral_rolloff(buf, rolloff_threshold),
    )


# ---------------------------------------------------------------------------
# Blind SNR
# ---------------------------------------------------------------------------


def _frame_powers(x: np.ndarray, sample_rate: int) -> np.ndarray:
    """Mean-square power of 25 ms frames hopped every 10 ms."""
    frame = max(1, round(0.025 * sample_rate))
    hop = max(1, round(0.010 * sample_rate))
    n = (len(x) - frame) // hop + 1
    strided = np.lib.stride_tricks.sliding_window_view(x, frame)[::hop][:n]
    return np.mean(strided * strided, axis=1)


def _spectral_flatness(x: np.ndarray) -> float:
    """Geometric/arithmetic mean ratio of a Welch power spectrum.

    Near 0 for tonal content, order 0.5-1.0 for broadband noise.
    """
    nper = min(len(x), 4096)
    _, psd = signal.welch(x, nperseg=nper)
    psd = psd[1:]  # DC bin excluded
    psd = psd[psd > 0]
    if psd.size == 0:
        return 0.0
    return float(np.exp(np.mean(np.log(psd))) / np.mean(psd))


def estimate_snr(buf: AudioBuffer) -> float:
    """Blind SNR estimate in dB, clamped to [0, 60].

    Noise power is the mean of the lowest-decile frame energies; signal
    power is the mean of frames more than 6 dB above that floor. When no
    frame clears the floor (no bursts), a spectral-flatness check decides
    between an effectively noiseless tonal signal (clamp high) and a
    noise-dominated one (ratio of overall power to the floor, near 0 dB).
    Accuracy on synthetic burst/noise mixtures is about +/-3 dB.
    """
    x = buf.mono()
    if buf.duration < 0.5:
        raise InvalidArgument(f"need >= 0.5 s of audio, got {buf.duration:.3f} s")
    if buf.peak() < SILENCE_PEAK:
        raise SilentInput("signal peak below -120 dBFS")

    powers = _frame_powers(x, buf.sample_rate)
    order = np.sort(powers)
    noise_power = float(np.mean(order[:max(1, len(order) // 10)]))
    if noise_power <= 1e-20:
        return 60.0  # floor is digital silence: noiseless recording

    burst = powers[powers > noise_power * 10 ** 0.6]
    if burst.size:
        snr = 10.0 * math.log10(float(np.mean(burst)) / noise_power)
    elif _spectral_flatness(x) < 0.1:
        snr = 60.0  # stationary tonal signal, no measurable noise floor
    else:
        snr = 10.0 * math.log10(float(np.mean(powers)) / noise_power)
    return float(min(max(snr, 0.0), 60.0))


# ---------------------------------------------------------------------------
# Integrated loudness
# ---------------------------------------------------------------------------

# Analog prototypes of the two K-weighting stages (high shelf + high pass).
# Redesigned for any sample rate via the bilinear transform; at 48 kHz this
# reproduces the published reference coefficients to ~1e-6.
_SHELF_F0 = 1681.9744509555319
_SHELF_GAIN_DB = 3.99984385397
_SHELF_Q = 0.7071752369554193
_SHELF_VB_EXP = 0.499666774155
_HIGHPASS_F0 = 38.13547087613982
_HIGHPASS_Q = 0.5003270373253953


def k_weighting_sos(sample_rate: int) -> np.ndarray:
    """Second-order sections of the K-weighting pre-filter at this rate."""
    k = math.tan(math.pi * _SHELF_F0 / sample_rate)
    vh = 10.0 ** (_SHELF_GAIN_DB / 20.0)
    vb = vh ** _SHELF_VB_EXP
    a0 = 1.0 + k / _SHELF_Q + k * k
    shelf = [
        (vh + vb * k / _SHELF_Q + k * k) / a0,
        2.0 * (k * k - vh) / a0,
        (vh - vb * k / _SHELF_Q + k * k) / a0,
        1.0,
        2.0 * (k * k - 1.0) / a0,
        (1.0 - k / _SHELF_Q + k * k) / a0,
    ]

    k = math.tan(math.pi * _HIGHPASS_F0 / sample_rate)
    a0 = 1.0 + k / _HIGHPASS_Q + k * k
    highpass = [
        1.0,
        -2.0,
        1.0,
        1.0,
        2.0 * (k * k - 1.0) / a0,
        (1.0 - k / _HIGHPASS_Q + k * k) / a0,
    ]
    return np.array([shelf, highpass])


def measure_lufs(buf: AudioBuffer) -> float:
    """Gated integrated loudness in LUFS.

    Raises SilentInput when every 400 ms block falls below the -70 LUFS
    absolute gate (digital silence) or the relative gate removes all
    blocks.
    """
    x = buf.mono()
    if buf.duration < 0.4:
        raise InvalidArgument(f"need >= 0.4 s of audio, got {buf.duration:.3f} s")

    y = signal.sosfilt(k_weighting_sos(buf.sample_rate), x)
    block = round(0.4 * buf.sample_rate)
    hop = round(0.1 * buf.sample_rate)
    n_blocks = (len(y) - block) // hop + 1
    windows = np.lib.stride_tricks.sliding_window_view(y, block)[::hop][:n_blocks]
    z = np.mean(windows * windows, axis=1)

    with np.errstate(divide="ignore"):
        block_loudness = -0.691 + 10.0 * np.log10(z)
    above_absolute = block_loudness > -70.0
    if not np.any(above_absolute):
        raise SilentInput("every block below the -70 LUFS absolute gate")

    relative_gate = -0.691 + 10.0 * math.log10(float(np.mean(z[above_absolute]))) - 10.0
    kept = above_absolute & (block_loudness > relative_gate)
    if not np.any(kept):
        raise SilentInput("relative gate removed every block")
    return -0.691 + 10.0 * math.log10(float(np.mean(z[kept])))


# ---------------------------------------------------------------------------
# Spectral shape
# ---------------------------------------------------------------------------


def _energetic_spectra(buf: AudioBuffer) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed magnitude spectra of frames with audible energy."""
    x = buf.mono()
    if buf.peak() < SILENCE_PEAK:
        raise SilentInput("signal peak below -120 dBFS")

    if len(x) < _FFT_FRAME:
        frames = np.pad(x, (0, _FFT_FRAME - len(x)))[None, :]
    else:
        n = (len(x) - _FFT_FRAME) // _FFT_HOP + 1
        frames = np.lib.stride_tricks.sliding_window_view(x, _FFT_FRAME)[::_FFT_HOP][:n]

    rms = np.sqrt(np.mean(frames * frames, axis=1))
    frames = frames[rms > _ENERGETIC_RMS]
    if frames.shape[0] == 0:
        raise SilentInput("no frame exceeds the energy gate")

    window = np.hanning(_FFT_FRAME)
    spectra = np.abs(np.fft.rfft(frames * window, axis=1))
    freqs = np.fft.rfftfreq(_FFT_FRAME, d=1.0 / buf.sample_rate)
    return spectra, freqs


def spectral_centroid(buf: AudioBuffer) -> float:
    """Mean magnitude-weighted frequency over energetic frames, in Hz."""
    spectra, freqs = _energetic_spectra(buf)
    weights = np.sum(spectra, axis=1)
    centroids = (spectra @ freqs) / weights
    return float(np.mean(centroids))


def spectral_rolloff(buf: AudioBuffer, threshold: float = 0.85) -> float:
    """Mean frequency below which `threshold` of spectral energy lies."""
    if not 0.0 < threshold < 1.0:
        raise InvalidArgument(f"threshold must be in (0, 1), got {threshold}")
    spectra, freqs = _energetic_spectra(buf)
    energy = spectra * spectra
    cumulative = np.cumsum(energy, axis=1)
    targets = threshold * cumulative[:, -1]
    indices = [int(np.searchsorted(row, t)) for row, t in zip(cumulative, targets)]
    return float(np.mean(freqs[np.minimum(indices, len(freqs) - 1)]))
