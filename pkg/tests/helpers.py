"""Shared signal synthesis for the test suite."""

from __future__ import annotations

import numpy as np
from scipy import signal as sg

from asrdapt.audio import AudioBuffer, encode_wav


def sine(freq: float, sample_rate: int, duration: float, amp: float = 1.0,
         phase: float = 0.0) -> np.ndarray:
    t = np.arange(round(sample_rate * duration)) / sample_rate
    return amp * np.sin(2 * np.pi * freq * t + phase)


def faded_sine(freq: float, sample_rate: int, duration: float, amp: float = 1.0,
               fade: float = 0.02) -> np.ndarray:
    """Sine with raised-cosine edges, so spectral content stays at freq."""
    x = sine(freq, sample_rate, duration, amp)
    n_fade = round(fade * sample_rate)
    ramp = 0.5 * (1 - np.cos(np.pi * np.arange(n_fade) / n_fade))
    x[:n_fade] *= ramp
    x[-n_fade:] *= ramp[::-1]
    return x


def speech_like(sample_rate: int, duration: float, seed: int, peak: float = 0.4,
                band: tuple[float, float] = (120.0, 1200.0)) -> np.ndarray:
    """Bursty band-limited noise: a stand-in for speech with pauses."""
    rng = np.random.default_rng(seed)
    n = round(sample_rate * duration)
    x = rng.standard_normal(n)
    x = sg.sosfilt(sg.butter(2, band, btype="bandpass", fs=sample_rate, output="sos"), x)
    seg = round(0.25 * sample_rate)
    env = np.zeros(n)
    for start in range(0, n, 2 * seg):
        env[start:start + seg] = 1.0
    env = np.clip(sg.sosfilt(sg.butter(2, 16, fs=sample_rate, output="sos"), env), 0.0, 1.0)
    x *= env
    return x / np.max(np.abs(x)) * peak


def bursts_plus_noise(sample_rate: int, duration: float, seed: int,
                      burst_power: float, true_snr_db: float) -> np.ndarray:
    """Speech-shaped bursts at a known power over white noise: ground-truth SNR."""
    rng = np.random.default_rng(seed)
    x = speech_like(sample_rate, duration, seed)
    active = np.abs(x) > 0
    x *= np.sqrt(burst_power / np.mean(x[np.abs(x) > 1e-4] ** 2))
    noise_power = burst_power / 10 ** (true_snr_db / 10)
    x = x + rng.standard_normal(len(x)) * np.sqrt(noise_power)
    assert active.any()
    return np.clip(x, -1.0, 1.0)


def write_wav(path, samples: np.ndarray, sample_rate: int, bits: int = 16) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_wav(AudioBuffer(samples, sample_rate), bits))


def buf(samples: np.ndarray, sample_rate: int, bits: int = 16) -> AudioBuffer:
    return AudioBuffer(samples, sample_rate, source_bit_depth=bits)
