"""Tests for the acoustic descriptors: SNR, LUFS, centroid, rolloff."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asrdapt.errors import InvalidArgument, SilentInput
from asrdapt.metrics import (estimate_snr, k_weighting_sos, measure_descriptors,
                             measure_lufs, spectral_centroid, spectral_rolloff)

from helpers import buf, bursts_plus_noise, sine

BIN_HZ = 16000 / 2048  # analysis bin width at 16 kHz


# ---------------------------------------------------------------------------
# Blind SNR
# ---------------------------------------------------------------------------


class TestEstimateSnr:
    def test_known_mixture_within_3db(self):
        x = bursts_plus_noise(16000, 4.0, seed=3, burst_power=0.01, true_snr_db=20.0)
        assert estimate_snr(buf(x, 16000)) == pytest.approx(20.0, abs=3.0)

    def test_pure_sine_hits_upper_clamp(self):
        assert estimate_snr(buf(sine(1000, 16000, 2.0), 16000)) == 60.0

    def test_white_noise_only_near_zero(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(32000) * 0.1
        assert estimate_snr(buf(x, 16000)) == pytest.approx(0.0, abs=3.0)

    def test_silent_raises(self):
        with pytest.raises(SilentInput):
            estimate_snr(buf(np.zeros(16000), 16000))

    def test_too_short_raises(self):
        with pytest.raises(InvalidArgument):
            estimate_snr(buf(sine(440, 16000, 0.3), 16000))

    def test_clamped_to_range(self):
        x = bursts_plus_noise(16000, 3.0, seed=5, burst_power=0.01, true_snr_db=80.0)
        assert 0.0 <= estimate_snr(buf(x, 16000)) <= 60.0

    @settings(max_examples=15, deadline=None)
    @given(gain=st.floats(0.1, 1.0))
    def test_gain_invariant(self, gain):
        x = bursts_plus_noise(16000, 3.0, seed=9, burst_power=0.005, true_snr_db=15.0)
        base = estimate_snr(buf(x, 16000))
        assert estimate_snr(buf(x * gain, 16000)) == pytest.approx(base, abs=1e-6)


# ---------------------------------------------------------------------------
# LUFS
# ---------------------------------------------------------------------------


class TestMeasureLufs:
    def test_reference_tone_48k(self):
        assert measure_lufs(buf(sine(997, 48000, 3.0), 48000)) == pytest.approx(-3.01, abs=0.1)

    @pytest.mark.parametrize("rate", [16000, 8000])
    def test_reference_tone_redesigned_rates(self, rate):
        assert measure_lufs(buf(sine(997, rate, 3.0), rate)) == pytest.approx(-3.01, abs=0.2)

    def test_half_scale_shifts_6db(self):
        full = measure_lufs(buf(sine(997, 48000, 3.0), 48000))
        half = measure_lufs(buf(sine(997, 48000, 3.0, amp=0.5), 48000))
        assert full - half == pytest.approx(6.02, abs=0.05)

    def test_silence_raises(self):
        with pytest.raises(SilentInput):
            measure_lufs(buf(np.zeros(48000), 48000))

    def test_too_short_raises(self):
        with pytest.raises(InvalidArgument):
            measure_lufs(buf(sine(997, 48000, 0.2), 48000))

    def test_k_weighting_matches_reference_coefficients_at_48k(self):
        reference = np.array([
            [1.53512485958697, -2.69169618940638, 1.19839281085285,
             1.0, -1.69065929318241, 0.73248077421585],
            [1.0, -2.0, 1.0, 1.0, -1.99004745483398, 0.99007225036621],
        ])
        np.testing.assert_allclose(k_weighting_sos(48000), reference, atol=1e-6)

    @settings(max_examples=15, deadline=None)
    @given(gain_db=st.floats(-20.0, 0.0))
    def test_tone_gain_linearity(self, gain_db):
        base = measure_lufs(buf(sine(997, 16000, 1.0, amp=0.9), 16000))
        scaled = measure_lufs(buf(sine(997, 16000, 1.0, amp=0.9 * 10 ** (gain_db / 20)), 16000))
        assert scaled - base == pytest.approx(gain_db, abs=0.05)


# ---------------------------------------------------------------------------
# Spectral centroid
# ---------------------------------------------------------------------------


class TestSpectralCentroid:
    def test_single_tone(self):
        c = spectral_centroid(buf(sine(1000, 16000, 1.0), 16000))
        assert c == pytest.approx(1000.0, abs=BIN_HZ)

    def test_two_equal_tones_average(self):
        x = sine(1000, 16000, 1.0, 0.5) + sine(3000, 16000, 1.0, 0.5)
        c = spectral_centroid(buf(x, 16000))
        assert c == pytest.approx(2000.0, abs=2 * BIN_HZ)

    def test_white_noise_half_nyquist(self):
        rng = np.random.default_rng(2)
        c = spectral_centroid(buf(rng.standard_normal(64000) * 0.1, 16000))
        assert c == pytest.approx(4000.0, rel=0.05)

    def test_silent_raises(self):
        with pytest.raises(SilentInput):
            spectral_centroid(buf(np.zeros(16000), 16000))

    def test_gain_invariant(self):
        x = sine(1000, 16000, 0.5, 0.9) + sine(2500, 16000, 0.5, 0.3)
        a = spectral_centroid(buf(x, 16000))
        b = spectral_centroid(buf(x * 0.2, 16000))
        assert a == pytest.approx(b, abs=1e-9)

    def test_within_nyquist(self):
        rng = np.random.default_rng(3)
        c = spectral_centroid(buf(rng.uniform(-0.5, 0.5, 8000), 8000))
        assert 0 <= c <= 4000


# ---------------------------------------------------------------------------
# Spectral rolloff
# ---------------------------------------------------------------------------


class TestSpectralRolloff:
    def test_single_tone(self):
        r = spectral_rolloff(buf(sine(1000, 16000, 1.0), 16000))
        assert r == pytest.approx(1000.0, abs=BIN_HZ)

    def test_white_noise_follows_threshold(self):
        rng = np.random.default_rng(4)
        r = spectral_rolloff(buf(rng.standard_normal(64000) * 0.1, 16000), 0.85)
        assert r == pytest.approx(0.85 * 8000, rel=0.05)

    def test_monotone_in_threshold(self):
        rng = np.random.default_rng(5)
        b = buf(rng.standard_normal(16000) * 0.1, 16000)
        assert spectral_rolloff(b, 0.99) >= spectral_rolloff(b, 0.5)

    @settings(max_examples=15, deadline=None)
    @given(lo=st.floats(0.05, 0.45), hi=st.floats(0.5, 0.95))
    def test_monotone_property(self, lo, hi):
        x = sine(500, 8000, 1.0, 0.4) + sine(2000, 8000, 1.0, 0.4)
        b = buf(x, 8000)
        assert spectral_rolloff(b, hi) >= spectral_rolloff(b, lo)

    def test_threshold_out_of_range(self):
        b = buf(sine(500, 8000, 0.5), 8000)
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(InvalidArgument):
                spectral_rolloff(b, bad)

    def test_silent_raises(self):
        with pytest.raises(SilentInput):
            spectral_rolloff(buf(np.zeros(16000), 16000))

    def test_gain_invariant(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal(16000) * 0.1
        assert spectral_rolloff(buf(x, 16000)) == pytest.approx(
            spectral_rolloff(buf(x * 0.3, 16000)), abs=1e-9)


# ---------------------------------------------------------------------------
# Bundled measurement
# ---------------------------------------------------------------------------


def test_measure_descriptors_bundles_all_four():
    x = bursts_plus_noise(16000, 2.0, seed=8, burst_power=0.01, true_snr_db=25.0)
    d = measure_descriptors(buf(x, 16000))
    assert 0 <= d.snr_db <= 60
    assert d.lufs < 0
    assert 0 <= d.spectral_centroid_hz <= 8000
    assert 0 <= d.spectral_rolloff_hz <= 8000
