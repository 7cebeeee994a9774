"""Sample-rate conversion via polyphase windowed-sinc filtering.

The anti-alias lowpass is a Kaiser-windowed FIR designed per conversion
ratio; the polyphase application is delegated to scipy.signal.resample_poly,
which applies exactly the filter we hand it. Output length is pinned to
round(frames * target / source), trimming scipy's ceil-length result.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import signal

from .audio import AudioBuffer
from .errors import InvalidArgument

DEFAULT_ATTENUATION_DB = 60.0

# Transition band as a fraction of the cutoff: passband edge at
# (1 - _TRANSITION/2) * cutoff, stopband edge at (1 + _TRANSITION/2) * cutoff.
_TRANSITION = 0.25


def design_lowpass(up: int, down: int, attenuation_db: float) -> np.ndarray:
    """Kaiser-window FIR for a rational up/down conversion.

    Cutoff sits at the tighter of the two Nyquist limits, normalized to
    the upsampled grid. Unit DC gain; resample_poly rescales by `up`.
    """
    max_rate = max(up, down)
    cutoff = 1.0 / max_rate
    width = _TRANSITION * cutoff
    numtaps, beta = signal.kaiserord(attenuation_db, width)
    numtaps |= 1  # symmetric linear phase needs an odd length
    return signal.firwin(numtaps, cutoff, window=("kaiser", beta))


def resample(buf: AudioBuffer, target_rate: int,
             attenuation_db: float = DEFAULT_ATTENUATION_DB) -> AudioBuffer:
    """Resample to target_rate with >= attenuation_db alias rejection.

    Identical source and target rates return the input unchanged.
    """
    if target_rate <= 0:
        raise InvalidArgument(f"target_rate must be positive, got {target_rate}")
    if target_rate == buf.sample_rate:
        return buf

    g = math.gcd(buf.sample_rate, int(target_rate))
    up = int(target_rate) // g
    down = buf.sample_rate // g
    h = design_lowpass(up, down, attenuation_db)

    out = signal.resample_poly(buf.samples, up, down, axis=1, window=h)
    n_out = (2 * buf.frames * up + down) // (2 * down)  # round(frames * up / down)
    out = out[:, :n_out]
    return buf.replace_samples(out, sample_rate=int(target_rate))
