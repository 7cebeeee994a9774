"""PCM audio substrate: buffers, WAV codec, requantization, mixdown.

Layout convention: samples are stored planar as a 2-D float64 array of
shape (channels, frames), one row per channel, normalized to [-1, 1].
All processing stays in double precision; quantization happens only in
encode_wav / requantize.

WAV support is deliberately narrow: RIFF/WAVE little-endian with integer
PCM payloads of 8/16/24/32 bits or 32-bit IEEE float. No compressed
codecs, no WAVE_FORMAT_EXTENSIBLE.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, ParseError, UnsupportedFormat

SUPPORTED_BIT_DEPTHS = (8, 16, 24, 32)

_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_IEEE_FLOAT = 3


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Decoded audio: planar (channels, frames) float64 samples in [-1, 1].

    source_bit_depth records the quantization of the material the samples
    came from (or were last reduced to); the array itself is always float64.
    """

    samples: np.ndarray
    sample_rate: int
    source_bit_depth: int = 16

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise InvalidArgument(f"samples must be 1-D or (channels, frames), got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgument("samples contain non-finite values")
        if self.sample_rate <= 0:
            raise InvalidArgument(f"sample_rate must be positive, got {self.sample_rate}")
        if self.source_bit_depth not in SUPPORTED_BIT_DEPTHS:
            raise InvalidArgument(f"source_bit_depth must be one of {SUPPORTED_BIT_DEPTHS}")
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def frames(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.frames / self.sample_rate

    def mono(self) -> np.ndarray:
        """1-D view of the signal; mono buffers only."""
        if self.channels != 1:
            raise InvalidArgument(f"expected mono buffer, got {self.channels} channels")
        return self.samples[0]

    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if self.samples.size else 0.0

    def replace_samples(self, samples: np.ndarray, sample_rate: int | None = None,
                        source_bit_depth: int | None = None) -> "AudioBuffer":
        return AudioBuffer(
            samples,
            self.sample_rate if sample_rate is None else sample_rate,
            self.source_bit_depth if source_bit_depth is None else source_bit_depth,
        )

    def technical_attributes(self) -> "TechnicalAttributes":
        return TechnicalAttributes(
            sample_rate=self.sample_rate,
            bit_depth=self.source_bit_depth,
            channel_count=self.channels,
            duration=self.duration,
        )


@dataclass(frozen=True)
class TechnicalAttributes:
    """Container-level facts about a recording."""

    sample_rate: int
    bit_depth: int
    channel_count: int
    duration: float

    def __post_init__(self):
        if self.sample_rate <= 0 or self.bit_depth <= 0 or self.channel_count <= 0:
            raise InvalidArgument("technical attributes must be positive")
        if self.duration < 0:
            raise InvalidArgument("duration must be non-negative")


# ---------------------------------------------------------------------------
# WAV codec
# ---------------------------------------------------------------------------


def _parse_chunks(data: bytes):
    """Yield (chunk_id, payload) for each RIFF sub-chunk."""
    pos = 12
    n = len(data)
    while pos + 8 <= n:
        cid = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        payload = data[pos + 8:pos + 8 + size]
        if len(payload) < size:
            raise ParseError(f"chunk {cid!r} truncated: declared {size} bytes, {len(payload)} present")
        yield cid, payload
        pos += 8 + size + (size & 1)  # chunks are word-aligned


def decode_wav(data: bytes) -> AudioBuffer:
    """Decode RIFF/WAVE bytes into a normalized AudioBuffer.

    Integer PCM is scaled by 2**(bits-1) (e.g. 16384 at 16 bits becomes
    0.5); 8-bit is unsigned with a 128 offset. 32-bit float payloads are
    clipped into [-1, 1].

    Raises ParseError for malformed containers and UnsupportedFormat for
    codecs outside integer PCM / float32.
    """
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise ParseError("not a RIFF/WAVE stream")

    fmt = None
    payload = None
    for cid, body in _parse_chunks(data):
        if cid == b"fmt " and fmt is None:
            if len(body) < 16:
                raise ParseError("fmt chunk shorter than 16 bytes")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data" and payload is None:
            payload = body
    if fmt is None:
        raise ParseError("missing fmt chunk")
    if payload is None:
        raise ParseError("missing data chunk")

    format_code, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if channels < 1:
        raise ParseError("channel count must be >= 1")
    if sample_rate <= 0:
        raise ParseError("sample rate must be positive")

    if format_code == _WAVE_FORMAT_PCM:
        if bits not in (8, 16, 24, 32):
            raise UnsupportedFormat(f"unsupported PCM bit depth {bits}")
    elif format_code == _WAVE_FORMAT_IEEE_FLOAT:
        if bits != 32:
            raise UnsupportedFormat(f"unsupported float bit depth {bits}")
    else:
        raise UnsupportedFormat(f"unsupported WAVE format code {format_code}")

    bytes_per_sample = bits // 8
    frame_bytes = bytes_per_sample * channels
    usable = len(payload) - (len(payload) % frame_bytes) if frame_bytes else 0
    payload = payload[:usable]

    if format_code == _WAVE_FORMAT_IEEE_FLOAT:
        flat = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        flat = np.clip(flat, -1.0, 1.0)
    elif bits == 8:
        flat = (np.frombuffer(payload, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif bits == 16:
        flat = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    elif bits == 24:
        raw = np.frombuffer(payload, dtype=np.uint8).reshape(-1, 3)
        as32 = (
            raw[:, 0].astype(np.int32)
            | (raw[:, 1].astype(np.int32) << 8)
            | (raw[:, 2].astype(np.int32) << 16)
        )
        as32 = np.where(as32 >= 1 << 23, as32 - (1 << 24), as32)
        flat = as32.astype(np.float64) / float(1 << 23)
    else:  # 32-bit integer
        flat = np.frombuffer(payload, dtype="<i4").astype(np.float64) / float(1 << 31)

    planar = flat.reshape(-1, channels).T if channels > 1 else flat.reshape(1, -1)
    return AudioBuffer(planar, int(sample_rate), source_bit_depth=int(bits))


def _quantize_to_int(samples: np.ndarray, bits: int) -> np.ndarray:
    """Round normalized samples to integer codes at the given depth."""
    scale = float(1 << (bits - 1))
    codes = np.round(samples * scale)
    return np.clip(codes, -scale, scale - 1)


def encode_wav(buf: AudioBuffer, bit_depth: int = 16, *, float_format: bool = False) -> bytes:
    """Encode a buffer as RIFF/WAVE bytes.

    Integer PCM at bit_depth in {8, 16, 24, 32}; float_format writes
    32-bit IEEE float instead (bit_depth is then ignored). Quantization
    is round-to-nearest, so decode(encode(b)) is within 1 LSB per sample.
    """
    if float_format:
        interleaved = buf.samples.T.reshape(-1).astype("<f4")
        payload = interleaved.tobytes()
        bits = 32
        format_code = _WAVE_FORMAT_IEEE_FLOAT
    else:
        if bit_depth not in SUPPORTED_BIT_DEPTHS:
            raise InvalidArgument(f"bit_depth must be one of {SUPPORTED_BIT_DEPTHS}, got {bit_depth}")
        interleaved = buf.samples.T.reshape(-1)
        codes = _quantize_to_int(interleaved, bit_depth)
        if bit_depth == 8:
            payload = (codes + 128).astype(np.uint8).tobytes()
        elif bit_depth == 16:
            payload = codes.astype("<i2").tobytes()
        elif bit_depth == 24:
            as32 = codes.astype(np.int32)
            raw = np.empty((as32.size, 3), dtype=np.uint8)
            raw[:, 0] = as32 & 0xFF
            raw[:, 1] = (as32 >> 8) & 0xFF
            raw[:, 2] = (as32 >> 16) & 0xFF
            payload = raw.tobytes()
        else:
            payload = codes.astype("<i4").tobytes()
        bits = bit_depth
        format_code = _WAVE_FORMAT_PCM

    channels = buf.channels
    byte_rate = buf.sample_rate * channels * (bits // 8)
    block_align = channels * (bits // 8)
    fmt_chunk = struct.pack(
        "<4sIHHIIHH", b"fmt ", 16, format_code, channels, buf.sample_rate,
        byte_rate, block_align, bits,
    )
    data_header = struct.pack("<4sI", b"data", len(payload))
    pad = b"\x00" if len(payload) & 1 else b""
    body = fmt_chunk + data_header + payload + pad
    return struct.pack("<4sI4s", b"RIFF", 4 + len(body), b"WAVE") + body


# ---------------------------------------------------------------------------
# Requantization and mixdown
# ---------------------------------------------------------------------------


def requantize(buf: AudioBuffer, target_bits: int, dither: bool | None = None,
               seed: int = 0) -> AudioBuffer:
    """Map samples to the nearest level of an integer grid at target_bits.

    dither=None enables TPDF dither (1 LSB peak amplitude, added before
    rounding) exactly when the depth is being reduced. The seed fixes the
    dither noise so outputs are reproducible; it is unused when dither is
    off. Requantizing at the same depth without dither is the identity.
    """
    if target_bits not in (8, 16, 24):
        raise InvalidArgument(f"target_bits must be 8, 16 or 24, got {target_bits}")
    if dither is None:
        dither = target_bits < buf.source_bit_depth

    scale = float(1 << (target_bits - 1))
    x = buf.samples * scale
    if dither:
        rng = np.random.Generator(np.random.Philox(key=np.uint64(seed & (2**64 - 1))))
        tpdf = rng.random(x.shape) - rng.random(x.shape)
        x = x + tpdf
    codes = np.clip(np.round(x), -scale, scale - 1)
    return buf.replace_samples(codes / scale, source_bit_depth=target_bits)


def mixdown_mono(buf: AudioBuffer) -> AudioBuffer:
    """Average all channels into one; mono input passes through."""
    if buf.channels == 1:
        return buf
    return buf.replace_samples(np.mean(buf.samples, axis=0))
