"""WAV decoding, resampling, and framing.

Everything here is pure and the returned arrays are marked read-only, so
clips can be shared freely across threads. Only RIFF/WAVE input is handled;
compressed formats are expected to be converted beforehand.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DecodeError, InputTooShort, UnsupportedFormat

ANALYSIS_RATE = 22050

_WAVE_PCM = 1
_WAVE_FLOAT = 3
_WAVE_EXTENSIBLE = 0xFFFE

# windowed-sinc resampler parameters
_SINC_ZEROS = 64
_KAISER_BETA = 8.6


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class AudioClip:
    """Mono PCM samples plus their sample rate."""

    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self):
        samples = _readonly(np.atleast_1d(np.asarray(self.samples, dtype=np.float64)))
        if samples.ndim != 1:
            raise DataError("AudioClip samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise DataError("AudioClip samples must be finite")
        if int(self.sample_rate) <= 0:
            raise DataError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class FrameSeries:
    """Overlapping analysis frames cut from a clip (no padding)."""

    frames: np.ndarray
    hop_length: int
    frame_length: int

    def __post_init__(self):
        frames = _readonly(np.asarray(self.frames, dtype=np.float64))
        if frames.ndim != 2 or frames.shape[1] != self.frame_length:
            raise DataError("frames must be n_frames x frame_length")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


def decode_wav(data: bytes) -> AudioClip:
    """Decode a RIFF/WAVE byte string into a normalized mono clip.

    Accepts PCM 8/16/24/32-bit integer and 32-bit float, 1 or 2 channels.
    Integer samples are scaled by the type's full-scale value (e.g. 16-bit
    by 32768), stereo channels are averaged.
    """
    if len(data) < 12:
        raise DecodeError("file shorter than a RIFF header")
    if data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise DecodeError("not a RIFF/WAVE container")

    fmt = None
    raw = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise DecodeError(f"chunk {cid!r} truncated")
        if cid == b"fmt ":
            if size < 16:
                raise DecodeError("fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
            if fmt[0] == _WAVE_EXTENSIBLE:
                if size < 26:
                    raise DecodeError("extensible fmt chunk too small")
                (sub,) = struct.unpack_from("<H", body, 24)
                fmt = (sub,) + fmt[1:]
        elif cid == b"data":
            raw = body
        pos += 8 + size + (size & 1)

    if fmt is None:
        raise DecodeError("missing fmt chunk")
    if raw is None:
        raise DecodeError("missing data chunk")

    code, channels, rate, _byte_rate, _block_align, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedFormat(f"{channels} channels (only mono/stereo supported)")
    if rate <= 0:
        raise DecodeError("non-positive sample rate")

    if code == _WAVE_PCM:
        if bits == 8:
            x = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
        elif bits == 16:
            n = len(raw) // 2
            x = np.frombuffer(raw[: n * 2], dtype="<i2").astype(np.float64) / 32768.0
        elif bits == 24:
            n = len(raw) // 3
            b = np.frombuffer(raw[: n * 3], dtype=np.uint8).reshape(n, 3).astype(np.int64)
            val = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
            val = np.where(val >= 1 << 23, val - (1 << 24), val)
            x = val.astype(np.float64) / float(1 << 23)
        elif bits == 32:
            n = len(raw) // 4
            x = np.frombuffer(raw[: n * 4], dtype="<i4").astype(np.float64) / float(1 << 31)
        else:
            raise UnsupportedFormat(f"{bits}-bit integer PCM")
    elif code == _WAVE_FLOAT:
        if bits != 32:
            raise UnsupportedFormat(f"{bits}-bit float PCM")
        n = len(raw) // 4
        x = np.frombuffer(raw[: n * 4], dtype="<f4").astype(np.float64)
        x = np.clip(x, -1.0, 1.0)
    else:
        raise UnsupportedFormat(f"format code {code}")

    if channels == 2:
        x = x[: (len(x) // 2) * 2].reshape(-1, 2).mean(axis=1)
    return AudioClip(samples=x, sample_rate=rate)


def encode_wav16(clip: AudioClip) -> bytes:
    """Encode a clip as 16-bit PCM mono little-endian WAV bytes."""
    q = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    raw = q.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(raw),
        b"WAVE",
        b"fmt ",
        16,
        _WAVE_PCM,
        1,
        clip.sample_rate,
        clip.sample_rate * 2,
        2,
        16,
        b"data",
        len(raw),
    )
    return header + raw


def load_wav(path) -> AudioClip:
    with open(path, "rb") as fh:
        clip = decode_wav(fh.read())
    return AudioClip(clip.samples, clip.sample_rate, source_id=str(path))


def save_wav(path, clip: AudioClip) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_wav16(clip))


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Resample with a Kaiser-windowed sinc kernel (beta 8.6, 64 zero crossings).

    Duration is preserved to within one sample period. The kernel is
    renormalized per output sample, so constant signals pass through exactly.
    """
    if target_rate <= 0:
        raise DataError("target_rate must be positive")
    if target_rate == clip.sample_rate:
        return clip

    n_in = len(clip)
    if n_in == 0:
        return AudioClip(np.zeros(0), target_rate, clip.source_id)
    step = clip.sample_rate / target_rate
    n_out = max(1, round(n_in * target_rate / clip.sample_rate))

    scale = min(1.0, target_rate / clip.sample_rate)
    half = int(np.ceil(_SINC_ZEROS / scale))
    offsets = np.arange(-half, half + 1)
    x = clip.samples
    out = np.empty(n_out)

    chunk = max(1, int(4e6) // (2 * half + 1))
    for start in range(0, n_out, chunk):
        t = np.arange(start, min(start + chunk, n_out)) * step
        base = np.floor(t).astype(np.int64)
        idx = base[:, None] + offsets[None, :]
        delta = (t[:, None] - idx) * scale
        u = delta / _SINC_ZEROS
        win = np.zeros_like(delta)
        inside = np.abs(u) < 1.0
        win[inside] = np.i0(_KAISER_BETA * np.sqrt(1.0 - u[inside] ** 2)) / np.i0(_KAISER_BETA)
        kernel = np.sinc(delta) * win
        valid = (idx >= 0) & (idx < n_in)
        kernel *= valid
        gathered = x[np.clip(idx, 0, n_in - 1)]
        norm = kernel.sum(axis=1)
        norm[norm == 0] = 1.0
        out[start : start + len(t)] = (kernel * gathered).sum(axis=1) / norm

    return AudioClip(np.clip(out, -1.0, 1.0), target_rate, clip.source_id)


def frame(clip: AudioClip, frame_length: int, hop_length: int) -> FrameSeries:
    """Cut a clip into overlapping frames; frame i starts at i * hop_length."""
    if hop_length < 1:
        raise DataError("hop_length must be >= 1")
    if hop_length > frame_length:
        raise DataError("hop_length must not exceed frame_length")
    if len(clip) < frame_length:
        raise InputTooShort(
            f"clip has {len(clip)} samples, shorter than one {frame_length}-sample frame"
        )
    view = np.lib.stride_tricks.sliding_window_view(clip.samples, frame_length)
    return FrameSeries(frames=view[::hop_length].copy(), hop_length=hop_length, frame_length=frame_length)
