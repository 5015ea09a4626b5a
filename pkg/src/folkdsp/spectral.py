"""Short-time spectrum and per-frame descriptors.

Analysis conventions used throughout: periodic Hann window, centered frames
with reflect padding of n_fft/2 samples on each side, mel scale
2595*log10(1 + f/700), orthonormal DCT-II, log floor 1e-10.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioClip, FrameSeries
from .errors import DataError, InputTooShort, ShapeError

LOG_FLOOR = 1e-10
CHROMA_F_MIN = 32.70319566257483  # C1
TUNING_A4 = 440.0


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Spectrogram:
    """Magnitude short-time spectrum, frames by frequency bins."""

    magnitudes: np.ndarray
    n_fft: int
    hop_length: int
    sample_rate: int

    def __post_init__(self):
        m = _readonly(self.magnitudes)
        if m.ndim != 2 or m.shape[1] != self.n_fft // 2 + 1:
            raise ShapeError("magnitudes must be n_frames x (n_fft/2 + 1)")
        object.__setattr__(self, "magnitudes", m)

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def n_bins(self) -> int:
        return self.magnitudes.shape[1]

    @property
    def bin_frequencies(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.sample_rate / self.n_fft


@dataclass(frozen=True)
class MelFilterbank:
    """Triangular filters with peaks equally spaced on the mel scale."""

    weights: np.ndarray
    f_min: float
    f_max: float

    def __post_init__(self):
        object.__setattr__(self, "weights", _readonly(self.weights))

    @property
    def n_mels(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class ChromaMatrix:
    """Per-frame energy folded onto the 12 pitch classes, C first."""

    values: np.ndarray

    def __post_init__(self):
        v = _readonly(self.values)
        if v.ndim != 2 or v.shape[1] != 12:
            raise ShapeError("chroma must have 12 columns")
        object.__setattr__(self, "values", v)

    PITCH_CLASSES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft(clip: AudioClip, n_fft: int = 2048, hop_length: int = 512) -> Spectrogram:
    """Magnitude STFT with centered frames and reflect padding.

    Frame t covers padded samples [t*hop, t*hop + n_fft); there are
    1 + len(clip)//hop frames.
    """
    if n_fft < 32 or (n_fft & (n_fft - 1)) != 0:
        raise DataError("n_fft must be a power of two >= 32")
    if len(clip) < n_fft:
        raise InputTooShort(f"clip has {len(clip)} samples, need at least n_fft={n_fft}")
    pad = n_fft // 2
    x = np.pad(clip.samples, pad, mode="reflect")
    frames = np.lib.stride_tricks.sliding_window_view(x, n_fft)[::hop_length]
    mags = np.abs(np.fft.rfft(frames * hann_window(n_fft), axis=1))
    return Spectrogram(magnitudes=mags, n_fft=n_fft, hop_length=hop_length, sample_rate=clip.sample_rate)


def spectral_centroid(spec: Spectrogram) -> np.ndarray:
    """Magnitude-weighted mean frequency per frame; 0 for silent frames."""
    m = spec.magnitudes
    total = m.sum(axis=1)
    safe = np.where(total > 0, total, 1.0)
    centroid = (m * spec.bin_frequencies).sum(axis=1) / safe
    return np.where(total > 0, centroid, 0.0)


def spectral_rolloff(spec: Spectrogram, pct: float = 0.85) -> np.ndarray:
    """Frequency below which `pct` of each frame's magnitude mass lies."""
    if not 0.0 < pct <= 1.0:
        raise DataError("pct must be in (0, 1]")
    cum = np.cumsum(spec.magnitudes, axis=1)
    total = cum[:, -1]
    freqs = spec.bin_frequencies
    out = np.zeros(spec.n_frames)
    for t in range(spec.n_frames):
        if total[t] <= 0:
            continue
        k = int(np.searchsorted(cum[t], pct * total[t], side="left"))
        out[t] = freqs[min(k, spec.n_bins - 1)]
    return out


def spectral_bandwidth(spec: Spectrogram) -> np.ndarray:
    """Magnitude-weighted standard deviation around the centroid, per frame."""
    m = spec.magnitudes
    total = m.sum(axis=1)
    safe = np.where(total > 0, total, 1.0)
    centroid = spectral_centroid(spec)
    dev = spec.bin_frequencies[None, :] - centroid[:, None]
    var = (m * dev**2).sum(axis=1) / safe
    return np.where(total > 0, np.sqrt(var), 0.0)


def zero_crossing_rate(frames: FrameSeries) -> np.ndarray:
    """Fraction of adjacent sample pairs whose signs differ (zero counts as +)."""
    signs = frames.frames >= 0.0
    changes = (signs[:, 1:] != signs[:, :-1]).sum(axis=1)
    return changes / (frames.frame_length - 1)


def rms_energy(frames: FrameSeries) -> np.ndarray:
    """Root-mean-square amplitude per frame."""
    return np.sqrt(np.mean(frames.frames**2, axis=1))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    n_mels: int, n_fft: int, sample_rate: int, f_min: float = 0.0, f_max: float | None = None
) -> MelFilterbank:
    """Triangular mel filterbank; adjacent filters overlap at each other's peaks."""
    if f_max is None:
        f_max = sample_rate / 2.0
    if n_mels < 1:
        raise DataError("n_mels must be >= 1")
    if not 0.0 <= f_min < f_max <= sample_rate / 2.0:
        raise DataError("need 0 <= f_min < f_max <= sample_rate/2")
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    lower = edges[:-2, None]
    peak = edges[1:-1, None]
    upper = edges[2:, None]
    rising = (freqs[None, :] - lower) / (peak - lower)
    falling = (upper - freqs[None, :]) / (upper - peak)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    return MelFilterbank(weights=weights, f_min=float(f_min), f_max=float(f_max))


def dct_ii_matrix(n_out: int, n_in: int) -> np.ndarray:
    """Orthonormal DCT-II basis, rows are coefficients."""
    n = np.arange(n_in)
    k = np.arange(n_out)[:, None]
    basis = np.cos(np.pi * k * (2 * n + 1) / (2.0 * n_in)) * np.sqrt(2.0 / n_in)
    basis[0] /= np.sqrt(2.0)
    return basis


def mfcc(spec: Spectrogram, fb: MelFilterbank, n_mfcc: int = 20) -> np.ndarray:
    """Mel-frequency cepstral coefficients, n_frames x n_mfcc."""
    if n_mfcc > fb.n_mels:
        raise ShapeError("n_mfcc must not exceed n_mels")
    energies = spec.magnitudes @ fb.weights.T
    log_mel = np.log(energies + LOG_FLOOR)
    return log_mel @ dct_ii_matrix(n_mfcc, fb.n_mels).T


def chroma_stft(spec: Spectrogram, tuning_ref: float = TUNING_A4) -> ChromaMatrix:
    """Fold bin magnitudes onto pitch classes by nearest equal-tempered semitone.

    Bins below C1 (32.7 Hz) are ignored; the reference pitch lands on class A.
    """
    if tuning_ref <= 0:
        raise DataError("tuning_ref must be positive")
    freqs = spec.bin_frequencies
    audible = freqs >= CHROMA_F_MIN
    semitones = np.zeros(spec.n_bins, dtype=np.int64)
    semitones[audible] = np.round(12.0 * np.log2(freqs[audible] / tuning_ref)).astype(np.int64)
    pitch_class = (semitones + 9) % 12
    fold = np.zeros((spec.n_bins, 12))
    fold[np.arange(spec.n_bins)[audible], pitch_class[audible]] = 1.0
    return ChromaMatrix(values=spec.magnitudes @ fold)
