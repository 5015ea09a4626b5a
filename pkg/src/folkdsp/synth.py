"""Synthetic six-class WAV corpus.

Stands in for the private 180-song corpus: each class occupies its own
fundamental-frequency band with its own harmonic count, tremolo rate, and
noise level, so classes are acoustically distinct and their spectral
centroids rise with the class index. The genre names are reused purely as
labels; the audio is not stylistically Colombian.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import ANALYSIS_RATE, AudioClip, save_wav
from .errors import ConfigError
from .features import GENRES


@dataclass(frozen=True)
class ClassTimbre:
    f0_low: float
    f0_high: float
    harmonics: int
    am_rate: float
    noise_level: float


# ordered by design frequency band, matching the alphabetical genre order
CLASS_TIMBRES = (
    ClassTimbre(100.0, 130.0, 10, 2.0, 0.003),
    ClassTimbre(185.0, 225.0, 8, 3.5, 0.006),
    ClassTimbre(300.0, 360.0, 7, 5.0, 0.010),
    ClassTimbre(480.0, 570.0, 5, 6.5, 0.016),
    ClassTimbre(760.0, 890.0, 4, 8.0, 0.025),
    ClassTimbre(1200.0, 1400.0, 3, 10.0, 0.040),
)


def _file_rng(seed: int, class_index: int, file_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(class_index, file_index)))


def generate_clip(
    class_index: int,
    rng: np.random.Generator,
    duration: float = 3.0,
    sample_rate: int = ANALYSIS_RATE,
) -> AudioClip:
    """One synthetic clip: harmonic tone with tremolo plus white noise."""
    timbre = CLASS_TIMBRES[class_index]
    t = np.arange(int(round(duration * sample_rate))) / sample_rate

    f0 = rng.uniform(timbre.f0_low, timbre.f0_high)
    n_harm = max(2, timbre.harmonics + int(rng.integers(-1, 2)))
    tone = np.zeros_like(t)
    for h in range(1, n_harm + 1):
        if h * f0 >= sample_rate / 2:
            break
        tone += np.sin(2.0 * np.pi * h * f0 * t + rng.uniform(0.0, 2.0 * np.pi)) / h
    tone /= np.max(np.abs(tone))

    am_rate = timbre.am_rate * rng.uniform(0.9, 1.1)
    depth = rng.uniform(0.3, 0.4)
    envelope = (1.0 + depth * np.sin(2.0 * np.pi * am_rate * t + rng.uniform(0.0, 2.0 * np.pi))) / (
        1.0 + depth
    )

    noise = rng.normal(0.0, 1.0, size=t.shape) * timbre.noise_level * rng.uniform(0.7, 1.3)
    signal = np.clip(0.7 * tone * envelope + noise, -0.999, 0.999)
    return AudioClip(samples=signal, sample_rate=sample_rate, source_id=f"synth/{GENRES[class_index]}")


def synth_corpus(
    out_dir,
    per_class: int,
    seed: int = 0,
    duration: float = 3.0,
    sample_rate: int = ANALYSIS_RATE,
) -> list:
    """Write per_class WAVs for each of the six classes in the ingest layout.

    Byte-identical for identical arguments: every file draws from its own
    (seed, class, file) substream.
    """
    if per_class < 1:
        raise ConfigError("per_class must be >= 1")
    out_dir = Path(out_dir)
    written = []
    for class_index, genre in enumerate(GENRES):
        genre_dir = out_dir / genre
        genre_dir.mkdir(parents=True, exist_ok=True)
        for file_index in range(per_class):
            clip = generate_clip(
                class_index,
                _file_rng(seed, class_index, file_index),
                duration=duration,
                sample_rate=sample_rate,
            )
            path = genre_dir / f"{genre.lower()}_{file_index:03d}.wav"
            save_wav(path, clip)
            written.append(path)
    return written
