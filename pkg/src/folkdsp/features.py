"""Per-song feature vectors, datasets, standardization, and CSV persistence.

The feature vector has 26 entries in a fixed order: one frame-averaged value
for chroma, rms, centroid, bandwidth, rolloff and zero-crossing rate, then
the 20 frame-averaged MFCCs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import audio_io, spectral
from .errors import DataError, SchemaError, ShapeError

GENRES = ("Bambuco", "Carranga", "Cumbia", "Joropo", "Pasillo", "Vallenato")

N_MFCC = 20
FEATURE_COLUMNS = (
    "chroma_mean",
    "rms_mean",
    "centroid_mean",
    "bandwidth_mean",
    "rolloff_mean",
    "zcr_mean",
) + tuple(f"mfcc_{i}" for i in range(1, N_MFCC + 1))
N_FEATURES = len(FEATURE_COLUMNS)
CSV_HEADER = ("song_id", "label") + FEATURE_COLUMNS

# analysis defaults shared by every extractor run
N_FFT = 2048
HOP_LENGTH = 512
N_MELS = 128
ROLLOFF_PCT = 0.85


def _check_label(label: str) -> str:
    if label and label not in GENRES:
        raise DataError(f"unknown genre {label!r}; valid genres are {', '.join(GENRES)}")
    return label


@dataclass(frozen=True)
class FeatureVector:
    """A single song's 26 summary values."""

    values: np.ndarray
    song_id: str = ""
    label: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (N_FEATURES,):
            raise ShapeError(f"feature vector must have exactly {N_FEATURES} values")
        if not np.all(np.isfinite(v)):
            raise DataError("feature vector contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        _check_label(self.label)


@dataclass(frozen=True)
class Standardization:
    """Per-column mean and population std frozen from a training split."""

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray  # bool mask of zero-variance columns


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with labels and song ids; rows align across all three."""

    matrix: np.ndarray
    labels: tuple
    song_ids: tuple
    standardization: Standardization | None = None

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[1] != N_FEATURES:
            raise ShapeError(f"matrix must be n_songs x {N_FEATURES}")
        if m.shape[0] != len(self.labels) or m.shape[0] != len(self.song_ids):
            raise ShapeError("matrix rows, labels and song_ids must agree")
        if not np.all(np.isfinite(m)):
            raise DataError("dataset matrix contains non-finite values")
        for lab in self.labels:
            _check_label(lab)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "song_ids", tuple(self.song_ids))

    @property
    def n_songs(self) -> int:
        return self.matrix.shape[0]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            matrix=self.matrix[idx],
            labels=tuple(self.labels[i] for i in idx),
            song_ids=tuple(self.song_ids[i] for i in idx),
            standardization=self.standardization,
        )


def extract_features(
    clip: audio_io.AudioClip,
    sample_rate: int = audio_io.ANALYSIS_RATE,
    n_fft: int = N_FFT,
    hop_length: int = HOP_LENGTH,
    n_mels: int = N_MELS,
    n_mfcc: int = N_MFCC,
    rolloff_pct: float = ROLLOFF_PCT,
) -> FeatureVector:
    """Resample to the canonical rate and average every descriptor over frames.

    Chroma frames are peak-normalized before averaging (over frames and the 12
    pitch classes) so the summary value is loudness-independent.
    """
    clip = audio_io.resample(clip, sample_rate)
    spec = spectral.stft(clip, n_fft=n_fft, hop_length=hop_length)
    frames = audio_io.frame(clip, frame_length=n_fft, hop_length=hop_length)
    fb = spectral.mel_filterbank(n_mels, n_fft, sample_rate)

    chroma = spectral.chroma_stft(spec).values
    peaks = chroma.max(axis=1, keepdims=True)
    chroma = chroma / np.where(peaks > 0, peaks, 1.0)

    values = np.concatenate(
        [
            [
                float(np.mean(chroma)),
                float(np.mean(spectral.rms_energy(frames))),
                float(np.mean(spectral.spectral_centroid(spec))),
                float(np.mean(spectral.spectral_bandwidth(spec))),
                float(np.mean(spectral.spectral_rolloff(spec, rolloff_pct))),
                float(np.mean(spectral.zero_crossing_rate(frames))),
            ],
            spectral.mfcc(spec, fb, n_mfcc).mean(axis=0),
        ]
    )
    return FeatureVector(values=values, song_id=clip.source_id, label="")


def dataset_from_vectors(vectors) -> Dataset:
    vectors = list(vectors)
    if not vectors:
        raise DataError("cannot build a dataset from zero feature vectors")
    return Dataset(
        matrix=np.stack([v.values for v in vectors]),
        labels=tuple(v.label for v in vectors),
        song_ids=tuple(v.song_id for v in vectors),
    )


def fit_standardization(matrix: np.ndarray) -> Standardization:
    """Column means and population stds; zero-variance columns are flagged."""
    if matrix.shape[0] < 2:
        raise ShapeError("standardization needs at least 2 rows")
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    constant = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    return Standardization(mean=mean, std=std, constant=constant)


def apply_standardization(matrix: np.ndarray, params: Standardization) -> np.ndarray:
    divisor = np.where(params.constant, 1.0, params.std)
    out = (matrix - params.mean) / divisor
    out[:, params.constant] = 0.0
    return out


def invert_standardization(matrix: np.ndarray, params: Standardization) -> np.ndarray:
    divisor = np.where(params.constant, 1.0, params.std)
    return matrix * divisor + params.mean


def standardize(ds: Dataset, params: Standardization | None = None) -> Dataset:
    """Z-score the dataset; pass `params` to reuse training-split statistics."""
    if params is None:
        params = fit_standardization(ds.matrix)
    return Dataset(
        matrix=apply_standardization(ds.matrix, params),
        labels=ds.labels,
        song_ids=ds.song_ids,
        standardization=params,
    )


def _format(x: float) -> str:
    return format(x, ".9g")


def save_features(ds: Dataset, path) -> None:
    """Write the feature table as UTF-8 CSV with 9-significant-digit values."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i in range(ds.n_songs):
            writer.writerow(
                [ds.song_ids[i], ds.labels[i]] + [_format(x) for x in ds.matrix[i]]
            )


def load_features(path) -> Dataset:
    """Read a feature table, validating header, labels, and finiteness."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise SchemaError("empty feature file") from None
        if header != CSV_HEADER:
            raise SchemaError(
                f"feature file header does not match the {N_FEATURES}-column schema: "
                f"got {len(header)} columns"
            )
        song_ids, labels, rows = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise SchemaError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            song_ids.append(row[0])
            labels.append(_check_label(row[1]))
            try:
                values = [float(x) for x in row[2:]]
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from None
            if not all(math.isfinite(v) for v in values):
                raise DataError(f"line {lineno}: non-finite feature value")
            rows.append(values)
    if not rows:
        raise DataError("feature file has a header but no rows")
    return Dataset(matrix=np.array(rows), labels=tuple(labels), song_ids=tuple(song_ids))
