import numpy as np
import pytest

from folkdsp import features, synth
from folkdsp.errors import ConfigError
from folkdsp.features import GENRES


class TestCorpus:
    def test_layout_and_count(self, tmp_path):
        written = synth.synth_corpus(tmp_path, per_class=2, seed=0, duration=0.5)
        assert len(written) == 12
        assert sorted(p.name for p in tmp_path.iterdir()) == sorted(GENRES)
        for genre in GENRES:
            wavs = list((tmp_path / genre).glob("*.wav"))
            assert len(wavs) == 2

    def test_byte_identical_for_same_seed(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        synth.synth_corpus(a, per_class=2, seed=3, duration=0.5)
        synth.synth_corpus(b, per_class=2, seed=3, duration=0.5)
        for genre in GENRES:
            for wav_a in sorted((a / genre).glob("*.wav")):
                wav_b = b / genre / wav_a.name
                assert wav_a.read_bytes() == wav_b.read_bytes()

    def test_different_seeds_differ(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        synth.synth_corpus(a, per_class=1, seed=0, duration=0.5)
        synth.synth_corpus(b, per_class=1, seed=1, duration=0.5)
        pairs = zip(sorted(a.rglob("*.wav")), sorted(b.rglob("*.wav")))
        assert any(x.read_bytes() != y.read_bytes() for x, y in pairs)

    def test_per_class_must_be_positive(self, tmp_path):
        with pytest.raises(ConfigError):
            synth.synth_corpus(tmp_path, per_class=0, seed=0)


class TestAcoustics:
    def test_centroids_ordered_by_class_band(self):
        lows, highs = [], []
        for file_index in range(3):
            rng0 = synth._file_rng(0, 0, file_index)
            rng5 = synth._file_rng(0, 5, file_index)
            low = features.extract_features(synth.generate_clip(0, rng0, duration=1.0))
            high = features.extract_features(synth.generate_clip(5, rng5, duration=1.0))
            idx = features.FEATURE_COLUMNS.index("centroid_mean")
            lows.append(low.values[idx])
            highs.append(high.values[idx])
        assert np.mean(lows) < np.mean(highs)

    def test_samples_in_range(self):
        clip = synth.generate_clip(3, synth._file_rng(0, 3, 0), duration=1.0)
        assert np.max(np.abs(clip.samples)) <= 1.0
        assert clip.sample_rate == 22050
