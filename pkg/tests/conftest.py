import numpy as np
import pytest

from folkdsp import mlp
from folkdsp.audio_io import AudioClip


def sine_clip(freq=440.0, duration=1.0, sample_rate=22050, amplitude=0.5):
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    return AudioClip(amplitude * np.sin(2.0 * np.pi * freq * t), sample_rate)


def tone_noise_clip(seed=0, duration=1.5, sample_rate=22050, amplitude=0.4):
    """Broadband fixture: tone plus noise, so every mel band carries energy."""
    rng = np.random.default_rng(seed)
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    x = 0.6 * np.sin(2.0 * np.pi * 330.0 * t) + 0.4 * rng.normal(0.0, 1.0, t.shape)
    x = amplitude * x / np.max(np.abs(x))
    return AudioClip(x, sample_rate)


def gaussian_blobs(n_per_class, centers, sigma, seed=0):
    """Labeled isotropic blobs around the given center rows."""
    rng = np.random.default_rng(seed)
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    X = np.vstack([rng.normal(c, sigma, (n_per_class, centers.shape[1])) for c in centers])
    y = np.repeat(np.arange(len(centers)), n_per_class)
    return X, y


def six_blobs_26d(n_per_class=30, separation=5.0, sigma=1.0, seed=0):
    """Six blobs in 26-D; each class sits separation*sigma away from the origin
    along its own four coordinates, so every single-feature margin is 5 sigma."""
    centers = np.zeros((6, 26))
    for i in range(6):
        centers[i, 4 * i : 4 * (i + 1)] = separation * sigma
    return gaussian_blobs(n_per_class, centers, sigma, seed=seed)


def tight_six_blobs_2d(n_per_class=25, seed=0):
    """Six widely separated 2-D blobs (radius-20 ring, sigma 0.5)."""
    angles = np.linspace(0.0, 2.0 * np.pi, 6, endpoint=False)
    centers = 20.0 * np.column_stack([np.cos(angles), np.sin(angles)])
    return gaussian_blobs(n_per_class, centers, sigma=0.5, seed=seed)


def finite_difference_worst_error(model, X, y_idx, h=1e-5):
    """Max relative error between backprop and central-difference gradients."""
    grads_w, grads_b = mlp.gradients(model, X, y_idx)
    worst = 0.0
    for params, grads in ((model.weights, grads_w), (model.biases, grads_b)):
        for P, G in zip(params, grads):
            it = np.nditer(P, flags=["multi_index"])
            for _ in it:
                i = it.multi_index
                orig = P[i]
                P[i] = orig + h
                loss_plus = mlp.cross_entropy(model, X, y_idx)
                P[i] = orig - h
                loss_minus = mlp.cross_entropy(model, X, y_idx)
                P[i] = orig
                numeric = (loss_plus - loss_minus) / (2.0 * h)
                analytic = G[i]
                rel = abs(numeric - analytic) / max(abs(numeric), abs(analytic), 1e-8)
                worst = max(worst, rel)
    return worst


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Two files per genre, enough to exercise the CLI quickly."""
    from folkdsp.synth import synth_corpus

    root = tmp_path_factory.mktemp("corpus")
    synth_corpus(root, per_class=2, seed=7, duration=1.0)
    return root
