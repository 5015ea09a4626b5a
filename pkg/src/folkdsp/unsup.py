"""Unsupervised track: k-means, silhouette, PCA, and exact t-SNE.

All three algorithms are deterministic for a fixed seed; k-means restarts and
the t-SNE initialization draw from named substreams so results are independent
of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, InvalidClustering, ShapeError


# ---------------------------------------------------------------------------
# k-means


@dataclass(frozen=True)
class ClusterResult:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iterations: int
    inertia_history: tuple  # recorded after each assignment step


def _kmeans_single(X: np.ndarray, k: int, rng: np.random.Generator, max_iter: int) -> ClusterResult:
    n = X.shape[0]
    # distance-weighted (k-means++ style) seeding
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            centroids[j] = X[rng.choice(n, p=probs)]
        else:
            centroids[j] = X[rng.integers(n)]
        d2 = np.minimum(d2, ((X - centroids[j]) ** 2).sum(axis=1))

    prev = None
    history = []
    assign = np.zeros(n, dtype=np.int64)
    for iteration in range(1, max_iter + 1):
        dists = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(dists, axis=1)
        # re-seed empty clusters to the point farthest from its centroid
        for cluster in range(k):
            if not np.any(assign == cluster):
                point_d = dists[np.arange(n), assign]
                far = int(np.argmax(point_d))
                centroids[cluster] = X[far]
                dists[:, cluster] = ((X - centroids[cluster]) ** 2).sum(axis=1)
                assign = np.argmin(dists, axis=1)
        inertia = float(dists[np.arange(n), assign].sum())
        history.append(inertia)
        if prev is not None and np.array_equal(assign, prev):
            return ClusterResult(assign, centroids.copy(), inertia, iteration, tuple(history))
        prev = assign
        for cluster in range(k):
            centroids[cluster] = X[assign == cluster].mean(axis=0)
    dists = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assign = np.argmin(dists, axis=1)
    inertia = float(dists[np.arange(n), assign].sum())
    history.append(inertia)
    return ClusterResult(assign, centroids.copy(), inertia, max_iter, tuple(history))


def kmeans(X, k: int, seed: int = 0, max_iter: int = 300, n_restarts: int = 10) -> ClusterResult:
    """Lloyd's algorithm, best of `n_restarts` seeded restarts by inertia."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError("X must be 2-D")
    if not np.all(np.isfinite(X)):
        raise DataError("X must be finite")
    if k < 1 or k > X.shape[0]:
        raise ShapeError(f"k={k} must be in [1, n_rows={X.shape[0]}]")
    best = None
    for restart in range(n_restarts):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(restart,)))
        result = _kmeans_single(X, k, rng, max_iter)
        if best is None or result.inertia < best.inertia:
            best = result
    return best


def silhouette(X, assignments) -> float:
    """Mean silhouette coefficient with brute-force pairwise distances."""
    X = np.asarray(X, dtype=np.float64)
    assign = np.asarray(assignments)
    clusters = sorted(set(assign.tolist()))
    if len(clusters) < 2:
        raise InvalidClustering("silhouette needs at least 2 clusters")
    n = X.shape[0]
    dist = np.sqrt(np.maximum(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2), 0.0))
    sums = np.stack([dist[:, assign == c].sum(axis=1) for c in clusters], axis=1)
    counts = np.array([(assign == c).sum() for c in clusters])

    scores = np.zeros(n)
    own = np.array([clusters.index(a) for a in assign.tolist()])
    for i in range(n):
        c = own[i]
        if counts[c] == 1:
            continue  # singleton: s = 0
        a = sums[i, c] / (counts[c] - 1)
        others = [sums[i, j] / counts[j] for j in range(len(clusters)) if j != c]
        b = min(others)
        denom = max(a, b)
        scores[i] = (b - a) / denom if denom > 0 else 0.0
    return float(scores.mean())


@dataclass(frozen=True)
class ChooseKRow:
    k: int
    inertia: float
    silhouette: float


def choose_k(X, k_range, seed: int = 0) -> list:
    """k-means + silhouette for each k; every k reuses the same base seed."""
    X = np.asarray(X, dtype=np.float64)
    rows = []
    for k in k_range:
        if not 2 <= k <= X.shape[0]:
            raise ShapeError(f"k={k} outside [2, n_rows]")
        result = kmeans(X, int(k), seed=seed)
        rows.append(ChooseKRow(k=int(k), inertia=result.inertia, silhouette=silhouette(X, result.assignments)))
    return rows


# ---------------------------------------------------------------------------
# PCA


@dataclass(frozen=True)
class PCAModel:
    mean: np.ndarray
    components: np.ndarray  # n_components x d, orthonormal rows
    explained_variance: np.ndarray
    cumulative_variance_ratio: np.ndarray


def _eigendecompose(X: np.ndarray):
    n = X.shape[0]
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    components = evecs[:, order].T
    # sign convention: the largest-magnitude entry of each component is positive
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return mean, components, evals


def pca_fit(X, n_components: int) -> PCAModel:
    """Leading principal components of the sample covariance."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ShapeError("PCA needs a 2-D matrix with at least 2 rows")
    limit = min(X.shape[0] - 1, X.shape[1])
    if not 1 <= n_components <= limit:
        raise ShapeError(f"n_components must be in [1, {limit}]")
    mean, components, evals = _eigendecompose(X)
    total = evals.sum()
    if total <= 0:
        raise DataError("data has zero total variance")
    return PCAModel(
        mean=mean,
        components=components[:n_components],
        explained_variance=evals[:n_components],
        cumulative_variance_ratio=np.cumsum(evals[:n_components]) / total,
    )


def pca_transform(model: PCAModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.mean.shape[0]:
        raise ShapeError(f"expected {model.mean.shape[0]} columns, got {X.shape[1]}")
    return (X - model.mean) @ model.components.T


def pca_reconstruct(model: PCAModel, Z) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if Z.shape[1] != model.components.shape[0]:
        raise ShapeError("component count mismatch")
    return Z @ model.components + model.mean


def cumulative_variance(X) -> np.ndarray:
    """Full cumulative explained-variance ratio curve over all d components."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ShapeError("need a 2-D matrix with at least 2 rows")
    _, _, evals = _eigendecompose(X)
    total = evals.sum()
    if total <= 0:
        raise DataError("data has zero total variance")
    return np.cumsum(evals) / total


# ---------------------------------------------------------------------------
# t-SNE


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    minkowski_p: float = 2.0
    iterations: int = 1000
    learning_rate: float = 200.0
    seed: int = 0
    record_every: int = 50


@dataclass(frozen=True)
class TsneEmbedding:
    points: np.ndarray
    kl_divergence_trace: tuple
    config: TsneConfig


_EXAGGERATION = 12.0
_EXAGGERATION_ITERS = 250
_MOMENTUM_EARLY = 0.5
_MOMENTUM_LATE = 0.8
_ENTROPY_TOL = 1e-5
_MAX_BISECTIONS = 50
_EPS = 1e-12


def minkowski_distances(X, p: float = 2.0) -> np.ndarray:
    """Pairwise (sum |xi-yi|^p)^(1/p) distances."""
    if p < 1:
        raise ConfigError("minkowski_p must be >= 1")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    diff = np.abs(X[:, None, :] - X[None, :, :])
    return (diff**p).sum(axis=2) ** (1.0 / p)


def _row_affinity(s: np.ndarray, beta: float):
    """Probabilities and Shannon entropy (nats) for one row at precision beta."""
    shifted = s - s.min()
    w = np.exp(-beta * shifted)
    total = w.sum()
    if total <= 0:
        p = np.full_like(s, 1.0 / len(s))
        return p, np.log(len(s))
    p = w / total
    entropy = np.log(total) + beta * float((shifted * p).sum())
    return p, entropy


def conditional_affinities(squared_distances: np.ndarray, perplexity: float):
    """Per-point Gaussian affinities with bandwidths bisected to the target perplexity.

    Returns (P_conditional with zero diagonal, per-point betas). Entropy is
    matched to log(perplexity) within 1e-5 nats or 50 bisection steps.
    """
    n = squared_distances.shape[0]
    target = np.log(perplexity)
    P = np.zeros((n, n))
    betas = np.ones(n)
    idx = np.arange(n)
    for i in range(n):
        s = squared_distances[i, idx != i]
        beta, beta_min, beta_max = 1.0, 0.0, np.inf
        p, entropy = _row_affinity(s, beta)
        for _ in range(_MAX_BISECTIONS):
            if abs(entropy - target) <= _ENTROPY_TOL:
                break
            if entropy > target:  # too flat: raise precision
                beta_min = beta
                beta = beta * 2.0 if np.isinf(beta_max) else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = (beta + beta_min) / 2.0
            p, entropy = _row_affinity(s, beta)
        P[i, idx != i] = p
        betas[i] = beta
    return P, betas


def joint_affinities(X, perplexity: float, minkowski_p: float = 2.0) -> np.ndarray:
    """Symmetrized, normalized high-dimensional affinities."""
    D = minkowski_distances(X, minkowski_p)
    P_cond, _ = conditional_affinities(D**2, perplexity)
    n = X.shape[0]
    return (P_cond + P_cond.T) / (2.0 * n)


def _kl(P: np.ndarray, Q: np.ndarray) -> float:
    P = np.maximum(P, _EPS)
    Q = np.maximum(Q, _EPS)
    mask = ~np.eye(P.shape[0], dtype=bool)
    return float((P[mask] * np.log(P[mask] / Q[mask])).sum())


def tsne(X, config: TsneConfig = TsneConfig()) -> TsneEmbedding:
    """Exact t-SNE to 2-D with early exaggeration and momentum gradient descent.

    The KL trace is recorded every `record_every` iterations against the true
    (un-exaggerated) affinities, so the trace is a proper divergence even
    during the exaggeration phase.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if not np.all(np.isfinite(X)):
        raise DataError("X must be finite")
    n = X.shape[0]
    if config.perplexity <= 0 or config.perplexity >= (n - 1) / 3.0:
        raise ConfigError(
            f"perplexity {config.perplexity} infeasible for {n} rows; need 0 < perplexity < (n-1)/3"
        )
    P = joint_affinities(X, config.perplexity, config.minkowski_p)

    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    update = np.zeros_like(Y)
    trace = []

    for iteration in range(1, config.iterations + 1):
        exaggerate = iteration <= _EXAGGERATION_ITERS
        P_use = P * _EXAGGERATION if exaggerate else P

        diff = Y[:, None, :] - Y[None, :, :]
        w = 1.0 / (1.0 + (diff**2).sum(axis=2))
        np.fill_diagonal(w, 0.0)
        Q = w / max(w.sum(), _EPS)

        pqw = (P_use - Q) * w
        grad = 4.0 * (np.diag(pqw.sum(axis=1)) - pqw) @ Y

        momentum = _MOMENTUM_EARLY if iteration <= _EXAGGERATION_ITERS else _MOMENTUM_LATE
        update = momentum * update - config.learning_rate * grad
        Y = Y + update
        Y = Y - Y.mean(axis=0)

        if iteration % config.record_every == 0 or iteration == config.iterations:
            trace.append(_kl(P, Q))

    if not all(np.isfinite(v) for v in trace) or not np.all(np.isfinite(Y)):
        raise DataError("t-SNE diverged to non-finite values; lower the learning rate")
    return TsneEmbedding(points=Y, kl_divergence_trace=tuple(trace), config=config)
