"""Audio feature extraction and genre classification for six traditional
Colombian music genres, with supervised (random forest, MLP) and unsupervised
(k-means, PCA, t-SNE) tracks."""

__version__ = "0.1.0"

from .features import GENRES  # noqa: F401
