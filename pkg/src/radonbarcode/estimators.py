"""scikit-learn compatible wrappers.

``RadonBarcodeTransformer`` turns a stack of grayscale images into a binary
feature matrix (one barcode per row); ``HammingRetriever`` fits on such a
matrix and predicts the label of the nearest barcode, either by exact scan
or through bit-sampling LSH.  They compose in a ``Pipeline``::

    pipe = make_pipeline(RadonBarcodeTransformer(encoder="minmax"), HammingRetriever())
    pipe.fit(train_images, train_codes).predict(test_images)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .barcode import Encoder
from .exceptions import InvalidK
from .index import DEFAULT_TABLES, DEFAULT_TOP, BitSamplingTables, LshConfig
from .pipeline import EncodingSettings, encode_image
from .radon import bins_per_angle


def _iter_images(X):
    if isinstance(X, np.ndarray) and X.ndim == 2:
        raise ValueError("expected a sequence of 2-D images, got a single 2-D array")
    for img in X:
        yield img


class RadonBarcodeTransformer(TransformerMixin, BaseEstimator):
    """Encode images as Radon barcodes.

    Parameters
    ----------
    encoder : {"minmax", "threshold"}
    num_angles : int
        Number of projection angles in [0, 180).
    image_side : int
        Images are resized to ``image_side x image_side`` before projection.
    window : int
        Moving-average window for the MinMax encoder (odd).
    """

    def __init__(self, encoder="minmax", num_angles=8, image_side=32, window=5):
        self.encoder = encoder
        self.num_angles = num_angles
        self.image_side = image_side
        self.window = window

    def _settings(self) -> EncodingSettings:
        return EncodingSettings(Encoder(self.encoder), self.num_angles, self.image_side, self.window)

    def fit(self, X=None, y=None):
        settings = self._settings()
        self.n_features_out_ = settings.num_angles * bins_per_angle(settings.image_side)
        self.settings_ = settings
        return self

    def transform(self, X):
        check_is_fitted(self, "settings_")
        rows = [encode_image(img, self.settings_).bits for img in _iter_images(X)]
        if not rows:
            return np.zeros((0, self.n_features_out_), dtype=np.uint8)
        return np.stack(rows)


class HammingRetriever(ClassifierMixin, BaseEstimator):
    """Nearest-barcode retrieval under Hamming distance.

    Ties go to the earliest training row.  With ``search="lsh"`` the query is
    compared only against rows sharing a bucket with it; if there are none
    the exact scan answers instead.

    Parameters
    ----------
    search : {"linear", "lsh"}
    num_tables : int
    key_size : int or None
        Sampled bits per table; ``None`` means a third of the barcode length.
    seed : int
    top : int
        Candidates kept from the LSH union before picking the nearest.
    """

    def __init__(self, search="linear", num_tables=DEFAULT_TABLES, key_size=None, seed=0, top=DEFAULT_TOP):
        self.search = search
        self.num_tables = num_tables
        self.key_size = key_size
        self.seed = seed
        self.top = top

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.uint8)
        if X.size and X.max() > 1:
            raise ValueError("barcode matrix must contain only 0 and 1")
        if self.search not in ("linear", "lsh"):
            raise ValueError(f"search must be 'linear' or 'lsh', got {self.search!r}")
        self.n_features_in_ = X.shape[1]
        self.packed_ = np.packbits(X, axis=1)
        self.labels_ = np.arange(X.shape[0]) if y is None else np.asarray(y)
        if len(self.labels_) != X.shape[0]:
            raise ValueError("X and y have different lengths")
        self.tables_ = None
        if self.search == "lsh":
            cfg = LshConfig.for_length(X.shape[1], self.num_tables, self.seed)
            if self.key_size is not None:
                cfg = LshConfig(self.num_tables, self.key_size, self.seed)
            self.tables_ = BitSamplingTables(X, cfg)
        return self

    def _query(self, q: np.ndarray, k: int):
        packed = np.packbits(q)
        rows = None
        if self.tables_ is not None:
            rows = self.tables_.lookup(q)
            if rows.size == 0:
                rows = None
        if rows is None:
            rows = np.arange(self.packed_.shape[0])
            keep = k
        else:
            keep = min(k, self.top)
        dist = np.bitwise_count(self.packed_[rows] ^ packed).sum(axis=1, dtype=np.int64)
        order = np.lexsort((rows, dist))[:keep]
        return dist[order], rows[order]

    def kneighbors(self, X, n_neighbors=1, return_distance=True):
        """Row indices (and Hamming distances) of the nearest training barcodes.

        In LSH mode fewer than ``n_neighbors`` may come back; missing slots are
        filled with index -1 and distance -1.
        """
        check_is_fitted(self, "packed_")
        X = check_array(X, dtype=np.uint8)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} bits, expected {self.n_features_in_}")
        if not 1 <= n_neighbors <= self.packed_.shape[0]:
            raise InvalidK(f"n_neighbors must be in [1, {self.packed_.shape[0]}], got {n_neighbors}")
        dist = np.full((X.shape[0], n_neighbors), -1, dtype=np.int64)
        ind = np.full((X.shape[0], n_neighbors), -1, dtype=np.int64)
        for i, q in enumerate(X):
            d, r = self._query(q, n_neighbors)
            dist[i, : d.size] = d
            ind[i, : r.size] = r
        return (dist, ind) if return_distance else ind

    def predict(self, X):
        ind = self.kneighbors(X, 1, return_distance=False)
        return self.labels_[ind[:, 0]]
