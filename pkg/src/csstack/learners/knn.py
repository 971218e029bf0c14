import numpy as np

from .. import kernels
from .base import Scorer


class KNearest(Scorer):
    """Euclidean k-NN; the score is the weighted positive share of neighbours."""

    algorithm = "KNN"

    def __init__(self, X, y, w, k):
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64)
        self.w = np.asarray(w, dtype=np.float64)
        self.k = int(k)
        self.n_features = self.X.shape[1]

    @classmethod
    def fit(cls, X, y, w, params, seed):
        return cls(X, y, w, params["k"])

    def _raw(self, X):
        return kernels.knn_scores(self.X, self.y, self.w, X, self.k)

    def to_dict(self):
        return {"k": self.k, "X": self.X.tolist(), "y": self.y.tolist(), "w": self.w.tolist()}

    @classmethod
    def from_dict(cls, d, n_features):
        X = np.asarray(d["X"], dtype=np.float64).reshape(-1, n_features)
        return cls(X, d["y"], d["w"], d["k"])
