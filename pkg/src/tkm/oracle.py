"""Brute-force references for checking the CPD solver at desk scale.

``fit_dense_primal`` solves the class-weighted ridge problem over the full,
unconstrained weight tensor using explicit Kronecker features.
``fit_dual`` solves the same squared-loss problem in the dual, with either
the exact RBF kernel or the feature-map kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np
import scipy.linalg

from .cpd import DenseTensor
from .errors import ArgumentError, NumericalError, SizeError
from .featmap import FeatureMapConfig, feature_kernel_matrix, map_features, rbf_kernel_matrix

PRIMAL_CAP = 100_000
DUAL_CAP = 5000


def kron_features(X, fm: FeatureMapConfig):
    """``N x M^D`` matrix of little-endian vectorized rank-one feature tensors."""
    feats = map_features(X, fm)
    out = feats[0]
    for F in feats[1:]:
        out = (F[:, :, None] * out[:, None, :]).reshape(out.shape[0], -1)
    return out


def _weights(y, weights):
    return np.ones_like(y) if weights is None else np.asarray(weights, dtype=np.float64)


def fit_dense_primal(X, y, weights, lam, fm: FeatureMapConfig, cap=PRIMAL_CAP) -> DenseTensor:
    """Minimizer of ``(1/N) sum c_n (<Phi(x_n), W> - y_n)^2 + lam ||W||_F^2``.

    Solved through the SVD of ``diag(sqrt(c)) Phi``, so ``lam -> 0`` gives the
    minimum-norm least-squares solution.
    """
    size = prod(fm.weight_dims)
    if size > cap:
        raise SizeError(f"full weight tensor has {size} entries, cap is {cap}")
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    c = _weights(y, weights)
    if lam < 0:
        raise ArgumentError("lam must be nonnegative")
    n = y.size
    sq = np.sqrt(c)
    A = sq[:, None] * kron_features(X, fm)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > s.max(initial=0.0) * max(A.shape) * np.finfo(float).eps
    s, U, Vt = s[keep], U[:, keep], Vt[keep]
    w = Vt.T @ ((s / (s**2 + n * lam)) * (U.T @ (sq * y)))
    return DenseTensor(fm.weight_dims, w)


def predict_dense(W: DenseTensor, X, fm: FeatureMapConfig):
    return kron_features(X, fm) @ W.values


@dataclass
class DualKrrModel:
    alphas: np.ndarray
    train_X: np.ndarray
    kernel: str
    lam: float
    sigma: float | None = None
    featmap: FeatureMapConfig | None = None

    def kernel_matrix(self, X, Y=None):
        if self.kernel == "rbf":
            return rbf_kernel_matrix(X, self.sigma, Y)
        return feature_kernel_matrix(X, self.featmap, Y)

    def predict(self, X):
        return self.kernel_matrix(X, self.train_X) @ self.alphas

    @property
    def n_params(self):
        """Stored support vectors plus coefficients: ``N D + N``."""
        return self.train_X.size + self.alphas.size


def fit_dual(X, y, weights, lam, kernel) -> DualKrrModel:
    """Solve ``(K + N lam C^{-1}) alpha = y``.

    ``kernel`` is ``("rbf", sigma)`` or a :class:`FeatureMapConfig`.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n = y.size
    if n > DUAL_CAP:
        raise SizeError(f"dual solve limited to {DUAL_CAP} samples, got {n}")
    c = _weights(y, weights)
    if (c <= 0).any():
        raise ArgumentError("sample weights must be positive")
    if isinstance(kernel, FeatureMapConfig):
        model = DualKrrModel(np.empty(0), X, "featmap", lam, featmap=kernel)
    elif isinstance(kernel, tuple) and kernel[0] == "rbf":
        model = DualKrrModel(np.empty(0), X, "rbf", lam, sigma=float(kernel[1]))
    else:
        raise ArgumentError(f"unsupported kernel {kernel!r}")
    K = model.kernel_matrix(X)
    A = K + np.diag(n * lam / c)
    scale = max(np.trace(A) / n, np.finfo(float).tiny)
    for jitter in (0.0, 1e-12, 1e-10, 1e-8):
        try:
            factor = scipy.linalg.cho_factor(A + jitter * scale * np.eye(n), lower=True)
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise NumericalError("kernel system is not positive definite even with jitter")
    model.alphas = scipy.linalg.cho_solve(factor, y)
    return model
