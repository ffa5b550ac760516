"""Deterministic sinusoidal feature map approximating the RBF kernel.

Each input dimension ``x`` in ``[-U, U]`` is mapped to ``M`` Laplacian
eigenfunctions on that interval, weighted by the RBF spectral density::

    phi_i(x) = sqrt(S(w_i) / U) * sin(w_i (x + U)),   w_i = pi i / (2U)

where ``S(w) = spectral_density(w / 2pi, sigma)`` is the density at angular
frequency ``w``. Summing ``phi_i(x) phi_i(y)`` over ``i`` approximates
``exp(-(x - y)^2 / (2 sigma^2))``; the full map is the outer product of the
per-dimension maps, so its Gram matrix is the Hadamard product of the
per-dimension Gram matrices.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ArgumentError, DomainError


@dataclass(frozen=True)
class FeatureMapConfig:
    M: int
    U: float
    sigma: float
    D: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ArgumentError(f"M must be a positive integer, got {self.M}")
        if not self.U > 0:
            raise ArgumentError(f"U must be positive, got {self.U}")
        if not self.sigma > 0:
            raise ArgumentError(f"sigma must be positive, got {self.sigma}")
        if int(self.D) != self.D or self.D < 1:
            raise ArgumentError(f"D must be a positive integer, got {self.D}")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "D", int(self.D))
        object.__setattr__(self, "U", float(self.U))
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def weight_dims(self):
        return [self.M] * self.D

    def frequencies(self):
        return np.pi * np.arange(1, self.M + 1) / (2.0 * self.U)

    def amplitudes(self):
        w = self.frequencies()
        return np.sqrt(spectral_density(w / (2.0 * np.pi), self.sigma) / self.U)

    def to_dict(self):
        return {"M": self.M, "U": self.U, "sigma": self.sigma, "D": self.D}

    @classmethod
    def from_dict(cls, data):
        return cls(M=data["M"], U=data["U"], sigma=data["sigma"], D=data["D"])


def sigma_from_rho(rho):
    """Lengthscale for a kernel written as ``exp(-rho ||x - y||^2)``."""
    if not rho > 0:
        raise ArgumentError(f"rho must be positive, got {rho}")
    return float(np.sqrt(1.0 / (2.0 * rho)))


# exp(-5 ||x - y||^2), the kernel of the classic Adapt-SVM synthetic benchmark
SYNTH_SIGMA = sigma_from_rho(5.0)


def spectral_density(z, sigma):
    """Fourier transform of ``exp(-t^2 / (2 sigma^2))`` at ordinary frequency ``z``."""
    if not sigma > 0:
        raise ArgumentError(f"sigma must be positive, got {sigma}")
    z = np.asarray(z, dtype=np.float64)
    out = np.sqrt(2.0 * np.pi * sigma**2) * np.exp(-2.0 * np.pi**2 * sigma**2 * z**2)
    return float(out) if out.ndim == 0 else out


def _check_domain(x, U, where=""):
    bad = np.flatnonzero(~(np.abs(x) <= U))
    if bad.size:
        i = int(bad[0])
        raise DomainError(f"value {x.flat[i]!r}{where} at position {i} lies outside [-{U}, {U}]")


def local_map(x, cfg: FeatureMapConfig):
    x = float(x)
    if not abs(x) <= cfg.U:
        raise DomainError(f"value {x!r} lies outside [-{cfg.U}, {cfg.U}]")
    return cfg.amplitudes() * np.sin(cfg.frequencies() * (x + cfg.U))


def local_features(column, cfg: FeatureMapConfig):
    """``N x M`` feature block for one input dimension."""
    column = np.asarray(column, dtype=np.float64).reshape(-1)
    _check_domain(column, cfg.U)
    return kernels.sinusoid_features(column, cfg.frequencies(), cfg.amplitudes(), cfg.U)


def map_features(X, cfg: FeatureMapConfig):
    """``D x N x M`` stack of per-dimension feature blocks."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != cfg.D:
        raise ArgumentError(f"data has {X.shape[1]} features, feature map expects {cfg.D}")
    bad = np.argwhere(~(np.abs(X) <= cfg.U))
    if bad.size:
        n, d = (int(v) for v in bad[0])
        raise DomainError(
            f"sample {n}, feature {d}: value {X[n, d]!r} lies outside [-{cfg.U}, {cfg.U}]"
        )
    freqs, amps = cfg.frequencies(), cfg.amplitudes()
    return np.stack(
        [kernels.sinusoid_features(X[:, d], freqs, amps, cfg.U) for d in range(cfg.D)]
    )


def feature_kernel_matrix(X, cfg: FeatureMapConfig, Y=None):
    feats = map_features(X, cfg)
    if Y is None:
        K = kernels.product_gram(feats)
        return 0.5 * (K + K.T)
    return kernels.product_gram(feats, map_features(Y, cfg))


def rbf_kernel_matrix(X, sigma, Y=None):
    if not sigma > 0:
        raise ArgumentError(f"sigma must be positive, got {sigma}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=np.float64))
    sq = ((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=-1)
    return np.exp(-sq / (2.0 * sigma**2))


@dataclass
class KernelGridReport:
    sigma: float
    M_values: list
    U_values: list
    rel_errors: np.ndarray
    notes: dict = field(default_factory=dict)

    def error_at(self, M, U):
        return float(self.rel_errors[self.M_values.index(M), self.U_values.index(U)])

    def rows(self):
        for i, M in enumerate(self.M_values):
            for j, U in enumerate(self.U_values):
                yield M, U, float(self.rel_errors[i, j])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["M", "U", "rel_error"])
        for M, U, err in self.rows():
            w.writerow([M, f"{U:.17g}", f"{err:.17g}"])
        return buf.getvalue()


def grid_search_map_params(sample, sigma, M_grid, U_grid) -> KernelGridReport:
    """Relative Frobenius error of ``K_Phi`` against ``K_RBF`` over an (M, U) grid."""
    sample = np.atleast_2d(np.asarray(sample, dtype=np.float64))
    M_grid = [int(m) for m in M_grid]
    U_grid = [float(u) for u in U_grid]
    if not M_grid or not U_grid:
        raise ArgumentError("M and U grids must be nonempty")
    xmax = float(np.abs(sample).max())
    for U in U_grid:
        if not U > xmax:
            raise DomainError(f"U={U} does not exceed the sample's max |x| = {xmax}")
    K_rbf = rbf_kernel_matrix(sample, sigma)
    ref = np.linalg.norm(K_rbf)
    errors = np.empty((len(M_grid), len(U_grid)))
    for i, M in enumerate(M_grid):
        for j, U in enumerate(U_grid):
            cfg = FeatureMapConfig(M=M, U=U, sigma=sigma, D=sample.shape[1])
            errors[i, j] = np.linalg.norm(feature_kernel_matrix(sample, cfg) - K_rbf) / ref
    return KernelGridReport(sigma, M_grid, U_grid, errors, notes={"max_abs_x": xmax})
