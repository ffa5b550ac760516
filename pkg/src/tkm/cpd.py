"""CP-decomposed tensors: construction, normalization and exact algebra.

A rank-``R`` tensor is stored as ``D`` factor matrices (``M_d x R``) plus a
length-``R`` scaling vector ``gamma``::

    A = sum_r gamma_r  a_r^(1) (x) a_r^(2) (x) ... (x) a_r^(D)

Dense tensors use little-endian (first index fastest) vectorization, i.e.
``vec(A) = (A^(D) kr ... kr A^(1)) gamma`` with ``kr`` the Khatri-Rao
product. Dense reconstruction is meant for desk-scale checks only.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from . import kernels
from .errors import ArgumentError, SizeError

DENSE_CAP = 10_000_000


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class CpdTensor:
    factors: tuple
    gamma: np.ndarray

    def __post_init__(self):
        factors = tuple(_frozen(f) for f in self.factors)
        gamma = _frozen(self.gamma).reshape(-1)
        if not factors:
            raise ArgumentError("a CPD needs at least one factor matrix")
        for d, f in enumerate(factors):
            if f.ndim != 2:
                raise ArgumentError(f"factor {d} must be a matrix, got shape {f.shape}")
            if f.shape[0] < 1:
                raise ArgumentError(f"factor {d} has an empty mode")
            if f.shape[1] != gamma.shape[0]:
                raise ArgumentError(
                    f"factor {d} has {f.shape[1]} columns but gamma has length {gamma.shape[0]}"
                )
        if gamma.shape[0] < 1:
            raise ArgumentError("rank must be at least 1")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "gamma", gamma)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def rank(self) -> int:
        return self.gamma.shape[0]

    @property
    def ndim(self) -> int:
        return len(self.factors)

    @property
    def n_params(self) -> int:
        """Stored parameter count: ``sum_d M_d R + R``."""
        return sum(self.dims) * self.rank + self.rank

    def with_factor(self, d, factor, gamma=None):
        """Copy with factor ``d`` (and optionally gamma) replaced."""
        factors = list(self.factors)
        factors[d] = factor
        return CpdTensor(factors, self.gamma if gamma is None else gamma)

    def scaled_factor(self, d):
        """Factor ``d`` with gamma folded into its columns."""
        return self.factors[d] * self.gamma

    def to_dict(self):
        return {
            "dims": list(self.dims),
            "rank": self.rank,
            "gamma": [float(v) for v in self.gamma],
            "factors": [[float(v) for v in f.ravel(order="F")] for f in self.factors],
        }

    @classmethod
    def from_dict(cls, data):
        dims = [int(m) for m in data["dims"]]
        rank = int(data["rank"])
        if len(data["factors"]) != len(dims):
            raise ArgumentError("factor count does not match dims")
        factors = []
        for m, flat in zip(dims, data["factors"]):
            flat = np.asarray(flat, dtype=np.float64)
            if flat.size != m * rank:
                raise ArgumentError(f"factor has {flat.size} entries, expected {m * rank}")
            factors.append(flat.reshape((m, rank), order="F"))
        return cls(factors, np.asarray(data["gamma"], dtype=np.float64))


@dataclass(frozen=True, eq=False)
class DenseTensor:
    dims: tuple
    values: np.ndarray

    def __post_init__(self):
        dims = tuple(int(m) for m in self.dims)
        values = _frozen(self.values).reshape(-1)
        if values.shape[0] != prod(dims):
            raise ArgumentError(f"{values.shape[0]} values for dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "values", values)

    def as_array(self):
        """View with shape ``dims`` (Fortran order, so ``A[i1, i2, ...]`` indexes naturally)."""
        return self.values.reshape(self.dims, order="F")


def _check_dims(dims):
    dims = [int(m) for m in dims]
    if not dims or any(m < 1 for m in dims):
        raise ArgumentError(f"dims must be a nonempty list of positive integers, got {dims}")
    return dims


def new_random(dims, rank, seed) -> CpdTensor:
    """Standard-normal factors, then normalized so gamma carries the scale."""
    dims = _check_dims(dims)
    if int(rank) < 1:
        raise ArgumentError(f"rank must be >= 1, got {rank}")
    rng = np.random.default_rng(seed)
    factors = [rng.standard_normal((m, int(rank))) for m in dims]
    return normalize_factors(CpdTensor(factors, np.ones(int(rank))))


def zeros(dims, rank=1) -> CpdTensor:
    """The zero tensor: unit first-basis columns with gamma = 0."""
    dims = _check_dims(dims)
    factors = []
    for m in dims:
        f = np.zeros((m, rank))
        f[0, :] = 1.0
        factors.append(f)
    return CpdTensor(factors, np.zeros(rank))


def _check_same_dims(A, B):
    if A.dims != B.dims:
        raise ArgumentError(f"dimension mismatch: {A.dims} vs {B.dims}")


def cross_gram(A: CpdTensor, B: CpdTensor, skip=None):
    """Hadamard product of ``A^(d)T B^(d)`` over all modes except ``skip``."""
    out = np.ones((A.rank, B.rank))
    for d in range(A.ndim):
        if d != skip:
            out *= A.factors[d].T @ B.factors[d]
    return out


def inner_product(A: CpdTensor, B: CpdTensor) -> float:
    _check_same_dims(A, B)
    return float(A.gamma @ cross_gram(A, B) @ B.gamma)


def frobenius_norm(A: CpdTensor) -> float:
    return float(np.sqrt(max(inner_product(A, A), 0.0)))


def to_full(A: CpdTensor, cap=DENSE_CAP) -> DenseTensor:
    size = prod(A.dims)
    if size > cap:
        raise SizeError(f"dense tensor with {size} entries exceeds cap {cap}")
    # little-endian: earlier modes vary fastest, so each new mode goes in front
    acc = A.factors[0]
    for f in A.factors[1:]:
        acc = (f[:, None, :] * acc[None, :, :]).reshape(-1, A.rank)
    return DenseTensor(A.dims, acc @ A.gamma)


def normalize_factors(A: CpdTensor) -> CpdTensor:
    """Unit-norm factor columns with all scale moved into gamma.

    A component with a zero column in any mode gets ``gamma_r = 0`` and that
    column is replaced by the first unit vector.
    """
    gamma = A.gamma.copy()
    factors = []
    for f in A.factors:
        norms = np.linalg.norm(f, axis=0)
        zero = norms == 0.0
        safe = np.where(zero, 1.0, norms)
        f = f / safe
        if zero.any():
            f[:, zero] = 0.0
            f[0, zero] = 1.0
        gamma *= np.where(zero, 0.0, norms)
        factors.append(f)
    return CpdTensor(factors, gamma)


def evaluate(W: CpdTensor, local_features) -> float:
    """``<phi^(1) (x) ... (x) phi^(D), W>`` without forming the rank-one tensor."""
    if len(local_features) != W.ndim:
        raise ArgumentError(f"expected {W.ndim} feature vectors, got {len(local_features)}")
    acc = W.gamma.copy()
    for d, (phi, f) in enumerate(zip(local_features, W.factors)):
        phi = np.asarray(phi, dtype=np.float64)
        if phi.shape != (f.shape[0],):
            raise ArgumentError(
                f"feature vector {d} has shape {phi.shape}, expected ({f.shape[0]},)"
            )
        acc *= phi @ f
    return float(acc.sum())


def evaluate_batch(W: CpdTensor, feats) -> np.ndarray:
    """Scores for ``N`` samples; ``feats[d]`` is the ``N x M_d`` feature block of mode ``d``."""
    if len(feats) != W.ndim:
        raise ArgumentError(f"expected {W.ndim} feature blocks, got {len(feats)}")
    projs = np.stack([np.asarray(F) @ f for F, f in zip(feats, W.factors)])
    return kernels.cp_scores(projs, W.gamma)
