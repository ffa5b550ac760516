"""Numba-compiled kernels. Same contracts as the numpy versions."""

import math
import os

import numba
import numpy as np
from numba import njit, prange

# the default search tries TBB first and warns on old TBB builds
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "omp"


@njit(cache=True)
def sinusoid_features(x, freqs, amps, shift):
    n = x.shape[0]
    m = freqs.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        xs = x[i] + shift
        for j in range(m):
            out[i, j] = amps[j] * math.sin(xs * freqs[j])
    return out


@njit(cache=True)
def row_khatri_rao(phi, z):
    n, m = phi.shape
    r = z.shape[1]
    out = np.empty((n, m * r))
    for i in range(n):
        for k in range(r):
            zk = z[i, k]
            base = k * m
            for j in range(m):
                out[i, base + j] = zk * phi[i, j]
    return out


@njit(cache=True)
def weighted_gram(G, c):
    # matmul-shaped, so hand it to BLAS through np.dot; only the scaling is a loop
    n, p = G.shape
    Gc = np.empty((n, p))
    for i in range(n):
        for a in range(p):
            Gc[i, a] = c[i] * G[i, a]
    return np.dot(G.T, Gc)


@njit(cache=True)
def cp_scores(projs, gamma):
    D, n, r = projs.shape
    prod = np.empty((n, r))
    for i in range(n):
        for k in range(r):
            prod[i, k] = gamma[k] * projs[0, i, k]
    for d in range(1, D):
        for i in range(n):
            for k in range(r):
                prod[i, k] *= projs[d, i, k]
    return prod.sum(axis=1)


@njit(cache=True, parallel=True)
def product_gram(feats, feats_other):
    D, n, m = feats.shape
    n2 = feats_other.shape[1]
    out = np.dot(feats[0], feats_other[0].T)
    for d in range(1, D):
        K = np.dot(feats[d], feats_other[d].T)
        for i in prange(n):
            for j in range(n2):
                out[i, j] *= K[i, j]
    return out
