"""Pure-numpy reference implementations of the hot kernels."""

import numpy as np


def sinusoid_features(x, freqs, amps, shift):
    return amps * np.sin(np.multiply.outer(x + shift, freqs))


def row_khatri_rao(phi, z):
    # row n is vec(phi[n] z[n]^T), column-major: index r*M + m
    n = phi.shape[0]
    return (z[:, :, None] * phi[:, None, :]).reshape(n, -1)


def weighted_gram(G, c):
    return G.T @ (c[:, None] * G)


def cp_scores(projs, gamma):
    return np.prod(projs, axis=0) @ gamma


def product_gram(feats, feats_other):
    K = feats[0] @ feats_other[0].T
    for d in range(1, feats.shape[0]):
        K *= feats[d] @ feats_other[d].T
    return K
