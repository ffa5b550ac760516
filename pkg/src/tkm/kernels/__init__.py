"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen at import time from the ``TKM_NUMBA`` environment
variable (``1`` to use numba, ``0`` to force numpy). When unset, numba is
used if it imports. :func:`set_backend` switches at runtime, which the
tests and the benchmark use to compare both paths.

All kernels take float64 arrays:

``sinusoid_features(x, freqs, amps, shift)``
    ``(N,)`` -> ``(N, M)`` with entries ``amps[j] * sin(freqs[j] * (x[i] + shift))``.
``row_khatri_rao(phi, z)``
    ``(N, M), (N, R)`` -> ``(N, M*R)``; row ``n`` is the column-major
    vectorization of ``outer(phi[n], z[n])``.
``weighted_gram(G, c)``
    ``G.T @ diag(c) @ G``.
``cp_scores(projs, gamma)``
    ``(D, N, R), (R,)`` -> ``(N,)``; ``sum_r gamma_r prod_d projs[d, n, r]``.
``product_gram(feats, feats_other)``
    ``(D, N, M), (D, N2, M)`` -> ``(N, N2)``; Hadamard product of the per-mode Gram matrices.
"""

import logging
import os

import numpy as np

from . import _numpy

log = logging.getLogger(__name__)

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

_impl = _numpy
BACKEND = "numpy"


def available_backends():
    return ["numpy"] + (["numba"] if _numba is not None else [])


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend name."""
    global _impl, BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown kernel backend {name!r}")
    if name == "numba" and _numba is None:
        raise ValueError("numba backend requested but numba is not importable")
    previous = BACKEND
    _impl = _numba if name == "numba" else _numpy
    BACKEND = name
    return previous


def _backend_from_env():
    flag = os.environ.get("TKM_NUMBA", "").strip().lower()
    if flag in ("0", "false", "no", "off"):
        return "numpy"
    if flag in ("1", "true", "yes", "on") and _numba is None:
        log.warning("TKM_NUMBA=%s but numba is unavailable; using numpy", flag)
    return "numba" if _numba is not None else "numpy"


set_backend(_backend_from_env())


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def sinusoid_features(x, freqs, amps, shift):
    return _impl.sinusoid_features(_f64(x), _f64(freqs), _f64(amps), float(shift))


def row_khatri_rao(phi, z):
    return _impl.row_khatri_rao(_f64(phi), _f64(z))


def weighted_gram(G, c):
    return _impl.weighted_gram(_f64(G), _f64(c))


def cp_scores(projs, gamma):
    return _impl.cp_scores(_f64(projs), _f64(gamma))


def product_gram(feats, feats_other=None):
    feats = _f64(feats)
    other = feats if feats_other is None else _f64(feats_other)
    return _impl.product_gram(feats, other)
