"""Tensor kernel ridge regression with CPD weights, and its adaptive variant.

Both models are trained by block coordinate descent over the factor
matrices. For mode ``d`` the score is linear in that factor once ``gamma`` is
folded into it::

    f(x) = <g_d(x), vec(W_d diag(gamma))>,
    g_d(x) = vec(phi_d(x) z_d(x)^T),   z_d(x) = hadamard_{i != d} (phi_i(x)^T W_i)

and ``||W||_F^2 = <W~_d^T W~_d, H_d>`` with ``H_d = hadamard_{i != d} W_i^T W_i``.
Each block update therefore solves the normal equations::

    ((1/N) G^T C G + rho (H_d kron I)) w = (1/N) G^T C y  [+ mu vec(Q_d)]

with ``rho = lambda`` for plain TKRR and ``rho = mu`` for the adaptive model,
which replaces ``lambda ||W||^2`` by ``mu ||W - S||^2`` for a source tensor ``S``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import cpd, kernels
from .cpd import CpdTensor
from .dataeval import ScalingParams, sample_weights, scale_apply
from .errors import ArgumentError, FeatureMapMismatch, NumericalError
from .featmap import FeatureMapConfig, map_features

log = logging.getLogger(__name__)

JITTER = 1e-10
JITTER_RETRIES = 3
REFINE_STEPS = 3


@dataclass(frozen=True)
class TrainConfig:
    rank: int = 4
    lam: float = 1e-3
    mu: float = 1e-2
    n_max: int = 40
    init: str = "random"
    seed: int = 0
    class_weighting: bool = True
    loss_trace: bool = True
    tol: float | None = None

    def __post_init__(self):
        if self.rank < 1:
            raise ArgumentError(f"rank must be >= 1, got {self.rank}")
        if self.lam < 0 or self.mu < 0:
            raise ArgumentError("regularization parameters must be nonnegative")
        if self.n_max < 1:
            raise ArgumentError(f"n_max must be >= 1, got {self.n_max}")
        if self.init not in ("random", "source"):
            raise ArgumentError(f"init must be 'random' or 'source', got {self.init!r}")


@dataclass
class FitTrace:
    """Per-update history; entry 0 is the state before the first update."""

    loss: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    modes: list = field(default_factory=list)
    jitter_events: int = 0
    seconds: float = 0.0


@dataclass
class TkmModel:
    weights: CpdTensor
    featmap: FeatureMapConfig
    threshold: float = 0.0
    scaling: ScalingParams | None = None
    trace: FitTrace | None = None

    @property
    def n_params(self):
        return self.weights.n_params

    def transform(self, X):
        """Apply the stored input scaling (clamped); identity when none."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.scaling is None:
            return X
        X, _ = scale_apply(X, self.scaling)
        return X

    def to_dict(self):
        out = {
            "weights": self.weights.to_dict(),
            "featmap": self.featmap.to_dict(),
            "threshold": self.threshold,
            "scaling": None if self.scaling is None else self.scaling.to_dict(),
            "n_params": self.n_params,
        }
        if self.trace is not None:
            out["trace"] = list(self.trace.loss)
            out["objective_trace"] = list(self.trace.objective)
        return out

    @classmethod
    def from_dict(cls, data):
        trace = None
        if data.get("trace") is not None:
            trace = FitTrace(loss=list(data["trace"]), objective=list(data.get("objective_trace", [])))
        scaling = data.get("scaling")
        return cls(
            weights=CpdTensor.from_dict(data["weights"]),
            featmap=FeatureMapConfig.from_dict(data["featmap"]),
            threshold=float(data.get("threshold", 0.0)),
            scaling=None if scaling is None else ScalingParams.from_dict(scaling),
            trace=trace,
        )


def assemble_g(d, feats, W: CpdTensor):
    """``N x (M_d R)`` matrix whose rows are ``g_d(x_n)`` (gamma excluded)."""
    z = np.ones((feats[d].shape[0], W.rank))
    for i, (F, f) in enumerate(zip(feats, W.factors)):
        if i != d:
            z *= F @ f
    return kernels.row_khatri_rao(feats[d], z)


def assemble_H(d, W: CpdTensor):
    return cpd.cross_gram(W, W, skip=d)


def assemble_Q(d, W: CpdTensor, S: CpdTensor):
    """``M_d x R`` matrix with ``<vec(W_d diag(gamma)), vec(Q_d)> = <W, S>``."""
    if W.dims != S.dims:
        raise ArgumentError(f"dimension mismatch: {W.dims} vs {S.dims}")
    return S.scaled_factor(d) @ cpd.cross_gram(W, S, skip=d).T


def _normal_equations(G, y, c, H, rho, Q=None):
    n, p = G.shape
    m = p // H.shape[0]
    A = kernels.weighted_gram(G, c) / n + rho * np.kron(H, np.eye(m))
    b = G.T @ (c * y) / n
    if Q is not None:
        b = b + rho * Q.ravel(order="F")
    return A, b


def _spd_solve(A, b):
    """Cholesky solve with diagonal jitter, then minimum-norm least squares.

    Returns ``(x, jitter_events)``.
    """
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(A, lower=True), b), 0
    except np.linalg.LinAlgError:
        pass
    scale = JITTER * max(np.trace(A) / A.shape[0], np.finfo(float).tiny)
    for attempt in range(1, JITTER_RETRIES + 1):
        try:
            factor = scipy.linalg.cho_factor(A + scale * np.eye(A.shape[0]), lower=True)
            x = scipy.linalg.cho_solve(factor, b)
            # refine against the unjittered system so the jitter does not bias the minimizer
            for _ in range(REFINE_STEPS):
                x = x + scipy.linalg.cho_solve(factor, b - A @ x)
            log.debug("block solve needed jitter %.3g", scale)
            return x, attempt
        except np.linalg.LinAlgError:
            scale *= 10.0
    log.debug("block solve fell back to least squares")
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    if not np.isfinite(x).all():
        raise NumericalError("block update produced non-finite values")
    return x, JITTER_RETRIES + 1


def block_update(G, y, weights, H, rho, Q=None):
    """Exact minimizer of the mode-``d`` block objective, as an ``M x R`` matrix.

    ``(1/N) sum_n c_n (<g_n, w> - y_n)^2 + rho <W^T W, H> [- 2 rho <W, Q>]``
    """
    w, _ = _spd_solve(*_normal_equations(G, y, weights, H, rho, Q))
    return w.reshape((-1, H.shape[0]), order="F")


def block_objective(w, G, y, weights, H, rho, Q=None):
    """Value of the block objective at the scaled factor ``w`` (``M x R``)."""
    r = G @ w.ravel(order="F") - y
    val = np.mean(weights * r * r) + rho * np.sum((w.T @ w) * H)
    if Q is not None:
        val -= 2.0 * rho * np.sum(w * Q)
    return float(val)


def _objective(W, feats, y, c, rho, S=None, S_sq=None):
    scores = cpd.evaluate_batch(W, feats)
    loss = float(np.mean(c * (scores - y) ** 2))
    if S is None:
        reg = cpd.inner_product(W, W)
    else:
        reg = cpd.inner_product(W, W) - 2.0 * cpd.inner_product(W, S) + S_sq
    return loss, loss + rho * reg


def _check_labels(y, n):
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != n:
        raise ArgumentError(f"{n} samples but {y.shape[0]} labels")
    if not np.isin(y, (-1.0, 1.0)).all():
        raise ArgumentError("labels must be -1 or +1")
    return y


def _als(feats, y, c, W, rho, n_max, S=None, record=True, tol=None, normalize=True):
    """Shared block coordinate descent loop. ``S`` switches on the adaptive regularizer."""
    D = len(feats)
    S_sq = None if S is None else cpd.inner_product(S, S)
    trace = FitTrace()
    start = time.perf_counter()
    if record or tol is not None:
        loss, obj = _objective(W, feats, y, c, rho, S, S_sq)
        trace.loss.append(loss)
        trace.objective.append(obj)
        trace.modes.append(-1)
    for it in range(n_max):
        d = it % D
        G = assemble_g(d, feats, W)
        H = assemble_H(d, W)
        Q = None if S is None else assemble_Q(d, W, S)
        w, jitter = _spd_solve(*_normal_equations(G, y, c, H, rho, Q))
        trace.jitter_events += int(jitter > 0)
        W = W.with_factor(d, w.reshape((-1, W.rank), order="F"), np.ones(W.rank))
        if normalize:
            W = cpd.normalize_factors(W)
        if record or tol is not None:
            loss, obj = _objective(W, feats, y, c, rho, S, S_sq)
            trace.loss.append(loss)
            trace.objective.append(obj)
            trace.modes.append(d)
            if tol is not None and it >= D:
                prev = trace.objective[-1 - D]
                if abs(prev - obj) <= tol * max(abs(prev), np.finfo(float).tiny):
                    break
    trace.seconds = time.perf_counter() - start
    if trace.jitter_events:
        log.info("%d block solves needed jitter", trace.jitter_events)
    return W, trace


def _prepare(X, y, fm, scaling, class_weighting):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if scaling is not None:
        X, n_clamped = scale_apply(X, scaling)
        if n_clamped:
            log.info("clamped %d training values to the scaling interval", n_clamped)
    y = _check_labels(y, X.shape[0])
    if X.shape[0] == 0:
        raise ArgumentError("no training samples")
    feats = map_features(X, fm)
    return feats, y, sample_weights(y, class_weighting)


def fit_tkrr(X, y, cfg: TrainConfig, fm: FeatureMapConfig, scaling=None, init_weights=None,
             _normalize=True) -> TkmModel:
    """Class-weighted TKRR by block coordinate descent.

    ``X`` is given in raw units when ``scaling`` is supplied, otherwise it must
    already lie in ``[-U, U]``. ``init_weights`` overrides the random start.
    """
    feats, y, c = _prepare(X, y, fm, scaling, cfg.class_weighting)
    if init_weights is None:
        W0 = cpd.new_random(fm.weight_dims, cfg.rank, cfg.seed)
    else:
        if list(init_weights.dims) != fm.weight_dims:
            raise ArgumentError("initial weights do not match the feature map")
        W0 = cpd.normalize_factors(init_weights)
    W, trace = _als(feats, y, c, W0, cfg.lam, cfg.n_max, record=cfg.loss_trace, tol=cfg.tol,
                    normalize=_normalize)
    return TkmModel(W, fm, 0.0, scaling, trace if cfg.loss_trace else None)


def fit_adapt_tkrr(X, y, source: TkmModel, mu, cfg: TrainConfig, featmap=None,
                   _normalize=True) -> TkmModel:
    """Adapt a source model to target data with ``mu ||W - W_source||_F^2`` regularization.

    The feature map and input scaling are inherited from ``source``. With
    ``cfg.init == "source"`` the iterations start from the source weights,
    otherwise from a random CPD of rank ``cfg.rank``.
    """
    if featmap is not None and featmap != source.featmap:
        raise FeatureMapMismatch(
            f"target feature map {featmap.to_dict()} differs from source {source.featmap.to_dict()}"
        )
    if mu < 0:
        raise ArgumentError("mu must be nonnegative")
    fm = source.featmap
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != fm.D:
        raise FeatureMapMismatch(
            f"target data has {X.shape[1]} features, source feature map has D={fm.D}"
        )
    feats, y, c = _prepare(X, y, fm, source.scaling, cfg.class_weighting)
    S = cpd.normalize_factors(source.weights)
    W0 = S if cfg.init == "source" else cpd.new_random(fm.weight_dims, cfg.rank, cfg.seed)
    W, trace = _als(feats, y, c, W0, float(mu), cfg.n_max, S=S, record=cfg.loss_trace,
                    tol=cfg.tol, normalize=_normalize)
    return TkmModel(W, fm, source.threshold, source.scaling, trace if cfg.loss_trace else None)


def scores(model: TkmModel, X):
    X = model.transform(X)
    return cpd.evaluate_batch(model.weights, map_features(X, model.featmap))


def predict(model: TkmModel, X):
    """``(scores, labels)``; label is +1 iff score >= threshold."""
    s = scores(model, X)
    return s, np.where(s >= model.threshold, 1.0, -1.0)


def weighted_loss(model: TkmModel, X, y, weights=None):
    """``(1/N) sum_n c_n (f(x_n) - y_n)^2``; unit weights give the MSE."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    c = np.ones_like(y) if weights is None else np.asarray(weights, dtype=np.float64)
    r = scores(model, X) - y
    return float(np.mean(c * r * r))


def with_threshold(model: TkmModel, threshold) -> TkmModel:
    return replace(model, threshold=float(threshold))


def regularized_objective(model: TkmModel, X, y, rho, source: TkmModel | None = None,
                          class_weighting=True):
    """Full training objective: weighted data term plus ridge or source-distance term."""
    y = np.asarray(y, dtype=np.float64)
    c = sample_weights(y, class_weighting)
    loss = weighted_loss(model, X, y, c)
    W = model.weights
    if source is None:
        return loss + rho * cpd.inner_product(W, W)
    S = source.weights
    dist = cpd.inner_product(W, W) - 2 * cpd.inner_product(W, S) + cpd.inner_product(S, S)
    return loss + rho * dist
