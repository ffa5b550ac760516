import numpy as np
import pytest

from tkm import cpd
from tkm import dataeval as de
from tkm.errors import ArgumentError, SizeError
from tkm.featmap import SYNTH_SIGMA, FeatureMapConfig
from tkm.oracle import fit_dense_primal, fit_dual, kron_features, predict_dense
from tkm.solver import TrainConfig, fit_tkrr, regularized_objective, scores

from conftest import dense_outer


def test_kron_features_little_endian(rng):
    fm = FeatureMapConfig(M=3, U=1.0, sigma=0.5, D=3)
    X = rng.uniform(-1, 1, (4, 3))
    from tkm.featmap import map_features

    feats = map_features(X, fm)
    K = kron_features(X, fm)
    for n in range(4):
        np.testing.assert_allclose(K[n], dense_outer([feats[d][n] for d in range(3)]), rtol=1e-14)


def test_primal_dual_agree(rng):
    fm = FeatureMapConfig(M=5, U=1.5, sigma=0.5, D=2)
    X = rng.uniform(-1, 1, (40, 2))
    y = np.where(X[:, 0] * X[:, 1] > 0, 1.0, -1.0)
    c = de.sample_weights(y)
    W = fit_dense_primal(X, y, c, 1e-3, fm)
    dual = fit_dual(X, y, c, 1e-3, fm)
    Xt = rng.uniform(-1, 1, (25, 2))
    p, q = predict_dense(W, Xt, fm), dual.predict(Xt)
    np.testing.assert_allclose(p, q, rtol=1e-7, atol=1e-9 * np.abs(p).max())


def test_dual_identity_kernel_closed_form():
    X = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0], [5.0, 5.0]])
    y = np.array([1.0, -1.0, -1.0, -1.0])
    c = de.sample_weights(y)
    lam = 0.1
    model = fit_dual(X, y, c, lam, ("rbf", 0.05))
    expected = y / (1.0 + 4 * lam / c)
    np.testing.assert_allclose(model.alphas, expected, rtol=1e-12)
    assert model.n_params == 4 * 2 + 4


def test_dual_rejects():
    X, y = np.zeros((2, 1)), np.array([1.0, -1.0])
    with pytest.raises(ArgumentError):
        fit_dual(X, y, None, 0.1, ("poly", 2))
    with pytest.raises(ArgumentError):
        fit_dual(X, y, np.array([1.0, 0.0]), 0.1, ("rbf", 1.0))


def test_primal_cap():
    fm = FeatureMapConfig(M=20, U=1.0, sigma=0.5, D=4)
    with pytest.raises(SizeError):
        fit_dense_primal(np.zeros((2, 4)), np.array([1.0, -1.0]), None, 0.1, fm)


def test_cpd_reaches_dense_optimum(rng):
    fm = FeatureMapConfig(M=6, U=1.5, sigma=0.5, D=2)
    X = rng.uniform(-1, 1, (80, 2))
    y = np.where(np.sin(2 * X[:, 0]) > X[:, 1], 1.0, -1.0)
    c = de.sample_weights(y)
    lam = 1e-3
    W = fit_dense_primal(X, y, c, lam, fm)
    r = predict_dense(W, X, fm) - y
    dense_obj = np.mean(c * r * r) + lam * W.values @ W.values
    model = fit_tkrr(X, y, TrainConfig(rank=6, lam=lam, n_max=400, seed=0), fm)
    obj = regularized_objective(model, X, y, lam)
    assert dense_obj <= obj * (1 + 1e-9)
    assert obj <= 1.01 * dense_obj


@pytest.mark.slow
def test_cpd_full_rank_three_modes(rng):
    fm = FeatureMapConfig(M=6, U=1.5, sigma=0.5, D=3)
    X = rng.uniform(-1, 1, (150, 3))
    y = np.where(X.sum(axis=1) + 0.5 * np.sin(4 * X[:, 0]) > 0, 1.0, -1.0)
    c = de.sample_weights(y)
    lam = 1e-3
    W = fit_dense_primal(X, y, c, lam, fm)
    r = predict_dense(W, X, fm) - y
    dense_obj = np.mean(c * r * r) + lam * W.values @ W.values
    model = fit_tkrr(X, y, TrainConfig(rank=36, lam=lam, n_max=300, seed=0), fm)
    obj = regularized_objective(model, X, y, lam)
    assert obj <= 1.01 * dense_obj


def test_auroc_close_to_exact_kernel():
    fm = FeatureMapConfig(M=14, U=1.75, sigma=SYNTH_SIGMA, D=2)
    train = de.gen_synthetic(de.preset("source", seed=0))
    test = de.gen_synthetic(de.preset("source", seed=1))
    c = de.sample_weights(train.y)
    model = fit_tkrr(train.X, train.y, TrainConfig(rank=4, lam=1e-3, n_max=40), fm)
    dual = fit_dual(train.X, train.y, c, 1e-3, ("rbf", SYNTH_SIGMA))
    auc_cpd = de.segment_roc(scores(model, test.X), test.y).auc
    auc_dual = de.segment_roc(dual.predict(test.X), test.y).auc
    assert abs(auc_cpd - auc_dual) <= 0.05


def test_normalized_cpd_matches_primal_predictions(rng):
    # a rank-one CPD evaluated through kron features equals the dense contraction
    fm = FeatureMapConfig(M=4, U=1.0, sigma=0.5, D=2)
    W = cpd.new_random(fm.weight_dims, 3, seed=9)
    X = rng.uniform(-1, 1, (6, 2))
    from tkm.solver import TkmModel

    np.testing.assert_allclose(
        predict_dense(cpd.to_full(W), X, fm), scores(TkmModel(W, fm), X), rtol=1e-12, atol=1e-14
    )
