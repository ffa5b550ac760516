"""End-to-end synthetic transfer study.

Per seed ``s``: source data (seed ``2s``), target data (seed ``2s+1``), a
stratified 3-positive / 17-negative target training subset (seed ``s``) and
random CPD initializations (seed ``s``). The rest of the target set is the
test set. Trained models: source, target-only, and adapted models over a
``mu`` grid with both initializations.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import dataeval as de
from .featmap import SYNTH_SIGMA, FeatureMapConfig
from .solver import TrainConfig, fit_adapt_tkrr, fit_tkrr, predict

log = logging.getLogger(__name__)

DEFAULT_MU_GRID = (1e-6, 1e-4, 1e-2, 1.0)
INITS = ("source", "random")


@dataclass
class SynthStudyConfig:
    seeds: tuple = tuple(range(10))
    mu_grid: tuple = DEFAULT_MU_GRID
    M: int = 14
    U: float = 1.75
    sigma: float = SYNTH_SIGMA
    rank: int = 4
    lam: float = 1e-3
    n_max: int = 40
    subset_pos: int = 3
    subset_neg: int = 17
    lattice: int = 200

    @property
    def featmap(self):
        return FeatureMapConfig(self.M, self.U, self.sigma, 2)


def lattice_points(n=200, lo=-1.0, hi=1.0):
    g = np.linspace(lo, hi, n)
    x1, x2 = np.meshgrid(g, g, indexing="xy")
    return np.column_stack([x1.ravel(), x2.ravel()])


def updates_to_converge(loss, rel=0.01):
    """First update index whose loss is within ``rel`` (relative) of the final loss."""
    loss = np.asarray(loss)
    final = loss[-1]
    within = np.abs(loss - final) <= rel * abs(final)
    return int(np.argmax(within))


@dataclass
class SeedResult:
    seed: int
    f1: dict = field(default_factory=dict)
    models: dict = field(default_factory=dict)
    lattice_labels: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    n_source: int = 0
    seconds: float = 0.0

    def agreement(self, a, b):
        return float(np.mean(self.lattice_labels[a] == self.lattice_labels[b]))


def adapted_key(mu, init):
    return f"adapt_mu={mu:g}_init={init}"


def run_seed(seed, cfg: SynthStudyConfig) -> SeedResult:
    start = time.perf_counter()
    fm = cfg.featmap
    src = de.gen_synthetic(de.preset("source", seed=2 * seed))
    tgt = de.gen_synthetic(de.preset("target", seed=2 * seed + 1))
    train_idx = de.stratified_subset(tgt.y, cfg.subset_pos, cfg.subset_neg, seed)
    test_idx = np.setdiff1d(np.arange(len(tgt)), train_idx)
    Xt, yt = tgt.X[train_idx], tgt.y[train_idx]
    Xtest, ytest = tgt.X[test_idx], tgt.y[test_idx]
    lattice = lattice_points(cfg.lattice)

    base = TrainConfig(rank=cfg.rank, lam=cfg.lam, n_max=cfg.n_max, seed=seed)
    res = SeedResult(seed, n_source=len(src))
    res.models["source"] = fit_tkrr(src.X, src.y, base, fm)
    res.models["target_only"] = fit_tkrr(Xt, yt, base, fm)
    for mu in cfg.mu_grid:
        for init in INITS:
            acfg = TrainConfig(rank=cfg.rank, mu=mu, n_max=cfg.n_max, seed=seed, init=init)
            key = adapted_key(mu, init)
            res.models[key] = fit_adapt_tkrr(Xt, yt, res.models["source"], mu, acfg)
            res.traces[key] = list(res.models[key].trace.loss)
    for key, model in res.models.items():
        res.f1[key] = de.f1_score(ytest, predict(model, Xtest)[1])
        res.lattice_labels[key] = predict(model, lattice)[1]
    res.seconds = time.perf_counter() - start
    log.info("seed %d done in %.2fs", seed, res.seconds)
    return res


@dataclass
class StudyResult:
    config: SynthStudyConfig
    seeds: list

    def f1_median(self, key):
        return float(np.median([r.f1[key] for r in self.seeds]))

    def agreement_median(self, a, b):
        return float(np.median([r.agreement(a, b) for r in self.seeds]))

    def convergence_median(self, mu, init, rel=0.01):
        key = adapted_key(mu, init)
        return float(np.median([updates_to_converge(r.traces[key], rel) for r in self.seeds]))

    def summary(self):
        cfg = self.config
        out = {
            "seeds": list(cfg.seeds),
            "f1_median": {
                "source": self.f1_median("source"),
                "target_only": self.f1_median("target_only"),
            },
            "agreement_median": {},
            "convergence_updates_median": {},
            "sweep_length": 2,
        }
        for mu in cfg.mu_grid:
            for init in INITS:
                key = adapted_key(mu, init)
                out["f1_median"][key] = self.f1_median(key)
                out["agreement_median"][key] = {
                    "source": self.agreement_median(key, "source"),
                    "target_only": self.agreement_median(key, "target_only"),
                }
                out["convergence_updates_median"][key] = self.convergence_median(mu, init)
        return out


def run_synth_study(cfg: SynthStudyConfig | None = None) -> StudyResult:
    cfg = cfg or SynthStudyConfig()
    return StudyResult(cfg, [run_seed(s, cfg) for s in cfg.seeds])
