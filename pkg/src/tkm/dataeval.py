"""Datasets, synthetic benchmark generation, class weighting and evaluation.

Segment-level evaluation (ROC, F1) works on per-sample scores; event-level
evaluation first turns per-segment labels into detections with a k-of-n
sliding-window rule and then scores them with any-overlap matching.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, GenerationError

SECONDS_PER_DAY = 86400.0

SOURCE_MEANS = ((-0.4, 0.5), (0.5, 0.7), (-0.1, -0.6))
TARGET_MEANS = ((-0.4, 0.3), (0.5, 0.3), (0.0, -0.65))
PRESETS = {"source": SOURCE_MEANS, "target": TARGET_MEANS}


class UndersampleWarning(UserWarning):
    pass


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    start_s: np.ndarray | None = None
    dur_s: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        self.y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if self.X.shape[0] != self.y.shape[0]:
            raise ArgumentError(f"{self.X.shape[0]} samples but {self.y.shape[0]} labels")
        if not np.isfinite(self.X).all():
            raise ArgumentError("inputs contain NaN or Inf")
        if not np.isin(self.y, (-1.0, 1.0)).all():
            raise ArgumentError("labels must be -1 or +1")
        if (self.start_s is None) != (self.dur_s is None):
            raise ArgumentError("segment start and duration must be given together")
        if self.start_s is not None:
            self.start_s = np.asarray(self.start_s, dtype=np.float64).reshape(-1)
            self.dur_s = np.asarray(self.dur_s, dtype=np.float64).reshape(-1)
            if self.start_s.shape != self.y.shape or self.dur_s.shape != self.y.shape:
                raise ArgumentError("segment timing must have one entry per sample")
            ends = self.start_s + self.dur_s
            if (self.dur_s < 0).any() or (self.start_s[1:] < ends[:-1]).any():
                raise ArgumentError("segments must be sorted and non-overlapping")

    def __len__(self):
        return self.y.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    @property
    def has_timing(self):
        return self.start_s is not None

    def subset(self, idx):
        idx = np.asarray(idx)
        timing = (None, None) if not self.has_timing else (self.start_s[idx], self.dur_s[idx])
        return LabeledDataset(self.X[idx], self.y[idx], *timing)

    def total_duration_s(self):
        if not self.has_timing:
            raise ArgumentError("dataset has no segment timing")
        return float(self.start_s[-1] + self.dur_s[-1] - self.start_s[0]) if len(self) else 0.0


@dataclass
class MixtureSpec:
    """Two-class 2-D benchmark: Gaussian-mixture positives, uniform negatives.

    Negatives are uniform on the ``box`` square, rejecting points closer than
    ``exclusion_radius * std`` to any component mean. Positives outside the
    box are redrawn so that every sample lies in the box.
    """

    means: tuple = SOURCE_MEANS
    std: float = 0.15
    n_pos: int = 100
    n_neg: int = 500
    exclusion_radius: float = 2.0
    box: tuple = (-1.0, 1.0)
    seed: int = 0
    max_attempts: int = 100_000

    def __post_init__(self):
        if self.n_pos < 0 or self.n_neg < 0:
            raise ArgumentError("sample counts must be nonnegative")
        if not self.std > 0:
            raise ArgumentError("component std must be positive")

    def in_exclusion_region(self, X):
        X = np.atleast_2d(X)
        means = np.asarray(self.means, dtype=np.float64)
        dist = np.linalg.norm(X[:, None, :] - means[None, :, :], axis=-1)
        return (dist < self.exclusion_radius * self.std).any(axis=1)


def preset(name, seed=0, **overrides) -> MixtureSpec:
    if name not in PRESETS:
        raise ArgumentError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return MixtureSpec(means=PRESETS[name], seed=seed, **overrides)


def _draw(rng, n, sampler, accept, max_attempts, what):
    out = np.empty((0, 2))
    attempts = 0
    while out.shape[0] < n:
        need = n - out.shape[0]
        attempts += need
        if attempts > max_attempts:
            raise GenerationError(f"could not draw {n} {what} samples in {max_attempts} attempts")
        cand = sampler(need)
        out = np.vstack([out, cand[accept(cand)]])
    return out


def gen_synthetic(spec: MixtureSpec) -> LabeledDataset:
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.box
    means = np.asarray(spec.means, dtype=np.float64)

    def positives(k):
        comp = rng.integers(len(means), size=k)
        return means[comp] + spec.std * rng.standard_normal((k, 2))

    def in_box(P):
        return ((P > lo) & (P < hi)).all(axis=1)

    def negatives(k):
        return rng.uniform(lo, hi, size=(k, 2))

    pos = _draw(rng, spec.n_pos, positives, in_box, spec.max_attempts, "positive")
    neg = _draw(
        rng, spec.n_neg, negatives, lambda P: ~spec.in_exclusion_region(P),
        spec.max_attempts, "negative",
    )
    X = np.vstack([pos, neg])
    y = np.concatenate([np.ones(spec.n_pos), -np.ones(spec.n_neg)])
    order = rng.permutation(len(y))
    return LabeledDataset(X[order], y[order])


def class_weights(y):
    """``(C+, C-) = (N / 2N+, N / 2N-)``."""
    y = np.asarray(y)
    n, n_pos = y.size, int((y > 0).sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ArgumentError(f"class weighting needs both classes (N+={n_pos}, N-={n_neg})")
    return n / (2.0 * n_pos), n / (2.0 * n_neg)


def sample_weights(y, class_weighting=True):
    y = np.asarray(y, dtype=np.float64)
    if not class_weighting:
        return np.ones_like(y)
    c_pos, c_neg = class_weights(y)
    return np.where(y > 0, c_pos, c_neg)


def undersample(ds: LabeledDataset, ratio, seed) -> LabeledDataset:
    """Keep all positives and ``ratio`` negatives per positive, drawn without replacement.

    ``ratio=math.inf`` disables undersampling. If there are too few negatives
    all of them are kept and an :class:`UndersampleWarning` is issued.
    """
    if math.isinf(ratio):
        return ds
    if ratio < 0:
        raise ArgumentError("ratio must be nonnegative")
    pos = np.flatnonzero(ds.y > 0)
    neg = np.flatnonzero(ds.y < 0)
    want = int(round(ratio * pos.size))
    if want > neg.size:
        warnings.warn(
            f"only {neg.size} negatives available, {want} requested", UndersampleWarning, stacklevel=2
        )
        return ds
    rng = np.random.default_rng(seed)
    keep = np.sort(np.concatenate([pos, rng.choice(neg, size=want, replace=False)]))
    return ds.subset(keep)


def stratified_subset(y, n_pos, n_neg, seed):
    """Indices of ``n_pos`` positives and ``n_neg`` negatives, sorted."""
    y = np.asarray(y)
    pos, neg = np.flatnonzero(y > 0), np.flatnonzero(y < 0)
    if n_pos > pos.size or n_neg > neg.size:
        raise ArgumentError(
            f"requested {n_pos}/{n_neg} samples but only {pos.size}/{neg.size} available"
        )
    rng = np.random.default_rng(seed)
    return np.sort(
        np.concatenate(
            [rng.choice(pos, size=n_pos, replace=False), rng.choice(neg, size=n_neg, replace=False)]
        )
    )


def balanced_sample(ds: LabeledDataset, n=100, seed=0) -> LabeledDataset:
    """``n`` samples with a 1:1 class ratio (the kernel-grid heuristic sample)."""
    return ds.subset(stratified_subset(ds.y, n // 2, n - n // 2, seed))


@dataclass
class ScalingParams:
    min: np.ndarray
    max: np.ndarray
    low: float = -0.5
    high: float = 0.5

    def to_dict(self):
        return {
            "min": [float(v) for v in self.min],
            "max": [float(v) for v in self.max],
            "low": self.low,
            "high": self.high,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            np.asarray(data["min"], dtype=np.float64),
            np.asarray(data["max"], dtype=np.float64),
            float(data.get("low", -0.5)),
            float(data.get("high", 0.5)),
        )


def scale_fit(X, interval=(-0.5, 0.5)) -> ScalingParams:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    low, high = (float(v) for v in interval)
    if not high > low:
        raise ArgumentError(f"empty target interval {interval}")
    return ScalingParams(X.min(axis=0), X.max(axis=0), low, high)


def scale_apply(X, params: ScalingParams):
    """Affine map of each feature onto the interval, clamping out-of-range values.

    Returns ``(X_scaled, n_clamped)``. Constant features map to the midpoint.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    span = params.max - params.min
    const = span == 0
    unit = (X - params.min) / np.where(const, 1.0, span)
    unit = np.where(const, 0.5, unit)
    clamped = (unit < 0) | (unit > 1)
    unit = np.clip(unit, 0.0, 1.0)
    return params.low + unit * (params.high - params.low), int(clamped.sum())


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float


def _check_binary(y):
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n_pos = int((y > 0).sum())
    if n_pos == 0 or n_pos == y.size:
        raise ArgumentError("ROC analysis needs both classes")
    return y


def segment_roc(scores, y) -> RocCurve:
    """Threshold sweep over distinct scores; tied scores form one step (trapezoidal AUROC)."""
    y = _check_binary(y)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    order = np.argsort(-scores, kind="mergesort")
    s, pos = scores[order], y[order] > 0
    last_of_group = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tp = np.cumsum(pos)[last_of_group]
    fp = np.cumsum(~pos)[last_of_group]
    tpr = np.r_[0.0, tp / pos.sum()]
    fpr = np.r_[0.0, fp / (~pos).sum()]
    thresholds = np.r_[np.inf, s[last_of_group]]
    return RocCurve(fpr, tpr, thresholds, float(np.trapezoid(tpr, fpr)))


@dataclass
class SegmentMetrics:
    sensitivity: float
    precision: float
    f1: float
    specificity: float


def _f1(p, r):
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def segment_metrics(y_true, y_pred) -> SegmentMetrics:
    t = np.asarray(y_true) > 0
    p = np.asarray(y_pred) > 0
    tp, fp = int((t & p).sum()), int((~t & p).sum())
    fn, tn = int((t & ~p).sum()), int((~t & ~p).sum())
    sens = tp / (tp + fn) if tp + fn else 0.0
    prec = tp / (tp + fp) if tp + fp else 0.0
    spec = tn / (tn + fp) if tn + fp else 0.0
    return SegmentMetrics(sens, prec, _f1(prec, sens), spec)


def f1_score(y_true, y_pred):
    return segment_metrics(y_true, y_pred).f1


def threshold_for_sensitivity(scores, y, target):
    """Largest threshold whose segment sensitivity (``score >= t``) reaches ``target``."""
    if not 0 < target <= 1:
        raise ArgumentError("target sensitivity must be in (0, 1]")
    y = _check_binary(y)
    pos = np.sort(np.asarray(scores, dtype=np.float64)[y > 0])[::-1]
    k = math.ceil(target * pos.size - 1e-12)
    return float(pos[max(k, 1) - 1])


def postprocess_events(labels, k=8, n=10):
    """Detections from per-segment labels: any ``n``-window with at least ``k`` positives fires.

    Firing windows that overlap or touch are merged; each merged span is
    trimmed to its first and last positive segment. Returns inclusive
    ``(start, end)`` segment index pairs.
    """
    if not n >= k >= 1:
        raise ArgumentError(f"need n >= k >= 1, got k={k}, n={n}")
    pos = (np.asarray(labels) > 0).astype(np.int64)
    if pos.size < n:
        return []
    counts = np.convolve(pos, np.ones(n, dtype=np.int64), mode="valid")
    events = []
    span = None
    for i in np.flatnonzero(counts >= k):
        i = int(i)
        if span is not None and i <= span[1] + 1:
            span[1] = i + n - 1
        else:
            if span is not None:
                events.append(span)
            span = [i, i + n - 1]
    if span is not None:
        events.append(span)
    trimmed = []
    for a, b in events:
        hits = np.flatnonzero(pos[a : b + 1]) + a
        trimmed.append((int(hits[0]), int(hits[-1])))
    return trimmed


def label_runs(labels):
    """Inclusive ``(start, end)`` index pairs of maximal runs of positive labels."""
    pos = np.r_[False, np.asarray(labels) > 0, False]
    edges = np.flatnonzero(np.diff(pos.astype(np.int8)))
    return [(int(a), int(b) - 1) for a, b in zip(edges[::2], edges[1::2])]


def segments_to_seconds(events, start_s, dur_s):
    start_s, dur_s = np.asarray(start_s), np.asarray(dur_s)
    return [(float(start_s[a]), float(start_s[b] + dur_s[b])) for a, b in events]


@dataclass
class EventMetrics:
    sensitivity: float
    precision: float
    f1: float
    fa_per_24h: float
    n_true: int = 0
    n_pred: int = 0
    n_hits: int = 0
    n_false_alarms: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "sensitivity": self.sensitivity,
            "precision": self.precision,
            "f1": self.f1,
            "fa_per_24h": self.fa_per_24h,
            "n_true": self.n_true,
            "n_pred": self.n_pred,
            "n_hits": self.n_hits,
            "n_false_alarms": self.n_false_alarms,
        }
        out.update(self.extra)
        return out


def _check_intervals(events, name):
    ev = np.asarray(events, dtype=np.float64).reshape(-1, 2)
    if (ev[:, 1] < ev[:, 0]).any():
        raise ArgumentError(f"{name} contains an interval with end before start")
    if (ev[1:, 0] < ev[:-1, 1]).any():
        raise ArgumentError(f"{name} intervals must be sorted and non-overlapping")
    return ev


def _overlaps(a, b):
    # half-open: touching intervals do not overlap
    return np.maximum(a[:, None, 0], b[None, :, 0]) < np.minimum(a[:, None, 1], b[None, :, 1])


def any_overlap_score(pred_events, true_events, total_duration_s) -> EventMetrics:
    """Event scoring where a true event counts as detected if any prediction overlaps it."""
    if not total_duration_s > 0:
        raise ArgumentError("total duration must be positive")
    pred = _check_intervals(pred_events, "predicted events")
    true = _check_intervals(true_events, "true events")
    hit = _overlaps(true, pred)
    n_hits = int(hit.any(axis=1).sum())
    n_matched = int(hit.any(axis=0).sum())
    n_false = len(pred) - n_matched
    sens = n_hits / len(true) if len(true) else 0.0
    prec = n_matched / len(pred) if len(pred) else 0.0
    return EventMetrics(
        sensitivity=sens,
        precision=prec,
        f1=_f1(prec, sens),
        fa_per_24h=n_false * SECONDS_PER_DAY / total_duration_s,
        n_true=len(true),
        n_pred=len(pred),
        n_hits=n_hits,
        n_false_alarms=n_false,
    )
