"""File formats: dataset/event/score/trace CSVs and model/metrics JSON.

Floats are written with ``repr`` (shortest round-trip decimal), so reading a
file back gives bit-identical values.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dataeval import LabeledDataset
from .errors import ArgumentError
from .solver import TkmModel


def _fmt(v):
    return repr(float(v))


def dataset_to_csv(ds: LabeledDataset) -> str:
    header = [f"f{d + 1}" for d in range(ds.n_features)] + ["label"]
    if ds.has_timing:
        header += ["start_s", "dur_s"]
    lines = [",".join(header)]
    for n in range(len(ds)):
        row = [_fmt(v) for v in ds.X[n]] + [str(int(ds.y[n]))]
        if ds.has_timing:
            row += [_fmt(ds.start_s[n]), _fmt(ds.dur_s[n])]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def read_dataset(path) -> LabeledDataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ArgumentError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if "label" not in header:
        raise ArgumentError(f"{path}: header must contain a 'label' column")
    feat_cols = [i for i, h in enumerate(header) if h.startswith("f") and h[1:].isdigit()]
    if not feat_cols:
        raise ArgumentError(f"{path}: no feature columns f1..fD")
    body = [r for r in rows[1:] if r]
    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=np.float64).reshape(
            len(body), len(header)
        )
    except ValueError as exc:
        raise ArgumentError(f"{path}: {exc}") from None
    timing = (None, None)
    if "start_s" in header and "dur_s" in header:
        timing = (data[:, header.index("start_s")], data[:, header.index("dur_s")])
    return LabeledDataset(data[:, feat_cols], data[:, header.index("label")], *timing)


def events_to_csv(events) -> str:
    return "start_s,end_s\n" + "".join(f"{_fmt(a)},{_fmt(b)}\n" for a, b in events)


def read_events(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or [h.strip() for h in rows[0]] != ["start_s", "end_s"]:
        raise ArgumentError(f"{path}: expected header 'start_s,end_s'")
    return [(float(a), float(b)) for a, b in rows[1:]]


def scores_to_csv(scores, labels) -> str:
    return "score,label\n" + "".join(
        f"{_fmt(s)},{int(lab)}\n" for s, lab in zip(scores, labels)
    )


def read_scores(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or rows[0][0].strip() != "score":
        raise ArgumentError(f"{path}: expected a 'score' column first")
    return np.array([float(r[0]) for r in rows[1:]], dtype=np.float64)


def trace_to_csv(loss) -> str:
    return "iteration,loss\n" + "".join(f"{i},{_fmt(v)}\n" for i, v in enumerate(loss))


def model_to_json(model: TkmModel) -> str:
    return json.dumps(model.to_dict(), indent=1) + "\n"


def read_model(path) -> TkmModel:
    try:
        with open(path) as fh:
            return TkmModel.from_dict(json.load(fh))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ArgumentError(f"{path}: not a model file ({exc})") from None


def write_text(path, text):
    """Write to ``path``, or to standard output when ``path`` is ``None`` or ``-``."""
    if path is None or str(path) == "-":
        import sys

        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)
