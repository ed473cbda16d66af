"""
Text serialization: the dataset file and the result CSVs.

Result CSVs write floats with 9 significant digits and sort rows by their
leading columns so reruns diff cleanly. The dataset file keeps full
precision so a model trained from the file matches one trained in memory.
"""

import csv
import io
import json
from pathlib import Path

import numpy as np

from .harness import SPLITS, Dataset, SweepResult

DATASET_TAG = "v2ichan-dataset v1"
DATASET_HEADER = ("in_re", "in_im", "t_re", "t_im", "split")
BER_HEADER = ("snr_db", "estimator", "ber", "total_bits", "error_bits")
MSE_EPOCH_HEADER = ("epoch", "snr_db", "split", "nmse", "is_best")
HIST_HEADER = ("bin_lo", "bin_hi", "count", "split")
REGRESSION_HEADER = ("target", "output", "split")
REGRESSION_STATS_HEADER = ("split", "slope", "intercept", "r")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".9g")
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def ber_csv(result: SweepResult, bits_per_frame: int) -> str:
    """``ber.csv`` content; ``bits_per_frame`` converts frame counts to bits."""
    rows = []
    for r in result.rows:
        if r.metric == "ber":
            rows.append((r.snr_db, r.estimator, r.value, r.trial_count * bits_per_frame, r.error_count))
    rows.sort(key=lambda r: (r[0], r[1]))
    return _csv_text(BER_HEADER, rows)


def mse_epoch_csv(rows) -> str:
    order = {name: i for i, name in enumerate(SPLITS)}
    return _csv_text(MSE_EPOCH_HEADER, sorted(rows, key=lambda r: (r[0], r[1], order.get(r[2], 99))))


def hist_csv(rows) -> str:
    return _csv_text(HIST_HEADER, sorted(rows, key=lambda r: (r[0], r[1], r[3])))


def regression_csv(points) -> str:
    """``points`` are ``(target, output, split)`` triples."""
    return _csv_text(REGRESSION_HEADER, sorted(points))


def regression_stats_csv(stats: dict) -> str:
    rows = [(name, s.slope, s.intercept, s.r) for name, s in stats.items()]
    return _csv_text(REGRESSION_STATS_HEADER, sorted(rows))


def regression_points(predictor, dataset: Dataset):
    """Flattened (target, output, split) triples, real and imaginary parts alike."""
    out = predictor.predict(dataset.inputs)
    names = np.array(SPLITS)[dataset.split]
    pts = []
    for t_row, o_row, name in zip(dataset.targets, out, names):
        pts.extend((float(t), float(o), str(name)) for t, o in zip(t_row, o_row))
    return pts


def dataset_text(ds: Dataset) -> str:
    lines = [f"# {DATASET_TAG}"]
    for key in sorted(ds.provenance):
        lines.append(f"# {key}={json.dumps(ds.provenance[key])}")
    lines.append(",".join(DATASET_HEADER))
    names = np.array(SPLITS)[ds.split]
    for x, t, name in zip(ds.inputs, ds.targets, names):
        lines.append(",".join([*(format(float(v), ".17g") for v in (*x, *t)), str(name)]))
    return "\n".join(lines) + "\n"


def parse_dataset(text: str) -> Dataset:
    lines = text.splitlines()
    if not lines or lines[0] != f"# {DATASET_TAG}":
        raise ValueError("not a v2ichan dataset file")
    provenance = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        key, _, value = lines[i][1:].strip().partition("=")
        provenance[key] = json.loads(value)
        i += 1
    if i >= len(lines) or tuple(lines[i].split(",")) != DATASET_HEADER:
        raise ValueError("dataset column header missing")
    codes = {name: k for k, name in enumerate(SPLITS)}
    data, split = [], []
    for ln in lines[i + 1:]:
        if not ln.strip():
            continue
        *vals, name = ln.split(",")
        if len(vals) != 4 or name not in codes:
            raise ValueError(f"malformed dataset row: {ln!r}")
        data.append([float(v) for v in vals])
        split.append(codes[name])
    arr = np.array(data, dtype=float).reshape(-1, 4)
    return Dataset(arr[:, :2].copy(), arr[:, 2:].copy(), np.array(split, dtype=np.int8), provenance)


def write_dataset(ds: Dataset, path):
    Path(path).write_text(dataset_text(ds))


def read_dataset(path) -> Dataset:
    return parse_dataset(Path(path).read_text())
