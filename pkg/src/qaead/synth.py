"""Deterministic synthetic server-telemetry generator.

Produces a five-feature multivariate series shaped like one machine of a
production monitoring dataset: a shared daily-periodic load factor drives
correlated load/disk channels, plus slow drift and per-channel noise.
Anomalies (correlated surges, dropouts, spike storms, level shifts) are
injected only into the second half of the series, so an equal temporal split
yields a clean training half and a labeled test half.

`machine_series()` defaults reproduce the desk-scale benchmark geometry:
56959 timestamps, window 100, stride 50, 568/568 train/test windows with
roughly 12% anomalous test windows.
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np

from .pipeline import MtsRecord

DEFAULT_T = 56959
N_FEATURES = 5
DAY = 1440  # one-minute cadence


def _ar1(rng, n, rho, scale):
    noise = rng.normal(scale=scale, size=n)
    out = np.empty(n)
    acc = 0.0
    for i in range(n):
        acc = rho * acc + noise[i]
        out[i] = acc
    return out


def machine_series(t_total: int = DEFAULT_T, seed: int = 7,
                   anomaly_fraction_of_test: float = 0.09) -> MtsRecord:
    """Synthetic telemetry with point labels; anomalies only in the 2nd half.

    ``anomaly_fraction_of_test`` is the fraction of test *points* covered by
    anomalous segments; with window 100 / stride 50 the default lands near
    12% anomalous test windows.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(t_total)

    daily = np.sin(2 * np.pi * t / DAY + 0.6)
    weekly = np.sin(2 * np.pi * t / (7 * DAY) + 2.1)
    load = 0.55 + 0.22 * daily + 0.06 * weekly + _ar1(rng, t_total, 0.995, 0.004)
    load = np.clip(load, 0.02, 1.3)

    burst = (rng.uniform(size=t_total) < 0.004) * rng.uniform(0.2, 0.9, size=t_total)
    values = np.empty((t_total, N_FEATURES))
    values[:, 0] = load + rng.normal(scale=0.02, size=t_total)
    values[:, 1] = 0.45 * load ** 2 + burst + rng.normal(scale=0.03, size=t_total)
    values[:, 2] = 0.30 + 0.25 * load + rng.normal(scale=0.02, size=t_total)
    values[:, 3] = 0.60 * load + 0.10 * np.sin(2 * np.pi * t / (DAY / 2)) \
        + rng.normal(scale=0.025, size=t_total)
    values[:, 4] = 0.85 * values[:, 3] + rng.normal(scale=0.02, size=t_total)

    labels = np.zeros(t_total, dtype=np.uint8)
    test_start = t_total // 2
    test_len = t_total - test_start
    target_points = int(anomaly_fraction_of_test * test_len)

    n_segments = 8
    seg_lengths = rng.integers(120, 480, size=n_segments)
    seg_lengths = (seg_lengths * target_points / max(seg_lengths.sum(), 1)).astype(int)
    seg_lengths = np.maximum(seg_lengths, 40)

    slots = np.linspace(test_start + 400, t_total - 600, n_segments).astype(int)
    jitter = rng.integers(-150, 150, size=n_segments)
    for k, (slot, length) in enumerate(zip(slots + jitter, seg_lengths)):
        a = int(np.clip(slot, test_start, t_total - length - 1))
        b = a + int(length)
        labels[a:b] = 1
        kind = k % 4
        seg = slice(a, b)
        n_seg = b - a
        if kind == 0:  # correlated surge across load and disk channels
            ramp = np.linspace(0.4, 1.0, n_seg)
            values[seg, 0] += 0.9 * ramp
            values[seg, 1] += 1.1 * ramp
            values[seg, 3] += 0.8 * ramp
            values[seg, 4] += 0.8 * ramp
        elif kind == 1:  # dropout: channels collapse toward zero
            values[seg, :] *= 0.05
        elif kind == 2:  # spike storm on the disk channels
            spikes = rng.uniform(0.7, 1.6, size=n_seg) \
                * (rng.uniform(size=n_seg) < 0.6)
            values[seg, 1] += spikes
            values[seg, 3] += spikes * 0.9
            values[seg, 4] += spikes * 0.9
        else:  # service-time level shift
            values[seg, 2] += 0.75
            values[seg, 0] += 0.35

    return MtsRecord(values, labels)


def write_csv(record: MtsRecord, path, header: bool = True) -> None:
    """Emit a generic CSV: feature columns then a final 0/1 label column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    d = record.n_features
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"f{j}" for j in range(d)] + ["label"])
        labels = record.point_labels
        for i in range(record.length):
            row = [repr(float(v)) for v in record.values[i]]
            row.append(str(int(labels[i]) if labels is not None else 0))
            writer.writerow(row)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="generate a synthetic telemetry CSV (features + label column)")
    parser.add_argument("output", help="CSV path to write")
    parser.add_argument("--rows", type=int, default=DEFAULT_T)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    record = machine_series(t_total=args.rows, seed=args.seed)
    write_csv(record, args.output)
    n_anom = int(record.point_labels.sum())
    print(f"wrote {args.output}: {record.length} rows x {record.n_features} "
          f"features, {n_anom} anomalous points")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
