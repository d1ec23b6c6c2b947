"""Summary CSV read/write and the per-method comparison table."""

import csv

import numpy as np

SUMMARY_COLUMNS = ("method", "config_id", "seed", "best_val_acc", "test_acc", "train_seconds")


def write_summary(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in SUMMARY_COLUMNS})


def load_summary(path):
    """Parse a summary CSV; malformed rows raise ValueError naming the line."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != list(SUMMARY_COLUMNS):
            raise ValueError(f"{path}:1: header must be {','.join(SUMMARY_COLUMNS)}")
        for row in reader:
            line = reader.line_num
            if any(row.get(k) in (None, "") for k in SUMMARY_COLUMNS):
                raise ValueError(f"{path}:{line}: row is missing fields")
            try:
                rows.append(
                    {
                        "method": row["method"],
                        "config_id": row["config_id"],
                        "seed": int(row["seed"]),
                        "best_val_acc": float(row["best_val_acc"]),
                        "test_acc": float(row["test_acc"]),
                        "train_seconds": float(row["train_seconds"]),
                    }
                )
            except ValueError as err:
                raise ValueError(f"{path}:{line}: {err}") from err
    return rows


def summarize_rows(rows):
    """Per (method, config_id): mean/std of test accuracy and train time,
    sorted by mean accuracy descending."""
    groups = {}
    for row in rows:
        groups.setdefault((row["method"], row["config_id"]), []).append(row)
    out = []
    for (method, config_id), members in groups.items():
        accs = np.array([m["test_acc"] for m in members])
        times = np.array([m["train_seconds"] for m in members])
        out.append(
            {
                "method": method,
                "config_id": config_id,
                "runs": len(members),
                "acc_mean": float(accs.mean()),
                "acc_std": float(accs.std()),
                "time_mean": float(times.mean()),
                "time_std": float(times.std()),
            }
        )
    out.sort(key=lambda g: g["acc_mean"], reverse=True)
    return out


def format_report(rows):
    groups = summarize_rows(rows)
    header = f"{'method':<8}{'config':<16}{'runs':>5}  {'test_acc':>17}  {'train_s':>17}"
    lines = [header, "-" * len(header)]
    for g in groups:
        acc = f"{g['acc_mean']:.4f} ± {g['acc_std']:.4f}"
        tim = f"{g['time_mean']:.2f} ± {g['time_std']:.2f}"
        lines.append(
            f"{g['method']:<8}{g['config_id']:<16}{g['runs']:>5}  {acc:>17}  {tim:>17}"
        )
    return "\n".join(lines)
