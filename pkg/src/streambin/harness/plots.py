"""Time-series charts over a run's metrics.csv."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from streambin.harness.metrics import read_csv  # noqa: E402

KINDS = ("cpu_per_worker", "error", "workers")


def _by_worker(rows, column):
    series: dict[str, tuple[list, list]] = {}
    for row in rows:
        ts, ys = series.setdefault(row["worker_id"], ([], []))
        ts.append(row["t"])
        ys.append(row[column])
    return series


def _cluster_series(rows, column):
    ts, ys, seen = [], [], set()
    for row in rows:
        if row["t"] not in seen:
            seen.add(row["t"])
            ts.append(row["t"])
            ys.append(row[column])
    return ts, ys


def plot(run_dir, kind: str, out_path=None):
    if kind not in KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {KINDS}")
    run_dir = Path(run_dir)
    rows = read_csv(run_dir / "metrics.csv")
    if out_path is None:
        out_path = run_dir / f"{kind}.png"

    fig, ax = plt.subplots(figsize=(9, 4.5))
    if kind == "cpu_per_worker":
        for worker_id, (ts, ys) in sorted(_by_worker(rows, "scheduled_cpu").items()):
            ax.plot(ts, [y * 100 for y in ys], label=worker_id)
        ax.set_ylim(0, 100)
        ax.set_ylabel("scheduled CPU [%]")
        ax.set_title("Scheduled CPU usage per worker")
    elif kind == "error":
        for worker_id, (ts, ys) in sorted(_by_worker(rows, "error_pp").items()):
            ax.plot(ts, ys, label=worker_id)
        ax.set_ylabel("scheduled - measured [pp]")
        ax.set_title("Scheduled vs measured CPU error per worker")
    else:
        for column, label in (
            ("target_workers", "target workers"),
            ("active_workers", "current workers"),
            ("ideal_bins", "ideal bins"),
        ):
            ts, ys = _cluster_series(rows, column)
            ax.step(ts, ys, where="post", label=label)
        ax.set_ylabel("count")
        ax.set_title("Target and current workers, active bins")
    ax.set_xlabel("t [s]")
    ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return Path(out_path)
