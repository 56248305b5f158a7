"""File formats: round-level trajectory CSV, heatmap CSV, SVG figures and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .engine import Trajectory  # noqa: E402
from .sweep import HeatmapResult  # noqa: E402

TRAJECTORY_COLUMNS = ("t", "a0", "a1", "r0", "r1", "v0H", "v0L", "v1H", "v1L", "regime")
HEATMAP_COLUMNS = ("axis0", "axis1", "proportion", "trials")
MASKED = "masked"


def fmt_float(x: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return f"{x:.17g}"


def atomic_write(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --- trajectories -------------------------------------------------------------


def trajectory_csv(traj: Trajectory) -> str:
    """One row per round; values are the estimates after that round, regime
    the target pair the round was played under."""
    acts, vals, regs, rew = traj.actions, traj.values, traj.regimes, traj.rewards
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    names = "HL"
    for t in range(traj.horizon):
        w.writerow([
            t, names[acts[t, 0]], names[acts[t, 1]], fmt_float(rew[t, 0]), fmt_float(rew[t, 1]),
            fmt_float(vals[t, 0, 0]), fmt_float(vals[t, 0, 1]), fmt_float(vals[t, 1, 0]), fmt_float(vals[t, 1, 1]),
            names[regs[t, 0]] + names[regs[t, 1]],
        ])
    return buf.getvalue()


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    return atomic_write(path, trajectory_csv(traj))


def read_trajectory_csv(path) -> dict:
    """Columns as numpy arrays (actions and regimes kept as strings)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no rounds")
    out = {}
    for col in TRAJECTORY_COLUMNS:
        raw = [r[col] for r in rows]
        if col == "t":
            out[col] = np.array(raw, dtype=int)
        elif col in ("a0", "a1", "regime"):
            out[col] = np.array(raw)
        else:
            out[col] = np.array(raw, dtype=float)
    return out


def value_plot_svg(traj: Trajectory, title: str = "") -> str:
    """Two panels, one per agent, with the H (green) and L (red) estimates over time."""
    fig = Figure(figsize=(10, 4))
    axes = fig.subplots(1, 2, sharey=True)
    t = np.arange(1, traj.horizon + 1)
    for i, ax in enumerate(axes):
        ax.plot(t, traj.values[:, i, 0], color="tab:green", lw=1.0, label="v(H)")
        ax.plot(t, traj.values[:, i, 1], color="tab:red", lw=1.0, label="v(L)")
        ax.set_title(f"agent {i} ({traj.config.agents[i].algorithm})")
        ax.set_xlabel("round")
        ax.set_ylim(-0.02, 1.02)
        ax.grid(alpha=0.4)
    axes[0].set_ylabel("value estimate")
    axes[0].legend(loc="lower right")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _svg(fig)


def _svg(fig: Figure) -> str:
    buf = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": "naive-collusion", "svg.fonttype": "path"}):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


# --- heatmaps -------------------------------------------------------------------


def heatmap_csv(result: HeatmapResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEATMAP_COLUMNS)
    for r, x in enumerate(result.axis0):
        for c, y in enumerate(result.axis1):
            if result.masked[r, c]:
                w.writerow([fmt_float(x), fmt_float(y), MASKED, 0])
            else:
                w.writerow([fmt_float(x), fmt_float(y), fmt_float(result.proportions[r, c]), int(result.trials[r, c])])
    return buf.getvalue()


def write_heatmap_csv(result: HeatmapResult, path) -> Path:
    return atomic_write(path, heatmap_csv(result))


def read_heatmap_csv(path) -> list[tuple]:
    """Rows of (axis0, axis1, proportion or None if masked, trials)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        (float(r["axis0"]), float(r["axis1"]),
         None if r["proportion"] == MASKED else float(r["proportion"]), int(r["trials"]))
        for r in rows
    ]


def heatmap_svg(result: HeatmapResult, title: str = "") -> str:
    """Colour scale fixed to [0, 1]; masked tiles are hatched, not coloured."""
    p = result.proportions
    x, y = result.axis1, result.axis0
    fig = Figure(figsize=(5.5, 4.5))
    ax = fig.subplots()
    dx = (x[1] - x[0]) if len(x) > 1 else 1.0
    dy = (y[1] - y[0]) if len(y) > 1 else 1.0
    extent = (x[0] - dx / 2, x[-1] + dx / 2, y[0] - dy / 2, y[-1] + dy / 2)
    im = ax.imshow(np.ma.masked_invalid(p), origin="lower", extent=extent, vmin=0.0, vmax=1.0,
                   cmap="viridis", aspect="auto", interpolation="nearest")
    for r, c in zip(*np.nonzero(result.masked)):
        ax.add_patch(Rectangle((x[c] - dx / 2, y[r] - dy / 2), dx, dy, fill=False, hatch="///",
                               edgecolor="0.6", lw=0.0))
    ax.set_xlabel(result.spec.axis1.name)
    ax.set_ylabel(result.spec.axis0.name)
    fig.colorbar(im, ax=ax, label="proportion collusive")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _svg(fig)


# --- manifests --------------------------------------------------------------------


def write_manifest(path, manifest: dict) -> Path:
    return atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
