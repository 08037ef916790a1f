"""Run reports: delimited metric/loss tables plus rendered figures.

Every report path writes a CSV and a matching PNG figure next to it.
Output is byte-deterministic for identical inputs: floats use fixed
formatting, rows keep input order, and figures are rendered through the
Agg backend with the default software tag suppressed.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

METRIC_FIELDS = ("image_id", "psnr", "ssim", "iou", "precision", "recall")

_SAVEFIG_KW = {"metadata": {"Software": None}}


def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{value:.6f}"


def write_metrics_csv(path, rows: list[dict]) -> None:
    """Rows are dicts with image_id plus any of psnr/ssim/iou/precision/recall."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_FIELDS)
        for row in rows:
            writer.writerow([row["image_id"]] + [_fmt(row.get(k)) for k in METRIC_FIELDS[1:]])


def write_loss_csv(path, history: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for row in history:
            writer.writerow([row["epoch"], _fmt(row["train_loss"]), _fmt(row.get("val_loss"))])


def write_step_loss_csv(path, losses: list[float]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss"])
        for step, loss in enumerate(losses):
            writer.writerow([step, _fmt(loss)])


def save_loss_figure(path, history: list[dict] | None = None, losses: list[float] | None = None) -> None:
    """Plot per-epoch train/val losses, or a raw per-step loss curve."""
    fig, ax = plt.subplots(figsize=(6, 4), dpi=110)
    if history is not None:
        epochs = [row["epoch"] for row in history]
        ax.plot(epochs, [row["train_loss"] for row in history], label="train")
        if any(row.get("val_loss") is not None for row in history):
            ax.plot(epochs, [row.get("val_loss") for row in history], label="validation")
        ax.set_xlabel("epoch")
        ax.legend()
    else:
        ax.plot(range(len(losses)), losses)
        ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_title("training loss")
    fig.tight_layout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)


def save_metrics_figure(path, rows: list[dict]) -> None:
    """Per-image PSNR bars with SSIM (and IoU when present) on a twin axis."""
    scored = [r for r in rows if r.get("psnr") is not None]
    fig, ax = plt.subplots(figsize=(max(6, 0.5 * len(scored) + 2), 4), dpi=110)
    if scored:
        xs = range(len(scored))
        ax.bar(xs, [r["psnr"] for r in scored], color="#4878cf", label="PSNR (dB)")
        ax.set_xticks(list(xs))
        ax.set_xticklabels([str(r["image_id"]) for r in scored], rotation=60, ha="right", fontsize=7)
        ax.set_ylabel("PSNR (dB)")
        ax2 = ax.twinx()
        ax2.plot(xs, [r["ssim"] for r in scored], "o-", color="#d65f5f", label="SSIM")
        if any(r.get("iou") is not None for r in scored):
            ax2.plot(xs, [r.get("iou") for r in scored], "s--", color="#6acc65", label="IoU")
        ax2.set_ylim(0, 1.05)
        ax2.set_ylabel("SSIM / IoU")
        lines, labels = ax.get_legend_handles_labels()
        lines2, labels2 = ax2.get_legend_handles_labels()
        ax.legend(lines + lines2, labels + labels2, loc="lower right", fontsize=8)
    else:
        ax.text(0.5, 0.5, "no scored images", ha="center", va="center")
    ax.set_title("per-image metrics")
    fig.tight_layout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)


def write_manifest(path, config: dict, seed: int, checkpoint_hashes: dict[str, str], extra: dict | None = None) -> None:
    """Record everything needed to reproduce a run (no timestamps on purpose)."""
    payload = {
        "config": config,
        "seed": seed,
        "checkpoint_hashes": checkpoint_hashes,
    }
    if extra:
        payload.update(extra)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
