"""Matplotlib figures rendered next to the delimited report files."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .cera import HistoryEntry
from .rouge import BootstrapSummary


def render_history_figure(history: Sequence[HistoryEntry], path: str | Path) -> None:
    """Training loss and validation metric per epoch, with the LR schedule."""
    epochs = [entry.epoch for entry in history]
    fig, (ax_loss, ax_val) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_loss.plot(epochs, [entry.train_loss for entry in history], marker="o")
    ax_loss.set_ylabel("train loss")
    ax_loss.grid(True, alpha=0.3)
    ax_lr = ax_loss.twinx()
    ax_lr.plot(epochs, [entry.lr for entry in history], color="gray", ls="--", lw=1)
    ax_lr.set_ylabel("lr", color="gray")
    ax_lr.set_yscale("log")
    ax_val.plot(epochs, [entry.val_metric for entry in history], marker="o", color="C1")
    ax_val.set_xlabel("epoch")
    ax_val.set_ylabel("validation metric")
    ax_val.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_score_figure(
    aggregates: Mapping[str, BootstrapSummary], path: str | Path
) -> None:
    """Bar chart of aggregate scores with bootstrap-CI error bars."""
    labels = list(aggregates)
    means = [aggregates[label].mean for label in labels]
    err_low = [aggregates[label].mean - aggregates[label].ci_low for label in labels]
    err_high = [aggregates[label].ci_high - aggregates[label].mean for label in labels]
    fig, ax = plt.subplots(figsize=(max(6, 1.1 * len(labels)), 4))
    ax.bar(labels, means, yerr=[err_low, err_high], capsize=4, color="C0", alpha=0.85)
    ax.set_ylabel("score")
    ax.set_ylim(0, 1)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
