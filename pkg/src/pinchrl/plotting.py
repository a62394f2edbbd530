"""Figures drawn from the CSV outputs only."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import read_csv  # noqa: E402


def _column(rows, name):
    return np.array([float(r[name]) for r in rows])


def plot_training(csv_path, out_path, window: int = 20) -> Path:
    rows = read_csv(csv_path)
    ep = _column(rows, "episode")
    reward = _column(rows, "episode_reward")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ep, reward, color="0.75", lw=0.8, label="episode")
    if len(reward) >= window:
        smooth = np.convolve(reward, np.ones(window) / window, mode="valid")
        ax.plot(ep[window - 1:], smooth, color="C0", label=f"{window}-episode mean")
    ax.set_xlabel("episode")
    ax.set_ylabel("episode reward")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return Path(out_path)


def plot_sweep(csv_path, out_path) -> Path:
    rows = read_csv(csv_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    keys = sorted({(r["policy"], float(r["beta"])) for r in rows})
    for policy, beta in keys:
        sel = [r for r in rows if r["policy"] == policy and float(r["beta"]) == beta]
        p = _column(sel, "p_bs_dbm")
        m = _column(sel, "mean_rate")
        ci = _column(sel, "ci95")
        ax.errorbar(p, m, yerr=ci, marker="o" if policy == "learned" else "s",
                    ls="-" if policy == "learned" else "--", capsize=3, label=f"{policy}, beta={beta:g}")
    ax.set_xlabel("BS power (dBm)")
    ax.set_ylabel("average rate (bps/Hz)")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return Path(out_path)


def plot_trace(csv_path, out_path) -> Path:
    rows = read_csv(csv_path)
    ux, uy = _column(rows, "user_x"), _column(rows, "user_y")
    t = _column(rows, "t")
    pa_cols = [c for c in rows[0] if c.startswith("x_")]
    fig, (ax_map, ax_x) = plt.subplots(1, 2, figsize=(10, 4))
    ax_map.plot(ux, uy, "k-", lw=1, label="user path")
    ax_map.plot(ux[0], uy[0], "go", label="start")
    guides = sorted({c.split("_")[1] for c in pa_cols})
    for g in guides:
        cols = [c for c in pa_cols if c.split("_")[1] == g]
        xs = np.concatenate([_column(rows, c) for c in cols])
        ax_map.scatter(xs, np.full_like(xs, -1.0 * int(g)), s=4, alpha=0.3, label=f"PAs, guide {g}")
    ax_map.set_xlabel("x (m)")
    ax_map.set_ylabel("y (m)")
    ax_map.legend(fontsize=7)
    ax_x.plot(t, ux, "k-", label="user x")
    ax_x.plot(t, np.mean([_column(rows, c) for c in pa_cols], axis=0), "C1-", label="mean PA x")
    ax_x.set_xlabel("step")
    ax_x.set_ylabel("x (m)")
    ax_x.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return Path(out_path)
