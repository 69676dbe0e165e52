"""Figures and tables from the output directory of a scenarios run."""
from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .impacts import INDICATORS  # noqa: E402
from .marl.train import TrainingLog, moving_average  # noqa: E402

UNITS = {"energy": "kWh/m3", "cost": "CNY/m3", "ep": "kg PO4-eq/m3", "ghg": "kg CO2-eq/m3"}
_EPISODE = re.compile(r"episode_(?P<slug>[a-z-]+?)(?:_seed(?P<seed>\d+))?\.csv$")
_TRAIN = re.compile(r"train_(?P<slug>[a-z-]+)_seed(?P<seed>\d+)\.csv$")


def _read_columns(path: Path, names) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {n: np.array([float(r[n]) for r in rows]) for n in names}


def _episodes(src: Path) -> dict[str, list[tuple[int, Path]]]:
    out: dict[str, list[tuple[int, Path]]] = {}
    for p in sorted(src.glob("episode_*.csv")):
        m = _EPISODE.match(p.name)
        if m:
            out.setdefault(m["slug"], []).append((int(m["seed"] or 0), p))
    return out


def plot_actions(src: Path, dst: Path) -> Path:
    fig, axes = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    for slug, runs in _episodes(src).items():
        seed, path = min(runs)
        c = _read_columns(path, ("t", "do", "dose"))
        label = slug if len(runs) == 1 else f"{slug} (seed {seed})"
        axes[0].plot(c["t"] - c["t"][0], c["do"], label=label, lw=1)
        axes[1].plot(c["t"] - c["t"][0], c["dose"], label=label, lw=1)
    axes[0].set_ylabel("DO set-point (g/m3)")
    axes[1].set_ylabel("PAC dose (kg/m3)")
    axes[1].set_xlabel("time (d)")
    axes[0].legend(fontsize=8, ncol=3)
    fig.tight_layout()
    out = dst / "actions.png"
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_indicators(summary: dict, dst: Path) -> Path:
    names = list(summary)
    fig, axes = plt.subplots(1, 4, figsize=(14, 3.8))
    for ax, ind in zip(axes, INDICATORS):
        m = [summary[n]["per_m3"][ind]["mean"] for n in names]
        s = [summary[n]["per_m3"][ind]["std"] for n in names]
        ax.bar(range(len(names)), m, yerr=s, capsize=3, color="tab:blue")
        ax.set_xticks(range(len(names)), names, rotation=45, ha="right", fontsize=8)
        ax.set_title(f"{ind} ({UNITS[ind]})", fontsize=9)
    fig.tight_layout()
    out = dst / "indicators.png"
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_breakdown(summary: dict, dst: Path) -> Path:
    names = list(summary)
    fig, axes = plt.subplots(1, 4, figsize=(15, 4))
    for ax, ind in zip(axes, INDICATORS):
        comps = list(summary[names[0]]["breakdown"][ind])
        pos = np.zeros(len(names))
        neg = np.zeros(len(names))
        for comp in comps:
            v = np.array([summary[n]["breakdown"][ind].get(comp, 0.0) for n in names], dtype=float)
            v = np.nan_to_num(v)
            base = np.where(v >= 0, pos, neg)
            ax.bar(range(len(names)), v, bottom=base, label=comp)
            pos += np.where(v >= 0, v, 0.0)
            neg += np.where(v < 0, v, 0.0)
        ax.axhline(0.0, color="k", lw=0.5)
        ax.set_xticks(range(len(names)), names, rotation=45, ha="right", fontsize=8)
        ax.set_title(f"{ind} components (%)", fontsize=9)
        ax.legend(fontsize=6)
    fig.tight_layout()
    out = dst / "breakdown.png"
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_learning_curves(src: Path, dst: Path, window: int = 100) -> Path | None:
    runs: dict[str, list[np.ndarray]] = {}
    for p in sorted(src.glob("train_*_seed*.csv")):
        m = _TRAIN.match(p.name)
        if m:
            r = TrainingLog.read_csv(p).column("reward")
            if len(r):
                runs.setdefault(m["slug"], []).append(r)
    if not runs:
        return None
    window = min(window, *(len(r) for curves in runs.values() for r in curves))
    runs = {k: [moving_average(r, window) for r in v] for k, v in runs.items()}
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for k, (slug, curves) in enumerate(runs.items()):
        for j, c in enumerate(curves):
            ax.plot(np.arange(window, window + len(c)), c, color=f"C{k}", lw=0.8, alpha=0.7,
                    label=slug if j == 0 else None)
    ax.set_xlabel("step")
    ax.set_ylabel(f"reward, moving average over {window}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = dst / "learning_curves.png"
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def write_table(summary: dict, dst: Path) -> Path:
    out = dst / "report.csv"
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario", "standard", "n_runs", "do_mean", "do_std", "dose_mean", "dose_std"]
                   + [f"{k}_per_m3_{s}" for k in INDICATORS for s in ("mean", "std")]
                   + [f"delta_{k}_mean" for k in INDICATORS] + ["violation_rate_mean"])
        for name, e in summary.items():
            w.writerow([name, e["standard"], e["n_runs"], e["do"]["mean"], e["do"]["std"],
                        e["dose"]["mean"], e["dose"]["std"]]
                       + [e["per_m3"][k][s] for k in INDICATORS for s in ("mean", "std")]
                       + [e["delta"][k]["mean"] for k in INDICATORS]
                       + [e["violation_rate"]["mean"]])
    return out


def build_report(src, dst) -> list[Path]:
    src, dst = Path(src), Path(dst)
    dst.mkdir(parents=True, exist_ok=True)
    summary = json.loads((src / "summary.json").read_text())
    outs = [write_table(summary, dst), plot_actions(src, dst), plot_indicators(summary, dst),
            plot_breakdown(summary, dst)]
    lc = plot_learning_curves(src, dst)
    if lc is not None:
        outs.append(lc)
    return outs
