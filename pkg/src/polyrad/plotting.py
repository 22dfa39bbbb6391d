"""Figure rendering for the CLI report paths (matplotlib, Agg backend).

Each figure is redundant with a two-column .dat file written next to it, so
reports remain reproducible without matplotlib.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_profile(path: Path, r, values, title: str, ylabel: str = "u(r)",
                 logx: bool = False):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(r, values, lw=1.2)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_kernel_comparison(path: Path, r, curves: dict, title: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, vals in curves.items():
        ax.plot(r, vals, lw=1.2, label=label)
    ax.set_xlabel("r")
    ax.set_ylabel("G")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_branch_diagram(path: Path, lambdas, sup_norms, title: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(lambdas, sup_norms, "o-", ms=3, lw=1.0)
    ax.set_xlabel("lambda")
    ax.set_ylabel("sup |u|")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_term_bars(path: Path, terms: dict, title: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    names = list(terms)
    vals = [terms[k] for k in names]
    ax.bar(range(len(names)), vals)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
    ax.set_title(title)
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_ratio_scatter(path: Path, rho, ratios, title: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(rho, ratios, ".", ms=3)
    ax.set_xlabel("|x - y|")
    ax.set_ylabel("|G| / majorant")
    ax.set_xscale("log")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
