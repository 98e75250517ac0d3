"""Figure rendering for CLI runs (headless, file output only).

Every function takes objects the caller already computed, writes one PNG,
and returns the path. matplotlib is imported lazily with the Agg backend
so library users who never plot pay nothing for it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core1d import lamellar_energy, lamellar_profile, optimal_k, solve_potential_1d


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    _plt().close(fig)
    return path


def save_field_image(u, gamma: float, path: str | Path, note: str = "") -> Path:
    """The spin field as a two-tone ribbon with the domain's true aspect.

    The thin direction is vertical, so stripe patterns show as vertical
    bands; values[x, y] maps straight onto imshow's (row, column).
    """
    plt = _plt()
    eps = u.grid.lengths[0]
    fig, ax = plt.subplots(figsize=(8.0, max(0.8, 8.0 * eps)))
    ax.imshow(
        u.values,
        origin="lower",
        extent=(0.0, 1.0, 0.0, eps),
        cmap="RdBu",
        vmin=-1.0,
        vmax=1.0,
        interpolation="nearest",
        aspect="auto",
    )
    ax.set_xlabel("y")
    ax.set_ylabel("x")
    title = f"gamma={gamma:g}, eps={eps:g}"
    if note:
        title += f"  ({note})"
    ax.set_title(title, fontsize=10)
    ax.set_yticks([0.0, eps])
    return _save(fig, path)


def save_trace_plot(report, path: str | Path) -> Path:
    """Best energy and acceptance rate against the cooling stages."""
    plt = _plt()
    stages = np.arange(1, len(report.best_trace) + 1)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(stages, report.best_trace, color="tab:blue", lw=1.5, label="best energy")
    ax.set_xlabel("cooling stage")
    ax.set_ylabel("best energy", color="tab:blue")
    ax2 = ax.twinx()
    ax2.plot(
        stages,
        report.acceptance_trace,
        color="tab:orange",
        lw=1.0,
        alpha=0.8,
        label="acceptance",
    )
    ax2.set_ylabel("acceptance rate", color="tab:orange")
    ax2.set_yscale("log")
    ax.set_title(
        f"seed={report.seed}: stripes={report.stripes}, "
        f"E={report.energy.total:.6g}",
        fontsize=10,
    )
    fig.tight_layout()
    return _save(fig, path)


def save_staircase_plot(gammas, k_opts, energies, path: str | Path) -> Path:
    """Optimal interface count and optimal energy over a gamma sweep."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.step(gammas, k_opts, where="post", color="tab:blue", lw=1.5)
    ax.set_xlabel("gamma")
    ax.set_ylabel("optimal k", color="tab:blue")
    ax.yaxis.get_major_locator().set_params(integer=True)
    ax2 = ax.twinx()
    ax2.plot(gammas, energies, color="tab:orange", lw=1.0, alpha=0.8)
    ax2.set_ylabel("optimal energy", color="tab:orange")
    ax.set_title("optimal interface count", fontsize=10)
    fig.tight_layout()
    return _save(fig, path)


def save_potential_plot(k: int, path: str | Path, samples: int = 1001) -> Path:
    """The k-interface profile with its potential and potential slope."""
    plt = _plt()
    y = np.linspace(0.0, 1.0, samples)
    u = lamellar_profile(k)
    v = solve_potential_1d(u, 0.0)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.4, 5.2), sharex=True)
    ax1.plot(y, u.evaluate(y), color="tab:blue", lw=1.2, label=f"u_{k}")
    ax1.plot(y, 4.0 * k * v.value(y), color="tab:green", lw=1.2, label=f"{4 * k} v_{k}")
    ax1.legend(loc="upper right", fontsize=9)
    ax1.set_ylabel("profile / scaled potential")
    ax2.plot(y, v.derivative(y), color="tab:red", lw=1.2)
    ax2.axhline(1.0 / (2 * k), color="gray", lw=0.8, ls="--")
    ax2.axhline(-1.0 / (2 * k), color="gray", lw=0.8, ls="--")
    ax2.set_xlabel("y")
    ax2.set_ylabel(f"v_{k}'")
    ax1.set_title(f"k = {k} lamellar profile and potential", fontsize=10)
    fig.tight_layout()
    return _save(fig, path)


def save_stability_plot(rows: list[dict], path: str | Path) -> Path:
    """Measured stability thresholds against the certified lower bound.

    rows: dicts with keys k, gamma, eps_star (None when no instability
    was found), paper_bound.
    """
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ks = sorted({row["k"] for row in rows})
    cmap = plt.get_cmap("tab10")
    for i, k in enumerate(ks):
        sub = sorted((r for r in rows if r["k"] == k), key=lambda r: r["gamma"])
        gs = [r["gamma"] for r in sub]
        ax.plot(
            gs,
            [r["paper_bound"] for r in sub],
            color=cmap(i),
            ls="--",
            lw=1.0,
            label=f"k={k} bound",
        )
        pts = [(r["gamma"], r["eps_star"]) for r in sub if r["eps_star"] is not None]
        if pts:
            ax.plot(*zip(*pts), color=cmap(i), marker="o", ms=4, lw=1.2,
                    label=f"k={k} threshold")
    ax.set_xlabel("gamma")
    ax.set_ylabel("width")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    ax.set_title("lamellar stability threshold vs certified bound", fontsize=10)
    fig.tight_layout()
    return _save(fig, path)


def save_cascade_plot(rows, path: str | Path) -> Path:
    """Observed vs predicted stripe counts, with each best field below."""
    plt = _plt()
    n = len(rows)
    fig, axes = plt.subplots(
        n + 1, 1, figsize=(7.0, 2.6 + 0.75 * n),
        gridspec_kw={"height_ratios": [3.0] + [1.0] * n},
    )
    top = axes[0]
    gammas = [row.gamma for row in rows]
    top.plot(gammas, [row.predicted_k for row in rows], "s--", color="gray",
             ms=6, label="predicted")
    top.plot(gammas, [row.stripes for row in rows], "o", color="tab:blue",
             ms=5, label="observed")
    top.set_xscale("log")
    top.set_xlabel("gamma")
    top.set_ylabel("stripe count")
    top.yaxis.get_major_locator().set_params(integer=True)
    top.legend(fontsize=9)
    for ax, row in zip(axes[1:], rows):
        ax.imshow(
            row.report.best.values,
            origin="lower",
            cmap="RdBu",
            vmin=-1.0,
            vmax=1.0,
            interpolation="nearest",
            aspect="auto",
        )
        ax.set_xticks([])
        ax.set_yticks([])
        ax.set_ylabel(f"{row.gamma:g}", rotation=0, ha="right", va="center", fontsize=9)
    fig.suptitle("stripe cascade", fontsize=11)
    fig.tight_layout()
    return _save(fig, path)


def save_gamma_limit_plot(rows, gamma: float, path: str | Path) -> Path:
    """Rescaled energies and per-area distances along the width refinement."""
    plt = _plt()
    k = min(optimal_k(gamma))
    target = lamellar_energy(k, gamma)
    js = [row.j for row in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.4))
    ax1.plot(js, [row.rescaled_energy for row in rows], "o-", color="tab:blue")
    ax1.axhline(target, color="gray", ls="--", lw=1.0, label=f"flat k={k}")
    ax1.set_xlabel("refinement j")
    ax1.set_ylabel("rescaled energy")
    ax1.legend(fontsize=9)
    ax2.plot(js, [row.l1_per_area for row in rows], "o-", color="tab:red")
    ax2.set_xlabel("refinement j")
    ax2.set_ylabel("L1 distance per area")
    fig.suptitle(f"thin-width refinement at gamma={gamma:g}", fontsize=11)
    fig.tight_layout()
    return _save(fig, path)
