"""Matplotlib figure rendering for the report paths.

Figures are written next to the delimited outputs; every panel has a tidy CSV
counterpart so external tooling can re-render.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_backtest_figures(out_dir, log, open_mult: float, close_level: float):
    """Spread-with-bands and cumulative-P&L panels; returns the written paths."""
    paths = []

    fig, ax = plt.subplots(figsize=(9, 4.5))
    t = range(len(log.spread))
    ax.plot(t, log.zscores, lw=0.9, color="tab:blue", label="normalized spread")
    ax.axhline(open_mult, color="tab:red", ls="--", lw=0.8, label="open band")
    ax.axhline(-open_mult, color="tab:red", ls="--", lw=0.8)
    ax.axhline(close_level, color="tab:gray", ls=":", lw=0.8, label="close level")
    ax.axhline(-close_level, color="tab:gray", ls=":", lw=0.8)
    in_pos = log.positions != 0
    if in_pos.any():
        ax.fill_between(t, ax.get_ylim()[0], ax.get_ylim()[1], where=in_pos,
                        color="tab:orange", alpha=0.12, label="position held")
    ax.set_xlabel("t")
    ax.set_ylabel("z")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title("Normalized spread and trading bands")
    p = f"{out_dir}/spread.png"
    fig.savefig(p, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(9, 4.5))
    ax.plot(t, log.cum_pnl, lw=1.1, color="tab:green")
    ax.set_xlabel("t")
    ax.set_ylabel("cumulative P&L")
    ax.set_title("Cumulative P&L")
    p = f"{out_dir}/cum_pnl.png"
    fig.savefig(p, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(p)
    return paths


def render_sweep_figure(out_dir, rows):
    """Sharpe-by-k panel, one line per (proxy, q, gamma) combination."""
    groups = {}
    for r in rows:
        if r.get("error"):
            continue
        key = (r["proxy"], r["q"], r["gamma"], r.get("method", "ppc"))
        groups.setdefault(key, []).append((r["k"], r["sharpe"]))
    if not groups:
        return None
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (proxy, q, gamma, method), pts in sorted(groups.items()):
        pts.sort()
        ks = [p[0] for p in pts]
        sr = [p[1] for p in pts]
        ax.plot(ks, sr, marker="o",
                label=f"{method}:{proxy} q={q} gamma={gamma:g}")
    ax.set_xlabel("k (sparsity)")
    ax.set_ylabel("Sharpe ratio")
    ax.set_title("Sharpe ratio by sparsity level")
    ax.legend(fontsize=7)
    p = f"{out_dir}/sharpe_by_k.png"
    fig.savefig(p, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return p
