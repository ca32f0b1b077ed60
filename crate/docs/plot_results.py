"""Plot a sigsim results CSV: one figure per metric, lanes as lines, c on the x axis.

    python docs/plot_results.py results.csv --out plots/

Actuated rows are solid, fctl rows dashed. The weighted utilization is drawn
on a secondary axis.
"""
import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

METRICS = {
    "p_empty": "P(queue empty at end of access)",
    "mean_queue": "mean queue at end of access",
    "mean_queue_norm": "mean queue / sqrt(c)",
}


def plot(df: pd.DataFrame, metric: str, label: str, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for (mode, lane), g in df.groupby(["mode", "lane"]):
        g = g.sort_values("c")
        style = "-" if mode == "actuated" else "--"
        color = f"C{(lane - 1) % 10}"
        ci = f"{metric}_ci"
        kw = dict(color=color, ms=3, label=f"lane {lane} ({mode})")
        if ci in g:
            ax.errorbar(g["c"], g[metric], yerr=g[ci], fmt=style + "o", capsize=2, **kw)
        else:
            ax.plot(g["c"], g[metric], style + "o", **kw)
    ax.set_xlabel("cycle length c (slots)")
    ax.set_ylabel(label)
    rho = df.drop_duplicates("c").sort_values("c")
    ax2 = ax.twinx()
    ax2.plot(rho["c"], rho["rho_weighted"], "k:", label="weighted λc/g")
    ax2.set_ylabel("weighted λc/g")
    ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("--out", default=".")
    args = ap.parse_args()
    df = pd.read_csv(args.csv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.csv).stem
    for metric, label in METRICS.items():
        plot(df, metric, label, out / f"{stem}_{metric}.png")


if __name__ == "__main__":
    main()
