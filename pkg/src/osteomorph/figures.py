"""Mean-with-error-bar figures for grouped shape statistics.

Renders one SVG per (metric, bone) with matplotlib.  Output is kept
byte-reproducible: the SVG hash salt is pinned, the creation date is
stripped, and a provenance comment is injected instead.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .masks import CATEGORIES, CLASS_NAMES
from .shape import GroupStats, METRIC_NAMES

_BAR_COLORS = ("#c44e52", "#55a868", "#4c72b0")


def _inject_comment(path: Path, comment: str) -> None:
    text = path.read_text()
    first_newline = text.index("\n") + 1
    path.write_text(text[:first_newline] + f"<!-- {comment} -->\n" + text[first_newline:])


def render_group_stats(
    stats: list[GroupStats], out_dir: str | Path, provenance: str
) -> list[Path]:
    """Write one bar plot per metric per bone present in ``stats``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plt.rcParams["svg.hashsalt"] = "osteomorph"

    by_plot: dict[tuple[str, int], dict] = {}
    for row in stats:
        by_plot.setdefault((row.metric, row.class_id), {})[row.category] = row

    written: list[Path] = []
    for metric in METRIC_NAMES:
        for class_id in sorted({cid for (m, cid) in by_plot if m == metric}):
            rows = by_plot[(metric, class_id)]
            cats = [c for c in CATEGORIES if c in rows]
            fig, ax = plt.subplots(figsize=(4.2, 3.2))
            ax.bar(
                range(len(cats)),
                [rows[c].mean for c in cats],
                yerr=[rows[c].std for c in cats],
                capsize=4,
                color=[_BAR_COLORS[CATEGORIES.index(c)] for c in cats],
            )
            ax.set_xticks(range(len(cats)))
            ax.set_xticklabels([c.value for c in cats])
            ax.set_ylabel(metric)
            ax.set_title(f"{CLASS_NAMES[class_id]} {metric} by pain category")
            fig.tight_layout()
            path = out_dir / f"{metric}_{CLASS_NAMES[class_id]}.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            _inject_comment(path, provenance)
            written.append(path)
    return written
