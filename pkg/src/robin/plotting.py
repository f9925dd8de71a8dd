"""Static figures for stability curves and ITP p-values.

Figures are written without timestamps and with a fixed SVG hash salt, so the
same inputs give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .stats import greville_abscissae  # noqa: E402

MEASURE_LABELS = {
    "vi": "VI (normalized)",
    "nmi": "1 - NMI",
    "split_join": "split-join (normalized)",
    "ari": "1 - ARI",
}
COLORS = ("#1f4e9c", "#c0392b")

_STYLE = {
    "svg.hashsalt": "robin",
    "svg.fonttype": "none",
    "font.size": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    metadata = {"Date": None} if path.suffix.lower() in (".svg", ".pdf") else {}
    fig.savefig(path, metadata=metadata, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_curves(levels, series: dict, measure: str, path, title: str | None = None,
                spread: bool = True) -> Path:
    """Line chart of the grand-mean curves; replicate min/max shaded when ``spread``.

    ``series`` maps a legend label to a :class:`~robin.robustness.RobustnessCurves`.
    """
    levels = np.asarray(levels)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6, 4))
        for (name, curves), color in zip(series.items(), COLORS * 2):
            ax.plot(levels, curves.grand_mean, "o-", color=color, lw=1.6, ms=4, label=name)
            if spread and len(curves.group_means) > 1:
                ax.fill_between(levels, curves.group_means.min(axis=0),
                                curves.group_means.max(axis=0), color=color, alpha=0.15, lw=0)
        ax.set_xlabel("perturbation level")
        ax.set_ylabel(MEASURE_LABELS.get(measure, measure))
        ax.set_ylim(0, max(0.05, ax.get_ylim()[1]))
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_pvalues(levels, itp, path, alpha: float = 0.05) -> Path:
    """Raw and adjusted ITP p-values per basis component, with the ``alpha`` line."""
    x = greville_abscissae(levels, itp.basis_size)
    width = float(np.min(np.diff(x))) * 0.45 if len(x) > 1 else 0.02
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.bar(x - width / 2, itp.component_pvalues, width, color="#9aa5b1", label="p-value")
        ax.bar(x + width / 2, itp.adjusted_pvalues, width, color=COLORS[0], label="adjusted p-value")
        ax.axhline(alpha, color=COLORS[1], lw=1.2)
        ax.set_ylim(0, 1.02)
        ax.set_xlabel("perturbation level")
        ax.set_ylabel("p-value")
        ax.legend(frameon=False)
        return _save(fig, path)
