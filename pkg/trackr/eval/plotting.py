"""
``trackr.eval.plotting`` -- precision plots with matplotlib.
"""
import os
from typing import Any, Dict, Mapping, Optional

import numpy as np
from matplotlib.axes import Axes
from matplotlib.figure import Figure

from .metrics import EvalReport

__license__ = 'MIT'


def plot_precision(ax: Axes, curves: Mapping[str, np.ndarray],
                   marks: Optional[Mapping[str, float]] = None, **kw: Any) -> None:
    """Plot precision over location-error threshold.

    :param ax: axes to plot into.
    :param curves: label -> precision at thresholds 0, 1, 2, ... px.
    :param marks: label -> threshold to draw a vertical guide at.

    All keywords are passed to ``ax.plot``.
    """
    for label, curve in curves.items():
        curve = np.asarray(curve)
        ax.plot(np.arange(curve.size), curve, label=label, **kw)
    for label, t in (marks or {}).items():
        ax.axvline(t, color='0.6', lw=0.8, ls='--')
        ax.text(t, 0.02, f' {label}', color='0.4', fontsize='small')

    ax.set_xlabel('location error threshold (px)')
    ax.set_ylabel('precision')
    ax.set_ylim(0, 1.02)
    ax.set_xlim(left=0)
    ax.grid(True, alpha=0.3)
    if len(curves) > 0:
        ax.legend(loc='lower right', fontsize='small')


def precision_figure(rep: EvalReport, title: Optional[str] = None,
                     per_target: bool = True) -> Figure:
    """Figure with the dataset curve and, optionally, the per-target ones."""
    fig = Figure(figsize=(5, 4), dpi=100)
    ax = fig.add_subplot(111)
    curves: Dict[str, np.ndarray] = {}
    if per_target and len(rep.per_target) > 1:
        for tid, r in rep.per_target.items():
            curves[tid] = r.precision
    curves[f'mean (CLE {rep.cle:.1f} px)'] = rep.precision
    plot_precision(ax, curves, marks={'20 px': 20, '50 px': 50})
    if title is not None:
        ax.set_title(title)
    fig.tight_layout()
    return fig


def save_precision_plot(rep: EvalReport, out_dir: str, fn: str = 'precision.png',
                        title: Optional[str] = None) -> str:
    path = os.path.join(out_dir, fn)
    precision_figure(rep, title).savefig(path)
    return path
