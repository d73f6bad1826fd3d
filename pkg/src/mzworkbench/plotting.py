"""Figure rendering for the CLI report path.

Figures are written next to the delimited output with the Agg backend;
PNG metadata is stripped so repeated runs are byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_RC = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "lines.linewidth": 1.4,
}

_SAVE_KW = {"metadata": {"Software": None}, "bbox_inches": "tight"}


def _new_axes():
    plt.rcParams.update(_RC)
    fig, ax = plt.subplots()
    return fig, ax


def _finish(fig, ax, path, xlabel="t", ylabel="value", title=None):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.savefig(Path(path), **_SAVE_KW)
    plt.close(fig)
    return Path(path)


def plot_series(path, series, label=None, title=None, ylabel="value"):
    fig, ax = _new_axes()
    ax.plot(series.times, series.values, label=label)
    return _finish(fig, ax, path, ylabel=ylabel, title=title)


def plot_series_pair(path, first, second, labels, title=None, ylabel="value"):
    fig, ax = _new_axes()
    ax.plot(first.times, first.values, label=labels[0])
    ax.plot(second.times, second.values, "--", label=labels[1])
    return _finish(fig, ax, path, ylabel=ylabel, title=title)


def plot_acf_bands(path, reference, estimates, title=None):
    """Reference ACF with empirical estimates and their 3 SE bands.

    ``estimates`` maps label -> (acf_series, se_series).
    """
    fig, ax = _new_axes()
    ax.plot(reference.times, reference.values, "k-", label="reference")
    for label, (acf, se) in estimates.items():
        ax.plot(acf.times, acf.values, label=label)
        ax.fill_between(
            acf.times,
            acf.values - 3.0 * se.values,
            acf.values + 3.0 * se.values,
            alpha=0.2,
        )
    return _finish(fig, ax, path, ylabel="autocorrelation", title=title)


def plot_residual(path, residual, title=None):
    fig, ax = _new_axes()
    positive = np.maximum(residual.values, 1e-300)
    ax.semilogy(residual.times, positive)
    return _finish(fig, ax, path, ylabel="residual norm", title=title)


def plot_frequency_split(path, frequencies, omega, title=None):
    fig, ax = _new_axes()
    freqs = np.asarray(frequencies, dtype=float)
    if freqs.size:
        ax.stem(np.arange(1, freqs.size + 1), freqs)
    ax.axhline(omega, color="crimson", linestyle="--", label=f"cutoff = {omega:g}")
    return _finish(
        fig, ax, path, xlabel="plane index", ylabel="frequency", title=title
    )


def plot_unboundedness(path, orders, ratios, title=None):
    fig, ax = _new_axes()
    ax.plot(orders, orders, "k--", label="identity")
    ax.plot(orders, ratios, "o", label="measured ratio")
    return _finish(
        fig, ax, path, xlabel="observable order n", ylabel="norm ratio", title=title
    )
