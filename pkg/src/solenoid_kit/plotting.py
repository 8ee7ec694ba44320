"""PNG figures for CLI reports.  matplotlib is an optional dependency and is
imported only when a figure is requested."""

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError("figures need matplotlib: pip install 'artifact[plot]'") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path):
    fig.tight_layout()
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None})
    fig.clf()


def plot_cascade(x, values, path, title="cascade product"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(x, np.abs(values), lw=1.2, label=r"$|\hat\varphi|$")
    ax.plot(x, np.real(values), lw=0.8, ls="--", label="Re")
    ax.set_xlabel("x")
    ax.set_title(title)
    ax.legend(frameon=False)
    _save(fig, path)
    plt.close(fig)


def plot_bars(values, path, title, ylabel):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(np.arange(len(values)), values, width=0.8)
    ax.set_xlabel("cell")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    _save(fig, path)
    plt.close(fig)


def plot_series(y, path, title, xlabel, ylabel):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(np.arange(len(y)), y, marker="o", ms=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    _save(fig, path)
    plt.close(fig)


def plot_histogram(samples, path, title, xlabel):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.hist(samples, bins=40)
    ax.set_xlabel(xlabel)
    ax.set_title(title)
    _save(fig, path)
    plt.close(fig)
