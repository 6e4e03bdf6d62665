"""PNG figures for CLI outputs (matplotlib, non-interactive backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .solvers import Field  # noqa: E402

__all__ = ["plot_field", "plot_sweep"]

# fixed metadata keeps the PNG bytes independent of the matplotlib build date
_META = {"Software": None}


def plot_field(u: Field, path: Path | str, title: str = "") -> None:
    """Space-time map and a few time slices of a 1D field (middle row in 2D)."""
    ts = u.tgrid.nodes
    vals = u.values
    if u.grid.dim == 1:
        x = u.grid.x
    else:
        nx, ny = u.grid.shape
        j = ny // 2
        x = u.grid.axis(0)
        vals = vals.reshape(ts.size, nx, ny)[:, :, j]
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4), constrained_layout=True)
    mesh = ax0.pcolormesh(x, ts, vals, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax0, label="u")
    ax0.set_xlabel("x")
    ax0.set_ylabel("t")
    ax0.set_title("u(x, t)")
    for k in np.unique(np.linspace(0, ts.size - 1, 5).round().astype(int)):
        ax1.plot(x, vals[k], label=f"t = {ts[k]:.3g}")
    ax1.set_xlabel("x")
    ax1.set_ylabel("u")
    ax1.legend(fontsize="small")
    ax1.set_title("time slices")
    if title:
        fig.suptitle(title)
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)


def plot_sweep(param: str, values, series: dict[str, list[float]], path: Path | str) -> None:
    """Worst violation against the swept parameter, one line per check."""
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    for name, ys in sorted(series.items()):
        ax.plot(values, ys, marker="o", label=name)
    ax.axhline(0.0, color="grey", lw=0.8)
    ax.set_xlabel(param)
    ax.set_ylabel("worst violation")
    ax.legend(fontsize="small")
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
