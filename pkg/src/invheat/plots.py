"""Figure rendering for the report paths.

Every CLI command that writes delimited output also renders a figure next
to it.  Files only; no interactive backends.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_coefficient",
    "plot_field",
    "plot_convergence",
    "plot_stability",
]

_RC = {
    "figure.figsize": (6.0, 3.8),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "savefig.bbox": "tight",
}


def _save(fig, path):
    fig.savefig(path)
    plt.close(fig)


def plot_coefficient(t, values, path, exact=None, title="recovered diffusivity"):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(t, values, label="recovered", lw=1.2)
        if exact is not None:
            ax.plot(t, exact, "--", label="exact", lw=1.0)
            ax.legend(frameon=False)
        ax.set_xlabel("t")
        ax.set_ylabel("a(t)")
        ax.set_title(title)
        _save(fig, path)


def plot_field(x, t, values, path, title="temperature field"):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        mesh = ax.pcolormesh(x, t, values, shading="auto", cmap="inferno")
        fig.colorbar(mesh, ax=ax, label="u(x,t)")
        ax.set_xlabel("x")
        ax.set_ylabel("t")
        ax.set_title(title)
        _save(fig, path)


def plot_convergence(params, errors, path, title="grid refinement"):
    params = np.asarray(params, dtype=float)
    errors = np.asarray(errors, dtype=float)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.loglog(params, errors, "o-", label="observed")
        ref = errors[0] * (params / params[0]) ** 2
        ax.loglog(params, ref, "k:", label="order 2 reference")
        ax.set_xlabel("h")
        ax.set_ylabel("sup error")
        ax.legend(frameon=False)
        ax.set_title(title)
        _save(fig, path)


def plot_stability(deltas, ratios, path, title="perturbation response"):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(deltas, ratios, "s-")
        ax.set_xscale("log")
        ax.set_xlabel("perturbation size")
        ax.set_ylabel("deviation / perturbation")
        ax.set_title(title)
        _save(fig, path)
