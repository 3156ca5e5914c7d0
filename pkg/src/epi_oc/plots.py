"""Figure rendering for run and sweep reports.

Figures are batch artifacts written next to the CSV output; everything uses
the Agg backend so the CLI never needs a display.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

_POP_STYLE = (("S", "tab:blue"), ("U1", "tab:red"), ("U2", "tab:orange"),
              ("E", "tab:green"))


def _new_axes(nrows=1, ncols=1, width=6.0, height=3.2):
    fig, axes = plt.subplots(nrows, ncols,
                             figsize=(width * ncols, height * nrows), dpi=150)
    return fig, axes


def render_run_figures(state, controls, adjoint, out_dir) -> dict:
    """Write states/controls (and adjoints, if given) PNGs; returns paths."""
    out = Path(out_dir)
    ts = state.grid.times()
    paths = {}

    fig, (ax_pop, ax_info) = _new_axes(1, 2)
    for idx, (label, color) in enumerate(_POP_STYLE):
        ax_pop.plot(ts, state.values[:, idx], label=label, color=color, lw=1.4)
    ax_pop.set_xlabel("time (days)")
    ax_pop.set_ylabel("population")
    ax_pop.legend(fontsize=8)
    ax_pop.grid(alpha=0.3)
    ax_info.plot(ts, state.values[:, 4], color="tab:purple", lw=1.4)
    ax_info.set_xlabel("time (days)")
    ax_info.set_ylabel("information density Z")
    ax_info.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out / "states.png")
    plt.close(fig)
    paths["states_figure"] = str(out / "states.png")

    fig, ax = _new_axes()
    ax.plot(ts, controls.u1, label="u1 (prevention)", color="tab:blue", lw=1.4)
    ax.plot(ts, controls.u2, label="u2 (treatment)", color="tab:red", lw=1.4)
    ax.set_xlabel("time (days)")
    ax.set_ylabel("control intensity")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out / "controls.png")
    plt.close(fig)
    paths["controls_figure"] = str(out / "controls.png")

    if adjoint is not None:
        fig, ax = _new_axes()
        for i in range(5):
            ax.plot(ts, adjoint.values[:, i], label=f"l{i + 1}", lw=1.2)
        ax.set_xlabel("time (days)")
        ax.set_ylabel("adjoint")
        ax.legend(fontsize=8, ncol=5)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        fig.savefig(out / "adjoints.png")
        plt.close(fig)
        paths["adjoints_figure"] = str(out / "adjoints.png")
    return paths


def render_sweep_figure(param: str, swept, out_dir) -> dict:
    """Overlay U1(t) and the controls across swept values, from the CSVs."""
    out = Path(out_dir)
    fig, (ax_u1, ax_c) = _new_axes(1, 2)
    for value, run in swept:
        states = np.genfromtxt(run.artifacts["states"], delimiter=",", names=True)
        ctrls = np.genfromtxt(run.artifacts["controls"], delimiter=",", names=True)
        label = f"{param} = {value:g}"
        ax_u1.plot(states["t"], states["U1"], lw=1.4, label=label)
        ax_c.plot(ctrls["t"], ctrls["u1"], lw=1.2, label=f"u1, {label}")
        ax_c.plot(ctrls["t"], ctrls["u2"], lw=1.2, ls="--", label=f"u2, {label}")
    ax_u1.set_xlabel("time (days)")
    ax_u1.set_ylabel("drug users U1")
    ax_u1.legend(fontsize=8)
    ax_u1.grid(alpha=0.3)
    ax_c.set_xlabel("time (days)")
    ax_c.set_ylabel("control intensity")
    ax_c.legend(fontsize=7)
    ax_c.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out / "sweep.png")
    plt.close(fig)
    return {"sweep_figure": str(out / "sweep.png")}
