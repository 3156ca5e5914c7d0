"""Fixed-step classical RK4 on a shared uniform grid, forward and backward.

The backward integrator is the companion of the forward one for
state/costate sweeps: it walks the same grid from tf down to t0 and feeds
the stored state trajectory to the vector field, using the arithmetic mean
of neighbouring nodes at half-step stage times.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ADJOINT_LABELS, STATE_LABELS


class IntegrationBlowupError(RuntimeError):
    """NaN/Inf appeared mid-integration; carries the offending step index."""

    def __init__(self, step: int, t: float):
        self.step = step
        self.t = t
        super().__init__(f"non-finite values produced at step {step} (t = {t:g})")


class GridMismatchError(ValueError):
    """Two objects that must share a TimeGrid do not."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_i = t0 + i*dt, i = 0..n_steps, with dt = (tf-t0)/n_steps."""

    t0: float
    tf: float
    n_steps: int

    def __post_init__(self):
        if self.tf <= self.t0:
            raise ValueError(f"tf must exceed t0 ({self.tf} <= {self.t0})")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return (self.tf - self.t0) / self.n_steps

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)

    def half_index(self, t: float) -> int:
        """Index on the half-step lattice (node i -> 2i, midpoint -> 2i+1)."""
        k = int(round(2.0 * (t - self.t0) / self.dt))
        return min(max(k, 0), 2 * self.n_steps)

    @classmethod
    def from_dt(cls, t0: float, tf: float, dt: float) -> "TimeGrid":
        n = int(round((tf - t0) / dt))
        return cls(t0, tf, max(n, 1))


@dataclass(frozen=True)
class Trajectory:
    """Values on every node of a TimeGrid; values.shape = (n_steps+1, ...)."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.grid.n_steps + 1:
            raise GridMismatchError(
                f"trajectory has {len(self.values)} rows for a grid of "
                f"{self.grid.n_steps + 1} nodes")

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    def half_values(self) -> np.ndarray:
        """Values on the half-step lattice: nodes and neighbour averages."""
        v = self.values
        out = np.empty((2 * (len(v) - 1) + 1,) + v.shape[1:], dtype=float)
        out[0::2] = v
        out[1::2] = 0.5 * (v[:-1] + v[1:])
        return out


def rk4_forward(f, x0, grid: TimeGrid) -> Trajectory:
    """Integrate dx/dt = f(t, x) from grid.t0 to grid.tf.

    f may return any sequence/array shaped like x0. Raises
    IntegrationBlowupError naming the step at which values went non-finite.
    """
    dt = grid.dt
    x = np.asarray(x0, dtype=float)
    values = np.empty((grid.n_steps + 1,) + x.shape, dtype=float)
    values[0] = x
    t = grid.t0
    for i in range(grid.n_steps):
        k1 = np.asarray(f(t, x), dtype=float)
        k2 = np.asarray(f(t + 0.5 * dt, x + 0.5 * dt * k1), dtype=float)
        k3 = np.asarray(f(t + 0.5 * dt, x + 0.5 * dt * k2), dtype=float)
        k4 = np.asarray(f(t + dt, x + dt * k3), dtype=float)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationBlowupError(i + 1, t + dt)
        values[i + 1] = x
        t = grid.t0 + (i + 1) * dt
    return Trajectory(grid, values)


def rk4_backward(g, lam_f, grid: TimeGrid, state: Trajectory) -> Trajectory:
    """Integrate dlam/dt = g(t, x(t), lam) from tf down to t0.

    state supplies x(t) on the same grid; stage evaluations at t_i - dt/2 use
    the average of the neighbouring state nodes. lam_f is the terminal value
    at tf (values[-1] is exactly lam_f).
    """
    if state.grid != grid:
        raise GridMismatchError("state trajectory is not on the requested grid")
    dt = grid.dt
    lam = np.asarray(lam_f, dtype=float)
    values = np.empty((grid.n_steps + 1,) + lam.shape, dtype=float)
    values[-1] = lam
    xs = state.values
    for i in range(grid.n_steps, 0, -1):
        t = grid.t0 + i * dt
        x_i = xs[i]
        x_mid = 0.5 * (xs[i] + xs[i - 1])
        x_prev = xs[i - 1]
        k1 = np.asarray(g(t, x_i, lam), dtype=float)
        k2 = np.asarray(g(t - 0.5 * dt, x_mid, lam - 0.5 * dt * k1), dtype=float)
        k3 = np.asarray(g(t - 0.5 * dt, x_mid, lam - 0.5 * dt * k2), dtype=float)
        k4 = np.asarray(g(t - dt, x_prev, lam - dt * k3), dtype=float)
        lam = lam - (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(lam)):
            raise IntegrationBlowupError(i - 1, t - dt)
        values[i - 1] = lam
    return Trajectory(grid, values)


def trajectory_to_csv(traj: Trajectory, path, labels=None) -> None:
    """Write `t,<labels>` rows at 17 significant digits with LF endings."""
    v = np.atleast_2d(traj.values)
    if v.ndim != 2:
        raise ValueError("only flat trajectories serialize to CSV")
    if labels is None:
        labels = STATE_LABELS if v.shape[1] == 5 else tuple(
            f"x{i}" for i in range(v.shape[1]))
    if len(labels) != v.shape[1]:
        raise ValueError(f"{len(labels)} labels for {v.shape[1]} columns")
    ts = traj.grid.times()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t," + ",".join(labels) + "\n")
        for t, row in zip(ts, v):
            fh.write(format(t, ".17g") + ","
                     + ",".join(format(c, ".17g") for c in row) + "\n")


def adjoint_to_csv(traj: Trajectory, path) -> None:
    trajectory_to_csv(traj, path, labels=ADJOINT_LABELS)
