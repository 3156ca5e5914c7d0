"""Cost functional, Hamiltonian, adjoint system and forward-backward sweep.

The control problem minimizes the integral of B1*U1 + B2*u1^4 + B3*u2^2
over a fixed horizon, subject to the controlled model dynamics with
prevention intensity u1 in [0, u1max] and treatment rate u2 in [0, u2max].

The optimality system couples the state equations (forward, given initial
conditions), the adjoint equations (backward, zero terminal values) and the
pointwise minimization of the Hamiltonian, which yields

    u1 = clamp(cbrt(rho*S*Z*(l1 - l4) / (4*B2)), 0, u1max)
    u2 = clamp((l2 - l3)*U1 / (2*B3),            0, u2max)

The sweep iterates forward integration, backward integration and a relaxed
control update until state, adjoint and both controls pass the relative
1-norm stopping test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrators import (GridMismatchError, IntegrationBlowupError, TimeGrid,
                          Trajectory)
from .model import ModelParams, PreconditionError, _rhs, _rhs_core

#: sweep case selectors: which controls participate
CASE_BOTH = 3
CASE_U1_ONLY = 1
CASE_U2_ONLY = 2
VALID_CASES = (CASE_U1_ONLY, CASE_U2_ONLY, CASE_BOTH)


@dataclass(frozen=True)
class ControlGrid:
    """Controls sampled on the nodes of a TimeGrid."""

    grid: TimeGrid
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        n = self.grid.n_steps + 1
        if len(self.u1) != n or len(self.u2) != n:
            raise GridMismatchError(
                f"control arrays of length {len(self.u1)}/{len(self.u2)} "
                f"for a grid of {n} nodes")

    @classmethod
    def zeros(cls, grid: TimeGrid) -> "ControlGrid":
        n = grid.n_steps + 1
        return cls(grid, np.zeros(n), np.zeros(n))

    @classmethod
    def constant(cls, grid: TimeGrid, u1: float, u2: float) -> "ControlGrid":
        n = grid.n_steps + 1
        return cls(grid, np.full(n, float(u1)), np.full(n, float(u2)))

    def to_csv(self, path) -> None:
        ts = self.grid.times()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t,u1,u2\n")
            for t, a, b in zip(ts, self.u1, self.u2):
                fh.write(f"{format(t, '.17g')},{format(a, '.17g')},"
                         f"{format(b, '.17g')}\n")


@dataclass(frozen=True)
class SweepResult:
    """Converged (or budget-exhausted) output of the forward-backward sweep."""

    state: Trajectory
    adjoint: Trajectory
    controls: ControlGrid
    cost: float
    iterations: int
    converged: bool
    convergence_history: np.ndarray
    case: int


@dataclass(frozen=True)
class SweepOptions:
    delta: float = 1e-3          # relative 1-norm stopping tolerance
    max_iterations: int = 500
    relaxation: float = 0.5      # weight on the freshly characterized control


def cost_functional(state: Trajectory, controls: ControlGrid,
                    params: ModelParams) -> float:
    """Composite-trapezoid value of the cost integral on the shared grid."""
    if controls.grid != state.grid:
        raise GridMismatchError("state and controls live on different grids")
    u1_t = state.values[:, 1]
    integrand = (params.B1 * u1_t + params.B2 * controls.u1 ** 4
                 + params.B3 * controls.u2 ** 2)
    w = np.ones_like(integrand)
    w[0] = w[-1] = 0.5
    return float(state.grid.dt * np.dot(w, integrand))


def hamiltonian(x, u, lam, params: ModelParams) -> float:
    """Running cost plus adjoint-weighted controlled dynamics."""
    u1, u2 = u
    l1, l2, l3, l4, l5 = lam
    f = _rhs(params, x, u1, u2)
    running = params.B1 * x[1] + params.B2 * u1 ** 4 + params.B3 * u2 ** 2
    return float(running + l1 * f[0] + l2 * f[1] + l3 * f[2]
                 + l4 * f[3] + l5 * f[4])


def hamiltonian_control_gradient(x, u, lam, params: ModelParams) -> tuple:
    """(dH/du1, dH/du2) at a point; zero at interior optimal controls."""
    S, U1, _, _, Z = x
    u1, u2 = u
    l1, l2, l3, l4, _ = lam
    g1 = 4.0 * params.B2 * u1 ** 3 - (l1 - l4) * params.rho * S * Z
    g2 = 2.0 * params.B3 * u2 - (l2 - l3) * U1
    return g1, g2


def _adjoint_core(b1, b2, mu, rho, d1, d2, th, a, b, a0, B1,
                  S, U1, U2, Z, u1, u2, l1, l2, l3, l4, l5):
    """Single source of the adjoint equations (equals -dH/dx componentwise)."""
    rho_u1 = u1 * rho
    dl1 = l1 * b1 * U1 + l1 * mu + l1 * rho_u1 * Z - l2 * b1 * U1 - l4 * rho_u1 * Z
    dl2 = (l1 * b1 * S - l2 * b1 * S + l2 * u2 - l2 * b2 * U2 + l2 * mu
           + l2 * d1 - l3 * u2 + l3 * b2 * U2
           - l5 * a / (1.0 + b * U1) ** 2 - B1)
    dl3 = -l2 * b2 * U1 + l3 * b2 * U1 + l3 * mu + l3 * d2
    dl4 = l4 * mu + l4 * th - l1 * th
    dl5 = l1 * rho_u1 * S - l4 * rho_u1 * S + l5 * a0
    return (dl1, dl2, dl3, dl4, dl5)


def adjoint_rhs(x, u, lam, params: ModelParams):
    """Right-hand side of the adjoint system."""
    S, U1, U2, _, Z = x
    u1, u2 = u
    l1, l2, l3, l4, l5 = lam
    return _adjoint_core(params.beta1, params.beta2, params.mu, params.rho,
                         params.delta1, params.delta2, params.theta,
                         params.a, params.b, params.a0, params.B1,
                         S, U1, U2, Z, u1, u2, l1, l2, l3, l4, l5)


def characterize_controls(x, lam, params: ModelParams, case: int = CASE_BOTH):
    """Pointwise optimal controls from the Hamiltonian minimality condition.

    x and lam hold state/adjoint components along the last axis, so a single
    point (5,) and a whole trajectory (n, 5) both work. Case 1 pins u2 to
    zero, case 2 pins u1 to zero, case 3 frees both.
    """
    if case not in VALID_CASES:
        raise ValueError(f"case must be one of {VALID_CASES}, got {case}")
    xa = np.asarray(x, dtype=float)
    la = np.asarray(lam, dtype=float)
    S, U1, Z = xa[..., 0], xa[..., 1], xa[..., 4]
    l1, l2, l3, l4 = la[..., 0], la[..., 1], la[..., 2], la[..., 3]
    raw1 = np.cbrt(params.rho * S * Z * (l1 - l4) / (4.0 * params.B2))
    raw2 = (l2 - l3) * U1 / (2.0 * params.B3)
    u1 = np.clip(raw1, 0.0, params.u1max)
    u2 = np.clip(raw2, 0.0, params.u2max)
    if case == CASE_U1_ONLY:
        u2 = np.zeros_like(u2)
    elif case == CASE_U2_ONLY:
        u1 = np.zeros_like(u1)
    return u1, u2


def _half_lattice(values: np.ndarray) -> np.ndarray:
    out = np.empty(2 * (len(values) - 1) + 1, dtype=float)
    out[0::2] = values
    out[1::2] = 0.5 * (values[:-1] + values[1:])
    return out


def integrate_state(params: ModelParams, x0, grid: TimeGrid,
                    controls: ControlGrid) -> Trajectory:
    """Forward RK4 of the controlled system; stages see linearly
    interpolated controls (node average at half steps).

    Runs an unrolled scalar loop for speed; it reproduces rk4_forward on the
    equivalent time-dependent field bit for bit (pinned by a test).
    """
    if (np.any(controls.u1 < 0.0) or np.any(controls.u1 > params.u1max)
            or np.any(controls.u2 < 0.0) or np.any(controls.u2 > params.u2max)):
        raise PreconditionError("control grid leaves the admissible box")
    u1h = _half_lattice(controls.u1).tolist()
    u2h = _half_lattice(controls.u2).tolist()
    pr = (params.Lambda, params.beta1, params.beta2, params.mu, params.rho,
          params.delta1, params.delta2, params.theta, params.a, params.b,
          params.a0)

    n = grid.n_steps
    dt = grid.dt
    hd, d6 = 0.5 * dt, dt / 6.0
    xa, xb, xc, xd, xe = (float(v) for v in x0)
    values = np.empty((n + 1, 5))
    values[0] = (xa, xb, xc, xd, xe)
    isfinite = math.isfinite
    for i in range(n):
        k = 2 * i
        u1a, u2a = u1h[k], u2h[k]
        u1m, u2m = u1h[k + 1], u2h[k + 1]
        u1b, u2b = u1h[k + 2], u2h[k + 2]
        k1 = _rhs_core(*pr, xa, xb, xc, xd, xe, u1a, u2a)
        k2 = _rhs_core(*pr, xa + hd * k1[0], xb + hd * k1[1], xc + hd * k1[2],
                       xd + hd * k1[3], xe + hd * k1[4], u1m, u2m)
        k3 = _rhs_core(*pr, xa + hd * k2[0], xb + hd * k2[1], xc + hd * k2[2],
                       xd + hd * k2[3], xe + hd * k2[4], u1m, u2m)
        k4 = _rhs_core(*pr, xa + dt * k3[0], xb + dt * k3[1], xc + dt * k3[2],
                       xd + dt * k3[3], xe + dt * k3[4], u1b, u2b)
        xa = xa + d6 * (((k1[0] + 2.0 * k2[0]) + 2.0 * k3[0]) + k4[0])
        xb = xb + d6 * (((k1[1] + 2.0 * k2[1]) + 2.0 * k3[1]) + k4[1])
        xc = xc + d6 * (((k1[2] + 2.0 * k2[2]) + 2.0 * k3[2]) + k4[2])
        xd = xd + d6 * (((k1[3] + 2.0 * k2[3]) + 2.0 * k3[3]) + k4[3])
        xe = xe + d6 * (((k1[4] + 2.0 * k2[4]) + 2.0 * k3[4]) + k4[4])
        if not (isfinite(xa) and isfinite(xb) and isfinite(xc)
                and isfinite(xd) and isfinite(xe)):
            raise IntegrationBlowupError(i + 1, grid.t0 + (i + 1) * dt)
        values[i + 1] = (xa, xb, xc, xd, xe)
    return Trajectory(grid, values)


def integrate_adjoint(params: ModelParams, grid: TimeGrid, state: Trajectory,
                      controls: ControlGrid) -> Trajectory:
    """Backward RK4 of the adjoint system with zero terminal values.

    Mirrors rk4_backward (neighbour-average states at half steps) with the
    same unrolled-loop treatment as integrate_state.
    """
    if state.grid != grid:
        raise GridMismatchError("state trajectory is not on the requested grid")
    u1h = _half_lattice(controls.u1).tolist()
    u2h = _half_lattice(controls.u2).tolist()
    xs = state.values.tolist()
    pr = (params.beta1, params.beta2, params.mu, params.rho, params.delta1,
          params.delta2, params.theta, params.a, params.b, params.a0,
          params.B1)

    n = grid.n_steps
    dt = grid.dt
    hd, d6 = 0.5 * dt, dt / 6.0
    la = lb = lc = ld = le = 0.0
    values = np.empty((n + 1, 5))
    values[-1] = 0.0
    isfinite = math.isfinite
    for i in range(n, 0, -1):
        xi = xs[i]
        xp = xs[i - 1]
        xm = (0.5 * (xi[0] + xp[0]), 0.5 * (xi[1] + xp[1]),
              0.5 * (xi[2] + xp[2]), 0.5 * (xi[4] + xp[4]))
        k = 2 * i
        u1a, u2a = u1h[k], u2h[k]
        u1m, u2m = u1h[k - 1], u2h[k - 1]
        u1b, u2b = u1h[k - 2], u2h[k - 2]
        k1 = _adjoint_core(*pr, xi[0], xi[1], xi[2], xi[4], u1a, u2a,
                           la, lb, lc, ld, le)
        k2 = _adjoint_core(*pr, xm[0], xm[1], xm[2], xm[3], u1m, u2m,
                           la - hd * k1[0], lb - hd * k1[1], lc - hd * k1[2],
                           ld - hd * k1[3], le - hd * k1[4])
        k3 = _adjoint_core(*pr, xm[0], xm[1], xm[2], xm[3], u1m, u2m,
                           la - hd * k2[0], lb - hd * k2[1], lc - hd * k2[2],
                           ld - hd * k2[3], le - hd * k2[4])
        k4 = _adjoint_core(*pr, xp[0], xp[1], xp[2], xp[4], u1b, u2b,
                           la - dt * k3[0], lb - dt * k3[1], lc - dt * k3[2],
                           ld - dt * k3[3], le - dt * k3[4])
        la = la - d6 * (((k1[0] + 2.0 * k2[0]) + 2.0 * k3[0]) + k4[0])
        lb = lb - d6 * (((k1[1] + 2.0 * k2[1]) + 2.0 * k3[1]) + k4[1])
        lc = lc - d6 * (((k1[2] + 2.0 * k2[2]) + 2.0 * k3[2]) + k4[2])
        ld = ld - d6 * (((k1[3] + 2.0 * k2[3]) + 2.0 * k3[3]) + k4[3])
        le = le - d6 * (((k1[4] + 2.0 * k2[4]) + 2.0 * k3[4]) + k4[4])
        if not (isfinite(la) and isfinite(lb) and isfinite(lc)
                and isfinite(ld) and isfinite(le)):
            raise IntegrationBlowupError(i - 1, grid.t0 + (i - 1) * dt)
        values[i - 1] = (la, lb, lc, ld, le)
    return Trajectory(grid, values)


def _rel_change(new: np.ndarray, old: np.ndarray) -> float:
    denom = float(np.sum(np.abs(new)))
    diff = float(np.sum(np.abs(new - old)))
    if denom == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / denom


def forward_backward_sweep(params: ModelParams, x0, grid: TimeGrid,
                           case: int = CASE_BOTH,
                           opts: SweepOptions = SweepOptions()) -> SweepResult:
    """Solve the optimality system by forward-backward sweeping.

    Starts from identically zero controls, integrates states forward and
    adjoints backward, re-characterizes the controls and relaxes the update.
    Stops when state, adjoint and both controls all change by less than
    opts.delta in relative 1-norm, or returns converged=False once the
    iteration budget is spent. The reported control grid is the pure
    characterization from the final state/adjoint pair, so re-applying the
    optimality formulas to the result reproduces it exactly.
    """
    if case not in VALID_CASES:
        raise ValueError(f"case must be one of {VALID_CASES}, got {case}")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (5,) or not np.all(np.isfinite(x0)) or np.any(x0 < 0.0):
        raise PreconditionError(f"infeasible initial state {x0}")

    n = grid.n_steps + 1
    u1 = np.zeros(n)
    u2 = np.zeros(n)
    state = adjoint = None
    u1_char = u2_char = None
    history = []
    converged = False
    iterations = 0

    while iterations < opts.max_iterations:
        iterations += 1
        prev_state, prev_adjoint = state, adjoint
        controls = ControlGrid(grid, u1, u2)
        state = integrate_state(params, x0, grid, controls)
        adjoint = integrate_adjoint(params, grid, state, controls)
        u1_char, u2_char = characterize_controls(
            state.values, adjoint.values, params, case)
        u1_new = opts.relaxation * u1_char + (1.0 - opts.relaxation) * u1
        u2_new = opts.relaxation * u2_char + (1.0 - opts.relaxation) * u2

        measures = [_rel_change(u1_new, u1), _rel_change(u2_new, u2)]
        if prev_state is not None:
            measures.append(_rel_change(state.values, prev_state.values))
            measures.append(_rel_change(adjoint.values, prev_adjoint.values))
        else:
            measures.append(math.inf)
        change = max(measures)
        history.append(change)
        u1, u2 = u1_new, u2_new
        if change <= opts.delta:
            converged = True
            break

    final_controls = ControlGrid(grid, np.asarray(u1_char), np.asarray(u2_char))
    cost = cost_functional(state, final_controls, params)
    return SweepResult(state=state, adjoint=adjoint, controls=final_controls,
                       cost=cost, iterations=iterations, converged=converged,
                       convergence_history=np.asarray(history), case=case)


def gradient_check(params: ModelParams, x0, grid: TimeGrid, u: ControlGrid,
                   n_samples: int = 10, height: float = 1e-4) -> float:
    """Max relative gap between adjoint and finite-difference cost gradients.

    At sampled interior nodes, the adjoint-based derivative of the cost with
    respect to a single-node (hat) control perturbation is dH/du * dt; it is
    compared against a central difference of the full cost under bumps of
    the given height. Requires controls at least 0.01 away from both bounds.
    """
    lo1, hi1 = float(np.min(u.u1)), float(np.max(u.u1))
    lo2, hi2 = float(np.min(u.u2)), float(np.max(u.u2))
    if (lo1 < 0.01 or hi1 > params.u1max - 0.01
            or lo2 < 0.01 or hi2 > params.u2max - 0.01):
        raise PreconditionError(
            "gradient_check requires controls >= 0.01 away from their bounds")

    state = integrate_state(params, x0, grid, u)
    adjoint = integrate_adjoint(params, grid, state, u)

    def cost_of(u1_arr, u2_arr):
        c = ControlGrid(grid, u1_arr, u2_arr)
        return cost_functional(integrate_state(params, x0, grid, c), c, params)

    nodes = np.linspace(1, grid.n_steps - 1, n_samples).astype(int)
    worst = 0.0
    for i in nodes:
        x_i = state.values[i]
        lam_i = adjoint.values[i]
        g1, g2 = hamiltonian_control_gradient(
            x_i, (u.u1[i], u.u2[i]), lam_i, params)
        for channel, g_adj in ((0, g1), (1, g2)):
            arr1, arr2 = u.u1.copy(), u.u2.copy()
            target = arr1 if channel == 0 else arr2
            base = target[i]
            target[i] = base + height
            j_plus = cost_of(arr1, arr2)
            target[i] = base - height
            j_minus = cost_of(arr1, arr2)
            target[i] = base
            g_fd = (j_plus - j_minus) / (2.0 * height * grid.dt)
            denom = max(abs(g_adj), abs(g_fd), 1e-12)
            worst = max(worst, abs(g_adj - g_fd) / denom)
    return worst


def detect_singular_arcs(result: SweepResult, tol: float) -> list:
    """Grid intervals where a switching function stays near zero.

    Returns (channel, t_start, t_end) tuples for maximal runs of at least
    five consecutive nodes with |l1 - l4| (channel "u1") or |l2 - l3|
    (channel "u2") at or below tol times the peak magnitude of that
    switching function. The threshold is relative because the transversality
    conditions drive both differences to zero at tf on every problem; an
    absolute cutoff would flag that terminal tail regardless of the
    dynamics. Detection only; no synthesis.
    """
    if not result.converged:
        raise PreconditionError("singular-arc scan requires a converged sweep")
    lam = result.adjoint.values
    ts = result.state.grid.times()
    out = []
    for channel, diff in (("u1", np.abs(lam[:, 0] - lam[:, 3])),
                          ("u2", np.abs(lam[:, 1] - lam[:, 2]))):
        mask = diff <= tol * max(float(np.max(diff)), 1e-12)
        i = 0
        n = len(mask)
        while i < n:
            if mask[i]:
                j = i
                while j + 1 < n and mask[j + 1]:
                    j += 1
                if j - i + 1 >= 5:
                    out.append((channel, float(ts[i]), float(ts[j])))
                i = j + 1
            else:
                i += 1
    return out
