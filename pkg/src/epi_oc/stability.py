"""Local and global stability analysis of the model equilibria.

Jacobians are assembled from closed forms at the drug-free and endemic
points and every Routh-Hurwitz style verdict is cross-checked against an
eigenvalue computation, which acts as the independent oracle.

For the endemic point the five characteristic-polynomial coefficients are
assembled from the Jacobian entries exactly as the closed-form expansion
gives them. The verdict itself uses the Hurwitz principal minors (the exact
necessary-and-sufficient criterion); the looser three-inequality rendering of
the criterion that circulates in the epidemiology literature is evaluated
alongside and reported in the conditions map (it is sufficient but not
necessary, so it may be conservative on rare parameter sets).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .equilibria import EndemicEquilibrium, basic_reproduction_number, q1_q2
from .model import ModelParams


class NumericError(RuntimeError):
    """An iterative numeric routine failed to converge."""


class InternalConsistencyError(RuntimeError):
    """Routh-Hurwitz verdict and eigenvalue oracle disagree beyond margin."""


#: declare "value > 0" only when it clears this fraction of its term scale
STRICTNESS = 1e-12


def _holds(margin: float, scale: float) -> bool:
    return margin > STRICTNESS * (1.0 + abs(scale))


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of a Routh-Hurwitz test plus the eigenvalue cross-check.

    conditions maps each tested inequality to its numeric margin
    (positive = satisfied, up to the strictness threshold).
    """

    point_kind: str               # "DFE" or "endemic"
    rh_holds: bool
    max_re_eig: float
    eigenvalues: np.ndarray       # 5 complex numbers, descending real part
    conditions: dict = field(default_factory=dict)


def eigenvalues_5x5(m) -> np.ndarray:
    """Eigenvalues of a small dense matrix, sorted by descending real part.

    Delegates to LAPACK's Hessenberg-reduction + shifted-QR iteration, which
    is backward stable to machine precision; non-convergence surfaces as
    NumericError.
    """
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    try:
        ev = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue iteration did not converge: {exc}") from exc
    return ev[np.argsort(-ev.real)]


def jacobian_dfe(params: ModelParams, u1_fixed: float = 1.0) -> np.ndarray:
    """Jacobian of the uncontrolled system at the drug-free equilibrium."""
    s0 = params.Lambda / params.mu
    mu, th, a0 = params.mu, params.theta, params.a0
    q1, q2 = q1_q2(params)
    J = np.zeros((5, 5))
    J[0, 0] = -mu
    J[0, 1] = -params.beta1 * s0
    J[0, 3] = th
    J[0, 4] = -u1_fixed * params.rho * s0
    J[1, 1] = params.beta1 * s0 - q1
    J[2, 1] = params.p
    J[2, 2] = -q2
    J[3, 3] = -(mu + th)
    J[3, 4] = u1_fixed * params.rho * s0
    J[4, 1] = params.a
    J[4, 4] = -a0
    return J


def dfe_local_stability(params: ModelParams, u1_fixed: float = 1.0) -> StabilityVerdict:
    """Routh-Hurwitz test of the quadratic factor at the drug-free point.

    Three eigenvalues are -mu, -(mu+theta) and -a0 outright; the remaining
    two solve lambda^2 + zeta1*lambda + zeta2 = 0 and have negative real
    parts iff zeta1, zeta2 > 0. zeta2 changes sign with (1 - R0), so the
    verdict flips exactly at R0 = 1.
    """
    q1, q2 = q1_q2(params)
    r0 = basic_reproduction_number(params)
    bl_mu = params.beta1 * params.Lambda / params.mu
    zeta1 = 2.0 * params.mu + params.p + params.delta1 + params.delta2 + bl_mu
    # equals -beta1*Lambda/mu * (mu+delta2) * (1 - 1/R0), well defined at beta1 = 0
    zeta2 = q1 * q2 * (1.0 - r0)
    rh = _holds(zeta1, zeta1) and _holds(zeta2, q1 * q2 * (1.0 + r0))
    ev = eigenvalues_5x5(jacobian_dfe(params, u1_fixed))
    return StabilityVerdict(
        point_kind="DFE",
        rh_holds=rh,
        max_re_eig=float(ev[0].real),
        eigenvalues=ev,
        conditions={"zeta1": zeta1, "zeta2": zeta2},
    )


def global_stability_condition(params: ModelParams) -> tuple:
    """Value and truth of beta1*Lambda/(mu*(mu+delta1)) < 1.

    Below one, U1 + U2 is a Lyapunov function and the drug-free point
    attracts every feasible trajectory.
    """
    value = params.beta1 * params.Lambda / (params.mu * (params.mu + params.delta1))
    return value, value < 1.0


def jacobian_endemic(params: ModelParams, eq: EndemicEquilibrium,
                     u1_fixed: float = 1.0) -> np.ndarray:
    """Jacobian of the uncontrolled system at an endemic equilibrium."""
    q1, q2 = q1_q2(params)
    S, U1, U2, _, Z = eq.state()
    a11 = -params.beta1 * U1 - params.mu - u1_fixed * params.rho * Z
    a12 = -params.beta1 * S
    a14 = params.theta
    a15 = -u1_fixed * params.rho * S
    a21 = params.beta1 * U1
    a22 = params.beta1 * S + params.beta2 * U2 - q1
    a23 = params.beta2 * U1
    a32 = params.p - params.beta2 * U2
    a33 = -params.beta2 * U1 - q2
    a41 = u1_fixed * params.rho * Z
    a44 = -(params.mu + params.theta)
    a45 = u1_fixed * params.rho * S
    a52 = params.a / (1.0 + params.b * U1) ** 2
    a55 = -params.a0
    return np.array([
        [a11, a12, 0.0, a14, a15],
        [a21, a22, a23, 0.0, 0.0],
        [0.0, a32, a33, 0.0, 0.0],
        [a41, 0.0, 0.0, a44, a45],
        [0.0, a52, 0.0, 0.0, a55],
    ])


def characteristic_coeffs_endemic(J: np.ndarray) -> tuple:
    """(Theta1..Theta5) of det(lambda I - J) for the endemic Jacobian pattern.

    Closed-form cofactor expansion over the sparsity pattern of the endemic
    Jacobian; agrees with a generic characteristic-polynomial expansion.
    """
    a11, a12, a14, a15 = J[0, 0], J[0, 1], J[0, 3], J[0, 4]
    a21, a22, a23 = J[1, 0], J[1, 1], J[1, 2]
    a32, a33 = J[2, 1], J[2, 2]
    a41, a44, a45 = J[3, 0], J[3, 3], J[3, 4]
    a52, a55 = J[4, 1], J[4, 4]

    t1 = -a11 - a22 - a33 - a44 - a55
    t2 = (a11 * (a44 + a33 + a22 + a55) - a21 * a12 - a14 * a41 - a23 * a32
          + a55 * a22 + a33 * (a22 + a55) + a44 * (a33 + a22 + a55))
    t3 = (a11 * (a23 * a32 - a33 * a44 - a44 * a22 - a44 * a55
                 - a33 * a22 - a33 * a55 - a55 * a22)
          - a21 * a15 * a52 - a33 * a44 * a22
          - a55 * (a33 * a44 + a44 * a22 + a33 * a22)
          + a21 * (a12 * a33 + a12 * a44 + a12 * a55)
          + a14 * (a33 * a41 + a41 * a22 + a41 * a55)
          + a23 * a32 * (a44 + a55))
    t4 = (a11 * a44 * (a33 * a22 - a23 * a32)
          - a11 * a55 * (a23 * a32 - a33 * a44)
          + a11 * a55 * a22 * (a44 + a33)
          - a21 * a12 * (a33 * a44 + a33 * a55 + a44 * a55)
          - a14 * a33 * a41 * (a22 + a55)
          - a21 * a14 * a45 * a52
          + a21 * a15 * a52 * (a33 + a44)
          + a23 * a32 * (a14 * a41 - a44 * a55)
          + a55 * a22 * (a33 * a44 - a14 * a41))
    t5 = (a11 * a44 * a55 * (a23 * a32 - a33 * a22)
          - a14 * a41 * a55 * (a23 * a32 - a33 * a22)
          - a21 * (a15 * a33 * a44 * a52
                   - a12 * a33 * a44 * a55
                   - a14 * a45 * a33 * a52))
    return t1, t2, t3, t4, t5


def hurwitz_conditions_quintic(c1, c2, c3, c4, c5) -> dict:
    """Margins of every stability inequality for a monic quintic.

    Keys D1..D4 and c5 are the Hurwitz principal minors (necessary and
    sufficient together). Keys literature_* are the widely quoted
    three-inequality rendering, evaluated for reporting.
    """
    d2 = c1 * c2 - c3
    d3 = c1 * c2 * c3 - c3 * c3 - c1 * c1 * c4 + c1 * c5
    d4 = (-c1 * c1 * c4 * c4 - c1 * c2 * c2 * c5 + c1 * c2 * c3 * c4
          + 2.0 * c1 * c4 * c5 + c2 * c3 * c5 - c3 * c3 * c4 - c5 * c5)
    lit_b = c1 * c2 * c3 - c3 * c3 - c1 * c1 * c4
    lit_c = ((c1 * c4 - c5) * lit_b
             - c5 * (c1 * c2 - c3) ** 2 - c1 * c5 * c5)
    return {
        "D1": c1,
        "D2": d2,
        "D3": d3,
        "D4": d4,
        "c5": c5,
        "literature_group2": lit_b,
        "literature_group3": lit_c,
    }


def _hurwitz_scales(c1, c2, c3, c4, c5) -> dict:
    """Magnitude scales matched to the margins for strictness thresholds."""
    a1, a2, a3, a4, a5 = (abs(c1), abs(c2), abs(c3), abs(c4), abs(c5))
    return {
        "D1": a1,
        "D2": a1 * a2 + a3,
        "D3": a1 * a2 * a3 + a3 * a3 + a1 * a1 * a4 + a1 * a5,
        "D4": (a1 * a1 * a4 * a4 + a1 * a2 * a2 * a5 + a1 * a2 * a3 * a4
               + 2.0 * a1 * a4 * a5 + a2 * a3 * a5 + a3 * a3 * a4 + a5 * a5),
        "c5": a5,
    }


def routh_hurwitz_quintic_stable(c1, c2, c3, c4, c5) -> bool:
    """True iff every root of the monic quintic has negative real part."""
    conds = hurwitz_conditions_quintic(c1, c2, c3, c4, c5)
    scales = _hurwitz_scales(c1, c2, c3, c4, c5)
    return all(_holds(conds[k], scales[k]) for k in ("D1", "D2", "D3", "D4", "c5"))


def _companion_roots(c1, c2, c3, c4, c5) -> np.ndarray:
    C = np.zeros((5, 5))
    C[0, :] = [-c1, -c2, -c3, -c4, -c5]
    for i in range(1, 5):
        C[i, i - 1] = 1.0
    return eigenvalues_5x5(C)


def endemic_local_stability(params: ModelParams, eq: EndemicEquilibrium,
                            u1_fixed: float = 1.0,
                            oracle_margin: float = 1e-9) -> StabilityVerdict:
    """Routh-Hurwitz verdict at an endemic point, oracle cross-checked.

    Raises InternalConsistencyError if the Hurwitz verdict disagrees with
    the eigenvalues of the assembled quintic beyond oracle_margin.
    """
    if basic_reproduction_number(params) <= 1.0:
        raise ValueError("endemic stability requires R0 > 1")
    J = jacobian_endemic(params, eq, u1_fixed)
    thetas = characteristic_coeffs_endemic(J)
    conds = hurwitz_conditions_quintic(*thetas)
    for i, t in enumerate(thetas, start=1):
        conds[f"Theta{i}"] = t
    rh = routh_hurwitz_quintic_stable(*thetas)

    poly_roots = _companion_roots(*thetas)
    max_re_poly = float(poly_roots[0].real)
    if abs(max_re_poly) > oracle_margin and rh != (max_re_poly < 0.0):
        raise InternalConsistencyError(
            f"Hurwitz verdict {rh} contradicts quintic roots "
            f"(max Re = {max_re_poly:g})")

    ev = eigenvalues_5x5(J)
    return StabilityVerdict(
        point_kind="endemic",
        rh_holds=rh,
        max_re_eig=float(ev[0].real),
        eigenvalues=ev,
        conditions=conds,
    )
