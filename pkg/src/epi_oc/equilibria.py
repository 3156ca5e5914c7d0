"""Equilibria of the heroin model: drug-free point, R0, endemic branch.

The drug-free equilibrium always exists at (Lambda/mu, 0, 0, 0, 0). The
basic reproduction number comes from the next-generation decomposition of
the infected subsystem (U1, U2, Z). For R0 > 1 the endemic U1* solves a
cubic whose sign pattern classifies the root count via Descartes' rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, rhs_uncontrolled


class RootQualityError(RuntimeError):
    """A polished root still exceeds the residual tolerance."""


def drug_free_equilibrium(params: ModelParams) -> tuple:
    """The drug-free steady state (Lambda/mu, 0, 0, 0, 0)."""
    return (params.Lambda / params.mu, 0.0, 0.0, 0.0, 0.0)


def q1_q2(params: ModelParams) -> tuple:
    return params.mu + params.delta1 + params.p, params.mu + params.delta2


def basic_reproduction_number(params: ModelParams) -> float:
    """R0 = beta1*Lambda / (mu*(mu + delta1 + p))."""
    q1, _ = q1_q2(params)
    return params.beta1 * params.Lambda / (params.mu * q1)


@dataclass(frozen=True)
class NextGenDecomposition:
    """New-addiction matrix F, transfer matrix V and the spectral radius R0."""

    F: np.ndarray
    V: np.ndarray
    R0: float
    Q1: float
    Q2: float


def next_generation(params: ModelParams) -> NextGenDecomposition:
    """Build F and V for the infected block and take the spectral radius of F V^-1."""
    q1, q2 = q1_q2(params)
    F = np.zeros((3, 3))
    F[0, 0] = params.beta1 * params.Lambda / params.mu
    V = np.array([
        [q1, 0.0, 0.0],
        [-params.p, q2, 0.0],
        [-params.a, 0.0, params.a0],
    ])
    det = q1 * q2 * params.a0
    if det <= 0.0 or not math.isfinite(det):
        raise ValueError(f"transfer matrix is singular (Q1*Q2*a0 = {det})")
    K = F @ np.linalg.inv(V)
    r0 = float(max(abs(np.linalg.eigvals(K))))
    return NextGenDecomposition(F=F, V=V, R0=r0, Q1=q1, Q2=q2)


def endemic_cubic_coeffs(params: ModelParams, u1_fixed: float = 1.0) -> tuple:
    """Coefficients (A1, A2, A3, A4) of the endemic cubic in U1*.

    A1 > 0 whenever beta2, b > 0, and A4 < 0 exactly when R0 > 1.
    """
    q1, q2 = q1_q2(params)
    mu, th, a0, b2 = params.mu, params.theta, params.a0, params.beta2
    L, a, b, rho, d1 = params.Lambda, params.a, params.b, params.rho, params.delta1
    r0 = basic_reproduction_number(params)
    if r0 <= 0.0:
        raise ValueError("R0 must be positive to form the endemic cubic")
    mt = mu + th
    one_m_inv = 1.0 - 1.0 / r0
    l_over_r0 = L / r0

    A1 = q1 * b2 * a0 * b * mt * (mu + d1)
    A2 = (-a0 * mt * b * q1 * b2 * L * one_m_inv
          + q1 * b2 * a0 * mt * (mu + d1)
          + q1 * q1 * q2 * a0 * b * mt
          - l_over_r0 * b2 * params.p * a0 * b * mt
          + l_over_r0 * b2 * u1_fixed * rho * a * (mu + d1))
    A3 = (-a0 * mt * q1 * b2 * L * one_m_inv
          - a0 * b * mt * q1 * q2 * L * one_m_inv
          + q1 * q1 * q2 * a0 * mt
          - l_over_r0 * b2 * params.p * a0 * mt
          + l_over_r0 * q1 * q2 * u1_fixed * rho * a)
    A4 = -a0 * mt * q1 * q2 * L * one_m_inv
    return A1, A2, A3, A4


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def _cubic_real_roots(a1: float, a2: float, a3: float, a4: float) -> list:
    """All real roots of a1 x^3 + a2 x^2 + a3 x + a4, with multiplicities.

    Closed form (trigonometric when three real roots, Cardano otherwise)
    followed by two Newton polish steps on simple roots. Degenerate leading
    coefficients fall back to the quadratic/linear case. Returns a list of
    (root, multiplicity) pairs.
    """
    scale = max(abs(a1), abs(a2), abs(a3), abs(a4))
    if scale == 0.0:
        return []
    tiny = 1e-14 * scale
    if abs(a1) <= tiny:
        if abs(a2) <= tiny:
            if abs(a3) <= tiny:
                return []
            return [(-a4 / a3, 1)]
        disc = a3 * a3 - 4.0 * a2 * a4
        if disc < 0.0:
            return []
        if disc == 0.0:
            return [(-a3 / (2.0 * a2), 2)]
        sq = math.sqrt(disc)
        return [((-a3 - sq) / (2.0 * a2), 1), ((-a3 + sq) / (2.0 * a2), 1)]

    # depressed cubic t^3 + p t + q with x = t - b/3
    b, c, d = a2 / a1, a3 / a1, a4 / a1
    shift = b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    disc = -4.0 * p ** 3 - 27.0 * q * q
    disc_scale = max(abs(p) ** 3, q * q, 1e-300)

    if abs(disc) <= 1e-12 * disc_scale:
        if abs(p) <= 1e-12 * max(1.0, abs(q) ** (2.0 / 3.0)):
            roots = [(_cbrt(-q) - shift, 3)]
        else:
            # Vieta with a repeated root: alpha double, -2*alpha simple
            alpha = -3.0 * q / (2.0 * p)
            roots = [(alpha - shift, 2), (-2.0 * alpha - shift, 1)]
    elif disc > 0.0:
        # three distinct real roots: trigonometric form
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = min(1.0, max(-1.0, 3.0 * q / (p * m)))
        phi = math.acos(arg)
        roots = [(m * math.cos((phi - 2.0 * math.pi * k) / 3.0) - shift, 1)
                 for k in range(3)]
    else:
        # one real root: Cardano
        rad = math.sqrt(q * q / 4.0 + p ** 3 / 27.0)
        u = _cbrt(-q / 2.0 + rad)
        v = -p / (3.0 * u) if u != 0.0 else _cbrt(-q / 2.0 - rad)
        roots = [(u + v - shift, 1)]

    def poly(x):
        return ((a1 * x + a2) * x + a3) * x + a4

    def dpoly(x):
        return (3.0 * a1 * x + 2.0 * a2) * x + a3

    polished = []
    for r, mult in roots:
        x = r
        if mult == 1:
            for _ in range(2):
                dp = dpoly(x)
                if dp != 0.0:
                    x -= poly(x) / dp
        polished.append((x, mult))
    return polished


@dataclass(frozen=True)
class EndemicEquilibrium:
    """A positive steady state reconstructed from a root U1* of the cubic."""

    S: float
    U1: float
    U2: float
    E: float
    Z: float
    cubic_coeffs: tuple
    descartes_case: str
    multiplicity: int = 1

    def state(self) -> tuple:
        return (self.S, self.U1, self.U2, self.E, self.Z)


def descartes_case(A2: float, A3: float, r0: float) -> str:
    """Classify the (A2, A3) sign pattern into cases i-iv (none if R0 <= 1)."""
    if r0 <= 1.0:
        return "none"
    if A2 >= 0.0:
        return "i" if A3 >= 0.0 else "ii"
    return "iii" if A3 >= 0.0 else "iv"


def reconstruct_from_u1(params: ModelParams, u1_star: float,
                        u1_fixed: float = 1.0) -> tuple:
    """Closed-form (S*, U1*, U2*, E*, Z*) for a given positive root U1*."""
    q1, q2 = q1_q2(params)
    denom = params.beta2 * u1_star + q2
    u2_star = params.p * u1_star / denom
    z_star = params.a * u1_star / (params.a0 * (1.0 + params.b * u1_star))
    r0 = basic_reproduction_number(params)
    s_star = (params.Lambda / params.mu) / r0 * (
        (q1 * denom - params.beta2 * params.p * u1_star) / (q1 * denom))
    e_star = (u1_fixed * params.rho * s_star * params.a * u1_star
              / (params.a0 * (1.0 + params.b * u1_star) * (params.mu + params.theta)))
    return (s_star, u1_star, u2_star, e_star, z_star)


def endemic_equilibrium(params: ModelParams, u1_fixed: float = 1.0,
                        residual_tol: float = 1e-8) -> list:
    """All endemic equilibria for R0 > 1 (empty list otherwise).

    Positive real roots of the cubic are found in closed form, Newton
    polished, reconstructed through the closed-form expressions, and checked
    against the full right-hand side. Candidates with a negative coordinate
    are discarded; coordinates that are exactly zero (e.g. U2* when p = 0)
    are kept. Near-coincident roots are reported once with their
    multiplicity.
    """
    r0 = basic_reproduction_number(params)
    if r0 <= 1.0:
        return []
    coeffs = endemic_cubic_coeffs(params, u1_fixed)
    A1, A2, A3, A4 = coeffs
    case = descartes_case(A2, A3, r0)
    scale = max(abs(c) for c in coeffs)

    out = []
    for root, mult in _cubic_real_roots(*coeffs):
        if root <= 0.0:
            continue
        res = abs(((A1 * root + A2) * root + A3) * root + A4)
        if res > 1e-10 * scale * max(1.0, root) ** 3:
            raise RootQualityError(
                f"cubic root {root} has residual {res:g} above tolerance")
        state = reconstruct_from_u1(params, root, u1_fixed)
        if any(v < -1e-12 for v in state):
            continue
        rhs = rhs_uncontrolled(params, state, u1_fixed)
        norm = max(abs(v) for v in rhs)
        if norm > residual_tol:
            raise RootQualityError(
                f"equilibrium at U1*={root} leaves |rhs| = {norm:g} > {residual_tol:g}")
        out.append(EndemicEquilibrium(*state, cubic_coeffs=coeffs,
                                      descartes_case=case, multiplicity=mult))
    out.sort(key=lambda e: e.U1)
    return out
