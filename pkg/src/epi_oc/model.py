"""Heroin-epidemic compartment model: parameters, state, and vector fields.

The population splits into susceptible S, drug users not in treatment U1,
drug users in treatment U2, and individuals in preventive education E, plus
an information density Z that grows with U1 and fades at rate a0. States are
ordered (S, U1, U2, E, Z) throughout the package.

Two vector fields are provided: the autonomous model with a constant
treatment rate p and a fixed information-response intensity, and the
controlled variant where prevention intensity u1(t) and treatment rate u2(t)
replace those constants.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields

STATE_LABELS = ("S", "U1", "U2", "E", "Z")
ADJOINT_LABELS = ("l1", "l2", "l3", "l4", "l5")

# S(0), U1(0), U2(0), E(0), Z(0) used in all simulation scenarios
DEFAULT_INITIAL_STATE = (15.0, 5.0, 2.0, 1.25, 1.0)


class DomainError(ValueError):
    """Non-finite or otherwise out-of-domain numeric input."""


class PreconditionError(ValueError):
    """An operation precondition was violated (e.g. inadmissible control)."""


@dataclass(frozen=True)
class ModelParams:
    """All rate constants plus cost weights and control bounds.

    Rates are per day; Lambda is persons per day; a, b, a0 and the cost
    weights are dimensionless. p is the constant treatment entry rate used
    only by the uncontrolled model (the controlled model replaces it with
    u2(t)).
    """

    Lambda: float
    beta1: float
    beta2: float
    mu: float
    p: float
    rho: float
    delta1: float
    delta2: float
    theta: float
    a: float
    b: float
    a0: float
    B1: float
    B2: float
    B3: float
    u1max: float
    u2max: float

    def __post_init__(self):
        for name in ("Lambda", "beta1", "beta2", "rho", "p",
                     "delta1", "delta2", "theta", "a", "b", "B1"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"parameter {name} must be finite and >= 0, got {v}")
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"parameter mu must be > 0, got {self.mu}")
        if not (math.isfinite(self.a0) and self.a0 > 0):
            raise ValueError(f"parameter a0 must be > 0, got {self.a0}")
        if not (math.isfinite(self.B2) and self.B2 > 0):
            raise ValueError(f"parameter B2 must be > 0, got {self.B2}")
        if not (math.isfinite(self.B3) and self.B3 > 0):
            raise ValueError(f"parameter B3 must be > 0, got {self.B3}")
        if not 0.0 < self.u1max <= 1.0:
            raise ValueError(f"parameter u1max must be in (0, 1], got {self.u1max}")
        if not 0.0 < self.u2max <= 1.0:
            raise ValueError(f"parameter u2max must be in (0, 1], got {self.u2max}")

    def replace(self, **changes) -> "ModelParams":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(changes)
        return ModelParams(**d)

    @classmethod
    def field_names(cls) -> tuple:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        """Strict construction: every field required, unknown keys rejected."""
        names = set(cls.field_names())
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown parameter key(s): {sorted(unknown)}")
        missing = names - set(d)
        if missing:
            raise ValueError(f"missing parameter key(s): {sorted(missing)}")
        return cls(**{k: float(v) for k, v in d.items()})

    @classmethod
    def from_json(cls, path) -> "ModelParams":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# Cost weights and control bounds are not part of the low-R0 parameter table;
# the table2 values are reused so the preset forms a complete parameter set.
# p defaults to 0 in both presets (no-intervention baseline); override via
# config or ModelParams.replace for runs with a constant treatment rate.
_PRESETS = {
    "table1": dict(Lambda=2.0, beta1=0.0002, beta2=0.0001, mu=0.125, p=0.0,
                   rho=0.04, delta1=0.05, delta2=0.06, theta=0.001,
                   a=0.01, b=1.0, a0=0.06,
                   B1=6.0, B2=120.0, B3=30.0, u1max=1.0, u2max=1.0),
    "table2": dict(Lambda=0.7, beta1=0.01, beta2=0.0008, mu=0.07, p=0.0,
                   rho=0.04, delta1=0.05, delta2=0.06, theta=0.001,
                   a=0.01, b=1.0, a0=0.06,
                   B1=6.0, B2=120.0, B3=30.0, u1max=1.0, u2max=1.0),
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset(name: str) -> ModelParams:
    """Return a built-in parameter set ("table1" or "table2")."""
    try:
        return ModelParams(**_PRESETS[name])
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; available: {PRESET_NAMES}") from None


def _check_state_finite(x):
    S, U1, U2, E, Z = x
    try:
        if (math.isfinite(S) and math.isfinite(U1) and math.isfinite(U2)
                and math.isfinite(E) and math.isfinite(Z)):
            return S, U1, U2, E, Z
    except TypeError:
        # array components: one vectorized check instead
        import numpy as np
        if all(bool(np.all(np.isfinite(v))) for v in (S, U1, U2, E, Z)):
            return S, U1, U2, E, Z
    raise DomainError("non-finite state component")


def rhs_controlled(params: ModelParams, x, u):
    """Time derivative of (S, U1, U2, E, Z) under controls u = (u1, u2).

    u1 scales the information response rho*S*Z, u2 is the treatment rate.
    Components of x may be floats or equally shaped numpy arrays.
    """
    u1, u2 = u
    if not (0.0 <= u1 <= params.u1max) or not (0.0 <= u2 <= params.u2max):
        raise PreconditionError(
            f"controls ({u1}, {u2}) outside [0, {params.u1max}] x [0, {params.u2max}]")
    return _rhs(params, x, u1, u2)


def rhs_uncontrolled(params: ModelParams, x, u1_fixed: float = 1.0):
    """Time derivative of the autonomous model (treatment rate p constant).

    u1_fixed is the constant information-response intensity; the default 1.0
    leaves rho as the sole response scale. Identical to rhs_controlled with
    u = (u1_fixed, p).
    """
    return _rhs(params, x, u1_fixed, params.p)


def _rhs_core(Lambda, beta1, beta2, mu, rho, delta1, delta2, theta, a, b, a0,
              S, U1, U2, E, Z, u1, u2):
    """Single source of the model equations, scalar- and array-friendly."""
    response = u1 * rho * S * Z
    info_growth = a * U1 / (1.0 + b * U1)
    infection = beta1 * S * U1
    relapse = beta2 * U1 * U2
    treatment = u2 * U1
    dS = Lambda - infection - mu * S + theta * E - response
    dU1 = infection - treatment + relapse - (mu + delta1) * U1
    dU2 = treatment - relapse - (mu + delta2) * U2
    dE = response - (mu + theta) * E
    dZ = info_growth - a0 * Z
    return (dS, dU1, dU2, dE, dZ)


def _rhs(params: ModelParams, x, u1, u2):
    S, U1, U2, E, Z = _check_state_finite(x)
    return _rhs_core(params.Lambda, params.beta1, params.beta2, params.mu,
                     params.rho, params.delta1, params.delta2, params.theta,
                     params.a, params.b, params.a0, S, U1, U2, E, Z, u1, u2)


def feasibility_bounds(params: ModelParams, x0):
    """Invariant-region bounds (Nbound, Zbound) for a trajectory from x0.

    N = S + U1 + U2 + E stays below max(N(0), Lambda/mu); Z stays below
    max(Z(0), a*Lambda/(a0*mu)).
    """
    S, U1, U2, E, Z = x0
    n0 = S + U1 + U2 + E
    nbound = max(n0, params.Lambda / params.mu)
    zbound = max(Z, params.a * params.Lambda / (params.a0 * params.mu))
    return nbound, zbound
