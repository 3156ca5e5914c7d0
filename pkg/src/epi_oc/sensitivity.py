"""Normalized forward sensitivity indices of R0.

The index of a parameter v is |v/R0 * dR0/dv|: the elasticity of R0 with
respect to v. beta1 always scores exactly 1 (R0 is linear in beta1); the
treatment entry rate p scores p/(mu+delta1+p) with a negative raw
derivative. Indices for Lambda, mu and delta1 are included alongside the primary
beta1/p pair and are flagged as extensions in the report.

Every analytic partial is cross-validated in place against a central finite
difference; a disagreement beyond tolerance raises.
"""
from __future__ import annotations

from dataclasses import dataclass

from .equilibria import basic_reproduction_number
from .model import ModelParams

#: the primary pair of intervention-relevant parameters
CORE_PARAMS = ("beta1", "p")
#: additional parameters R0 depends on, reported as extensions
EXTENSION_PARAMS = ("Lambda", "mu", "delta1")

_FD_REL_STEP = 1e-6
_FD_REL_TOL = 1e-6


class SensitivityValidationError(RuntimeError):
    """Analytic partial and finite-difference check disagree."""


@dataclass(frozen=True)
class SensitivityEntry:
    param: str
    derivative: float        # dR0/dparam, analytic
    index: float             # |param/R0 * derivative|
    sign: int                # sign of the raw derivative
    fd_derivative: float     # central-difference cross-check
    extension: bool          # beyond the primary beta1/p pair


@dataclass(frozen=True)
class SensitivityReport:
    R0: float
    entries: tuple

    def by_param(self) -> dict:
        return {e.param: e for e in self.entries}


def _analytic(params: ModelParams):
    """Closed-form partials and indices from R0 = beta1*L/(mu*(mu+d1+p))."""
    q1 = params.mu + params.delta1 + params.p
    r0 = basic_reproduction_number(params)
    mu = params.mu
    return {
        "beta1": (params.Lambda / (mu * q1), 1.0),
        "p": (-r0 / q1, params.p / q1),
        "Lambda": (params.beta1 / (mu * q1), 1.0),
        "mu": (-r0 * (1.0 / mu + 1.0 / q1), 1.0 + mu / q1),
        "delta1": (-r0 / q1, params.delta1 / q1),
    }


def _fd_partial(params: ModelParams, name: str) -> float:
    v = getattr(params, name)
    h = _FD_REL_STEP * max(abs(v), 1.0)
    if v - h < 0.0:
        # one-sided second-order stencil keeps nonnegative parameters valid
        f0 = basic_reproduction_number(params)
        f1 = basic_reproduction_number(params.replace(**{name: v + h}))
        f2 = basic_reproduction_number(params.replace(**{name: v + 2.0 * h}))
        return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
    lo = basic_reproduction_number(params.replace(**{name: v - h}))
    hi = basic_reproduction_number(params.replace(**{name: v + h}))
    return (hi - lo) / (2.0 * h)


def sensitivity_indices(params: ModelParams) -> SensitivityReport:
    """Analytic sensitivity indices of R0, finite-difference validated."""
    r0 = basic_reproduction_number(params)
    if r0 <= 0.0:
        raise ValueError("R0 must be positive to normalize sensitivity indices")
    analytic = _analytic(params)
    entries = []
    for name in CORE_PARAMS + EXTENSION_PARAMS:
        deriv, index = analytic[name]
        fd = _fd_partial(params, name)
        denom = max(abs(deriv), abs(fd), 1e-300)
        if abs(deriv - fd) / denom > _FD_REL_TOL and abs(deriv - fd) > 1e-12:
            raise SensitivityValidationError(
                f"dR0/d{name}: analytic {deriv:g} vs finite difference {fd:g}")
        sign = (deriv > 0) - (deriv < 0)
        entries.append(SensitivityEntry(
            param=name, derivative=deriv, index=index, sign=sign,
            fd_derivative=fd, extension=name in EXTENSION_PARAMS))
    return SensitivityReport(R0=r0, entries=tuple(entries))


def report_to_csv(report: SensitivityReport, path) -> None:
    """Write `param,derivative,index,sign` rows at full precision."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("param,derivative,index,sign\n")
        for e in report.entries:
            fh.write(f"{e.param},{format(e.derivative, '.17g')},"
                     f"{format(e.index, '.17g')},{e.sign:+d}\n")
