"""Shared fixtures: random parameter generation and cached sweep solves."""
import numpy as np
import pytest

from epi_oc import (DEFAULT_INITIAL_STATE, ControlGrid, ModelParams, TimeGrid,
                    cost_functional, forward_backward_sweep, preset)
from epi_oc.control import integrate_state


def random_params(rng, r0=None, global_value=None, p_zero=False) -> ModelParams:
    """Draw a valid parameter set; optionally pin R0 or the global-stability
    value by back-solving beta1."""
    mu = rng.uniform(0.05, 0.3)
    delta1 = rng.uniform(0.005, 0.2)
    delta2 = rng.uniform(0.005, 0.2)
    p = 0.0 if p_zero else rng.uniform(0.0, 0.3)
    lam = rng.uniform(0.2, 2.0)
    if r0 is not None:
        beta1 = r0 * mu * (mu + delta1 + p) / lam
    elif global_value is not None:
        beta1 = global_value * mu * (mu + delta1) / lam
    else:
        beta1 = rng.uniform(0.0005, 0.05)
    return ModelParams(
        Lambda=lam, beta1=beta1, beta2=rng.uniform(1e-4, 0.05), mu=mu, p=p,
        rho=rng.uniform(0.005, 0.2), delta1=delta1, delta2=delta2,
        theta=rng.uniform(1e-4, 0.05), a=rng.uniform(0.002, 0.05),
        b=rng.uniform(0.1, 4.0), a0=rng.uniform(0.01, 0.3),
        B1=6.0, B2=120.0, B3=30.0, u1max=1.0, u2max=1.0)


def random_state(rng, scale=10.0):
    return tuple(rng.uniform(0.0, scale, size=5))


def random_adjoint(rng, scale=5.0):
    return tuple(rng.uniform(-scale, scale, size=5))


@pytest.fixture(scope="session")
def solved():
    """Memoized sweep/simulation runs shared across test modules."""
    cache = {}

    def sweep(preset_name, case, tf=30.0, dt=0.03, **param_mods):
        key = ("sweep", preset_name, case, tf, dt, tuple(sorted(param_mods.items())))
        if key not in cache:
            params = preset(preset_name).replace(**param_mods)
            grid = TimeGrid.from_dt(0.0, tf, dt)
            cache[key] = forward_backward_sweep(
                params, DEFAULT_INITIAL_STATE, grid, case=case)
        return cache[key]

    def baseline(preset_name, tf=30.0, dt=0.03, **param_mods):
        key = ("base", preset_name, tf, dt, tuple(sorted(param_mods.items())))
        if key not in cache:
            params = preset(preset_name).replace(**param_mods)
            grid = TimeGrid.from_dt(0.0, tf, dt)
            controls = ControlGrid.zeros(grid)
            state = integrate_state(params, DEFAULT_INITIAL_STATE, grid, controls)
            cache[key] = (state, controls, cost_functional(state, controls, params))
        return cache[key]

    ns = type("Solved", (), {})()
    ns.sweep = sweep
    ns.baseline = baseline
    return ns
