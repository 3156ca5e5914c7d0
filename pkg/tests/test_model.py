"""Vector fields, parameter validation, presets and feasibility bounds."""
import json
import math

import numpy as np
import pytest

from epi_oc import (ModelParams, drug_free_equilibrium, feasibility_bounds,
                    preset, rhs_controlled, rhs_uncontrolled)
from epi_oc.model import DEFAULT_INITIAL_STATE, DomainError, PreconditionError

from conftest import random_params, random_state

STATE = DEFAULT_INITIAL_STATE  # (15, 5, 2, 1.25, 1)


def test_dfe_is_equilibrium_of_uncontrolled_field():
    for name in ("table1", "table2"):
        p = preset(name)
        d = rhs_uncontrolled(p, drug_free_equilibrium(p))
        assert d == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_information_rate_table1():
    # g(U1) - a0*Z = 0.01*5/(1+5) - 0.06*1
    expected = 0.01 * 5.0 / 6.0 - 0.06
    d = rhs_uncontrolled(preset("table1"), STATE)
    assert d[4] == pytest.approx(expected, abs=1e-15)
    assert d[4] == pytest.approx(-0.0516666666666667, abs=1e-12)


def test_information_decays_without_users():
    p = preset("table2")
    for z in (0.0, 0.3, 2.0):
        d = rhs_uncontrolled(p, (4.0, 0.0, 1.0, 0.5, z))
        assert d[4] == pytest.approx(-p.a0 * z, abs=1e-15)


def test_controlled_reduces_to_uncontrolled():
    rng = np.random.default_rng(42)
    for _ in range(100):
        p = random_params(rng)
        u1_fixed = rng.uniform(0.0, p.u1max)
        # keep the substitution admissible: p plays the role of u2
        p = p.replace(p=rng.uniform(0.0, p.u2max))
        x = random_state(rng)
        assert rhs_controlled(p, x, (u1_fixed, p.p)) == rhs_uncontrolled(p, x, u1_fixed)


def test_controlled_zero_controls_table2():
    p = preset("table2")
    d = rhs_controlled(p, STATE, (0.0, 0.0))
    # dU1 = beta1*S*U1 + beta2*U1*U2 - (mu+delta1)*U1, every term written out
    expected = 0.01 * 15.0 * 5.0 + 0.0008 * 5.0 * 2.0 - (0.07 + 0.05) * 5.0
    assert d[1] == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.158, abs=1e-15)
    assert d[1] > 0.0  # drug users initially rising in the endemic setting


def test_max_controls_at_dfe_keep_it_stationary():
    p = preset("table2")
    d = rhs_controlled(p, drug_free_equilibrium(p), (p.u1max, p.u2max))
    assert d == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_population_balance():
    rng = np.random.default_rng(7)
    for _ in range(50):
        p = random_params(rng)
        x = random_state(rng)
        d = rhs_uncontrolled(p, x)
        n = sum(x[:4])
        balance = p.Lambda - p.mu * n - p.delta1 * x[1] - p.delta2 * x[2]
        assert math.isclose(sum(d[:4]), balance, rel_tol=0, abs_tol=1e-12 * (1 + abs(balance)))


def test_rhs_accepts_arrays():
    p = preset("table2")
    x = np.array(STATE)
    cols = np.stack([x, 2.0 * x], axis=1)
    d = rhs_uncontrolled(p, cols)
    single = rhs_uncontrolled(p, x)
    for k in range(5):
        assert d[k][0] == pytest.approx(float(single[k]), abs=1e-15)


def test_control_bounds_enforced():
    p = preset("table2")
    with pytest.raises(PreconditionError):
        rhs_controlled(p, STATE, (1.2, 0.0))
    with pytest.raises(PreconditionError):
        rhs_controlled(p, STATE, (0.0, -0.1))


def test_non_finite_state_rejected():
    p = preset("table2")
    with pytest.raises(DomainError):
        rhs_uncontrolled(p, (1.0, float("nan"), 0.0, 0.0, 0.0))
    with pytest.raises(DomainError):
        rhs_controlled(p, (1.0, float("inf"), 0.0, 0.0, 0.0), (0.0, 0.0))


def test_feasibility_bounds_tables():
    nb1, zb1 = feasibility_bounds(preset("table1"), (0.0, 0.0, 0.0, 0.0, 0.0))
    assert nb1 == pytest.approx(2.0 / 0.125, abs=1e-15)          # 16
    assert zb1 == pytest.approx(0.01 * 2.0 / (0.06 * 0.125), rel=1e-15)  # 2.666..
    nb2, _ = feasibility_bounds(preset("table2"), (0.0, 0.0, 0.0, 0.0, 0.0))
    assert nb2 == pytest.approx(0.7 / 0.07, abs=1e-14)           # 10
    # a large initial condition dominates the asymptotic bound
    nb, zb = feasibility_bounds(preset("table1"), (20.0, 5.0, 0.0, 0.0, 9.0))
    assert nb == 25.0 and zb == 9.0


def test_preset_values_match_tables():
    t1 = preset("table1")
    assert (t1.beta1, t1.mu, t1.Lambda, t1.theta, t1.a0) == (0.0002, 0.125, 2.0, 0.001, 0.06)
    assert (t1.beta2, t1.rho, t1.delta1, t1.delta2, t1.a, t1.b) == (
        0.0001, 0.04, 0.05, 0.06, 0.01, 1.0)
    assert t1.p == 0.0
    t2 = preset("table2")
    assert (t2.Lambda, t2.beta1, t2.beta2, t2.mu) == (0.7, 0.01, 0.0008, 0.07)
    assert (t2.B1, t2.B2, t2.B3, t2.u1max, t2.u2max) == (6.0, 120.0, 30.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        preset("table3")


def test_params_validation():
    base = preset("table2").to_dict()
    for bad in (dict(mu=0.0), dict(a0=-1.0), dict(B2=0.0), dict(B3=0.0),
                dict(u1max=1.5), dict(u1max=0.0), dict(u2max=2.0),
                dict(beta1=-0.1), dict(Lambda=float("nan"))):
        with pytest.raises(ValueError):
            ModelParams(**{**base, **bad})


def test_params_json_round_trip(tmp_path):
    p = preset("table2")
    path = tmp_path / "params.json"
    path.write_text(json.dumps(p.to_dict()))
    assert ModelParams.from_json(path) == p


def test_params_dict_strictness():
    good = preset("table1").to_dict()
    with pytest.raises(ValueError, match="unknown"):
        ModelParams.from_dict({**good, "beta3": 1.0})
    missing = dict(good)
    del missing["rho"]
    with pytest.raises(ValueError, match="rho"):
        ModelParams.from_dict(missing)
