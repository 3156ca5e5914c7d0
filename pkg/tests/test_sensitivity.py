"""Sensitivity indices of R0: exactness, signs, finite-difference agreement."""
import numpy as np
import pytest

from epi_oc import basic_reproduction_number, preset, sensitivity_indices
from epi_oc.sensitivity import report_to_csv

from conftest import random_params


def test_beta1_index_is_exactly_one():
    rng = np.random.default_rng(83)
    for _ in range(50):
        rep = sensitivity_indices(random_params(rng))
        assert rep.by_param()["beta1"].index == 1.0


def test_p_index_closed_form():
    rng = np.random.default_rng(89)
    for _ in range(50):
        p = random_params(rng)
        e = sensitivity_indices(p).by_param()["p"]
        assert e.index == pytest.approx(p.p / (p.mu + p.delta1 + p.p), rel=1e-14)
        assert e.index < 1.0


def test_p_index_zero_without_treatment():
    rep = sensitivity_indices(preset("table2"))
    e = rep.by_param()["p"]
    assert e.index == 0.0
    assert e.sign == -1


def test_signs():
    rng = np.random.default_rng(97)
    for _ in range(50):
        rep = sensitivity_indices(random_params(rng)).by_param()
        assert rep["beta1"].sign == +1
        assert rep["p"].sign == -1
        assert rep["Lambda"].sign == +1
        assert rep["mu"].sign == -1
        assert rep["delta1"].sign == -1


def test_beta1_dominates_p():
    rng = np.random.default_rng(101)
    for _ in range(50):
        rep = sensitivity_indices(random_params(rng)).by_param()
        assert rep["beta1"].index >= rep["p"].index
    # the treatment index approaches one only as p grows without bound
    huge = preset("table2").replace(p=1e6)
    e = sensitivity_indices(huge).by_param()["p"]
    assert 0.999 < e.index < 1.0


def test_partials_match_finite_differences():
    # independent central differences, distinct from the in-op validation step
    rng = np.random.default_rng(103)
    for _ in range(500):
        p = random_params(rng)
        rep = sensitivity_indices(p).by_param()
        for name in ("beta1", "p", "Lambda", "mu", "delta1"):
            v = getattr(p, name)
            h = 1e-7 * max(abs(v), 1.0)
            if v - h < 0.0:
                continue
            hi = basic_reproduction_number(p.replace(**{name: v + h}))
            lo = basic_reproduction_number(p.replace(**{name: v - h}))
            fd = (hi - lo) / (2.0 * h)
            assert rep[name].derivative == pytest.approx(fd, rel=2e-6, abs=1e-12)


def test_extension_flags():
    rep = sensitivity_indices(preset("table1"))
    flags = {e.param: e.extension for e in rep.entries}
    assert not flags["beta1"] and not flags["p"]
    assert flags["Lambda"] and flags["mu"] and flags["delta1"]


def test_indices_finite_nonnegative():
    rng = np.random.default_rng(107)
    for _ in range(50):
        for e in sensitivity_indices(random_params(rng)).entries:
            assert np.isfinite(e.index) and e.index >= 0.0


def test_csv_schema(tmp_path):
    rep = sensitivity_indices(preset("table2"))
    path = tmp_path / "sens.csv"
    report_to_csv(rep, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "param,derivative,index,sign"
    assert len(lines) == 1 + len(rep.entries)
    first = lines[1].split(",")
    assert first[0] == "beta1" and first[3] == "+1"


def test_zero_r0_rejected():
    with pytest.raises(ValueError):
        sensitivity_indices(preset("table2").replace(beta1=0.0))
