import math
import os
from pathlib import Path

import pytest

import lascopf

DATA = Path(os.environ.get("LASCOPF_DATA", Path(__file__).resolve().parents[2] / "data"))


def test_case_summary_counts_terminals():
    s = lascopf.case_summary(str(DATA / "case5.json"))
    assert s["buses"] == 5
    assert s["terminals"] == 20
    assert s["horizon"] == 5


def test_prox_generator_closed_form():
    assert lascopf.prox_generator_scalar(0.25, 20.0, 0.0, 140.0, 1.0, 24.0) == pytest.approx(8.0 / 3.0, abs=1e-12)
    assert lascopf.prox_generator_scalar(0.25, 20.0, 0.0, 140.0, 1.0, -100.0) == 0.0


def test_schedule_and_threshold():
    assert lascopf.alpha_at("10@5,5@10,2.5@15,1.25@20,0.5", 12) == 2.5
    assert lascopf.stop_threshold(0.01, 20, 8) == pytest.approx(0.01 * math.sqrt(160), abs=1e-12)


def test_single_bus_opf_dispatches_load():
    rep = lascopf.solve(DATA / "case1.json", mode="opf")
    assert rep["status"] == "converged"
    assert abs(rep["dispatch_mw"][0][0] - 140.0) <= 0.06


def test_oracle_and_short_lookahead_agree():
    a = lascopf.solve(DATA / "case5.json", mode="lascopf", horizon=2, contingencies=[])
    b = lascopf.solve(DATA / "case5.json", mode="oracle", horizon=2, contingencies=[])
    assert a["status"] == "converged"
    assert abs(a["objective"] - b["objective"]) <= 0.002 * b["objective"]


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        lascopf.solve(DATA / "case5.json", mode="nonsense")
    with pytest.raises(ValueError):
        lascopf.case_summary(str(DATA / "missing.json"))
