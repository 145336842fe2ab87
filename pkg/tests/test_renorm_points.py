import numpy as np
import pytest

from fe_workbench.momenta import classify, eta
from fe_workbench.renorm_points import (check_table, leg_count, load, mass_dimension, rank_limit, realize,
                                        report, star_expected)


def test_table_is_consistent():
    rows = load()
    assert len(rows) == 45
    assert check_table(rows) == []
    assert report()["problems"] == []


def test_load_returns_copies():
    rows = load()
    rows[0]["term"] = "changed"
    assert load()[0]["term"] != "changed"


def test_rank_limit():
    assert [rank_limit(n) for n in (2, 3, 4, 5)] == [7, 5, 3, 1]


def test_row_helpers():
    row = {"fields": ["A", "A"], "sources": ["gamma"], "insertion": None, "derivatives": 0}
    assert leg_count(row) == 3
    assert mass_dimension(row) == 0
    beta = {"fields": ["A"], "sources": [], "insertion": "beta", "derivatives": 0}
    assert leg_count(beta) == 2
    one = {"fields": ["A"], "sources": [], "insertion": "1", "derivatives": 1}
    assert leg_count(one) == 1 and mass_dimension(one) == 3
    assert not star_expected({"r_m": None, "rank": 4})
    assert star_expected({"r_m": 1, "rank": 1})
    assert not star_expected({"r_m": 7, "rank": 2})


def test_corrupted_rows_are_reported():
    rows = load()
    rows[0]["dimension"] += 1
    rows[1]["star"] = not rows[1]["star"]
    problems = check_table(rows)
    assert len(problems) >= 2


@pytest.mark.parametrize("idx", range(45))
def test_realize(idx):
    row = load()[idx]
    lam, cfg = realize(row, M=2.0, seed=1)
    rp = row["ren_point"]
    assert cfg.n == rp["n"]
    assert lam == (0.0 if rp["Lam"] == "0" else 2.0)
    if rp["momenta"] == "zero":
        assert np.all(cfg.p == 0)
    else:
        assert eta(cfg) > 0 and classify(cfg, 0.5) == "in_M_n"


def test_report_c_threshold():
    rep = report(c=0.9)
    assert rep["problems"] == [] and rep["c"] == 0.9
    for r in rep["realized"]:
        assert r["eta"] == 0.0 or (r["eta"] > 0.9 and r["class"] == "in_M_n")
