"""Renormalization-point table as a data fixture, with consistency checks."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import numpy as np

from .momenta import MomentumConfig, classify, coplanar_point, eta, symmetric_point
from .tensors import DIM, lemma_thresholds

POINT_CLASSES = ("symmetric", "coplanar", "zero")
KAPPA_SOURCES = ("gamma", "omega")


@lru_cache(maxsize=1)
def _rows() -> tuple:
    text = resources.files("fe_workbench").joinpath("data/renorm_points.json").read_text()
    return tuple(json.loads(text)["rows"])


def load() -> list:
    """Fresh copies of all rows, in table order."""
    return json.loads(json.dumps(_rows()))


def leg_count(row: dict) -> int:
    """Fields plus sources, counting a beta insertion but not the 1 insertion."""
    return len(row["fields"]) + len(row["sources"]) + (row["insertion"] == "beta")


def mass_dimension(row: dict) -> int:
    """4 - legs - momentum derivatives - gamma/omega sources, +1 for the 1 insertion."""
    kappa = sum(s in KAPPA_SOURCES for s in row["sources"])
    return 4 - leg_count(row) - row["derivatives"] - kappa + (row["insertion"] == "1")


def rank_limit(n: int) -> int:
    """11 - 2n: the largest rank with independent monomials at a symmetric n-point."""
    return lemma_thresholds(n - 1, DIM)[0]


def star_expected(row: dict) -> bool:
    if row["r_m"] is None:
        return False
    return row["r_m"] < row["rank"] + 1


def check_table(rows=None) -> list:
    """Human-readable problems; empty when every row is consistent."""
    rows = load() if rows is None else rows
    problems = []
    for row in rows:
        t = row["term"]
        if leg_count(row) != row["n"]:
            problems.append(f"{t}: leg count {leg_count(row)} != n = {row['n']}")
        if mass_dimension(row) != row["dimension"]:
            problems.append(f"{t}: dimension {mass_dimension(row)} != {row['dimension']}")
        if row["r_m"] is not None and row["r_m"] != rank_limit(row["n"]):
            problems.append(f"{t}: r_m {row['r_m']} != 11 - 2n")
        if row["star"] != star_expected(row):
            problems.append(f"{t}: star flag disagrees with r_m < rank + 1")
        if row["ren_point"]["momenta"] not in POINT_CLASSES:
            problems.append(f"{t}: unknown point class")
    return problems


def realize(row: dict, M: float = 1.0, seed: int = 0, c: float = 0.5) -> tuple:
    """(Lambda, MomentumConfig) realizing the renormalization point of a row.

    c is the eta threshold a coplanar point has to clear.
    """
    rp = row["ren_point"]
    lam = 0.0 if rp["Lam"] == "0" else M
    n = rp["n"]
    if rp["momenta"] == "symmetric":
        return lam, symmetric_point(n, M, seed)
    if rp["momenta"] == "coplanar":
        return lam, coplanar_point(n, M, seed, c)
    return lam, MomentumConfig.from_independent(np.zeros((n - 1, 4)), M)


def report(c: float = 0.5, seed: int = 0) -> dict:
    """Table, consistency problems, and eta and class of each realized point."""
    rows = load()
    realized = []
    for row in rows:
        lam, cfg = realize(row, 1.0, seed, c)
        realized.append({"term": row["term"], "Lam": lam, "eta": eta(cfg), "class": classify(cfg, c)})
    problems = check_table(rows)
    problems += [f"{r['term']}: realized point is {r['class']}" for r, row in zip(realized, rows)
                 if row["ren_point"]["momenta"] != "zero" and r["class"] != "in_M_n"]
    return {"rows": rows, "count": len(rows), "c": c, "realized": realized, "problems": problems}
