from __future__ import annotations

import sys
from fractions import Fraction

import numpy as np
import pytest

from sagl.harness import InstanceSpec, gated_instance, plan_family
from sagl.partition import HierarchyParams, build_hierarchy

UNIT_DISK = "q=2\n(x1-y1)^2 + (x2-y2)^2 <= 4\n"
DISK = "q=3\n(x1-y1)^2 + (x2-y2)^2 <= (x3+y3)^2\n"


def rational_points(rng, n, q, lo=-4, hi=4, den=97):
    return [tuple(Fraction(int(v), den) for v in rng.integers(lo * den, hi * den + 1, q)) for _ in range(n)]


def build(spec: InstanceSpec, **params):
    """Gate-approved points plus one certified hierarchy per constraint."""
    family = spec.family_obj()
    plans = plan_family(family)
    pts, gate, _ = gated_instance(spec, plans)
    hp = HierarchyParams(seed=spec.seed, **params)
    trees = [build_hierarchy(L, None, S.adjacency, hp) for L, S in zip(gate.lifted, gate.signs)]
    return pts, gate, trees


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        ok, detail = results[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
