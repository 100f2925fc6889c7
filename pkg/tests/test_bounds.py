from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sagl.bounds import (
    E_UPPER,
    alpha,
    family_count_bound,
    scheme_exponent,
    significant,
    trivial_bound,
    trivial_decode,
    trivial_encode,
    warren_region_bound,
)

mpmath.mp.dps = 50
E_MP = mpmath.mpf("2.7182818285")


def random_graph(n, seed, p=0.5):
    r = np.random.default_rng(seed)
    A = np.triu(r.random((n, n)) < p, 1)
    return A | A.T


def cycle(n):
    A = np.zeros((n, n), dtype=bool)
    for i in range(n):
        A[i, (i + 1) % n] = A[(i + 1) % n, i] = True
    return A


def test_two_vertices():
    A = np.array([[False, True], [True, False]])
    labels = trivial_encode(A)
    assert [len(lab) for lab in labels] == [2, 2]
    assert trivial_decode(labels[0], labels[1], 2) == trivial_decode(labels[1], labels[0], 2) == 1


def test_five_cycle():
    A = cycle(5)
    labels = trivial_encode(A)
    for i in range(5):
        for j in range(i + 1, 5):
            assert trivial_decode(labels[i], labels[j], 5) == A[i, j]


def test_thousand_vertex_length():
    labels = trivial_encode(random_graph(1000, 3))
    assert {len(lab) for lab in labels} == {500 + 10}


@given(st.integers(2, 40), st.integers(0, 10**6))
def test_trivial_scheme_exact(n, seed):
    A = random_graph(n, seed)
    labels = trivial_encode(A)
    assert all(len(lab) == trivial_bound(n) for lab in labels)
    for i in range(n):
        for j in range(n):
            if i != j:
                assert trivial_decode(labels[i], labels[j], n) == A[i, j]


def test_trivial_rejects_bad_input():
    labels = trivial_encode(cycle(4))
    with pytest.raises(ValueError):
        trivial_decode(labels[0], labels[0], 4)
    with pytest.raises(ValueError):
        trivial_decode(labels[0][:-1], labels[1], 4)
    with pytest.raises(ValueError):
        trivial_encode(np.zeros((1, 1)))


# -- Warren and family counts ------------------------------------------------------------


def test_warren_unit_arguments():
    v = warren_region_bound(1, 1, 1)
    assert v == 8 * E_UPPER
    assert float(v) == pytest.approx(21.746, abs=1e-3)
    assert E_UPPER > Fraction(math.e)


def test_warren_homogeneity_and_substitution():
    for l, d in [(1, 1), (3, 2), (7, 4)]:
        assert warren_region_bound(2 * 10 * l, l, d) == warren_region_bound(10 * l, l, d) * 2**l
        assert warren_region_bound(l, l, d) == (8 * E_UPPER * d) ** l


def test_warren_domain():
    with pytest.raises(ValueError):
        warren_region_bound(2, 3, 1)
    with pytest.raises(ValueError):
        warren_region_bound(3, 3, 0)


def test_family_count_dominates_warren():
    for n, dimS, p, d in [(10, 2, 1, 2), (30, 3, 2, 2), (100, 2, 1, 4), (12, 5, 3, 1)]:
        fc = family_count_bound(n, dimS, p, d)
        assert fc.warren is not None and fc.warren <= fc.value
        log2v = mpmath.log(mpmath.mpf(fc.value.numerator) / fc.value.denominator, 2)
        assert fc.c * n * math.log(n) == pytest.approx(float(log2v), rel=1e-12)


def test_family_count_homogeneity():
    a = family_count_bound(8, 2, 1, 2).value
    b = family_count_bound(8, 2, 2, 2).value
    assert b == a * 2 ** (8 * 2)


def test_unit_disk_count_is_finite():
    fc = family_count_bound(10, 2, 1, 2)
    assert math.isfinite(fc.c) and fc.c > 0
    assert significant(fc.value).startswith("5.33444773906")


def test_significant_rounding():
    assert significant(Fraction(123456789012345, 10)) == "1.23456789012e+13"
    assert significant(Fraction(-999999999999999, 10**15)) == "-1.00000000000e+0"
    assert significant(Fraction(0)) == "0"


# -- exponents ------------------------------------------------------------------------------


def test_exponents():
    assert round(scheme_exponent(4), 6) == 0.976723
    assert round(scheme_exponent(5), 6) == 0.990839
    assert scheme_exponent(1) == 0
    vals = [scheme_exponent(Q) for Q in range(1, 40)]
    assert all(v < 1 for v in vals)
    assert vals == sorted(vals) and len(set(vals)) == len(vals)


def test_alpha_values():
    assert alpha(1) == 8 - 8 + 4 - 3 - 1 == 0
    assert alpha(4) == 4096 - 512 + 32 - 13 == 3603
