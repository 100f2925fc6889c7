from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from sagl.signs import bilinear_signs, exact_bilinear_signs


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 6), st.sampled_from([3, 30, 70, 300]), st.integers(0, 2**32 - 1))
def test_filtered_signs_match_exact(k, bits, seed):
    r = np.random.default_rng(seed)

    def big(shape):
        return [[int(v) * (1 << bits) // 1000 + int(w) for v, w in zip(r.integers(-1000, 1000, k), r.integers(-9, 9, k))]
                for _ in range(shape)]

    L, R = big(6), big(5)
    R.append(list(L[0]))  # force near-cancellation cases
    R.append([-v for v in L[1]])
    D = [int(v) or 1 for v in r.integers(-3, 4, k)]
    assert (bilinear_signs(L, R, D) == exact_bilinear_signs(L, R, D)).all()


def test_exact_cancellation_detected():
    a = (1 << 200) + 1
    L = [[a, a]]
    R = [[a, a]]
    assert bilinear_signs(L, R, [1, -1])[0, 0] == 0
    assert bilinear_signs(L, [[a, a - 1]], [1, -1])[0, 0] == 1


def test_empty_inputs():
    assert bilinear_signs([], [[1]], [1]).shape == (0, 1)
