"""Exact signs of diagonal bilinear forms over many point pairs.

Values are ``sum_k D[k] * U[i, k] * V[j, k]`` with arbitrary-size integers.
Small inputs go through int64 directly; large ones use a float pass whose
error is bounded, and only entries the bound cannot decide are redone in
Python integers.
"""

from __future__ import annotations

import numpy as np

_INT64_SAFE = 1 << 62


def _max_abs(rows) -> int:
    return max((abs(v) for row in rows for v in row), default=0)


def _scaled_floats(rows) -> np.ndarray:
    # Per-row power-of-two scaling keeps every entry in [-1, 1]; signs are
    # unaffected because each row is multiplied by a positive constant.
    out = np.empty((len(rows), len(rows[0]) if rows else 0))
    for i, row in enumerate(rows):
        e = max((abs(v) for v in row), default=0).bit_length()
        div = 1 << e
        out[i] = [v / div for v in row]
    return out


def bilinear_signs(left, right, diagonal) -> np.ndarray:
    """``sign(sum_k diagonal[k] * left[i][k] * right[j][k])`` as int8 (n_left x n_right).

    ``left`` and ``right`` are sequences of equal-length integer rows.
    """
    left = [list(map(int, r)) for r in left]
    right = [list(map(int, r)) for r in right]
    diagonal = [int(d) for d in diagonal]
    if not left or not right:
        return np.zeros((len(left), len(right)), dtype=np.int8)
    k = len(diagonal)
    u = [[d * v for d, v in zip(diagonal, row)] for row in left]
    bound = k * _max_abs(u) * _max_abs(right)
    if bound < _INT64_SAFE:
        g = np.asarray(u, dtype=np.int64) @ np.asarray(right, dtype=np.int64).T
        return np.sign(g).astype(np.int8)

    uf = _scaled_floats(u)
    vf = _scaled_floats(right)
    g = uf @ vf.T
    err = (k + 4) * 2.0**-52 * (np.abs(uf) @ np.abs(vf).T) * 1.01 + 1e-300
    out = np.sign(g).astype(np.int8)
    unsure = np.argwhere(np.abs(g) <= err)
    for i, j in unsure:
        s = sum(a * b for a, b in zip(u[i], right[j]))
        out[i, j] = (s > 0) - (s < 0)
    return out


def exact_bilinear_signs(left, right, diagonal) -> np.ndarray:
    """Reference implementation in pure Python integers (slow)."""
    out = np.zeros((len(left), len(right)), dtype=np.int8)
    for i, a in enumerate(left):
        for j, b in enumerate(right):
            s = sum(int(d) * int(x) * int(y) for d, x, y in zip(diagonal, a, b))
            out[i, j] = (s > 0) - (s < 0)
    return out
