"""Baseline labeling and closed-form counting bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

# A rational upper bound on e; every bound below is increasing in e.
E_UPPER = Fraction("2.7182818285")


def _width(n: int) -> int:
    return max(0, (n - 1).bit_length())


@dataclass(frozen=True)
class TrivialLabel:
    index: int
    forward: str  # bit k-1 is adjacency of index to index+k mod n

    def bits(self, n: int) -> str:
        w = _width(n)
        return (format(self.index, f"0{w}b") if w else "") + self.forward


def trivial_encode(adjacency) -> list[str]:
    """Labels of ``ceil((n-1)/2) + ceil(log2 n)`` bits each."""
    A = np.asarray(adjacency, dtype=bool)
    n = A.shape[0]
    if n < 2:
        raise ValueError("need at least two vertices")
    m = math.ceil((n - 1) / 2)
    out = []
    for i in range(n):
        fwd = "".join("1" if A[i, (i + k) % n] else "0" for k in range(1, m + 1))
        out.append(TrivialLabel(i, fwd).bits(n))
    return out


def trivial_decode(a: str, b: str, n: int) -> int:
    w = _width(n)
    m = math.ceil((n - 1) / 2)
    if len(a) != w + m or len(b) != w + m:
        raise ValueError(f"labels must be {w + m} bits for n={n}")
    i = int(a[:w], 2) if w else 0
    j = int(b[:w], 2) if w else 0
    if i == j:
        raise ValueError("self-query")
    k = (j - i) % n
    if 1 <= k <= m:
        return int(a[w + k - 1])
    return int(b[w + (i - j) % n - 1])


def warren_region_bound(k: int, l: int, d: int) -> Fraction:
    """Upper bound ``(8 e d k / l)^l`` on sign regions, with ``e`` over-approximated."""
    if l < 1 or d < 1 or k < l:
        raise ValueError("need k >= l >= 1 and d >= 1")
    return (8 * E_UPPER * d * Fraction(k, l)) ** l


@dataclass(frozen=True)
class FamilyCount:
    value: Fraction
    c: float  # value <= 2^(c n ln n)
    warren: Fraction | None  # region bound at k = C(n,2) p, l = n dimS


def family_count_bound(n: int, dimS: int, p: int, d: int) -> FamilyCount:
    """Count bound ``(4 e d p n / dimS)^(n dimS)`` on labelled graphs in a family."""
    if min(n, dimS, p, d) < 1:
        raise ValueError("all arguments must be >= 1")
    exp = n * dimS
    base = 4 * E_UPPER * d * p * Fraction(n, dimS)
    value = base**exp
    log2v = exp * math.log2(base)
    c = log2v / (n * math.log(n)) if n > 1 else math.inf
    k, l = math.comb(n, 2) * p, n * dimS
    warren = warren_region_bound(k, l, d) if k >= l else None
    return FamilyCount(value, c, warren)


def alpha(Q: int) -> int:
    return 8**Q - 2 * 4**Q + 2 * 2**Q - 3 * Q - 1


def trivial_bound(n: int) -> int:
    return math.ceil((n - 1) / 2) + _width(n)


def scheme_exponent(Q: int) -> float:
    if Q < 1:
        raise ValueError("Q must be >= 1")
    return math.log2(2**Q - 1) / Q


def significant(x: Fraction, digits: int = 12) -> str:
    """Decimal string of ``x`` rounded to ``digits`` significant digits."""
    if x == 0:
        return "0"
    sign = "-" if x < 0 else ""
    x = abs(x)
    e = len(str(x.numerator)) - len(str(x.denominator))
    if Fraction(10) ** e > x:
        e -= 1
    scaled = x / Fraction(10) ** (e - digits + 1)
    m = round(scaled)
    if m >= 10**digits:
        m //= 10
        e += 1
    s = str(m)
    return f"{sign}{s[0]}.{s[1:]}e{e:+d}"
