"""Semi-algebraic families: parsing, Veronese lift and bilinear reduction.

Everything here is exact.  Coordinates, matrix entries and diagonal values
are :class:`fractions.Fraction`; nothing is ever rounded, so the sign of an
edge polynomial is always computed correctly.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations_with_replacement
from math import comb, lcm
from typing import Iterable, Sequence

from .polyparse import FamilySyntaxError, parse_document, poly_add

__all__ = [
    "FamilyError",
    "FamilySyntaxError",
    "EdgeSign",
    "PolynomialPredicate",
    "Family",
    "MonomialBasis",
    "BilinearForm",
    "DiagonalizedForm",
    "parse_family",
    "monomial_basis",
    "veronese_lift",
    "to_bilinear",
    "congruence_diagonalize",
    "reduce_predicate",
    "reduced_lift",
    "edge_sign",
    "hyperplane_normal",
    "format_rational",
    "parse_rational",
    "integerize",
]


class FamilyError(ValueError):
    """Semantically invalid family (asymmetric, zero, inconsistent dims)."""


class EdgeSign(enum.IntEnum):
    NEGATIVE = -1
    ZERO = 0
    POSITIVE = 1

    @classmethod
    def of(cls, value) -> "EdgeSign":
        return cls((value > 0) - (value < 0))


def format_rational(r: Fraction) -> str:
    r = Fraction(r)
    return f"{r.numerator}/{r.denominator}"


def parse_rational(text: str) -> Fraction:
    return Fraction(text.strip())


def integerize(vec: Sequence[Fraction]) -> tuple[list[int], int]:
    """Return ``(ints, scale)`` with ``vec == ints / scale`` and ``scale > 0``."""
    scale = 1
    for v in vec:
        scale = lcm(scale, Fraction(v).denominator)
    return [int(Fraction(v) * scale) for v in vec], scale


# ---------------------------------------------------------------------------
# predicates


@dataclass(frozen=True)
class PolynomialPredicate:
    """Edge predicate ``f(x, y) >= 0`` (or ``> 0`` when ``strict``).

    ``terms`` maps ``(xexp, yexp)`` to an integer coefficient.
    """

    q: int
    terms: dict
    strict: bool = False

    def __post_init__(self):
        terms = {(tuple(a), tuple(b)): int(c) for (a, b), c in self.terms.items() if c != 0}
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise FamilyError("zero polynomial: the predicate is constant")
        for a, b in terms:
            if len(a) != self.q or len(b) != self.q:
                raise FamilyError("exponent vector length does not match q")
            if min(a + b) < 0:
                raise FamilyError("negative exponent")
        mirrored = {(b, a): c for (a, b), c in terms.items()}
        if mirrored != terms:
            raise FamilyError("predicate is not symmetric under swapping x and y")

    @property
    def d(self) -> int:
        """Total degree of ``f`` in ``(x, y)``."""
        return max(sum(a) + sum(b) for a, b in self.terms)

    @property
    def lift_degree(self) -> int:
        """Largest degree of ``f`` in either argument alone."""
        return max(max(sum(a), sum(b)) for a, b in self.terms)

    def evaluate(self, x: Sequence, y: Sequence) -> Fraction:
        if len(x) != self.q or len(y) != self.q:
            raise FamilyError("point dimension does not match q")
        x = [Fraction(v) for v in x]
        y = [Fraction(v) for v in y]
        total = Fraction(0)
        for (a, b), c in self.terms.items():
            t = Fraction(c)
            for v, e in zip(x, a):
                if e:
                    t *= v ** e
            for v, e in zip(y, b):
                if e:
                    t *= v ** e
            total += t
        return total

    def holds(self, x, y) -> bool:
        v = self.evaluate(x, y)
        return v > 0 if self.strict else v >= 0

    def negated(self) -> "PolynomialPredicate":
        return PolynomialPredicate(self.q, {k: -c for k, c in self.terms.items()}, self.strict)

    def encoding_form(self) -> tuple["PolynomialPredicate", bool]:
        """Non-strict predicate to encode, plus whether decoded bits flip.

        ``f > 0`` is the complement of ``-f >= 0``.
        """
        if self.strict:
            return PolynomialPredicate(self.q, {k: -c for k, c in self.terms.items()}), True
        return self, False

    def to_json(self) -> dict:
        terms = [
            {"xexp": list(a), "yexp": list(b), "coef": str(c)}
            for (a, b), c in sorted(self.terms.items())
        ]
        return {"q": self.q, "d": self.d, "terms": terms, "strict": self.strict}

    @classmethod
    def from_json(cls, obj: dict) -> "PolynomialPredicate":
        terms = {(tuple(t["xexp"]), tuple(t["yexp"])): int(t["coef"]) for t in obj["terms"]}
        pred = cls(int(obj["q"]), terms, bool(obj.get("strict", False)))
        if "d" in obj and int(obj["d"]) != pred.d:
            raise FamilyError("declared degree does not match terms")
        return pred


@dataclass(frozen=True)
class Family:
    """Conjunction of symmetric polynomial constraints on ``R^q``."""

    q: int
    constraints: tuple
    source: str = field(default="", compare=False)

    @property
    def predicate(self) -> PolynomialPredicate:
        if len(self.constraints) != 1:
            raise FamilyError(f"family has {len(self.constraints)} constraints, expected one")
        return self.constraints[0]

    def holds(self, x, y) -> bool:
        return all(c.holds(x, y) for c in self.constraints)

    def to_json(self) -> dict:
        return {"q": self.q, "constraints": [c.to_json() for c in self.constraints]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, obj: dict) -> "Family":
        cons = tuple(PolynomialPredicate.from_json(c) for c in obj["constraints"])
        return cls(int(obj["q"]), cons)


def parse_family(text: str) -> Family:
    """Parse a family-spec document into a validated :class:`Family`.

    ``<=``/``>=`` give non-strict predicates, ``<``/``>`` strict ones and
    ``==`` expands into the pair ``f >= 0``, ``-f >= 0``.
    """
    q, raw = parse_document(text)
    nv = 2 * q
    preds = []
    for rc in raw:
        if rc.op in (">=", ">", "=="):
            poly = poly_add(rc.lhs, rc.rhs, -1)
        else:
            poly = poly_add(rc.rhs, rc.lhs, -1)
        terms = {(k[:q], k[q:nv]): c for k, c in poly.items()}
        strict = rc.op in (">", "<")
        try:
            p = PolynomialPredicate(q, terms, strict)
        except FamilyError as exc:
            raise FamilyError(f"line {rc.line}: {exc}") from None
        preds.append(p)
        if rc.op == "==":
            preds.append(p.negated())
    return Family(q, tuple(preds), source=text)


# ---------------------------------------------------------------------------
# lift


@dataclass(frozen=True)
class MonomialBasis:
    q: int
    d: int
    monomials: tuple

    @cached_property
    def index(self) -> dict:
        return {m: i for i, m in enumerate(self.monomials)}

    def __len__(self) -> int:
        return len(self.monomials)


def monomial_basis(q: int, d: int) -> MonomialBasis:
    """All exponent vectors of total degree <= d, graded-lex order.

    Within a degree, larger exponents on earlier variables come first, so
    for ``q=2, d=2`` the order is ``1, x1, x2, x1^2, x1 x2, x2^2``.
    """
    monos = []
    for deg in range(d + 1):
        layer = set()
        for combo in combinations_with_replacement(range(q), deg):
            e = [0] * q
            for i in combo:
                e[i] += 1
            layer.add(tuple(e))
        monos.extend(sorted(layer, reverse=True))
    assert len(monos) == comb(q + d, d)
    return MonomialBasis(q, d, tuple(monos))


def veronese_lift(point: Sequence, basis: MonomialBasis) -> list[Fraction]:
    if len(point) != basis.q:
        raise FamilyError(f"point has dimension {len(point)}, expected {basis.q}")
    p = [Fraction(v) for v in point]
    out = []
    for m in basis.monomials:
        t = Fraction(1)
        for v, e in zip(p, m):
            if e:
                t *= v ** e
        out.append(t)
    return out


@dataclass(frozen=True)
class BilinearForm:
    basis: MonomialBasis
    matrix: tuple  # tuple of tuples of Fraction

    @property
    def dim(self) -> int:
        return len(self.matrix)

    def value(self, u: Sequence, v: Sequence) -> Fraction:
        return sum(
            (ui * mij * vj for ui, row in zip(u, self.matrix) if ui for mij, vj in zip(row, v) if mij and vj),
            Fraction(0),
        )


def to_bilinear(f: PolynomialPredicate) -> BilinearForm:
    """Matrix ``M`` with ``lift(x)^T M lift(y) == f(x, y)``."""
    basis = monomial_basis(f.q, f.lift_degree)
    n = len(basis)
    m = [[Fraction(0)] * n for _ in range(n)]
    for (a, b), c in f.terms.items():
        m[basis.index[a]][basis.index[b]] += c
    return BilinearForm(basis, tuple(tuple(row) for row in m))


# ---------------------------------------------------------------------------
# diagonalisation


@dataclass(frozen=True)
class DiagonalizedForm:
    """``M == basis_inverse^T diag(diagonal) basis_inverse`` exactly.

    ``change_of_basis`` is the full invertible ``P`` with ``P^T M P``
    diagonal; ``full_diagonal`` keeps the zero entries that were dropped.
    """

    diagonal: tuple
    basis_inverse: tuple
    change_of_basis: tuple
    full_diagonal: tuple
    basis: MonomialBasis | None = None

    @property
    def reduced_dim(self) -> int:
        return len(self.diagonal)

    Q = reduced_dim

    @property
    def signature(self) -> tuple[int, int]:
        pos = sum(1 for v in self.diagonal if v > 0)
        return pos, len(self.diagonal) - pos

    @cached_property
    def integer_diagonal(self) -> tuple:
        """Positive multiple of the diagonal with integer entries."""
        ints, _ = integerize(self.diagonal)
        return tuple(ints)

    def to_json(self) -> dict:
        return {
            "Q": self.reduced_dim,
            "signature": list(self.signature),
            "diagonal": [format_rational(v) for v in self.diagonal],
            "basis_inverse": [[format_rational(v) for v in row] for row in self.basis_inverse],
            "monomials": [list(m) for m in self.basis.monomials] if self.basis else None,
        }


def _as_matrix(M) -> tuple[list[list[Fraction]], MonomialBasis | None]:
    if isinstance(M, BilinearForm):
        return [list(r) for r in M.matrix], M.basis
    return [[Fraction(v) for v in row] for row in M], None


def _invert(P: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(P)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(P)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                c = aug[r][col]
                aug[r] = [a - c * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def congruence_diagonalize(M) -> DiagonalizedForm:
    """Exact symmetric elimination by congruence.

    Accepts a :class:`BilinearForm` or any square symmetric matrix of
    rationals.  Zero pivots are handled by swapping in a later non-zero
    diagonal entry or, failing that, by the basis move ``e_k <- e_k + e_j``.
    """
    A, basis = _as_matrix(M)
    n = len(A)
    if any(len(row) != n for row in A):
        raise FamilyError("matrix is not square")
    if any(A[i][j] != A[j][i] for i in range(n) for j in range(i)):
        raise FamilyError("matrix is not symmetric")
    M0 = [row[:] for row in A]
    P = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]

    def swap(i, j):
        A[i], A[j] = A[j], A[i]
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in P:
            row[i], row[j] = row[j], row[i]

    def add_to(k, j, c):
        # e_k <- e_k + c e_j
        A[k] = [a + c * b for a, b in zip(A[k], A[j])]
        for row in A:
            row[k] += c * row[j]
        for row in P:
            row[k] += c * row[j]

    for k in range(n):
        if A[k][k] == 0:
            j = next((j for j in range(k + 1, n) if A[j][j] != 0), None)
            if j is not None:
                swap(k, j)
            else:
                j = next((j for j in range(k + 1, n) if A[k][j] != 0), None)
                if j is None:
                    continue
                add_to(k, j, Fraction(1))
        pivot = A[k][k]
        for i in range(k + 1, n):
            if A[i][k] != 0:
                c = A[i][k] / pivot
                A[i] = [a - c * b for a, b in zip(A[i], A[k])]
                for row in A:
                    row[i] -= c * row[k]
                for row in P:
                    row[i] -= c * row[k]

    full = [A[i][i] for i in range(n)]
    if any(A[i][j] != 0 for i in range(n) for j in range(n) if i != j):
        raise ArithmeticError("elimination left off-diagonal entries")
    C = _invert(P)
    keep = [i for i in range(n) if full[i] != 0]
    diag = tuple(full[i] for i in keep)
    rows = tuple(tuple(C[i]) for i in keep)
    # post-condition: M == C_r^T D C_r
    for i in range(n):
        for j in range(n):
            s = sum((d * r[i] * r[j] for d, r in zip(diag, rows)), Fraction(0))
            if s != M0[i][j]:
                raise ArithmeticError("congruence identity failed")
    return DiagonalizedForm(
        diagonal=diag,
        basis_inverse=rows,
        change_of_basis=tuple(tuple(r) for r in P),
        full_diagonal=tuple(full),
        basis=basis,
    )


def reduce_predicate(f: PolynomialPredicate) -> DiagonalizedForm:
    form = congruence_diagonalize(to_bilinear(f))
    if form.reduced_dim == 0:
        raise FamilyError("predicate reduces to a constant")
    return form


def reduced_lift(point: Sequence, form: DiagonalizedForm) -> list[Fraction]:
    lifted = veronese_lift(point, form.basis)
    return [sum((c * v for c, v in zip(row, lifted) if c and v), Fraction(0)) for row in form.basis_inverse]


def edge_sign(x: Sequence, y: Sequence, form: DiagonalizedForm) -> EdgeSign:
    rx = reduced_lift(x, form)
    ry = reduced_lift(y, form)
    return EdgeSign.of(sum((d * a * b for d, a, b in zip(form.diagonal, rx, ry)), Fraction(0)))


def hyperplane_normal(y: Sequence, form: DiagonalizedForm) -> list[Fraction]:
    """``w`` such that ``x`` is adjacent to ``y`` iff ``w . reduced_lift(x) >= 0``."""
    return [d * v for d, v in zip(form.diagonal, reduced_lift(y, form))]


def lift_points(points: Iterable[Sequence], form: DiagonalizedForm) -> list[list[Fraction]]:
    return [reduced_lift(p, form) for p in points]
