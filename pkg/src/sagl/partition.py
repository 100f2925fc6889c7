"""Recursive cone partitions of the lifted vertex set.

Each non-terminal node of the hierarchy splits its members into at most
``2**Q`` cells.  Every provider here builds cells as the orthants of ``Q``
affine hyperplanes with independent normals (a common apex), which makes
hyperplane avoidance automatic: whatever hyperplane ``H`` you pick, some
orthant lies in a closed side of it.  Balance is what the providers work
for; both properties are still re-checked exactly on every node, against the
realised vertex hyperplanes only.

Searching uses floats.  Cell membership, loads and certificates are
computed exactly from integer coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .family import DiagonalizedForm, integerize, reduced_lift, hyperplane_normal

__all__ = [
    "PartitionError",
    "DegenerateInput",
    "ProviderExhausted",
    "LiftedPointSet",
    "HyperplaneSet",
    "Frame",
    "CellAssignment",
    "BalanceReport",
    "UniformityCertificate",
    "HierarchyParams",
    "HierarchyNode",
    "HierarchyTree",
    "lift_point_set",
    "hyperplane_set",
    "centerpoint_estimate",
    "halfspace_depth",
    "build_cell_assignment",
    "balance_bound",
    "verify_balance",
    "verify_uniformity",
    "build_hierarchy",
    "depth_bound",
    "strict_depth_bound",
    "check_audit",
]


class PartitionError(RuntimeError):
    pass


class DegenerateInput(PartitionError):
    pass


class ProviderExhausted(PartitionError):
    def __init__(self, node_id: int, vertices: Sequence[int], detail: str):
        shown = list(vertices)[:10]
        more = "" if len(vertices) <= 10 else f" (+{len(vertices) - 10} more)"
        super().__init__(f"node {node_id}: {detail}; offending vertices {shown}{more}")
        self.node_id = node_id
        self.vertices = list(vertices)


# ---------------------------------------------------------------------------
# point sets


@dataclass(frozen=True)
class LiftedPointSet:
    """Reduced lifts with an exact integer view and a float view.

    Row ``i`` is ``ints[i] / scales[i]``; ``floats`` is only for searching.
    """

    Q: int
    ids: np.ndarray
    ints: np.ndarray  # object dtype, (n, Q)
    scales: np.ndarray  # object dtype, (n,)
    floats: np.ndarray  # float64, (n, Q)

    @classmethod
    def from_vectors(cls, vectors: Sequence[Sequence[Fraction]], ids=None) -> "LiftedPointSet":
        if not vectors:
            raise ValueError("empty point set")
        Q = len(vectors[0])
        ints = np.empty((len(vectors), Q), dtype=object)
        scales = np.empty(len(vectors), dtype=object)
        floats = np.empty((len(vectors), Q))
        for i, v in enumerate(vectors):
            if len(v) != Q:
                raise ValueError("inconsistent vector lengths")
            row, s = integerize(v)
            ints[i] = row
            scales[i] = s
            floats[i] = [float(Fraction(x)) for x in v]
        ids = np.arange(len(vectors)) if ids is None else np.asarray(ids)
        return cls(Q, ids, ints, scales, floats)

    def __len__(self) -> int:
        return len(self.ids)

    def subset(self, idx) -> "LiftedPointSet":
        idx = np.asarray(idx)
        return LiftedPointSet(self.Q, self.ids[idx], self.ints[idx], self.scales[idx], self.floats[idx])

    def vector(self, i: int) -> tuple:
        s = self.scales[i]
        return tuple(Fraction(int(v), s) for v in self.ints[i])

    @property
    def points(self):
        return [(int(self.ids[i]), self.vector(i)) for i in range(len(self))]


@dataclass(frozen=True)
class HyperplaneSet:
    """One homogeneous hyperplane ``w . z = 0`` per vertex."""

    ids: np.ndarray
    normals: tuple  # tuple of tuples of Fraction

    def integer_normals(self) -> list[list[int]]:
        return [integerize(w)[0] for w in self.normals]


def lift_point_set(points: Sequence[Sequence], form: DiagonalizedForm) -> LiftedPointSet:
    return LiftedPointSet.from_vectors([reduced_lift(p, form) for p in points])


def hyperplane_set(points: Sequence[Sequence], form: DiagonalizedForm) -> HyperplaneSet:
    normals = tuple(tuple(hyperplane_normal(p, form)) for p in points)
    return HyperplaneSet(np.arange(len(points)), normals)


# ---------------------------------------------------------------------------
# centerpoints


def halfspace_depth(X: np.ndarray, c: np.ndarray, directions: np.ndarray) -> int:
    """Smallest closed-halfspace count through ``c`` over the given directions."""
    proj = (X - c) @ directions.T
    return int(min((proj >= 0).sum(0).min(), (proj <= 0).sum(0).min()))


def _critical_directions(X: np.ndarray, c: np.ndarray, rng, extra: int = 128) -> np.ndarray:
    Q = X.shape[1]
    dirs = [rng.standard_normal((extra, Q))]
    if Q == 2:
        d = X - c
        perp = np.stack([-d[:, 1], d[:, 0]], axis=1)
        rot = np.array([[1.0, -1e-7], [1e-7, 1.0]])
        dirs += [perp @ rot, perp @ rot.T]
    dirs.append(np.eye(Q))
    D = np.concatenate(dirs)
    norms = np.linalg.norm(D, axis=1)
    return D[norms > 0] / norms[norms > 0, None]


def _radon_point(P: np.ndarray) -> np.ndarray:
    k, Q = P.shape
    A = np.vstack([P.T, np.ones(k)])
    lam = np.linalg.svd(A)[2][-1]
    pos = lam > 0
    w = lam[pos].sum()
    if w <= 0:
        return P.mean(0)
    return (lam[pos, None] * P[pos]).sum(0) / w


def _iterated_radon(X: np.ndarray, rng) -> np.ndarray:
    m, Q = X.shape
    g = Q + 2
    level = X[rng.permutation(m)]
    while len(level) >= g:
        usable = (len(level) // g) * g
        level = np.array([_radon_point(level[i : i + g]) for i in range(0, usable, g)])
    return level.mean(0) if len(level) else X.mean(0)


def centerpoint_estimate(pts, seed=0, trials: int = 12) -> tuple:
    """A point of (heuristically) large halfspace depth, as exact rationals.

    For ``Q == 1`` this is the exact (lower) median.
    """
    rng = np.random.default_rng(seed)
    if isinstance(pts, LiftedPointSet):
        if len(pts) == 0:
            raise ValueError("empty point set")
        if pts.Q == 1:
            vals = sorted(Fraction(int(v[0]), s) for v, s in zip(pts.ints, pts.scales))
            return (vals[(len(vals) - 1) // 2],)
        X = pts.floats
    else:
        X = np.asarray(pts, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] == 1:
            vals = sorted(Fraction(v) for v in np.asarray(pts).ravel().tolist())
            return (vals[(len(vals) - 1) // 2],)
    cands = [np.median(X, axis=0), X.mean(0)]
    for _ in range(trials):
        cands.append(_iterated_radon(X, rng))
    best, best_depth = cands[0], -1
    for c in cands:
        depth = halfspace_depth(X, c, _critical_directions(X, c, rng))
        if depth > best_depth:
            best, best_depth = c, depth
    return tuple(Fraction(float(v)) for v in best)


# ---------------------------------------------------------------------------
# cell assignments


@dataclass(frozen=True)
class Frame:
    """``Q`` hyperplanes ``a_i . z = b_i``; cell index is ``1 + sum_i [a_i.z > b_i] 2^i``."""

    normals: tuple  # integer vectors
    offsets: tuple  # Fractions

    def cells(self, pts: LiftedPointSet) -> np.ndarray:
        idx = np.zeros(len(pts), dtype=np.int64)
        for i, (a, b) in enumerate(zip(self.normals, self.offsets)):
            b = Fraction(b)
            proj = pts.ints.dot(np.array(a, dtype=object))
            above = proj * b.denominator > pts.scales * b.numerator
            idx += np.asarray(above, dtype=bool).astype(np.int64) << i
        return idx + 1

    def apex(self) -> tuple:
        A = [[Fraction(v) for v in a] + [Fraction(b)] for a, b in zip(self.normals, self.offsets)]
        n = len(A)
        for col in range(n):
            piv = next((r for r in range(col, n) if A[r][col] != 0), None)
            if piv is None:
                raise DegenerateInput("frame normals are linearly dependent")
            A[col], A[piv] = A[piv], A[col]
            for r in range(n):
                if r != col and A[r][col] != 0:
                    c = A[r][col] / A[col][col]
                    A[r] = [x - c * y for x, y in zip(A[r], A[col])]
        return tuple(A[i][n] / A[i][i] for i in range(n))


@dataclass(frozen=True)
class CellAssignment:
    apex: tuple
    cell_of: np.ndarray  # cell index (1-based) per member, aligned with member order
    cell_count: int
    strategy: str
    frame: Frame | None = None

    def loads(self) -> list[int]:
        return np.bincount(self.cell_of - 1, minlength=self.cell_count).tolist()


def _rationalize(direction: np.ndarray, bits: int = 24) -> tuple:
    scale = float(np.max(np.abs(direction)))
    if scale == 0:
        raise DegenerateInput("zero direction")
    v = np.rint(direction / scale * (1 << bits)).astype(np.int64)
    return tuple(int(x) for x in v)


def _exact_proj(pts: LiftedPointSet, i: int, a) -> Fraction:
    return Fraction(int(sum(int(x) * y for x, y in zip(pts.ints[i], a))), int(pts.scales[i]))


def _threshold(pts: LiftedPointSet, a, lo: int | None, hi: int | None) -> Fraction:
    """Exact offset strictly between member ``lo`` and member ``hi`` on ``a``."""
    if lo is None:
        return _exact_proj(pts, hi, a) - 1
    if hi is None:
        return _exact_proj(pts, lo, a) + 1
    pl, ph = _exact_proj(pts, lo, a), _exact_proj(pts, hi, a)
    if pl >= ph:
        return min(pl, ph)
    return (pl + ph) / 2


def _median_frame(pts: LiftedPointSet, a) -> tuple:
    """Offset on ``a`` that puts ``floor(m/2)`` members at or below it."""
    m = len(pts)
    proj = [_exact_proj(pts, i, a) for i in range(m)]
    order = sorted(range(m), key=proj.__getitem__)
    k = m // 2
    lo, hi = proj[order[k - 1]], proj[order[k]]
    return lo if lo == hi else (lo + hi) / 2


def _assign_median(pts: LiftedPointSet) -> CellAssignment:
    b = _median_frame(pts, (1,))
    frame = Frame(((1,),), (b,))
    return CellAssignment((b,), frame.cells(pts), 2, "median", frame)


def _sweep_q2(pts: LiftedPointSet, rng) -> CellAssignment:
    """Two halving lines; the second found by a rotation sweep so that it also
    halves both sides of the first (a discrete ham-sandwich cut)."""
    X = pts.floats
    phi1 = rng.uniform(0, np.pi)
    a1 = _rationalize(np.array([np.cos(phi1), np.sin(phi1)]))
    b1 = _median_frame(pts, a1)
    side = Frame((a1,), (b1,)).cells(pts) == 2
    A, B = X[~side], X[side]
    if len(A) == 0 or len(B) == 0:
        raise DegenerateInput("halving line left one side empty")

    def g(phi):
        u = np.array([np.cos(phi), np.sin(phi)])
        pa = np.sort(A @ u)
        k = len(pa) // 2
        mid = pa[k] if k == 0 else 0.5 * (pa[k - 1] + pa[k])
        return float((B @ u > mid).sum()) - len(B) / 2.0

    lo = phi1 + rng.uniform(0.05, 0.5)
    hi = lo + np.pi
    glo = g(lo)
    best_phi, best_val = lo, abs(glo)
    for _ in range(60):
        if best_val < 1:
            break
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) < best_val:
            best_phi, best_val = mid, abs(gm)
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    a2 = _rationalize(np.array([np.cos(best_phi), np.sin(best_phi)]))
    if a1[0] * a2[1] - a1[1] * a2[0] == 0:
        raise DegenerateInput("sweep produced parallel lines")
    sub = pts.subset(np.flatnonzero(~side))
    b2 = _median_frame(sub, a2)
    frame = Frame((a1, a2), (b1, b2))
    return CellAssignment(frame.apex(), frame.cells(pts), 4, "sweep", frame)


def _whiten(X: np.ndarray):
    mu = X.mean(0)
    Y = X - mu
    _, S, Vt = np.linalg.svd(Y, full_matrices=False)
    if S[0] == 0:
        raise DegenerateInput("all points are equal")
    r = int((S > S[0] * 1e-9).sum())
    W = Vt[:r].T / S[:r] * math.sqrt(len(X))
    null = Vt[r:]
    return mu, W, null, Y @ W


def _best_split(t: np.ndarray, keys: np.ndarray, nkeys: int):
    """Best threshold position on projections ``t`` given the other cells."""
    m = len(t)
    order = np.argsort(t, kind="stable")
    ts = t[order]
    onehot = np.zeros((m + 1, nkeys), dtype=np.int64)
    onehot[np.arange(1, m + 1), keys[order]] = 1
    below = np.cumsum(onehot, axis=0)
    above = below[-1] - below
    worst = np.maximum(below, above).max(1)
    spread = (below.astype(float) ** 2).sum(1) + (above.astype(float) ** 2).sum(1)
    ok = np.ones(m + 1, dtype=bool)
    ok[1:m] = ts[1:] > ts[:-1]
    score = np.where(ok, worst * 1e12 + spread, np.inf)
    pos = int(np.argmin(score))
    lo = int(order[pos - 1]) if pos > 0 else None
    hi = int(order[pos]) if pos < m else None
    return int(worst[pos]), float(spread[pos]), pos, lo, hi


def _orthant_descent(pts: LiftedPointSet, rng, rounds: int = 3, candidates: int = 16) -> CellAssignment:
    """Orthants of ``Q`` hyperplanes through a common apex, balanced by
    coordinate descent over each hyperplane's direction and offset.

    Starts from a random rotation anchored at the centerpoint estimate.
    """
    m, Q = pts.floats.shape
    mu, W, null, Z = _whiten(pts.floats)
    r = Z.shape[1]
    center = np.asarray([float(v) for v in centerpoint_estimate(Z, seed=int(rng.integers(1 << 31)))])
    G = np.linalg.qr(rng.standard_normal((r, r)))[0]
    dirs = [G[:, i % r] if i < r else rng.standard_normal(r) for i in range(Q)]
    dirs = [d / np.linalg.norm(d) for d in dirs]
    bits = np.stack([(Z @ d > center @ d) for d in dirs], axis=1)
    cut = [None] * Q  # (lo, hi) member indices straddling each hyperplane
    for i, d in enumerate(dirs):
        t = Z @ d
        below = np.flatnonzero(~bits[:, i])
        abv = np.flatnonzero(bits[:, i])
        cut[i] = (int(below[np.argmax(t[below])]) if len(below) else None,
                  int(abv[np.argmin(t[abv])]) if len(abv) else None)
    weights = 1 << np.arange(Q - 1)
    for _ in range(rounds):
        for i in range(Q):
            others = np.delete(bits, i, axis=1)
            keys = (others * weights).sum(1) if Q > 1 else np.zeros(m, dtype=np.int64)
            nkeys = 1 << (Q - 1)
            trial = [dirs[i]] + [rng.standard_normal(r) for _ in range(candidates)]
            best = None
            for d in trial:
                d = d / np.linalg.norm(d)
                t = Z @ d
                worst, spread, pos, lo, hi = _best_split(t, keys, nkeys)
                if best is None or (worst, spread) < best[:2]:
                    best = (worst, spread, d, lo, hi, t)
            _, _, d, lo, hi, t = best
            dirs[i] = d
            cut[i] = (lo, hi)
            thr = t[lo] if lo is not None else -np.inf
            bits[:, i] = t > thr
    normals, offsets = [], []
    for i in range(Q):
        a = W @ dirs[i]
        if null.shape[0]:
            a = a + 1e-3 * np.linalg.norm(a) * (rng.standard_normal(null.shape[0]) @ null)
        ai = _rationalize(a)
        normals.append(ai)
        offsets.append(_threshold(pts, ai, *cut[i]))
    frame = Frame(tuple(normals), tuple(offsets))
    return CellAssignment(frame.apex(), frame.cells(pts), 1 << Q, "orthant", frame)


def _line_cells(X, c, u1, u2):
    return 1 + ((X - c) @ u1 > 0).astype(int) + 2 * ((X - c) @ u2 > 0).astype(int)


def _exhaustive(pts: LiftedPointSet, hyps_int, adjacency_rows, strict: bool = True):
    """Search apexes at intersections of member-spanned lines (``Q <= 2``).

    Returns the first assignment meeting the strict load window and
    sign-uniformity, or ``None``.
    """
    m, Q = pts.floats.shape
    X = pts.floats
    if Q == 1:
        vals = sorted(set(X[:, 0].tolist()))
        cuts = [v - 1 for v in vals[:1]] + [(a + b) / 2 for a, b in zip(vals, vals[1:])] + [vals[-1] + 1]
        cands = [(np.array([c]), None, None) for c in cuts]
    elif Q == 2:
        lines = []
        for i in range(m):
            for j in range(i + 1, m):
                d = X[j] - X[i]
                if np.any(d):
                    lines.append((X[i], np.array([-d[1], d[0]])))
        apexes = [X[i] for i in range(m)]
        for i in range(len(lines)):
            for j in range(i + 1, len(lines)):
                (p, n1), (q, n2) = lines[i], lines[j]
                M = np.array([n1, n2])
                if abs(np.linalg.det(M)) > 1e-12:
                    apexes.append(np.linalg.solve(M, [n1 @ p, n2 @ q]))
        cands = [(c, None, None) for c in apexes]
    else:
        raise ValueError("exhaustive search supports Q <= 2 only")

    lo_load = m // (1 << Q)
    hi_load = lo_load + (1 << Q) - 1
    for c, _, _ in cands:
        if Q == 1:
            cells = 1 + (X[:, 0] > c[0]).astype(int)
            options = [cells]
        else:
            d = X - c
            ang = np.sort(np.mod(np.arctan2(d[:, 1], d[:, 0]), np.pi))
            ang = np.concatenate([ang, [ang[0] + np.pi]]) if len(ang) else ang
            dirs = 0.5 * (ang[1:] + ang[:-1]) if len(ang) > 1 else np.array([0.0])
            dirs = np.unique(np.concatenate([dirs, ang[:-1]]))
            normals = np.stack([-np.sin(dirs), np.cos(dirs)], axis=1)
            options = []
            for a in range(len(normals)):
                for b in range(a + 1, len(normals)):
                    if abs(normals[a][0] * normals[b][1] - normals[a][1] * normals[b][0]) > 1e-9:
                        options.append(_line_cells(X, c, normals[a], normals[b]))
        for cells in options:
            loads = np.bincount(cells - 1, minlength=1 << Q)
            if strict and (loads.min() < lo_load or loads.max() > hi_load):
                continue
            if adjacency_rows is not None and not _uniform_all(cells, adjacency_rows, pts.ids):
                continue
            return c, cells
    return None


def _uniform_all(cells, adjacency_rows, member_ids) -> bool:
    for y, row in enumerate(adjacency_rows):
        ok = False
        for t in np.unique(cells):
            sel = (cells == t) & (member_ids != y)
            vals = row[member_ids[sel]]
            if len(vals) == 0 or vals.all() or not vals.any():
                ok = True
                break
        if not ok:
            return False
    return True


def build_cell_assignment(
    pts: LiftedPointSet,
    hyps: HyperplaneSet | None = None,
    seed=0,
    strategy: str = "auto",
    adjacency: np.ndarray | None = None,
) -> CellAssignment:
    """Split ``pts`` into at most ``2**Q`` cone cells with a common apex.

    ``strategy`` is one of ``auto``, ``median`` (Q=1), ``sweep`` (Q=2),
    ``orthant`` (any Q) or ``exhaustive`` (Q<=2, tiny inputs; needs
    ``adjacency``).  Uniformity is not guaranteed here; callers verify it.
    """
    if len(pts) < 2:
        raise DegenerateInput("need at least two points to split")
    if not np.ptp(pts.floats, axis=0).any() and len({pts.vector(i) for i in range(len(pts))}) == 1:
        raise DegenerateInput("all points are equal")
    rng = np.random.default_rng(seed)
    Q = pts.Q
    if strategy == "auto":
        strategy = {1: "median", 2: "sweep"}.get(Q, "orthant")
    if strategy == "median":
        if Q != 1:
            raise ValueError("median split needs Q == 1")
        return _assign_median(pts)
    if strategy == "sweep":
        if Q != 2:
            raise ValueError("sweep needs Q == 2")
        return _sweep_q2(pts, rng)
    if strategy == "orthant":
        return _orthant_descent(pts, rng)
    if strategy == "exhaustive":
        found = _exhaustive(pts, None, adjacency)
        if found is None:
            raise ProviderExhausted(-1, [], "exhaustive search found no admissible partition")
        c, cells = found
        return CellAssignment(tuple(Fraction(float(v)) for v in np.atleast_1d(c)), cells, 1 << Q, "exhaustive")
    raise ValueError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# verification


def balance_bound(n: int, Q: int, beta=2) -> int:
    """Largest admissible cell load for a node of ``n`` members."""
    relaxed = math.ceil(Fraction(beta) * n / (1 << Q)) + (1 << Q) - 1
    return max(1, min(n - 1, relaxed))


@dataclass(frozen=True)
class BalanceReport:
    loads: tuple
    bound: int
    passed: bool
    strict: bool


def verify_balance(a, n: int, Q: int, beta=2) -> BalanceReport:
    """``a`` is a :class:`CellAssignment` or a sequence of cell loads."""
    loads = a.loads() if isinstance(a, CellAssignment) else list(a)
    loads = list(loads) + [0] * ((1 << Q) - len(loads))
    bound = balance_bound(n, Q, beta)
    lo = n // (1 << Q)
    strict = all(lo <= x <= lo + (1 << Q) - 1 for x in loads)
    return BalanceReport(tuple(loads), bound, max(loads) <= bound, strict)


@dataclass(frozen=True)
class UniformityCertificate:
    """Per vertex ``y`` (rows) and cell (columns): is ``y``'s adjacency
    constant on the cell's members, and if so, which value."""

    node_id: int
    uniform: np.ndarray  # bool (n, cells)
    bits: np.ndarray  # bool (n, cells)

    def cells_for(self, y: int) -> list[int]:
        return (np.flatnonzero(self.uniform[y]) + 1).tolist()

    @property
    def violations(self) -> list[int]:
        return np.flatnonzero(~self.uniform.any(1)).tolist()


def verify_uniformity(a, members, adjacency: np.ndarray, node_id: int = -1) -> UniformityCertificate:
    """Certificate of sign-uniform cells for every vertex of the graph.

    ``adjacency`` is the full boolean n x n edge matrix (diagonal ignored);
    ``members`` are the node's vertex ids aligned with ``a.cell_of``.  A
    vertex is not compared with itself.
    """
    members = np.asarray(members)
    cell_of = a.cell_of if isinstance(a, CellAssignment) else np.asarray(a)
    cells = a.cell_count if isinstance(a, CellAssignment) else int(cell_of.max())
    n = adjacency.shape[0]
    onehot = np.zeros((len(members), cells), dtype=np.float32)
    onehot[np.arange(len(members)), cell_of - 1] = 1
    sub = adjacency[:, members].astype(np.float32)
    sub[members, np.arange(len(members))] = 0
    cnt = np.rint(sub @ onehot).astype(np.int64)
    size = np.broadcast_to(onehot.sum(0).astype(np.int64), (n, cells)).copy()
    size[members, cell_of - 1] -= 1
    uniform = (cnt == 0) | (cnt == size)
    bits = (cnt == size) & (size > 0)
    return UniformityCertificate(node_id, uniform, bits)


# ---------------------------------------------------------------------------
# hierarchy


def strict_depth_bound(n: int, Q: int) -> int:
    """Splitting levels when every split meets the strict load window."""
    if n <= 4**Q:
        return 0
    ratio = Fraction(n - 2**Q + 1, 4**Q - 2**Q + 1)
    s = math.log2(ratio) / Q
    k = math.ceil(s)
    # guard the float ceiling: k is the least integer with 2^(Qk) >= ratio
    while Fraction(2) ** (Q * (k - 1)) >= ratio and k > 0:
        k -= 1
    while Fraction(2) ** (Q * k) < ratio:
        k += 1
    return k


def depth_bound(n: int, Q: int, beta=None) -> int:
    """Guaranteed number of splitting levels.

    ``beta=None`` is the strict bound; otherwise the worst-case recurrence
    ``m -> min(m - 1, ceil(beta m / 2^Q) + 2^Q - 1)`` is unrolled.
    """
    if beta is None:
        return strict_depth_bound(n, Q)
    m, k = n, 0
    while m > 4**Q:
        m = balance_bound(m, Q, beta)
        k += 1
    return k


@dataclass
class HierarchyParams:
    seed: int = 0
    beta: Fraction | int | float = 2
    max_retries: int = 32
    strict_balance: bool = False


@dataclass
class HierarchyNode:
    id: int
    parent: int | None
    depth: int
    members: np.ndarray  # vertex ids; for terminals this is the slot order
    assignment: CellAssignment | None = None
    children: dict = field(default_factory=dict)
    certificate: UniformityCertificate | None = None
    balance: BalanceReport | None = None
    seed: int | None = None
    retries: int = 0

    @property
    def terminal(self) -> bool:
        return self.assignment is None


@dataclass
class HierarchyTree:
    Q: int
    n: int
    nodes: list
    params: HierarchyParams

    @property
    def root(self) -> HierarchyNode:
        return self.nodes[0]

    @property
    def depth(self) -> int:
        return max(nd.depth for nd in self.nodes if nd.terminal)

    @property
    def strict(self) -> bool:
        return all(nd.balance.strict for nd in self.nodes if not nd.terminal)

    @property
    def total_retries(self) -> int:
        return sum(nd.retries for nd in self.nodes)

    def bound(self) -> int:
        return depth_bound(self.n, self.Q, None if self.strict else self.params.beta)

    def audit(self) -> dict:
        out = []
        for nd in self.nodes:
            rec = {
                "id": nd.id,
                "parent": nd.parent,
                "depth": nd.depth,
                "members": nd.members.tolist(),
                "terminal": nd.terminal,
            }
            if not nd.terminal:
                cert = nd.certificate
                rec.update(
                    cell_of=nd.assignment.cell_of.tolist(),
                    cell_count=nd.assignment.cell_count,
                    strategy=nd.assignment.strategy,
                    apex=[f"{v.numerator}/{v.denominator}" for v in nd.assignment.apex],
                    loads=list(nd.balance.loads),
                    load_bound=nd.balance.bound,
                    strict=nd.balance.strict,
                    seed=nd.seed,
                    retries=nd.retries,
                    children={str(k): v for k, v in nd.children.items()},
                    certificate={
                        "min_uniform_cells": int(cert.uniform.sum(1).min()),
                        "mean_uniform_cells": float(cert.uniform.sum(1).mean()),
                        "violations": len(cert.violations),
                    },
                )
            out.append(rec)
        return {
            "n": self.n,
            "Q": self.Q,
            "beta": str(Fraction(self.params.beta)),
            "seed": self.params.seed,
            "depth": self.depth,
            "depth_bound": self.bound(),
            "strict": self.strict,
            "nodes": out,
        }


def build_hierarchy(pts: LiftedPointSet, hyps: HyperplaneSet | None, adjacency: np.ndarray,
                    params: HierarchyParams | None = None) -> HierarchyTree:
    """Recursively split until every cell holds at most ``4**Q`` vertices.

    Every split is checked for load balance and for a non-empty uniformity
    certificate for all ``n`` vertices; failing splits are retried with
    fresh seeds and the build aborts with :class:`ProviderExhausted` once
    ``params.max_retries`` is spent.
    """
    params = params or HierarchyParams()
    Q, n = pts.Q, len(pts)
    cap = 4**Q
    nodes = [HierarchyNode(0, None, 0, np.sort(pts.ids))]
    queue = [0]
    while queue:
        node = nodes[queue.pop(0)]
        m = len(node.members)
        if m <= cap:
            continue
        sub = pts.subset(node.members)
        last_problem, offenders = "", []
        for attempt in range(params.max_retries):
            seed = int(np.random.SeedSequence([params.seed, node.id, attempt]).generate_state(1)[0])
            strategy = "auto"
            if Q == 2 and attempt % 2 == 1:
                strategy = "orthant"
            try:
                a = build_cell_assignment(sub, hyps, seed, strategy)
            except DegenerateInput as exc:
                if "all points are equal" in str(exc):
                    raise DegenerateInput(f"node {node.id}: {exc}") from None
                last_problem = str(exc)
                continue
            bal = verify_balance(a, m, Q, params.beta)
            if not bal.passed or (params.strict_balance and not bal.strict):
                last_problem = f"loads {list(bal.loads)} exceed bound {bal.bound}"
                offenders = []
                continue
            cert = verify_uniformity(a, node.members, adjacency, node.id)
            if cert.violations:
                last_problem = "no sign-uniform cell"
                offenders = cert.violations
                continue
            node.assignment, node.balance, node.certificate = a, bal, cert
            node.seed, node.retries = seed, attempt
            break
        else:
            if m <= 12 and Q <= 2:
                a = build_cell_assignment(sub, hyps, 0, "exhaustive", adjacency)
                node.assignment = a
                node.balance = verify_balance(a, m, Q, params.beta)
                node.certificate = verify_uniformity(a, node.members, adjacency, node.id)
                node.retries = params.max_retries
            else:
                raise ProviderExhausted(node.id, offenders, f"{params.max_retries} attempts failed ({last_problem})")
        for cell in range(1, node.assignment.cell_count + 1):
            mem = node.members[node.assignment.cell_of == cell]
            if len(mem):
                child = HierarchyNode(len(nodes), node.id, node.depth + 1, np.sort(mem))
                node.children[cell] = child.id
                nodes.append(child)
                queue.append(child.id)
    return HierarchyTree(Q, n, nodes, params)


def check_audit(audit: dict, adjacency: np.ndarray) -> list[str]:
    """Re-verify a hierarchy audit dump from scratch; returns problems found."""
    problems = []
    Q, n = audit["Q"], audit["n"]
    beta = Fraction(audit["beta"])
    nodes = {nd["id"]: nd for nd in audit["nodes"]}
    root = nodes[0]
    if sorted(root["members"]) != list(range(n)):
        problems.append("root does not cover all vertices")
    for nd in audit["nodes"]:
        mem = np.asarray(nd["members"], dtype=np.int64)
        if nd["terminal"]:
            if len(mem) > 4**Q:
                problems.append(f"terminal {nd['id']} has {len(mem)} > 4^Q members")
            continue
        if len(mem) <= 4**Q:
            problems.append(f"node {nd['id']} split although it has <= 4^Q members")
        cell_of = np.asarray(nd["cell_of"], dtype=np.int64)
        kids = []
        for cell, cid in nd["children"].items():
            expect = sorted(mem[cell_of == int(cell)].tolist())
            if sorted(nodes[cid]["members"]) != expect:
                problems.append(f"child {cid} of {nd['id']} does not match cell {cell}")
            kids.extend(nodes[cid]["members"])
        if sorted(kids) != sorted(mem.tolist()):
            problems.append(f"children of {nd['id']} do not partition it")
        loads = np.bincount(cell_of - 1, minlength=nd["cell_count"])
        if loads.max() > balance_bound(len(mem), Q, beta):
            problems.append(f"node {nd['id']} load {loads.max()} over bound")
        cert = verify_uniformity(cell_of, mem, adjacency)
        if cert.violations:
            problems.append(f"node {nd['id']}: no uniform cell for {cert.violations[:5]}")
    depth = max(nd["depth"] for nd in audit["nodes"])
    bound = depth_bound(n, Q, None if audit["strict"] else beta)
    if depth > bound:
        problems.append(f"depth {depth} exceeds bound {bound}")
    return problems
