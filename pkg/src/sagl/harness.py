"""Instance generators, the general-position gate and end-to-end runs."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .bounds import scheme_exponent, trivial_bound, trivial_decode, trivial_encode
from .family import Family, PolynomialPredicate, format_rational, parse_family, parse_rational, reduce_predicate
from .labels import (
    FLAG_COMPLEMENT,
    SignMatrix,
    canonical,
    decode_matrix,
    dump_labels,
    encode_hierarchy,
    label_stats,
    load_labels,
    orientation_disagreements,
)
from .partition import HierarchyParams, build_hierarchy, lift_point_set

log = logging.getLogger(__name__)

DEFAULT_DENOMINATOR = 1 << 16


class GateRejected(RuntimeError):
    def __init__(self, message: str, pairs=()):
        super().__init__(message)
        self.pairs = list(pairs)


class Mismatch(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# families and instances


def family_text(name: str, q: int | None = None, t: int = 0) -> str:
    if name == "unit-disk":
        return "q=2\n(x1-y1)^2 + (x2-y2)^2 <= 4\n"
    if name == "disk":
        # third coordinate is the radius
        return "q=3\n(x1-y1)^2 + (x2-y2)^2 <= (x3+y3)^2\n"
    if name == "dot-product":
        q = q or 2
        lhs = " + ".join(f"x{i}*y{i}" for i in range(1, q + 1))
        return f"q={q}\n{lhs} >= {t}\n" if t >= 0 else f"q={q}\n{lhs} + {-t} >= 0\n"
    raise ValueError(f"unknown family {name!r}")


FAMILIES = ("unit-disk", "disk", "dot-product")


@dataclass(frozen=True)
class InstanceSpec:
    family: str
    n: int
    seed: int = 0
    q: int | None = None  # dot-product only
    t: int = 0  # dot-product threshold
    side: Fraction | None = None  # half-width of the coordinate box
    denominator: int = DEFAULT_DENOMINATOR
    spec_text: str | None = None  # custom family document (points from a box)

    def family_obj(self) -> Family:
        return parse_family(self.spec_text or family_text(self.family, self.q, self.t))

    def to_json(self) -> dict:
        d = asdict(self)
        d["side"] = None if self.side is None else str(self.side)
        return d


def _box(spec: InstanceSpec) -> Fraction:
    if spec.side is not None:
        return Fraction(spec.side)
    # chosen so that typical edge densities land between 0.2 and 0.8
    return {"unit-disk": Fraction(3), "disk": Fraction(3)}.get(spec.family, Fraction(1))


def generate_instance(spec: InstanceSpec, seed=None) -> list[tuple]:
    """``n`` distinct rational points with denominators dividing ``spec.denominator``."""
    if spec.spec_text is None and spec.family not in FAMILIES:
        raise ValueError(f"unknown family {spec.family!r}")
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    q = spec.family_obj().q
    den = spec.denominator
    half = int(_box(spec) * den)
    pts, seen = [], set()
    while len(pts) < spec.n:
        raw = rng.integers(-half, half + 1, size=q).tolist()
        if spec.family == "disk" and spec.spec_text is None:
            raw[2] = int(rng.integers(den // 2, 3 * den // 2 + 1))
        key = tuple(raw)
        if key in seen:
            continue
        seen.add(key)
        pts.append(tuple(Fraction(v, den) for v in raw))
    return pts


# ---------------------------------------------------------------------------
# oracle


def direct_sign_matrix(points: Sequence[Sequence], pred: PolynomialPredicate) -> np.ndarray:
    """Signs of ``f(x_i, x_j)`` straight from the polynomial's terms.

    Independent of the lift and the diagonalization: coordinates are put on
    a common denominator ``D`` and each term is scaled by a power of ``D`` so
    that every pair value is an integer multiple of ``f``.
    """
    n, q = len(points), pred.q
    D = 1
    for p in points:
        for v in p:
            D = math.lcm(D, Fraction(v).denominator)
    X = [[int(Fraction(v) * D) for v in p] for p in points]
    terms = sorted(pred.terms.items())
    top = max(sum(a) + sum(b) for (a, b), _ in terms)

    def mono(row, e):
        out = 1
        for v, k in zip(row, e):
            out *= v**k
        return out

    left = [[c * mono(r, a) * D ** (top - sum(a) - sum(b)) for (a, b), c in terms] for r in X]
    right = [[mono(r, b) for (a, b), _ in terms] for r in X]
    big = max(abs(v) for row in left for v in row) * max(abs(v) for row in right for v in row) * len(terms)
    dtype = np.int64 if big < (1 << 62) else object
    G = np.asarray(left, dtype=dtype) @ np.asarray(right, dtype=dtype).T
    return np.sign(G).astype(np.int8)


def direct_adjacency(points, family: Family) -> np.ndarray:
    A = np.ones((len(points), len(points)), dtype=bool)
    for pred in family.constraints:
        S = direct_sign_matrix(points, pred)
        A &= (S > 0) if pred.strict else (S >= 0)
    np.fill_diagonal(A, False)
    return A


# ---------------------------------------------------------------------------
# gate


@dataclass
class Plan:
    """One constraint ready for encoding."""

    pred: PolynomialPredicate  # non-strict form that gets encoded
    complement: bool
    form: object


def plan_family(family: Family) -> list[Plan]:
    out = []
    for c in family.constraints:
        g, comp = c.encoding_form()
        out.append(Plan(g, comp, reduce_predicate(g)))
    return out


@dataclass
class GateResult:
    passed: bool
    zero_pairs: list
    signs: list  # SignMatrix per constraint
    lifted: list


def general_position_gate(points, plans: Sequence[Plan]) -> GateResult:
    signs, lifted, zeros = [], [], []
    for plan in plans:
        L = lift_point_set(points, plan.form)
        S = SignMatrix.from_lifted(L, plan.form.diagonal)
        zeros.extend(S.zero_pairs())
        signs.append(S)
        lifted.append(L)
    zeros = sorted(set(zeros))
    return GateResult(not zeros, zeros, signs, lifted)


def gated_instance(spec: InstanceSpec, plans, resample: bool = True, cap: int = 16):
    """Generate points, resampling with perturbed seeds until the gate passes."""
    for attempt in range(cap if resample else 1):
        seed = spec.seed if attempt == 0 else int(np.random.SeedSequence([spec.seed, attempt]).generate_state(1)[0])
        pts = generate_instance(spec, seed)
        gate = general_position_gate(pts, plans)
        if gate.passed:
            return pts, gate, attempt
        log.info("gate: %d zero pairs with seed %d, resampling", len(gate.zero_pairs), seed)
    raise GateRejected(f"no general-position instance after {attempt + 1} attempts", gate.zero_pairs)


# ---------------------------------------------------------------------------
# encoding


@dataclass
class Encoding:
    blocks: list  # list of label lists, one per constraint
    hierarchies: list
    plans: list


def encode_points(points, family: Family, params: HierarchyParams | None = None, gate: GateResult | None = None,
                  plans=None) -> Encoding:
    plans = plans or plan_family(family)
    gate = gate or general_position_gate(points, plans)
    if not gate.passed:
        raise GateRejected(f"{len(gate.zero_pairs)} vertex pairs with f = 0, first {gate.zero_pairs[:5]}",
                           gate.zero_pairs)
    blocks, trees = [], []
    for plan, S, L in zip(plans, gate.signs, gate.lifted):
        A = S.adjacency
        h = build_hierarchy(L, None, A, params or HierarchyParams())
        blocks.append(encode_hierarchy(h, A, FLAG_COMPLEMENT if plan.complement else 0))
        trees.append(h)
    return Encoding(blocks, trees, plans)


def decode_file_matrix(data: bytes) -> np.ndarray:
    """All-pairs adjacency from a label file alone."""
    blocks = load_labels(data)
    out = None
    for labels in blocks:
        M = decode_matrix(labels).astype(bool)
        out = M if out is None else out & M
    return out


# ---------------------------------------------------------------------------
# runs


@dataclass
class RunReport:
    spec: dict
    n: int
    Q: list
    signature: list
    depth: list
    depth_bound: list
    strict: list
    beta: str
    retries: int
    gate_resamples: int
    max_bits: int
    mean_bits: float
    formula_bound: list
    adjusted_bound: list
    trivial_bound: int
    pairs: int
    mismatches: int
    orientation_disagreements: int
    label_bytes: int
    wall_time: float = field(default=0.0, compare=False)

    def to_json(self) -> dict:
        return asdict(self)

    def text(self) -> str:
        rows = [(k, v) for k, v in self.to_json().items() if k != "spec"]
        rows.insert(0, ("family", self.spec.get("family")))
        w = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{w}}  {v}" for k, v in rows)


def run_roundtrip(spec: InstanceSpec, params: HierarchyParams | None = None, resample: bool = True) -> RunReport:
    """Encode, serialize, forget, deserialize and compare every pair."""
    params = params or HierarchyParams(seed=spec.seed)
    t0 = time.perf_counter()
    family = spec.family_obj()
    plans = plan_family(family)
    pts, gate, resamples = gated_instance(spec, plans, resample)
    enc = encode_points(pts, family, params, gate, plans)
    data = dump_labels(enc.blocks)
    stats = [label_stats(b, params.beta) for b in enc.blocks]
    meta = dict(
        Q=[p.form.reduced_dim for p in enc.plans],
        signature=[list(p.form.signature) for p in enc.plans],
        depth=[h.depth for h in enc.hierarchies],
        depth_bound=[h.bound() for h in enc.hierarchies],
        strict=[h.strict for h in enc.hierarchies],
        retries=sum(h.total_retries for h in enc.hierarchies),
    )
    del enc, gate

    blocks = load_labels(data)
    decoded = None
    disagreements = 0
    for labels in blocks:
        raw = decode_matrix(labels, oriented=True)
        disagreements += orientation_disagreements(raw)
        M = canonical(raw).astype(bool)
        decoded = M if decoded is None else decoded & M
    truth = direct_adjacency(pts, family)
    iu = np.triu_indices(len(pts), 1)
    mismatches = int((decoded[iu] != truth[iu]).sum())
    max_bits = sum(s["max_bits"] for s in stats)
    mean_bits = sum(s["mean_bits"] for s in stats)
    return RunReport(
        spec=spec.to_json(),
        n=len(pts),
        beta=str(Fraction(params.beta)),
        gate_resamples=resamples,
        max_bits=max_bits,
        mean_bits=mean_bits,
        formula_bound=[s["formula_bound"] for s in stats],
        adjusted_bound=[s["adjusted_bound"] for s in stats],
        trivial_bound=trivial_bound(len(pts)),
        pairs=len(iu[0]),
        mismatches=mismatches,
        orientation_disagreements=disagreements,
        label_bytes=len(data),
        wall_time=time.perf_counter() - t0,
        **meta,
    )


def run_trivial(points_or_adjacency) -> tuple[int, int]:
    """Baseline round trip: returns (mismatches, bits per label)."""
    A = np.asarray(points_or_adjacency, dtype=bool)
    n = A.shape[0]
    labels = trivial_encode(A)
    bad = 0
    for i in range(n):
        for j in range(i + 1, n):
            bad += trivial_decode(labels[i], labels[j], n) != A[i, j]
    return bad, len(labels[0])


@dataclass
class ScalingResult:
    rows: list
    slope: float
    target: float | None

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["n", "Q", "depth", "max_bits", "mean_bits", "trivial_bound", "mismatches"])
        for r in self.rows:
            w.writerow([r.n, r.Q[0], r.depth[0], r.max_bits, f"{r.mean_bits:.2f}", r.trivial_bound, r.mismatches])
        return buf.getvalue()


def fit_slope(ns, bits) -> float:
    x, y = np.log(np.asarray(ns, float)), np.log(np.asarray(bits, float))
    return float(np.polyfit(x, y, 1)[0])


def run_scaling(spec: InstanceSpec, ns: Sequence[int], params: HierarchyParams | None = None) -> ScalingResult:
    if len(ns) < 4:
        raise ValueError("need at least four values of n")
    rows = []
    for n in ns:
        r = run_roundtrip(InstanceSpec(**{**asdict(spec), "n": n}), params)
        if r.mismatches:
            raise Mismatch(f"n={n}: {r.mismatches} mismatched pairs")
        rows.append(r)
    slope = fit_slope([r.n for r in rows], [r.max_bits for r in rows])
    Q = rows[-1].Q[0]
    return ScalingResult(rows, slope, scheme_exponent(Q) if Q > 1 else None)


# ---------------------------------------------------------------------------
# points files


def write_points(points) -> str:
    q = len(points[0]) if points else 0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id"] + [f"c{i}" for i in range(1, q + 1)])
    for i, p in enumerate(points):
        w.writerow([i] + [format_rational(Fraction(v)) for v in p])
    return buf.getvalue()


def read_points(text: str) -> list[tuple]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:1] != ["id"]:
        raise ValueError("points file must start with an 'id,c1..cq' header")
    q = len(rows[0]) - 1
    pts = {}
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != q + 1:
            raise ValueError(f"line {line}: expected {q + 1} fields")
        pts[int(row[0])] = tuple(parse_rational(v) for v in row[1:])
    if sorted(pts) != list(range(len(pts))):
        raise ValueError("point ids must be 0..n-1")
    return [pts[i] for i in range(len(pts))]
