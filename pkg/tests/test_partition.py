from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sagl.family import parse_family, reduce_predicate, reduced_lift
from sagl.harness import InstanceSpec, general_position_gate, plan_family
from sagl.partition import (
    CellAssignment,
    DegenerateInput,
    HierarchyParams,
    LiftedPointSet,
    ProviderExhausted,
    balance_bound,
    build_cell_assignment,
    build_hierarchy,
    centerpoint_estimate,
    check_audit,
    depth_bound,
    lift_point_set,
    verify_balance,
    verify_uniformity,
)

from .conftest import UNIT_DISK, build, rational_points

F = Fraction


def line_set(values):
    return LiftedPointSet.from_vectors([(F(v),) for v in values])


def dot_instance(points):
    """Lifted set and adjacency for the plane dot-product family."""
    plans = plan_family(parse_family("q=2; x1*y1 + x2*y2 >= 0"))
    gate = general_position_gate(points, plans)
    return gate, gate.lifted[0], gate.signs[0].adjacency


# -- lifting -----------------------------------------------------------------


def test_single_point_lift():
    form = reduce_predicate(parse_family(UNIT_DISK).predicate)
    L = lift_point_set([(F(1), F(2))], form)
    assert len(L) == 1 and L.Q == 4


def test_unit_disk_lift_matches_pointwise(rng):
    form = reduce_predicate(parse_family(UNIT_DISK).predicate)
    pts = rational_points(rng, 10, 2)
    L = lift_point_set(pts, form)
    assert L.ints.shape == (10, 4)
    for i, p in enumerate(pts):
        assert list(L.vector(i)) == reduced_lift(p, form)
        assert L.ids[i] == i


def test_lift_dimension_mismatch():
    form = reduce_predicate(parse_family(UNIT_DISK).predicate)
    with pytest.raises(ValueError):
        lift_point_set([(F(1),)], form)


# -- centerpoints -------------------------------------------------------------


def test_median_in_one_dimension():
    assert centerpoint_estimate(line_set(range(1, 10))) == (F(5),)


def test_symmetric_cloud_center_inside_box(rng):
    half = rng.normal(size=(50, 3))
    X = np.vstack([half, -half])
    c = np.array([float(v) for v in centerpoint_estimate(X, seed=1)])
    assert np.all(c >= X.min(0)) and np.all(c <= X.max(0))


def brute_depth(X, c):
    """Closed-halfplane depth over all directions defined by point pairs and
    by lines through ``c`` and each point (where the minimum changes)."""
    dirs = []
    for i in range(len(X)):
        for j in range(i + 1, len(X)):
            d = X[j] - X[i]
            dirs.append((-d[1], d[0]))
        d = X[i] - c
        dirs.append((-d[1], d[0]))
    best = len(X)
    for nx, ny in dirs:
        for eps in (-1e-9, 0.0, 1e-9):
            u = np.array([nx - eps * ny, ny + eps * nx])
            proj = (X - c) @ u
            best = min(best, int((proj >= 0).sum()), int((proj <= 0).sum()))
    return best


@pytest.mark.parametrize("seed", range(5))
def test_plane_centerpoint_depth(seed):
    r = np.random.default_rng(seed)
    X = r.standard_normal((100, 2)) * [1, 3] + r.standard_normal(2)
    c = np.array([float(v) for v in centerpoint_estimate(X, seed=seed)])
    assert brute_depth(X, c) >= 20


# -- cell assignments ------------------------------------------------------------


def test_median_split_loads():
    for n in (9, 16, 33):
        a = build_cell_assignment(line_set(np.random.default_rng(n).permutation(n * 3)[:n]))
        assert a.loads() == [n // 2, n - n // 2]
        assert a.cell_count == 2


def test_plane_split_loads(rng):
    pts = rational_points(rng, 64, 2)
    gate, L, A = dot_instance(pts)
    a = build_cell_assignment(L, seed=3)
    assert a.cell_count == 4
    assert max(a.loads()) <= balance_bound(64, 2)
    assert sorted(np.unique(a.cell_of)) == [1, 2, 3, 4]


@pytest.mark.parametrize("strategy", ["auto", "orthant"])
def test_assignment_deterministic(rng, strategy):
    pts = rational_points(rng, 80, 2)
    _, L, _ = dot_instance(pts)
    a = build_cell_assignment(L, seed=11, strategy=strategy)
    b = build_cell_assignment(L, seed=11, strategy=strategy)
    assert a.apex == b.apex and (a.cell_of == b.cell_of).all()


def test_degenerate_points():
    L = LiftedPointSet.from_vectors([(F(1), F(2))] * 5)
    with pytest.raises(DegenerateInput):
        build_cell_assignment(L)


def test_boundary_points_take_lowest_cell():
    a = build_cell_assignment(line_set([1, 2, 2, 3]))
    # threshold sits on the tied middle value; both copies go to cell 1
    assert a.cell_of.tolist() == [1, 1, 1, 2]


def test_orthant_frame_cells_are_exact(rng):
    form = reduce_predicate(parse_family(UNIT_DISK).predicate)
    pts = rational_points(rng, 300, 2, -3, 3, 64)
    L = lift_point_set(pts, form)
    a = build_cell_assignment(L, seed=5)
    fr = a.frame
    for i in range(len(L)):
        z = L.vector(i)
        bits = [sum(F(x) * w for x, w in zip(nrm, z)) > off for nrm, off in zip(fr.normals, fr.offsets)]
        assert a.cell_of[i] == 1 + sum(int(b) << k for k, b in enumerate(bits))
    # apex lies on every frame hyperplane
    for nrm, off in zip(fr.normals, fr.offsets):
        assert sum(F(w) * x for w, x in zip(nrm, a.apex)) == off


# -- verifiers -----------------------------------------------------------------


def test_balance_examples():
    r = verify_balance([8, 8], 16, 1)
    assert r.passed and r.strict
    r = verify_balance([4, 4, 4, 4], 16, 2)
    assert r.passed and r.strict
    assert not verify_balance([13, 1, 1, 1], 16, 2).passed


def test_balance_bound_formula():
    assert balance_bound(64, 2) == min(63, 2 * 64 // 4 + 3)
    assert balance_bound(1000, 4, beta=1) == math.ceil(1000 / 16) + 15
    assert balance_bound(5, 1) == 4


def test_uniform_when_all_adjacent():
    n = 6
    A = np.ones((n, n), dtype=bool)
    np.fill_diagonal(A, False)
    a = CellAssignment((F(0),), np.array([1, 1, 2, 2, 2, 1]), 2, "test")
    cert = verify_uniformity(a, np.arange(n), A)
    assert cert.uniform.all()
    assert cert.bits[:, :].sum() == n * 2


def test_line_threshold_leaves_one_side_uniform():
    # members 0..9 on a line, y's boundary is a point on that line
    vals = np.arange(10)
    a = build_cell_assignment(line_set(vals))
    for cut in np.arange(-0.5, 10.5, 1.0):
        A = np.zeros((11, 11), dtype=bool)
        A[10, :10] = A[:10, 10] = vals > cut
        cert = verify_uniformity(a, np.arange(10), A)
        assert cert.uniform[10].any()


def test_uniformity_cross_checked_by_brute_force(rng):
    pts = rational_points(rng, 120, 2)
    gate, L, A = dot_instance(pts)
    assume_ok = gate.passed
    assert assume_ok
    members = np.arange(0, 120, 2)
    sub = L.subset(members)
    a = build_cell_assignment(sub, seed=2)
    cert = verify_uniformity(a, members, A)
    S = gate.signs[0].signs
    for y in range(120):
        for t in range(1, 5):
            vals = {int(S[y, m] >= 0) for m, c in zip(members, a.cell_of) if c == t and m != y}
            assert cert.uniform[y, t - 1] == (len(vals) <= 1)
            if len(vals) == 1:
                assert cert.bits[y, t - 1] == vals.pop()


# -- hierarchies -----------------------------------------------------------------


def test_small_input_single_terminal(rng):
    pts = rational_points(rng, 16, 2)
    _, L, A = dot_instance(pts)
    h = build_hierarchy(L, None, A)
    assert len(h.nodes) == 1 and h.root.terminal and h.depth == 0


def test_line_hierarchy_depth_three():
    # hand simulation: 32 -> 16 -> 8 -> 4, four members per terminal
    form = reduce_predicate(parse_family("q=1; x1*y1 >= 0").predicate)
    vals = [F(v, 7) for v in range(1, 33)]
    L = lift_point_set([(v if k % 2 else -v,) for k, v in enumerate(vals)], form)
    z = np.array([float(v[0]) for _, v in L.points])
    A = np.outer(z, z) >= 0
    np.fill_diagonal(A, False)
    h = build_hierarchy(L, None, A)
    assert h.depth == 3
    assert sorted(len(nd.members) for nd in h.nodes if nd.terminal) == [4] * 8
    assert h.strict
    assert h.depth <= depth_bound(32, 1)


def test_unit_disk_hierarchy_within_bound():
    pts, gate, (h,) = build(InstanceSpec("unit-disk", 256, seed=4))
    assert h.depth <= depth_bound(256, 4, 2)
    assert check_audit(h.audit(), gate.signs[0].adjacency) == []


def test_unit_disk_split_certified():
    pts, gate, (h,) = build(InstanceSpec("unit-disk", 700, seed=2))
    A = gate.signs[0].adjacency
    assert h.depth >= 1
    assert h.depth <= h.bound()
    for nd in h.nodes:
        if not nd.terminal:
            assert not nd.certificate.violations
            assert nd.balance.passed


def test_provider_exhaustion_names_node():
    # 40 points on a line in a Q=1 lift with an adversarial relation that no
    # threshold split can make uniform for vertex 0
    L = line_set(range(40))
    A = np.zeros((40, 40), dtype=bool)
    A[0, 1::2] = A[1::2, 0] = True
    with pytest.raises(ProviderExhausted) as err:
        build_hierarchy(L, None, A, HierarchyParams(max_retries=3))
    assert err.value.node_id == 0
    assert 0 in err.value.vertices


def test_all_equal_points_rejected():
    L = LiftedPointSet.from_vectors([(F(3),)] * 20)
    A = np.ones((20, 20), dtype=bool)
    with pytest.raises(DegenerateInput):
        build_hierarchy(L, None, A)


def test_audit_is_json_and_detects_tampering():
    pts, gate, (h,) = build(InstanceSpec("dot-product", 300, seed=5, q=2))
    A = gate.signs[0].adjacency
    audit = json.loads(json.dumps(h.audit()))
    assert check_audit(audit, A) == []
    node = next(nd for nd in audit["nodes"] if not nd["terminal"])
    node["cell_of"][0] = node["cell_of"][0] % 4 + 1
    assert check_audit(audit, A)


# -- depth bounds ------------------------------------------------------------------


def test_depth_bound_examples():
    assert depth_bound(16, 2) == 0
    assert depth_bound(4, 1) == 0
    # ceil(log2((32 - 1) / (4 - 2 + 1)) / 1) = ceil(log2(31/3)) = 4
    assert depth_bound(32, 1) == 4


def test_relaxed_depth_bound_unrolls_recurrence():
    for n, Q in [(5000, 2), (100000, 3), (10**6, 4), (1000, 1)]:
        m, k = n, 0
        while m > 4**Q:
            m = min(m - 1, math.ceil(2 * m / 2**Q) + 2**Q - 1)
            k += 1
        assert depth_bound(n, Q, 2) == k


@pytest.mark.parametrize("Q", [1, 2, 3, 4])
def test_strict_bound_covers_strict_recurrence(Q):
    for n in list(range(1, 3000)) + [10**5, 10**6 + 7]:
        m, k = n, 0
        while m > 4**Q:
            m = m // 2**Q + 2**Q - 1
            k += 1
        assert k <= depth_bound(n, Q)


# -- properties ------------------------------------------------------------------


coords = st.integers(-400, 400).filter(lambda v: v != 0).map(lambda v: F(v, 37))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=17, max_size=90, unique=True), st.integers(0, 2**20))
def test_hierarchy_invariants(points, seed):
    gate, L, A = dot_instance(points)
    assume(gate.passed)
    params = HierarchyParams(seed=seed)
    h = build_hierarchy(L, None, A, params)
    for nd in h.nodes:
        if nd.terminal:
            assert len(nd.members) <= 16
            continue
        assert len(nd.members) > 16
        kids = np.concatenate([h.nodes[c].members for c in nd.children.values()])
        assert sorted(kids.tolist()) == sorted(nd.members.tolist())
        assert max(nd.assignment.loads()) <= balance_bound(len(nd.members), 2)
        assert nd.certificate.uniform.any(1).all()
    assert h.depth <= h.bound()
    h2 = build_hierarchy(L, None, A, params)
    assert json.dumps(h.audit()) == json.dumps(h2.audit())


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=5, max_size=12, unique=True), st.integers(0, 2**20),
       st.booleans())
def test_exhaustive_agrees_with_provider_on_small_sets(points, seed, one_dim):
    if one_dim:
        plans = plan_family(parse_family("q=1; x1*y1 >= 0"))
        points = list({(p[0],) for p in points})
        assume(len(points) >= 4)
        gate = general_position_gate(points, plans)
    else:
        gate = general_position_gate(points, plan_family(parse_family("q=2; x1*y1 + x2*y2 >= 0")))
    assume(gate.passed)
    L, A = gate.lifted[0], gate.signs[0].adjacency
    try:
        a = build_cell_assignment(L, seed=seed)
    except DegenerateInput:
        return
    bal = verify_balance(a, len(L), L.Q)
    cert = verify_uniformity(a, L.ids, A)
    if bal.strict and not cert.violations:
        b = build_cell_assignment(L, strategy="exhaustive", adjacency=A)
        assert verify_balance(b, len(L), L.Q).strict
        assert not verify_uniformity(b, L.ids, A).violations
