from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest

from sagl.family import parse_family, reduce_predicate
from sagl.harness import (
    GateRejected,
    InstanceSpec,
    direct_adjacency,
    direct_sign_matrix,
    encode_points,
    fit_slope,
    gated_instance,
    general_position_gate,
    generate_instance,
    plan_family,
    read_points,
    run_roundtrip,
    run_scaling,
    run_trivial,
    write_points,
)
from sagl.labels import SignMatrix

from .conftest import DISK, UNIT_DISK

F = Fraction


def test_generator_reproducible():
    spec = InstanceSpec("unit-disk", 4, seed=7)
    a, b = generate_instance(spec), generate_instance(spec)
    assert write_points(a) == write_points(b)
    assert len(a) == 4 and all(len(p) == 2 for p in a)
    assert generate_instance(InstanceSpec("unit-disk", 4, seed=8)) != a


def test_disk_radii_positive():
    pts = generate_instance(InstanceSpec("disk", 500, seed=1))
    assert all(p[2] > 0 for p in pts)


def test_unknown_family():
    with pytest.raises(ValueError):
        generate_instance(InstanceSpec("hexagon", 4))


@pytest.mark.parametrize("family, q", [("unit-disk", None), ("disk", None), ("dot-product", 1), ("dot-product", 2)])
def test_edge_density_in_range(family, q):
    spec = InstanceSpec(family, 400, seed=2, q=q)
    A = direct_adjacency(generate_instance(spec), spec.family_obj())
    density = A.sum() / (400 * 399)
    assert 0.2 <= density <= 0.8


def test_gate_finds_boundary_pair():
    pts = [(F(0), F(0)), (F(2), F(0)), (F(7), F(7))]
    gate = general_position_gate(pts, plan_family(parse_family(UNIT_DISK)))
    assert not gate.passed and gate.zero_pairs == [(0, 1)]
    with pytest.raises(GateRejected):
        encode_points(pts, parse_family(UNIT_DISK))


def test_gate_resamples_with_new_seed(monkeypatch):
    import sagl.harness as hz

    calls = []
    real = hz.generate_instance

    def fake(spec, seed=None):
        calls.append(seed)
        if len(calls) == 1:
            return [(F(0), F(0)), (F(2), F(0))]
        return real(spec, seed)

    monkeypatch.setattr(hz, "generate_instance", fake)
    spec = InstanceSpec("unit-disk", 5, seed=3)
    pts, gate, attempts = gated_instance(spec, plan_family(spec.family_obj()))
    assert attempts == 1 and gate.passed and calls[0] == 3 and calls[1] != 3
    calls.clear()
    with pytest.raises(GateRejected):
        gated_instance(spec, plan_family(spec.family_obj()), resample=False)


def test_gate_passes_on_random_instances():
    bad = 0
    for seed in range(400):
        spec = InstanceSpec("unit-disk", 25, seed=seed)
        gate = general_position_gate(generate_instance(spec), plan_family(spec.family_obj()))
        bad += not gate.passed
    assert bad == 0


def test_direct_oracle_matches_lifted_signs():
    for text, spec in [(UNIT_DISK, InstanceSpec("unit-disk", 150, seed=1)), (DISK, InstanceSpec("disk", 150, seed=1))]:
        fam = parse_family(text)
        pts = generate_instance(spec)
        form = reduce_predicate(fam.predicate)
        from sagl.partition import lift_point_set

        S = SignMatrix.from_lifted(lift_point_set(pts, form), form.diagonal).signs
        D = direct_sign_matrix(pts, fam.predicate)
        assert (S == D).all()
        for i, j in [(0, 1), (5, 77), (149, 3)]:
            v = fam.predicate.evaluate(pts[i], pts[j])
            assert D[i, j] == (v > 0) - (v < 0)


def test_direct_oracle_large_integers_use_exact_path():
    f = parse_family("q=1; x1^3*y1^3 >= 1").predicate
    pts = [(F(10**8 + k, 3**20),) for k in range(5)]
    D = direct_sign_matrix(pts, f)
    for i in range(5):
        for j in range(5):
            v = f.evaluate(pts[i], pts[j])
            assert D[i, j] == (v > 0) - (v < 0)


def test_points_csv_round_trip():
    pts = generate_instance(InstanceSpec("disk", 20, seed=4))
    text = write_points(pts)
    assert text.splitlines()[0] == "id,c1,c2,c3"
    assert "/" in text.splitlines()[1]
    assert read_points(text) == pts
    with pytest.raises(ValueError):
        read_points("x,c1\n0,1/2\n")
    with pytest.raises(ValueError):
        read_points("id,c1\n1,1/2\n")


def test_roundtrip_unit_disk_32():
    r = run_roundtrip(InstanceSpec("unit-disk", 32, seed=0))
    assert r.pairs == 496 and r.mismatches == 0
    assert r.Q == [4] and r.signature == [[3, 1]]


def test_roundtrip_line_family_1024():
    r = run_roundtrip(InstanceSpec("dot-product", 1024, seed=0, q=1))
    assert r.mismatches == 0 and r.orientation_disagreements == 0
    assert r.depth[0] <= r.depth_bound[0]
    assert r.strict == [True]


def test_trivial_on_same_instance():
    spec = InstanceSpec("unit-disk", 200, seed=5)
    A = direct_adjacency(generate_instance(spec), spec.family_obj())
    bad, bits = run_trivial(A)
    assert bad == 0 and bits == 100 + 8


def test_reports_reproducible():
    spec = InstanceSpec("dot-product", 300, seed=9, q=2)
    a, b = run_roundtrip(spec).to_json(), run_roundtrip(spec).to_json()
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b
    json.dumps(a)


def test_multi_constraint_family():
    text = "q=2\n(x1-y1)^2 + (x2-y2)^2 <= 9\nx1*y1 + x2*y2 > 0\n"
    r = run_roundtrip(InstanceSpec("custom", 80, seed=1, side=F(2), spec_text=text))
    assert r.mismatches == 0
    assert len(r.Q) == 2


def test_scaling_line_family_is_flat():
    res = run_scaling(InstanceSpec("dot-product", 64, seed=1, q=1), [64, 256, 1024, 2048])
    assert res.target is None
    assert res.slope < 0.3
    assert res.csv().splitlines()[0].startswith("n,Q,depth")


def test_scaling_needs_four_sizes():
    with pytest.raises(ValueError):
        run_scaling(InstanceSpec("dot-product", 64, q=2), [64, 128, 256])


def test_fit_slope():
    ns = [10, 100, 1000, 10000]
    assert fit_slope(ns, [3 * n**0.5 for n in ns]) == pytest.approx(0.5)
