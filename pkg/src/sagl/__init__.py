"""Adjacency labels for graphs defined by polynomial inequalities."""

from __future__ import annotations

__version__ = "0.1.0"

from .family import (
    EdgeSign,
    Family,
    FamilyError,
    PolynomialPredicate,
    congruence_diagonalize,
    edge_sign,
    hyperplane_normal,
    monomial_basis,
    parse_family,
    reduce_predicate,
    reduced_lift,
    to_bilinear,
    veronese_lift,
)
from .labels import SignMatrix, decode, deserialize_label, label_stats, serialize_label
from .partition import HierarchyParams, build_hierarchy, depth_bound, lift_point_set

__all__ = [
    "EdgeSign", "Family", "FamilyError", "PolynomialPredicate", "congruence_diagonalize", "edge_sign",
    "hyperplane_normal", "monomial_basis", "parse_family", "reduce_predicate", "reduced_lift", "to_bilinear",
    "veronese_lift", "SignMatrix", "decode", "deserialize_label", "label_stats", "serialize_label",
    "HierarchyParams", "build_hierarchy", "depth_bound", "lift_point_set",
]
