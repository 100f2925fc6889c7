# %% [markdown]
# Encode a random unit disk graph, write the labels out, read them back
# and query adjacency from two labels at a time.

# %%
from __future__ import annotations

import numpy as np

from sagl.harness import InstanceSpec, direct_adjacency, encode_points, gated_instance, plan_family
from sagl.labels import decode, decode_matrix, dump_labels, label_stats, load_labels
from sagl.partition import HierarchyParams

spec = InstanceSpec("unit-disk", 256, seed=3)
fam = spec.family_obj()
plans = plan_family(fam)
pts, gate, resamples = gated_instance(spec, plans)
print(len(pts), "points, gate resamples:", resamples)

# %% build the hierarchy and the labels
enc = encode_points(pts, fam, HierarchyParams(seed=3), gate, plans)
tree = enc.hierarchies[0]
print("depth", tree.depth, "bound", tree.bound(), "strict", tree.strict)

# %% to bytes and back
blob = dump_labels(enc.blocks)
(labels,) = load_labels(blob)
print(len(blob), "bytes;", label_stats(labels, 2))

# %% single queries
truth = direct_adjacency(pts, fam)
for i, j in [(0, 1), (5, 77), (200, 13)]:
    print(i, j, decode(labels[i], labels[j]), bool(truth[i, j]))

# %% every pair
A = decode_matrix(labels)
iu = np.triu_indices(len(pts), 1)
print("mismatches:", int((A[iu].astype(bool) != truth[iu]).sum()))
