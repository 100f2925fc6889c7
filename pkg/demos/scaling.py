# %% [markdown]
# Label length against n for dot-product graphs in the plane,
# next to the trivial scheme's n/2 bits.

# %%
from __future__ import annotations

import math

from sagl.bounds import scheme_exponent
from sagl.harness import InstanceSpec, run_scaling

res = run_scaling(InstanceSpec("dot-product", 64, seed=0, q=2), [64, 256, 1024, 2048])
print(res.csv())

# %% fitted exponent versus the reference curve
print("slope %.3f, reference %.3f" % (res.slope, scheme_exponent(2)))
for r in res.rows:
    print(r.n, r.max_bits, r.trivial_bound, round(r.max_bits / r.trivial_bound, 3))

# %% optional plot
try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    ns = [r.n for r in res.rows]
    plt.loglog(ns, [r.max_bits for r in res.rows], "o-", label="hierarchy labels")
    plt.loglog(ns, [r.trivial_bound for r in res.rows], "s--", label="trivial")
    plt.loglog(ns, [math.sqrt(n) * 8 for n in ns], ":", label="~sqrt(n)")
    plt.legend()
    plt.savefig("scaling.png")
