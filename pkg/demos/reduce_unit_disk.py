# %% [markdown]
# Unit disk graphs as a sign pattern of a bilinear form.
# Two points are adjacent when their distance is at most 2.

# %%
from __future__ import annotations

from fractions import Fraction

from sagl import parse_family, reduce_predicate, to_bilinear, veronese_lift

fam = parse_family("q=2\n(x1-y1)^2 + (x2-y2)^2 <= 4\n")
pred = fam.predicate
print(pred.d, pred.lift_degree)

# %% the lifted basis and the bilinear matrix
form = to_bilinear(pred)
print(len(form.basis), "monomials:", form.basis.monomials)
for row in form.matrix:
    print(" ".join(f"{str(v):>4}" for v in row))

# %% diagonalize; most of the lifted coordinates drop out
red = reduce_predicate(pred)
print("reduced dim", red.reduced_dim, "signature", red.signature)
print("diagonal", [str(v) for v in red.diagonal])

# %% sanity: lifted form value equals the predicate value
p, q = (Fraction(1, 3), Fraction(-2, 5)), (Fraction(1, 2), Fraction(1, 4))
lp, lq = veronese_lift(p, form.basis), veronese_lift(q, form.basis)
val = sum(lp[i] * form.matrix[i][j] * lq[j] for i in range(len(lp)) for j in range(len(lq)))
print(val, pred.evaluate(p, q))
