"""
Kernel crossings on a triple product of spheres
===============================================

For the product metric weighting the third sphere by lambda, the
linearised constant-curvature operator has a kernel exactly at rational
values of lambda. Odd kernel dimension with nonzero transversality
multipliers marks a bifurcation instant.
"""
# %%
from fractions import Fraction

from chern_yamabe import bifurcation_instants, kernel_families, required_jmax

for fam in kernel_families(Fraction(1, 4)):
    print(fam.triple, fam.dimension, fam.multiplier, fam.prefactor)

# %%
lo, hi = Fraction(1, 10), Fraction(3, 2)
jmax = required_jmax(lo, hi)
print(f"truncation j <= {jmax} sees every crossing in ({lo}, {hi})")
for inst in bifurcation_instants((lo, hi), jmax):
    mark = "bifurcation" if inst["bifurcation"] else ""
    print(f"lambda = {str(inst['lam']):>6}  dim {inst['dimension']:3d}  {mark}")
