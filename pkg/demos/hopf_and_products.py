"""
Hopf surface and products with curves
=====================================

The standard Hopf metric has constant Chern scalar curvature 2. Its degree
by quadrature feeds the sign formula for a product with a genus-g curve.
"""
# %%
import numpy as np

from chern_yamabe import hopf_degree, hopf_scalar_check, product_degree_sign

sym = hopf_scalar_check(100, method="symbolic")
fd = hopf_scalar_check(100, method="fd")
print(f"S^Ch mean {sym['mean']:.12f}; FD deviation {fd['max_deviation']:.1e}")

# %%
deg = hopf_degree()
print(f"volume {deg['volume']:.6f}, Gamma {deg['gamma']:.6f}")
print("closed form 2*sqrt(8 pi^2 ln 2) =", 2 * np.sqrt(8 * np.pi ** 2 * np.log(2)))

# %%
for genus in (2, 3, 10):
    _, thr = product_degree_sign(deg["gamma"], genus, 1.0)
    signs = [product_degree_sign(deg["gamma"], genus, d)[0] for d in (0.5 * thr, 2 * thr)]
    print(f"genus {genus}: threshold delta* = {thr:.4f}, signs below/above {signs}")
