"""The computable theoretical quantities behind the penalty calibration.

Evaluates the gating-space dimension, the simplex covering bound, the
model-complexity bound, the minimal admissible penalty, and the explicit
penalty-multiplier threshold kappa0 for a reference configuration.
"""

from glome import (
    TheoryConfig,
    complexity_bound,
    dim_gating_space,
    kappa0,
    model_dimension,
    penalty_lower_bound,
    simplex_covering_bound,
)

K, D, L, n = 2, 1, 1, 2000
dim = model_dimension(K, D, L)
print(f"model dimension for K={K}, D={D}, L={L}: {dim}")
print(f"gating-space dimension: {dim_gating_space(K, L)}")

for delta in (0.5, 0.25, 0.1):
    print(f"simplex covering bound (K={K}, delta={delta}): "
          f"{simplex_covering_bound(K, delta):.1f}")

frak_C = 1.0
print(f"\ncomplexity bound (dim={dim}, frak_C={frak_C}, n={n}): "
      f"{complexity_bound(dim, frak_C, n):.3f}")
print(f"minimal penalty at kappa=1: "
      f"{penalty_lower_bound(dim, n, frak_C, 0.0, 1.0):.3f}")

cfg = TheoryConfig(rho=0.5, C1=2.0, eps_d=1.0, frak_C=frak_C)
print(f"\nkappa0(rho=0.5, C1=2, eps_d=1): {kappa0(cfg):.1f}")
print("kappa0 shrinks as the oracle constant C1 grows:")
for c1 in (1.2, 2.0, 10.0):
    cfg = TheoryConfig(rho=0.5, C1=c1, eps_d=1.0, frak_C=frak_C)
    print(f"  C1 = {c1:5.1f} -> kappa0 = {kappa0(cfg):10.1f}")
