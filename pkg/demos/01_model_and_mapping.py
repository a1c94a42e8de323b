"""Parameter types, conditional densities, and the inverse/forward mapping.

The same joint Gaussian mixture on (x, y) can be described from either
side: gates on y with experts for x | y (the "inverse" view fitted by EM),
or gates on x with experts for y | x (the "forward" view used for
prediction).  The closed-form map between the two is exact, as the round
trip below demonstrates.
"""

import numpy as np

from glome import (
    InverseParams,
    forward_conditional_logpdf,
    gating_probs,
    inverse_conditional_logpdf,
    inverse_to_forward,
    swap_roles,
)

rng = np.random.default_rng(0)

params = InverseParams(
    pi=[0.4, 0.6],
    c=[[-1.0], [1.5]],
    Gamma=[[[0.5]], [[0.8]]],
    A=[[[2.0]], [[-0.5]]],
    b=[[0.0], [1.0]],
    Sigma=[[[0.3]], [[0.2]]],
)

print("Gating probabilities move with the gate variable y:")
for y in (-2.0, 0.0, 2.0):
    print(f"  y = {y:+.1f}  ->  {np.round(gating_probs(np.array([y]), params), 4)}")

x, y = np.array([0.7]), np.array([0.2])
print(f"\nlog p(x | y)  at (0.7 | 0.2): {inverse_conditional_logpdf(x, y, params):+.6f}")

forward = inverse_to_forward(params)
print(f"log p(y | x)  at (0.2 | 0.7): {forward_conditional_logpdf(y, x, forward):+.6f}")

print("\nForward parameters of the first component:")
print(f"  c* = {forward.c[0]},  Gamma* = {forward.Gamma[0].ravel()}")
print(f"  A* = {forward.A[0].ravel()},  b* = {forward.b[0]},  Sigma* = {forward.Sigma[0].ravel()}")

# Round trip: map, exchange the variable roles, map again.
back = swap_roles(inverse_to_forward(swap_roles(forward)))
worst = max(
    float(np.max(np.abs(getattr(back, f) - getattr(params, f))))
    for f in ("pi", "c", "Gamma", "A", "b", "Sigma")
)
print(f"\nRound-trip reconstruction error: {worst:.2e}")
