"""Closed-form theoretical quantities behind the penalty calibration.

These are the computable pieces of the finite-sample risk analysis: the
dimension of the gating-function space, a covering bound for the
probability simplex, the model-complexity bound that shapes the minimal
penalty, and the explicit constant ``kappa0`` above which the penalty
multiplier guarantees the oracle-type risk control.  The constant ``frak_C``
folding together the bracketing constants of the gate and expert classes
has no closed numeric form and is therefore a user-supplied input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .divergence import c_rho
from .exceptions import OutOfRange

__all__ = [
    "TheoryConfig",
    "dim_gating_space",
    "simplex_covering_bound",
    "complexity_bound",
    "penalty_lower_bound",
    "kappa0",
]


@dataclass(frozen=True)
class TheoryConfig:
    """Inputs of the penalty-constant formulas.

    ``rho`` is the Jensen-KL mixing weight in (0, 1); ``C1 > 1`` the
    oracle-inequality leading constant; ``eps_d > 0`` a free slack
    parameter; ``frak_C`` the combined bracketing constant entering the
    complexity bound; ``inner_kappa`` the constant (bounded by 27) that
    appears inside the first auxiliary term.
    """

    rho: float
    C1: float
    eps_d: float
    frak_C: float
    inner_kappa: float = 27.0

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise OutOfRange(f"rho must lie in (0, 1), got {self.rho}")
        if not self.C1 > 1.0:
            raise OutOfRange(f"C1 must be > 1, got {self.C1}")
        if not self.eps_d > 0.0:
            raise OutOfRange(f"eps_d must be > 0, got {self.eps_d}")


def dim_gating_space(K: int, L: int) -> int:
    """Dimension of the log-gate function space: ``K - 1 + KL + K L(L+1)/2``."""
    if K < 1 or L < 1:
        raise ValueError("K and L must be >= 1")
    return K - 1 + K * L + K * (L * (L + 1) // 2)


def simplex_covering_bound(K: int, delta: float) -> float:
    """Upper bound on the sup-norm covering number of the probability simplex.

    ``N(delta, simplex_{K-1}, sup-norm) <= K (2 pi e)^(K/2) / delta^(K-1)``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not delta > 0:
        raise OutOfRange(f"delta must be > 0, got {delta}")
    return K * (2.0 * math.pi * math.e) ** (K / 2.0) / delta ** (K - 1)


def complexity_bound(dim: int, C_m: float, n: int) -> float:
    """Upper bound on ``n * sigma_m^2`` for a model of the given dimension.

    ``dim * (2 (sqrt(C_m) + sqrt(pi))^2 + (log(n / ((sqrt(C_m)+sqrt(pi))^2 dim)))_+)``.
    """
    if dim < 1 or n < 1:
        raise ValueError("dim and n must be >= 1")
    if C_m < 0:
        raise OutOfRange(f"C_m must be >= 0, got {C_m}")
    base = (math.sqrt(C_m) + math.sqrt(math.pi)) ** 2
    log_term = max(0.0, math.log(n / (base * dim)))
    return dim * (2.0 * base + log_term)


def penalty_lower_bound(dim: int, n: int, frak_C: float, z: float, kappa: float) -> float:
    """Minimal admissible penalty: ``kappa * (complexity_bound + z)``."""
    if not kappa > 0:
        raise OutOfRange(f"kappa must be > 0, got {kappa}")
    return kappa * (complexity_bound(dim, frak_C, n) + z)


def kappa0(cfg: TheoryConfig) -> float:
    """The explicit threshold for the penalty multiplier.

    With ``eps_pen = 1 - 1/C1``::

        kappa'_0 = 2 (2 + eps_d) / (1 + eps_d)
        kappa'_1 = (3 k sqrt(2) + 12 + 16 sqrt((1-rho)/rho)) / sqrt(rho (1-rho))
        kappa'_2 = (42 + 3 / (4 sqrt(kappa'_0))) / sqrt(rho (1-rho))
        kappa0   = kappa'_0 (kappa'_1 + kappa'_2)^2
                   (sqrt(1 + 72 c_rho eps_pen / (rho kappa'_0 (kappa'_1 + kappa'_2)^2)) + 1)
                   / (2 c_rho eps_pen) + 18 / rho

    where ``k`` is ``cfg.inner_kappa``.
    """
    rho = cfg.rho
    eps_pen = 1.0 - 1.0 / cfg.C1
    crho = c_rho(rho)
    root = math.sqrt(rho * (1.0 - rho))
    k0p = 2.0 * (2.0 + cfg.eps_d) / (1.0 + cfg.eps_d)
    k1p = (3.0 * cfg.inner_kappa * math.sqrt(2.0) + 12.0
           + 16.0 * math.sqrt((1.0 - rho) / rho)) / root
    k2p = (42.0 + 3.0 / (4.0 * math.sqrt(k0p))) / root
    pair_sq = (k1p + k2p) ** 2
    main = (k0p * pair_sq
            * (math.sqrt(1.0 + 72.0 * crho * eps_pen / (rho * k0p * pair_sq)) + 1.0)
            / (2.0 * crho * eps_pen))
    return main + 18.0 / rho
