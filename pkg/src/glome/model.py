"""Mixture-of-experts model with Gaussian gating.

The conditional density estimated throughout this package mixes Gaussian
experts with input-dependent weights given by a normalized Gaussian gating
network.  With affine expert means the model admits two equivalent
parameterizations of the same joint Gaussian mixture on the pair
``(x, y)``:

* *inverse* parameters: the gate variable is ``y`` (marginally Gaussian per
  component with mean ``c_k`` and covariance ``Gamma_k``) and the expert
  describes ``x | y`` with mean ``A_k y + b_k`` and covariance ``Sigma_k``;
* *forward* parameters: the same quantities with the roles of ``x`` and
  ``y`` exchanged.

:func:`inverse_to_forward` converts between the two in closed form, which is
what makes fitting in the cheap direction and evaluating in the other one
possible.  All mixture evaluations run in log space with log-sum-exp.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np
from scipy.special import logsumexp

from . import _linalg
from ._linalg import EIG_FLOOR, PI_FLOOR
from .exceptions import DimensionMismatch, NonFinite, NotPositiveDefinite

__all__ = [
    "COV_STRUCTURES",
    "GaussianParams",
    "InverseParams",
    "ForwardParams",
    "Dataset",
    "gaussian_logpdf",
    "gating_probs",
    "inverse_conditional_logpdf",
    "forward_conditional_logpdf",
    "inverse_to_forward",
    "forward_to_inverse",
    "swap_roles",
    "log_likelihood",
    "polynomial_features",
    "expand_polynomial",
]

#: Admissible expert-covariance structures.
COV_STRUCTURES = ("full", "diagonal", "isotropic")


def _as_readonly(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


def _check_structure(structure: str) -> str:
    if structure not in COV_STRUCTURES:
        raise ValueError(f"cov_structure must be one of {COV_STRUCTURES}, got {structure!r}")
    return structure


# ---------------------------------------------------------------------------
# Parameter containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianParams:
    """A single Gaussian, validated to be usable as a covariance kernel.

    Parameters
    ----------
    mean : ndarray, shape (d,)
    cov : ndarray, shape (d, d)
        Symmetric positive definite with all eigenvalues above the floor
        ``1e-8``.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _as_readonly(np.atleast_1d(self.mean)))
        object.__setattr__(self, "cov", _as_readonly(np.atleast_2d(self.cov)))
        if self.mean.ndim != 1:
            raise DimensionMismatch(f"mean must be a vector, got shape {self.mean.shape}")
        if self.cov.shape != (self.dim, self.dim):
            raise DimensionMismatch(
                f"cov shape {self.cov.shape} does not match mean length {self.dim}"
            )
        if not np.all(np.isfinite(self.mean)):
            raise NonFinite("mean contains non-finite entries")
        _linalg.check_spd(self.cov, EIG_FLOOR, name="cov")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _validate_component_stack(params, gate_dim_name: str, expert_dim_name: str):
    """Shared invariant checks for InverseParams / ForwardParams."""
    if params.pi.ndim != 1 or params.c.ndim != 2 or params.b.ndim != 2:
        raise DimensionMismatch(
            "pi must be (K,), c and b must be (K, dim) arrays; got "
            f"pi {params.pi.shape}, c {params.c.shape}, b {params.b.shape}"
        )
    K = params.pi.shape[0]
    if K < 1:
        raise DimensionMismatch("at least one component is required")
    if not np.all(np.isfinite(params.pi)) or np.any(params.pi < 0):
        raise NonFinite("pi must be finite and nonnegative")
    if abs(float(params.pi.sum()) - 1.0) > 1e-12:
        raise ValueError(f"pi must sum to 1 within 1e-12, got sum {params.pi.sum()!r}")
    if np.any(params.pi < PI_FLOOR * _linalg._FLOOR_SLACK):
        raise ValueError(f"every pi_k must be >= the weight floor {PI_FLOOR}")
    gate_dim = params.c.shape[1]
    expert_dim = params.b.shape[1]
    shapes = {
        "c": (K, gate_dim),
        "Gamma": (K, gate_dim, gate_dim),
        "A": (K, expert_dim, gate_dim),
        "b": (K, expert_dim),
        "Sigma": (K, expert_dim, expert_dim),
    }
    for name, want in shapes.items():
        arr = getattr(params, name)
        if arr.shape != want:
            raise DimensionMismatch(
                f"{name} has shape {arr.shape}, expected {want} "
                f"(K={K}, {gate_dim_name}={gate_dim}, {expert_dim_name}={expert_dim})"
            )
        if not np.all(np.isfinite(arr)):
            raise NonFinite(f"{name} contains non-finite entries")
    for k in range(K):
        _linalg.check_spd(params.Gamma[k], EIG_FLOOR, name=f"Gamma[{k}]")
        _linalg.check_spd(params.Sigma[k], EIG_FLOOR, name=f"Sigma[{k}]")


@dataclass(frozen=True)
class InverseParams:
    """Parameters of the inverse conditional density ``p(x | y)``.

    Component ``k`` has gate weight ``pi[k]`` with gate Gaussian
    ``N(c[k], Gamma[k])`` on ``y`` and expert ``x | y ~ N(A[k] y + b[k],
    Sigma[k])``.

    Shapes: ``pi (K,)``, ``c (K, L)``, ``Gamma (K, L, L)``, ``A (K, D, L)``,
    ``b (K, D)``, ``Sigma (K, D, D)``.
    """

    pi: np.ndarray
    c: np.ndarray
    Gamma: np.ndarray
    A: np.ndarray
    b: np.ndarray
    Sigma: np.ndarray
    cov_structure: str = "full"

    def __post_init__(self):
        for name in ("pi", "c", "Gamma", "A", "b", "Sigma"):
            object.__setattr__(self, name, _as_readonly(getattr(self, name)))
        _check_structure(self.cov_structure)
        _validate_component_stack(self, gate_dim_name="L", expert_dim_name="D")

    @property
    def K(self) -> int:
        return self.pi.shape[0]

    @property
    def L(self) -> int:
        """Dimension of the gate variable y."""
        return self.c.shape[1]

    @property
    def D(self) -> int:
        """Dimension of the expert response x."""
        return self.b.shape[1]


@dataclass(frozen=True)
class ForwardParams:
    """Parameters of the forward conditional density ``p(y | x)``.

    Mirror of :class:`InverseParams` with the roles of ``x`` and ``y``
    exchanged: gates live on ``x`` (``c (K, D)``, ``Gamma (K, D, D)``) and
    experts describe ``y | x`` (``A (K, L, D)``, ``b (K, L)``,
    ``Sigma (K, L, L)``).
    """

    pi: np.ndarray
    c: np.ndarray
    Gamma: np.ndarray
    A: np.ndarray
    b: np.ndarray
    Sigma: np.ndarray
    cov_structure: str = "full"

    def __post_init__(self):
        for name in ("pi", "c", "Gamma", "A", "b", "Sigma"):
            object.__setattr__(self, name, _as_readonly(getattr(self, name)))
        _check_structure(self.cov_structure)
        _validate_component_stack(self, gate_dim_name="D", expert_dim_name="L")

    @property
    def K(self) -> int:
        return self.pi.shape[0]

    @property
    def D(self) -> int:
        """Dimension of the gate variable x."""
        return self.c.shape[1]

    @property
    def L(self) -> int:
        """Dimension of the expert response y."""
        return self.b.shape[1]


@dataclass(frozen=True)
class Dataset:
    """A paired sample of covariates ``x (n, D)`` and responses ``y (n, L)``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _as_readonly(np.atleast_2d(self.x)))
        object.__setattr__(self, "y", _as_readonly(np.atleast_2d(self.y)))
        if self.x.ndim != 2 or self.y.ndim != 2:
            raise DimensionMismatch("x and y must be 2-D arrays")
        if self.x.shape[0] != self.y.shape[0]:
            raise DimensionMismatch(
                f"x has {self.x.shape[0]} rows but y has {self.y.shape[0]}"
            )
        if self.x.shape[0] < 1:
            raise DimensionMismatch("dataset must contain at least one row")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise NonFinite("dataset contains NaN or infinite entries")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def D(self) -> int:
        return self.x.shape[1]

    @property
    def L(self) -> int:
        return self.y.shape[1]


# ---------------------------------------------------------------------------
# Density kernels
# ---------------------------------------------------------------------------


def gaussian_logpdf(point, params: GaussianParams):
    """Log-density of a Gaussian, via a triangular factorization.

    Parameters
    ----------
    point : ndarray, shape (d,) or (n, d)
    params : GaussianParams

    Returns
    -------
    float or ndarray of shape (n,)
    """
    point = np.asarray(point, dtype=float)
    if point.ndim == 0:
        point = point[None]
    d = params.dim
    if point.shape[-1] != d:
        raise DimensionMismatch(f"point has dimension {point.shape[-1]}, expected {d}")
    chol = _linalg.spd_cholesky(params.cov)
    return _linalg.gaussian_logpdf_dev(point - params.mean, chol)


def _component_chols(covs: np.ndarray) -> list[np.ndarray]:
    return [_linalg.spd_cholesky(covs[k]) for k in range(covs.shape[0])]


def _gate_log_numerators(y2: np.ndarray, params) -> np.ndarray:
    """log pi_k + log N(y; c_k, Gamma_k) for every row of ``y2``; (n, K)."""
    n = y2.shape[0]
    out = np.empty((n, params.K))
    log_pi = np.log(params.pi)
    for k, chol in enumerate(_component_chols(params.Gamma)):
        out[:, k] = log_pi[k] + _linalg.gaussian_logpdf_dev(y2 - params.c[k], chol)
    return out


def _expert_log_densities(resp2: np.ndarray, cond2: np.ndarray, params) -> np.ndarray:
    """log N(resp_i; A_k cond_i + b_k, Sigma_k); (n, K).

    ``resp2`` holds the expert-response rows and ``cond2`` the conditioning
    rows (paired).
    """
    n = resp2.shape[0]
    out = np.empty((n, params.K))
    for k, chol in enumerate(_component_chols(params.Sigma)):
        mean = cond2 @ params.A[k].T + params.b[k]
        out[:, k] = _linalg.gaussian_logpdf_dev(resp2 - mean, chol)
    return out


def _pair_2d(a, dim: int, name: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 0:
        arr = arr[None]
    single = arr.ndim == 1
    arr2 = arr[None, :] if single else arr
    if arr2.shape[-1] != dim:
        raise DimensionMismatch(f"{name} has dimension {arr2.shape[-1]}, expected {dim}")
    return arr2, single


def gating_probs(y, params: InverseParams):
    """Gating probabilities of each component at gate input ``y``.

    Computed in log space with max subtraction before normalization, so the
    output rows are nonnegative and sum to one.

    Parameters
    ----------
    y : ndarray, shape (L,) or (n, L)
    params : InverseParams

    Returns
    -------
    ndarray of shape (K,) or (n, K)
    """
    y2, single = _pair_2d(y, params.L, "y")
    log_num = _gate_log_numerators(y2, params)
    log_num -= log_num.max(axis=1, keepdims=True)
    w = np.exp(log_num)
    w /= w.sum(axis=1, keepdims=True)
    return w[0] if single else w


def _mixture_conditional_logpdf(resp2, cond2, params) -> np.ndarray:
    """Shared kernel: log sum_k gate_k(cond) N(resp; A_k cond + b_k, Sigma_k)."""
    log_gate_num = _gate_log_numerators(cond2, params)
    log_expert = _expert_log_densities(resp2, cond2, params)
    return logsumexp(log_gate_num + log_expert, axis=1) - logsumexp(log_gate_num, axis=1)


def inverse_conditional_logpdf(x, y, params: InverseParams):
    """Log of the inverse conditional density ``p(x | y)``.

    Accepts single points (1-D ``x`` and ``y``) or paired rows (2-D with the
    same number of rows); evaluation uses log-sum-exp over components.
    """
    x2, sx = _pair_2d(x, params.D, "x")
    y2, sy = _pair_2d(y, params.L, "y")
    if x2.shape[0] != y2.shape[0]:
        raise DimensionMismatch("x and y must have the same number of rows")
    out = _mixture_conditional_logpdf(x2, y2, params)
    return float(out[0]) if (sx and sy) else out


def forward_conditional_logpdf(y, x, params: ForwardParams):
    """Log of the forward conditional density ``p(y | x)``.

    Mirror of :func:`inverse_conditional_logpdf` with the roles of ``x`` and
    ``y`` exchanged.
    """
    y2, sy = _pair_2d(y, params.L, "y")
    x2, sx = _pair_2d(x, params.D, "x")
    if x2.shape[0] != y2.shape[0]:
        raise DimensionMismatch("x and y must have the same number of rows")
    out = _mixture_conditional_logpdf(y2, x2, params)
    return float(out[0]) if (sx and sy) else out


# ---------------------------------------------------------------------------
# Inverse <-> forward parameter mapping
# ---------------------------------------------------------------------------


def inverse_to_forward(params: InverseParams) -> ForwardParams:
    """Map inverse parameters to the forward parameters of the same joint.

    Per component::

        c*     = A c + b
        Gamma* = Sigma + A Gamma A^T
        Sigma* = (Gamma^-1 + A^T Sigma^-1 A)^-1
        A*     = Sigma* A^T Sigma^-1
        b*     = Sigma* (Gamma^-1 c - A^T Sigma^-1 b)

    and the weights carry over unchanged.  All inverses go through symmetric
    factorizations and outputs are symmetrized before validation.
    """
    K, D, L = params.K, params.D, params.L
    c_f = np.empty((K, D))
    Gamma_f = np.empty((K, D, D))
    A_f = np.empty((K, L, D))
    b_f = np.empty((K, L))
    Sigma_f = np.empty((K, L, L))
    for k in range(K):
        A, b, c = params.A[k], params.b[k], params.c[k]
        chol_Sigma = _linalg.spd_cholesky(params.Sigma[k])
        chol_Gamma = _linalg.spd_cholesky(params.Gamma[k])
        Sinv_A = _linalg.solve_spd(chol_Sigma, A)           # Sigma^-1 A, (D, L)
        Ginv = _linalg.solve_spd(chol_Gamma, np.eye(L))     # Gamma^-1
        prec = _linalg.symmetrize(Ginv + A.T @ Sinv_A)      # Sigma*^-1
        chol_prec = _linalg.spd_cholesky(prec)
        Sigma_star = _linalg.symmetrize(_linalg.solve_spd(chol_prec, np.eye(L)))

        c_f[k] = A @ c + b
        Gamma_f[k] = _linalg.symmetrize(params.Sigma[k] + A @ params.Gamma[k] @ A.T)
        A_f[k] = Sigma_star @ Sinv_A.T
        b_f[k] = Sigma_star @ (_linalg.solve_spd(chol_Gamma, c) - Sinv_A.T @ b)
        Sigma_f[k] = Sigma_star
    return ForwardParams(
        pi=params.pi, c=c_f, Gamma=Gamma_f, A=A_f, b=b_f, Sigma=Sigma_f,
        cov_structure="full",
    )


def swap_roles(params):
    """Reinterpret a parameter set for the role-swapped pair ``(y, x)``.

    A :class:`ForwardParams` for the pair ``(x, y)`` is, verbatim, an
    :class:`InverseParams` for the problem in which the roles of the two
    variables are exchanged, and vice versa.  No arithmetic happens here.
    """
    if isinstance(params, ForwardParams):
        cls = InverseParams
    elif isinstance(params, InverseParams):
        cls = ForwardParams
    else:
        raise TypeError(f"expected InverseParams or ForwardParams, got {type(params)}")
    return cls(
        pi=params.pi, c=params.c, Gamma=params.Gamma, A=params.A, b=params.b,
        Sigma=params.Sigma, cov_structure=params.cov_structure,
    )


def forward_to_inverse(params: ForwardParams) -> InverseParams:
    """Exact inverse of :func:`inverse_to_forward` (role swap, map, swap back)."""
    return swap_roles(inverse_to_forward(swap_roles(params)))


# ---------------------------------------------------------------------------
# Likelihood
# ---------------------------------------------------------------------------


def log_likelihood(data: Dataset, params, direction: str) -> float:
    """Sum of conditional log-densities over the sample.

    Parameters
    ----------
    data : Dataset
    params : InverseParams or ForwardParams
        If the parameter type does not match ``direction`` it is converted
        through the closed-form mapping first.
    direction : {"inverse", "forward"}
        ``"inverse"`` scores ``p(x_i | y_i)``, ``"forward"`` scores
        ``p(y_i | x_i)``.

    Raises
    ------
    NonFinite
        If any sample point evaluates to ``-inf`` beyond the underflow floor.
    """
    if direction == "inverse":
        if isinstance(params, ForwardParams):
            params = forward_to_inverse(params)
        per_point = inverse_conditional_logpdf(data.x, data.y, params)
    elif direction == "forward":
        if isinstance(params, InverseParams):
            params = inverse_to_forward(params)
        per_point = forward_conditional_logpdf(data.y, data.x, params)
    else:
        raise ValueError(f"direction must be 'inverse' or 'forward', got {direction!r}")
    if not np.all(np.isfinite(per_point)):
        raise NonFinite("a sample point has conditional log-density -inf")
    return float(np.sum(per_point))


# ---------------------------------------------------------------------------
# Polynomial mean experts via feature expansion
# ---------------------------------------------------------------------------


def polynomial_features(y, degree: int) -> np.ndarray:
    """Monomials of the rows of ``y`` up to total degree ``degree``.

    The constant monomial is omitted (the affine intercept plays that role),
    so degree 1 reproduces the input columns.  Columns are ordered by total
    degree, then lexicographically by the exponent multi-index.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    y2 = np.atleast_2d(np.asarray(y, dtype=float))
    n, L = y2.shape
    cols = []
    for deg in range(1, degree + 1):
        for combo in combinations_with_replacement(range(L), deg):
            col = np.ones(n)
            for j in combo:
                col = col * y2[:, j]
            cols.append(col)
    return np.column_stack(cols)


def expand_polynomial(data: Dataset, degree: int) -> Dataset:
    """Replace the gate variable by its monomial features up to ``degree``.

    Affine expert means on the expanded variable realize polynomial means on
    the original one; note the Gaussian gates then also act on the expanded
    vector.
    """
    return Dataset(x=data.x, y=polynomial_features(data.y, degree))
