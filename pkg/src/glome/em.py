"""EM estimation of the inverse-parameterized mixture for a fixed K.

The complete-data model is the joint hierarchical Gaussian mixture on
``(x, y)``: component label ``Z ~ pi``, gate variable ``y | Z=k ~ N(c_k,
Gamma_k)`` and response ``x | y, Z=k ~ N(A_k y + b_k, Sigma_k)``.  The
E-step posterior and the M-step updates below are the standard closed forms
of that model; the observed-data log-likelihood the algorithm monotonically
increases is the joint one, ``sum_i log sum_k pi_k N(y_i) N(x_i | y_i)``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.special import logsumexp

from . import _linalg
from .exceptions import (
    AllRestartsFailed,
    EmptyComponent,
    GlomeError,
    NotPositiveDefinite,
    SingularDesign,
    TooFewSamples,
)
from .model import Dataset, InverseParams, _expert_log_densities, _gate_log_numerators

__all__ = ["EmConfig", "FitResult", "FitRangeResult", "e_step", "m_step", "fit", "fit_range"]

INIT_METHODS = ("kmeans", "random", "provided")


@dataclass(frozen=True)
class EmConfig:
    """Knobs controlling one EM estimation.

    ``init`` is one of ``"kmeans"`` (k-means++ on standardized concatenated
    ``(x, y)`` rows followed by one M-step), ``"random"`` (random hard class
    labels), or ``"provided"`` (start from ``init_params``; runs a single
    restart).  Initial class assignments are repaired so that every class
    keeps at least ``min_points_per_class`` members, by moving the nearest
    remaining points into deficient classes.
    """

    max_iter: int = 1000
    rel_tol: float = 1e-6
    n_restarts: int = 5
    init: str = "kmeans"
    min_points_per_class: int = 10
    cov_structure: str = "full"
    seed: int = 0
    init_params: InverseParams | None = None

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        if self.init not in INIT_METHODS:
            raise ValueError(f"init must be one of {INIT_METHODS}, got {self.init!r}")
        if self.init == "provided" and self.init_params is None:
            raise ValueError("init='provided' requires init_params")


@dataclass(frozen=True)
class FitResult:
    """Best-of-restarts EM output for one K."""

    params: InverseParams
    loglik: float
    loglik_trace: tuple[float, ...]
    n_iter: int
    restart_index: int
    converged: bool


@dataclass(frozen=True)
class FitRangeResult:
    """Per-K fits; K values whose fit failed appear in ``errors`` instead."""

    fits: dict[int, FitResult] = field(default_factory=dict)
    errors: dict[int, str] = field(default_factory=dict)

    def loglik_by_k(self) -> dict[int, float]:
        return {k: f.loglik for k, f in self.fits.items()}


# ---------------------------------------------------------------------------
# E and M steps
# ---------------------------------------------------------------------------


def e_step(data: Dataset, params: InverseParams) -> tuple[np.ndarray, float]:
    """Posterior responsibilities and observed-data log-likelihood.

    ``r[i, k]`` is proportional to ``pi_k N(y_i; c_k, Gamma_k)
    N(x_i; A_k y_i + b_k, Sigma_k)`` with rows normalized to one; the
    returned log-likelihood is the joint-model one at ``params``.
    """
    log_joint = _gate_log_numerators(data.y, params) + _expert_log_densities(
        data.x, data.y, params
    )
    row_lse = logsumexp(log_joint, axis=1)
    resp = np.exp(log_joint - row_lse[:, None])
    return resp, float(row_lse.sum())


def _floor_cov(cov: np.ndarray, structure: str) -> np.ndarray:
    """Project a symmetric matrix to the requested structure, floored."""
    d = cov.shape[0]
    if structure == "diagonal":
        return np.diag(np.maximum(np.diag(cov), _linalg.EIG_FLOOR))
    if structure == "isotropic":
        scale = max(float(np.trace(cov)) / d, _linalg.EIG_FLOOR)
        return scale * np.eye(d)
    return _linalg.floor_eigenvalues(cov, _linalg.EIG_FLOOR)


def m_step(data: Dataset, responsibilities: np.ndarray, cov_structure: str = "full") -> InverseParams:
    """Weighted maximum-likelihood update of all component parameters.

    Per component: the weight is the mean responsibility, ``(c, Gamma)`` the
    weighted mean and covariance of ``y``, ``(A, b)`` the weighted least
    squares of ``x`` on ``y``, and ``Sigma`` the weighted residual
    covariance projected to ``cov_structure`` and floored.

    Raises
    ------
    EmptyComponent
        If a responsibility column sums below ``10 * eps * n``.
    SingularDesign
        If a weighted Gram matrix of ``y`` is not invertible above the floor.
    """
    resp = np.asarray(responsibilities, dtype=float)
    n, K = resp.shape
    if n != data.n:
        raise ValueError("responsibilities rows must match the dataset")
    x, y = data.x, data.y
    D, L = data.D, data.L

    # Contiguous per-column copies keep every reduction exactly equivariant
    # under component permutation (axis-0 sums and strided dot products are
    # not, at the ulp level).
    cols = [np.ascontiguousarray(resp[:, k]) for k in range(K)]
    mass = np.array([float(w.sum()) for w in cols])
    if np.any(mass < 10.0 * np.finfo(float).eps * n):
        k_bad = int(np.argmin(mass))
        raise EmptyComponent(f"component {k_bad} has responsibility mass {mass[k_bad]:.3e}")

    pi = _linalg.floor_simplex(mass / n)
    c = np.empty((K, L))
    Gamma = np.empty((K, L, L))
    A = np.empty((K, D, L))
    b = np.empty((K, D))
    Sigma = np.empty((K, D, D))
    for k in range(K):
        w = cols[k]
        wk = mass[k]
        y_bar = w @ y / wk
        x_bar = w @ x / wk
        y_dev = y - y_bar
        x_dev = x - x_bar
        wy = y_dev * w[:, None]
        S_yy = wy.T @ y_dev / wk
        S_xy = (x_dev * w[:, None]).T @ y_dev / wk

        c[k] = y_bar
        Gamma[k] = _linalg.floor_eigenvalues(S_yy, _linalg.EIG_FLOOR)

        S_yy_sym = _linalg.symmetrize(S_yy)
        eigs = np.linalg.eigvalsh(S_yy_sym)
        if eigs[0] <= _linalg.EIG_FLOOR * max(1.0, eigs[-1]):
            raise SingularDesign(
                f"component {k}: weighted Gram matrix of y has eigenvalue {eigs[0]:.3e}"
            )
        A[k] = np.linalg.solve(S_yy_sym, S_xy.T).T
        b[k] = x_bar - A[k] @ y_bar
        residual = x - y @ A[k].T - b[k]
        S_res = (residual * w[:, None]).T @ residual / wk
        Sigma[k] = _floor_cov(_linalg.symmetrize(S_res), cov_structure)

    return InverseParams(pi=pi, c=c, Gamma=Gamma, A=A, b=b, Sigma=Sigma,
                         cov_structure=cov_structure)


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------


def _standardize(features: np.ndarray) -> np.ndarray:
    mu = features.mean(axis=0)
    sd = features.std(axis=0)
    sd[sd == 0.0] = 1.0
    return (features - mu) / sd


def _enforce_min_points(features: np.ndarray, labels: np.ndarray, K: int,
                        min_points: int, rng: np.random.Generator) -> np.ndarray:
    """Move nearest points into classes that fall short of ``min_points``."""
    labels = labels.copy()
    n = labels.shape[0]
    for k in range(K):
        while np.count_nonzero(labels == k) < min_points:
            members = labels == k
            if members.any():
                center = features[members].mean(axis=0)
            else:
                center = features[int(rng.integers(n))]
            counts = np.bincount(labels, minlength=K)
            # Donors must stay at/above the floor after giving up a point.
            donor_ok = counts[labels] > min_points
            movable = donor_ok & ~members
            if not movable.any():
                movable = ~members
            dist = np.linalg.norm(features - center, axis=1)
            dist[~movable] = np.inf
            labels[int(np.argmin(dist))] = k
    return labels


def _labels_to_responsibilities(labels: np.ndarray, K: int) -> np.ndarray:
    resp = np.zeros((labels.shape[0], K))
    resp[np.arange(labels.shape[0]), labels] = 1.0
    return resp


def _initial_params(data: Dataset, K: int, config: EmConfig,
                    rng: np.random.Generator) -> InverseParams:
    if config.init == "provided":
        return config.init_params
    features = _standardize(np.hstack([data.x, data.y]))
    if config.init == "kmeans" and K > 1:
        seed_int = int(rng.integers(np.iinfo(np.int32).max))
        with warnings.catch_warnings():
            # Empty k-means clusters are repaired by _enforce_min_points.
            warnings.simplefilter("ignore")
            _, labels = kmeans2(features, K, minit="++", seed=seed_int)
    elif config.init == "random" and K > 1:
        labels = rng.integers(0, K, size=data.n)
    else:
        labels = np.zeros(data.n, dtype=int)
    labels = _enforce_min_points(features, labels.astype(int), K,
                                 config.min_points_per_class, rng)
    return m_step(data, _labels_to_responsibilities(labels, K), config.cov_structure)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def _reseed_empty(resp: np.ndarray, row_loglik: np.ndarray, mass_floor: float) -> np.ndarray:
    """Give any empty component the datum with the lowest current density."""
    mass = resp.sum(axis=0)
    for k in np.flatnonzero(mass < mass_floor):
        i = int(np.argmin(row_loglik))
        resp[i, :] = 0.0
        resp[i, k] = 1.0
        row_loglik[i] = np.inf  # do not reuse the same datum twice
    return resp


def _run_restart(data: Dataset, K: int, config: EmConfig, restart: int) -> FitResult:
    rng = np.random.default_rng(
        np.random.SeedSequence(config.seed, spawn_key=(K, restart))
    )
    params = _initial_params(data, K, config, rng)
    mass_floor = 10.0 * np.finfo(float).eps * data.n

    trace: list[float] = []
    ll_prev = -math.inf
    converged = False
    for _ in range(config.max_iter):
        resp, ll = e_step(data, params)
        trace.append(ll)
        if abs(ll - ll_prev) / (1.0 + abs(ll)) < config.rel_tol:
            converged = True
            break
        ll_prev = ll
        if np.any(resp.sum(axis=0) < mass_floor):
            row_ll = logsumexp(
                _gate_log_numerators(data.y, params)
                + _expert_log_densities(data.x, data.y, params), axis=1,
            )
            resp = _reseed_empty(resp, row_ll, mass_floor)
        params = m_step(data, resp, config.cov_structure)
    else:
        # max_iter exhausted: params is one M-step past the last recorded
        # value, so score it once more to keep loglik == trace[-1].
        _, ll = e_step(data, params)
        trace.append(ll)

    return FitResult(
        params=params,
        loglik=trace[-1],
        loglik_trace=tuple(trace),
        n_iter=len(trace),
        restart_index=restart,
        converged=converged,
    )


def fit(data: Dataset, K: int, config: EmConfig | None = None) -> FitResult:
    """Best-of-restarts EM estimate for a fixed number of components.

    Each restart alternates :func:`e_step` / :func:`m_step` until the
    relative log-likelihood change ``|dl| / (1 + |l|)`` falls below
    ``rel_tol`` or ``max_iter`` is reached; the restart with the highest
    final log-likelihood wins, ties broken by the lowest restart index.

    Raises
    ------
    TooFewSamples
        If ``n < K * min_points_per_class``.
    AllRestartsFailed
        If every restart died with a numerical error.
    """
    config = config or EmConfig()
    if K < 1:
        raise ValueError("K must be >= 1")
    if data.n < K * config.min_points_per_class:
        raise TooFewSamples(
            f"n={data.n} < K*min_points_per_class={K * config.min_points_per_class}"
        )
    n_restarts = 1 if config.init == "provided" else config.n_restarts
    best: FitResult | None = None
    failures: list[str] = []
    for restart in range(n_restarts):
        try:
            result = _run_restart(data, K, config, restart)
        except (NotPositiveDefinite, EmptyComponent, SingularDesign) as exc:
            failures.append(f"restart {restart}: {type(exc).__name__}: {exc}")
            continue
        if best is None or result.loglik > best.loglik:
            best = result
    if best is None:
        raise AllRestartsFailed("; ".join(failures))
    return best


def _fit_one_k(args) -> tuple[int, FitResult | None, str | None]:
    data, K, config = args
    try:
        return K, fit(data, K, config), None
    except GlomeError as exc:
        return K, None, f"{type(exc).__name__}: {exc}"


def fit_range(data: Dataset, K_max: int, config: EmConfig | None = None,
              threads: int = 1) -> FitRangeResult:
    """Independent fits for every K in ``1..K_max``.

    A K whose fit fails is recorded in ``errors`` rather than aborting the
    sweep; :class:`TooFewSamples` propagates only if every K fails.  Restart
    RNG streams are derived from ``(seed, K, restart)``, so running with
    ``threads > 1`` returns bit-identical results to a serial run.
    """
    config = config or EmConfig()
    if K_max < 1:
        raise ValueError("K_max must be >= 1")
    jobs = [(data, K, config) for K in range(1, K_max + 1)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_fit_one_k, jobs))
    else:
        outcomes = [_fit_one_k(job) for job in jobs]
    fits: dict[int, FitResult] = {}
    errors: dict[int, str] = {}
    for K, result, err in outcomes:
        if result is not None:
            fits[K] = result
        else:
            errors[K] = err
    if not fits:
        raise TooFewSamples(f"every K in 1..{K_max} failed: {errors}")
    return FitRangeResult(fits=fits, errors=errors)
