"""Monte Carlo estimators of tensorized divergences between conditional laws.

The tensorized Kullback-Leibler divergence between a true conditional
density ``s0(y | x)`` and an estimate ``s(y | x)`` averages the per-x KL
divergence over the observed covariates; here each inner KL is itself
approximated with ``n_y`` draws from ``s0(. | x_i)``::

    (1/n) sum_i (1/n_y) sum_j log( s0(y_ij | x_i) / s(y_ij | x_i) )

The Jensen-KL variant replaces the denominator by the mixture
``(1-rho) s0 + rho s`` and rescales by ``1/rho``, which keeps it bounded by
``(1/rho) log(1/(1-rho))``; the squared-Hellinger variant uses the
importance form ``1 - E[sqrt(s/s0)]``.  The chain
``c_rho * Hel^2 <= JKL_rho <= KL`` relates the three.

Estimates are deterministic given the seed: the inner draws for covariate
``i`` come from an RNG substream derived from ``(seed, i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from . import _linalg
from .exceptions import NonFinite, OutOfRange, SamplerMissing
from .model import ForwardParams, GaussianParams

__all__ = [
    "CondDensity",
    "DivergenceEstimate",
    "kl_gaussian_closed_form",
    "tensorized_kl_mc",
    "tensorized_jkl_mc",
    "tensorized_hellinger_mc",
    "c_rho",
]


@dataclass(frozen=True)
class DivergenceEstimate:
    """A Monte Carlo divergence value with its standard error."""

    value: float
    std_error: float
    n_x: int
    n_y: int
    n_trials: int = 1

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")


@dataclass(frozen=True)
class CondDensity:
    """An evaluable conditional log-density of y given x, with optional sampler.

    ``log_density_fn(ys, x)`` maps a batch ``ys (m, L)`` and one covariate
    ``x (D,)`` to the ``(m,)`` log-densities; ``sampler_fn(x, m, rng)``
    draws ``m`` responses at ``x``.
    """

    log_density_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    sampler_fn: Callable[[np.ndarray, int, np.random.Generator], np.ndarray] | None = None

    def logpdf(self, ys: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.log_density_fn(np.atleast_2d(ys), np.atleast_1d(x)))

    def sample(self, x: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
        if self.sampler_fn is None:
            raise SamplerMissing("this conditional density has no sampler")
        return np.atleast_2d(self.sampler_fn(np.atleast_1d(x), m, rng))

    @classmethod
    def from_forward_params(cls, params: ForwardParams) -> "CondDensity":
        """Mixture conditional density and sampler of a forward parameter set."""
        gate_chols = [_linalg.spd_cholesky(params.Gamma[k]) for k in range(params.K)]
        expert_chols = [_linalg.spd_cholesky(params.Sigma[k]) for k in range(params.K)]
        log_pi = np.log(params.pi)

        def gate_log_weights(x: np.ndarray) -> np.ndarray:
            lw = np.array([
                log_pi[k] + _linalg.gaussian_logpdf_dev(x - params.c[k], gate_chols[k])
                for k in range(params.K)
            ])
            return lw - logsumexp(lw)

        def log_density(ys: np.ndarray, x: np.ndarray) -> np.ndarray:
            log_w = gate_log_weights(x)
            comp = np.empty((ys.shape[0], params.K))
            for k in range(params.K):
                mean = params.A[k] @ x + params.b[k]
                comp[:, k] = log_w[k] + _linalg.gaussian_logpdf_dev(
                    ys - mean, expert_chols[k]
                )
            return logsumexp(comp, axis=1)

        def sampler(x: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
            weights = np.exp(gate_log_weights(x))
            labels = rng.choice(params.K, size=m, p=weights)
            out = np.empty((m, params.L))
            for k in range(params.K):
                rows = labels == k
                if not rows.any():
                    continue
                noise = rng.standard_normal((int(rows.sum()), params.L))
                out[rows] = params.A[k] @ x + params.b[k] + noise @ expert_chols[k].T
            return out

        return cls(log_density_fn=log_density, sampler_fn=sampler)


def kl_gaussian_closed_form(p: GaussianParams, q: GaussianParams) -> float:
    """Exact KL(p || q) between two Gaussians of the same dimension."""
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    d = p.dim
    chol_q = _linalg.spd_cholesky(q.cov)
    chol_p = _linalg.spd_cholesky(p.cov)
    trace = float(np.trace(_linalg.solve_spd(chol_q, p.cov)))
    dev = q.mean - p.mean
    mahal = float(dev @ _linalg.solve_spd(chol_q, dev))
    logdet = _linalg.chol_logdet(chol_q) - _linalg.chol_logdet(chol_p)
    return 0.5 * (trace + mahal - d + logdet)


def c_rho(rho: float) -> float:
    """The constant relating squared Hellinger and Jensen-KL divergences.

    ``c_rho = (1/rho) min((1-rho)/rho, 1) (log(1 + rho/(1-rho)) - rho)``.
    """
    if not 0.0 < rho < 1.0:
        raise OutOfRange(f"rho must lie in (0, 1), got {rho}")
    return (1.0 / rho) * min((1.0 - rho) / rho, 1.0) * (math.log1p(rho / (1.0 - rho)) - rho)


def _per_x_streams(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
            for i in range(n)]


def _mc_terms(s0: CondDensity, xs: np.ndarray, n_y: int, seed: int,
              term_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
    """Collect per-draw terms over all (x_i, y_ij); shape (n * n_y,)."""
    if s0.sampler_fn is None:
        raise SamplerMissing("the reference density must carry a sampler")
    if n_y < 1:
        raise ValueError("n_y must be >= 1")
    xs2 = np.atleast_2d(np.asarray(xs, dtype=float))
    n = xs2.shape[0]
    if n < 1:
        raise ValueError("xs must contain at least one covariate row")
    terms = np.empty((n, n_y))
    for i, rng in enumerate(_per_x_streams(seed, n)):
        x = xs2[i]
        ys = s0.sample(x, n_y, rng)
        terms[i] = term_fn(ys, x)
    flat = terms.ravel()
    if not np.all(np.isfinite(flat)):
        raise NonFinite("a Monte Carlo log-ratio term is not finite")
    return flat


def _estimate_from_terms(values: np.ndarray, n_x: int, n_y: int) -> DivergenceEstimate:
    m = values.size
    se = float(values.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return DivergenceEstimate(value=float(values.mean()), std_error=se, n_x=n_x, n_y=n_y)


def tensorized_kl_mc(s0: CondDensity, s_hat: CondDensity, xs: np.ndarray,
                     n_y: int, seed: int = 0) -> DivergenceEstimate:
    """Monte Carlo tensorized KL divergence of ``s_hat`` from ``s0``.

    Averages ``log s0(y|x) - log s_hat(y|x)`` over ``n_y`` draws from
    ``s0(.|x_i)`` for every covariate row; the standard error is taken over
    all ``n * n_y`` log-ratio terms.
    """
    def term(ys, x):
        return s0.logpdf(ys, x) - s_hat.logpdf(ys, x)

    values = _mc_terms(s0, xs, n_y, seed, term)
    return _estimate_from_terms(values, np.atleast_2d(xs).shape[0], n_y)


def tensorized_jkl_mc(s0: CondDensity, s_hat: CondDensity, rho: float,
                      xs: np.ndarray, n_y: int, seed: int = 0) -> DivergenceEstimate:
    """Monte Carlo tensorized Jensen-KL divergence at mixing weight ``rho``.

    Estimates ``(1/rho) KL(s0, (1-rho) s0 + rho s_hat)`` averaged over the
    covariates; the mixture is evaluated in log space, which keeps the
    estimator finite even for extreme density ratios.
    """
    if not 0.0 < rho < 1.0:
        raise OutOfRange(f"rho must lie in (0, 1), got {rho}")
    log_1m_rho = math.log1p(-rho)
    log_rho = math.log(rho)

    def term(ys, x):
        ls0 = s0.logpdf(ys, x)
        lsh = s_hat.logpdf(ys, x)
        log_mix = np.logaddexp(log_1m_rho + ls0, log_rho + lsh)
        return (ls0 - log_mix) / rho

    values = _mc_terms(s0, xs, n_y, seed, term)
    return _estimate_from_terms(values, np.atleast_2d(xs).shape[0], n_y)


def tensorized_hellinger_mc(s0: CondDensity, s_hat: CondDensity, xs: np.ndarray,
                            n_y: int, seed: int = 0) -> DivergenceEstimate:
    """Monte Carlo tensorized squared Hellinger distance.

    Uses the importance form ``1 - E_{y~s0}[sqrt(s_hat/s0)]`` per covariate,
    averaged over the covariate rows.
    """
    def term(ys, x):
        return np.exp(0.5 * (s_hat.logpdf(ys, x) - s0.logpdf(ys, x)))

    values = _mc_terms(s0, xs, n_y, seed, term)
    inner = _estimate_from_terms(values, np.atleast_2d(xs).shape[0], n_y)
    return DivergenceEstimate(
        value=1.0 - inner.value,
        std_error=inner.std_error,
        n_x=inner.n_x,
        n_y=inner.n_y,
    )
