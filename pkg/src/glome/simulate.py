"""Data generators and the simulation-study drivers.

Two scripted one-dimensional scenarios are built in.  Both share the same
covariate law (an equal-weight two-component Gaussian mixture) and gate
shapes, and differ in the component conditional means of ``y`` given ``x``:

* ``ws`` (well specified): affine means ``-5x + 2`` and ``0.1x`` with
  variance 0.09, so the truth lies inside the fitted model class;
* ``ms`` (misspecified): quadratic means ``x^2 - 6x + 1`` and ``-0.4x^2``
  with the same variance, so it does not.

``run_selection_trials`` repeats the full pipeline (sample, fit every K in
the inverse direction, map to forward parameters, tabulate forward NLLs,
select K, optionally estimate the tensorized KL against the truth) and
aggregates the outcomes; ``error_decay_study`` sweeps the sample size and
regresses the selected-model divergence against it on a log-log scale.
Per-trial RNG streams are derived from ``(seed, trial)``, so parallel runs
reproduce serial ones bit for bit.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from . import _linalg
from .divergence import CondDensity, tensorized_kl_mc
from .em import EmConfig, fit_range
from .exceptions import GlomeError
from .model import Dataset, ForwardParams, inverse_to_forward
from .selection import (
    criterion_table_from_fits,
    jump_criterion,
    select_aic_bic,
    select_fixed_kappa,
    slope_criterion,
)

__all__ = [
    "Scenario",
    "ws_scenario",
    "ms_scenario",
    "custom_scenario",
    "sample_scenario",
    "sample_glome",
    "TrialReport",
    "run_selection_trials",
    "DecayPoint",
    "DecayResult",
    "error_decay_study",
    "loglog_regression",
]

SELECTION_METHODS = ("jump", "slope", "aic", "bic")


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """A samplable, evaluable conditional truth ``s0(y | x)``.

    The covariate marginal is the mixture ``sum_k pi_k N(x_means[k],
    x_covs[k])`` and component ``k`` emits ``y ~ N(m_k(x), y_covs[k])``
    where ``m_k`` is affine (``A``, ``b``) or, for the scripted
    misspecified case, a univariate polynomial in ``x`` (``mean_poly``
    holds ascending coefficients).
    """

    name: str
    pi: np.ndarray
    x_means: np.ndarray
    x_covs: np.ndarray
    y_covs: np.ndarray
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    mean_poly: np.ndarray | None = None

    def __post_init__(self):
        for name in ("pi", "x_means", "x_covs", "y_covs", "A", "b", "mean_poly"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, np.asarray(val, dtype=float))
        if (self.A is None) != (self.b is None):
            raise ValueError("A and b must be provided together")
        if (self.A is None) == (self.mean_poly is None):
            raise ValueError("exactly one of (A, b) or mean_poly must be provided")

    @property
    def K(self) -> int:
        return self.pi.shape[0]

    @property
    def D(self) -> int:
        return self.x_means.shape[1]

    @property
    def L(self) -> int:
        return self.y_covs.shape[1]

    def component_mean(self, k: int, x: np.ndarray) -> np.ndarray:
        """Conditional mean of y for component ``k`` at one covariate ``x``."""
        return self.component_means(k, x[None, :])[0]

    def component_means(self, k: int, xs: np.ndarray) -> np.ndarray:
        """Conditional means of y for component ``k`` at rows ``xs (m, D)``."""
        if self.A is not None:
            return xs @ self.A[k].T + self.b[k]
        return np.polynomial.polynomial.polyval(xs[:, 0], self.mean_poly[k])[:, None]

    def forward_params(self) -> ForwardParams:
        """Exact in-class representation; only affine scenarios have one."""
        if self.A is None:
            raise ValueError(f"scenario {self.name!r} has no affine representation")
        return ForwardParams(pi=self.pi, c=self.x_means, Gamma=self.x_covs,
                             A=self.A, b=self.b, Sigma=self.y_covs)

    def _gate_log_weights(self, x: np.ndarray) -> np.ndarray:
        lw = np.array([
            math.log(self.pi[k])
            + _linalg.gaussian_logpdf_dev(x - self.x_means[k],
                                          _linalg.spd_cholesky(self.x_covs[k]))
            for k in range(self.K)
        ])
        return lw - logsumexp(lw)

    def truth(self) -> CondDensity:
        """The scenario conditional density as an evaluable/samplable object."""
        y_chols = [_linalg.spd_cholesky(self.y_covs[k]) for k in range(self.K)]

        def log_density(ys: np.ndarray, x: np.ndarray) -> np.ndarray:
            log_w = self._gate_log_weights(x)
            comp = np.empty((ys.shape[0], self.K))
            for k in range(self.K):
                dev = ys - self.component_mean(k, x)
                comp[:, k] = log_w[k] + _linalg.gaussian_logpdf_dev(dev, y_chols[k])
            return logsumexp(comp, axis=1)

        def sampler(x: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
            weights = np.exp(self._gate_log_weights(x))
            labels = rng.choice(self.K, size=m, p=weights)
            out = np.empty((m, self.L))
            for k in range(self.K):
                rows = labels == k
                if not rows.any():
                    continue
                noise = rng.standard_normal((int(rows.sum()), self.L))
                out[rows] = self.component_mean(k, x) + noise @ y_chols[k].T
            return out

        return CondDensity(log_density_fn=log_density, sampler_fn=sampler)


def ws_scenario() -> Scenario:
    """Well-specified truth: affine component means, inside the model class."""
    return Scenario(
        name="ws",
        pi=[0.5, 0.5],
        x_means=[[0.2], [0.8]],
        x_covs=[[[0.1]], [[0.15]]],
        y_covs=[[[0.09]], [[0.09]]],
        A=[[[-5.0]], [[0.1]]],
        b=[[2.0], [0.0]],
    )


def ms_scenario() -> Scenario:
    """Misspecified truth: quadratic component means, outside the class."""
    return Scenario(
        name="ms",
        pi=[0.5, 0.5],
        x_means=[[0.2], [0.8]],
        x_covs=[[[0.1]], [[0.15]]],
        y_covs=[[[0.09]], [[0.09]]],
        mean_poly=[[1.0, -6.0, 1.0], [0.0, 0.0, -0.4]],
    )


def custom_scenario(params: ForwardParams, name: str = "custom") -> Scenario:
    """Wrap an arbitrary forward parameter set as a scenario."""
    return Scenario(
        name=name,
        pi=params.pi,
        x_means=params.c,
        x_covs=params.Gamma,
        y_covs=params.Sigma,
        A=params.A,
        b=params.b,
    )


def get_scenario(name: str) -> Scenario:
    if name == "ws":
        return ws_scenario()
    if name == "ms":
        return ms_scenario()
    raise ValueError(f"unknown scenario {name!r}; expected 'ws' or 'ms'")


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def _sample_hierarchical(scenario: Scenario, n: int,
                         rng: np.random.Generator) -> tuple[Dataset, np.ndarray]:
    labels = rng.choice(scenario.K, size=n, p=scenario.pi)
    x = np.empty((n, scenario.D))
    y = np.empty((n, scenario.L))
    x_chols = [_linalg.spd_cholesky(scenario.x_covs[k]) for k in range(scenario.K)]
    y_chols = [_linalg.spd_cholesky(scenario.y_covs[k]) for k in range(scenario.K)]
    for k in range(scenario.K):
        rows = np.flatnonzero(labels == k)
        if rows.size == 0:
            continue
        xn = rng.standard_normal((rows.size, scenario.D))
        x[rows] = scenario.x_means[k] + xn @ x_chols[k].T
        yn = rng.standard_normal((rows.size, scenario.L))
        y[rows] = scenario.component_means(k, x[rows]) + yn @ y_chols[k].T
    return Dataset(x=x, y=y), labels


def sample_scenario(scenario: Scenario, n: int, seed: int = 0) -> Dataset:
    """Draw ``n`` pairs from the scenario; deterministic per seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    data, _ = _sample_hierarchical(scenario, n, rng)
    return data


def sample_glome(params: ForwardParams, n: int, seed: int = 0,
                 return_labels: bool = False):
    """Draw from the generative hierarchy of a forward parameter set.

    ``Z ~ pi``, ``X | Z=k ~ N(c_k, Gamma_k)``, ``Y | X, Z=k ~
    N(A_k X + b_k, Sigma_k)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    data, labels = _sample_hierarchical(custom_scenario(params), n, rng)
    return (data, labels) if return_labels else data


# ---------------------------------------------------------------------------
# Trial orchestration
# ---------------------------------------------------------------------------


def _derive_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(
        1, dtype=np.uint64)[0])


def _apply_method(table, method: str, kappa: float | None):
    if method == "jump":
        return jump_criterion(table)
    if method == "slope":
        return slope_criterion(table)
    if method in ("aic", "bic"):
        return select_aic_bic(table, method)
    if method == "kappa":
        return select_fixed_kappa(table, kappa)
    raise ValueError(f"unknown selection method {method!r}")


@dataclass(frozen=True)
class _TrialOutcome:
    trial: int
    chosen: dict[str, int | None]
    kappa_hat: dict[str, float]
    tkl_by_k: dict[int, float]
    tkl_selected: dict[str, float]
    runtime: float
    errors: tuple[str, ...]


def _run_one_trial(args) -> _TrialOutcome:
    (scenario, n, K_max, config, methods, divergence, n_y, seed, trial) = args
    t0 = time.perf_counter()
    data_seed = _derive_seed(seed, trial, 0)
    em_seed = _derive_seed(seed, trial, 1)
    data = sample_scenario(scenario, n, seed=data_seed)
    fr = fit_range(data, K_max, replace(config, seed=em_seed))
    errors = [f"K={k}: {msg}" for k, msg in sorted(fr.errors.items())]
    table = criterion_table_from_fits(data, fr.fits, config.cov_structure)

    chosen: dict[str, int | None] = {}
    kappa_hat: dict[str, float] = {}
    for method in methods:
        try:
            sel = _apply_method(table, method, None)
            chosen[method] = sel.chosen_K
            kappa_hat[method] = sel.kappa_hat
        except GlomeError as exc:
            chosen[method] = None
            kappa_hat[method] = math.nan
            errors.append(f"{method}: {type(exc).__name__}: {exc}")

    tkl_by_k: dict[int, float] = {}
    tkl_selected: dict[str, float] = {}
    if divergence != "none":
        truth = scenario.truth()
        wanted = set(fr.fits) if divergence == "all" else {
            k for k in chosen.values() if k is not None
        }
        for K in sorted(wanted):
            est = tensorized_kl_mc(
                truth,
                CondDensity.from_forward_params(inverse_to_forward(fr.fits[K].params)),
                data.x, n_y, seed=_derive_seed(seed, trial, 2, K),
            )
            tkl_by_k[K] = est.value
        tkl_selected = {
            m: tkl_by_k.get(k, math.nan) if k is not None else math.nan
            for m, k in chosen.items()
        }
    return _TrialOutcome(
        trial=trial, chosen=chosen, kappa_hat=kappa_hat, tkl_by_k=tkl_by_k,
        tkl_selected=tkl_selected, runtime=time.perf_counter() - t0,
        errors=tuple(errors),
    )


@dataclass(frozen=True)
class TrialReport:
    """Aggregated outcomes of repeated sample/fit/select/evaluate trials.

    Per-trial arrays are ordered by trial index.  ``chosen_K`` holds None
    for a trial where a method failed; ``tkl`` holds NaN where a divergence
    was not estimated.  ``histogram`` counts failed trials under the
    sentinel key 0 so that totals always equal ``n_trials``.  ``runtimes``
    are wall-clock diagnostics and are excluded from the persisted JSON so
    that seeded runs serialize byte-identically.
    """

    scenario: str
    n: int
    K_max: int
    n_trials: int
    methods: tuple[str, ...]
    seed: int
    chosen_K: dict[str, tuple[int | None, ...]]
    kappa_hat: dict[str, tuple[float, ...]]
    tkl: dict[int, tuple[float, ...]]
    tkl_selected: dict[str, tuple[float, ...]]
    runtimes: tuple[float, ...]
    errors: tuple[tuple[str, ...], ...]

    def histogram(self, method: str) -> dict[int, int]:
        counts: dict[int, int] = {}
        for k in self.chosen_K[method]:
            key = 0 if k is None else int(k)
            counts[key] = counts.get(key, 0) + 1
        return counts

    def modal_K(self, method: str) -> int:
        counts = self.histogram(method)
        counts.pop(0, None)
        # Ties go to the smaller K.
        return min(sorted(counts), key=lambda k: (-counts[k], k))

    def tkl_summary(self) -> dict[int, dict[str, float]]:
        """Per-K mean and quartiles of the estimated divergences."""
        out = {}
        for K in sorted(self.tkl):
            vals = np.asarray(self.tkl[K], dtype=float)
            vals = vals[np.isfinite(vals)]
            if vals.size == 0:
                continue
            q1, med, q3 = np.percentile(vals, [25, 50, 75])
            out[K] = {"mean": float(vals.mean()), "q1": float(q1),
                      "median": float(med), "q3": float(q3),
                      "count": int(vals.size)}
        return out


def run_selection_trials(scenario: Scenario, n: int, K_max: int, n_trials: int,
                         em: EmConfig | None = None,
                         methods: tuple[str, ...] = ("jump", "slope"),
                         seed: int = 0, divergence: str = "none",
                         n_y: int = 100, threads: int = 1) -> TrialReport:
    """Repeat the sample/fit/select pipeline and aggregate the outcomes.

    ``divergence`` is ``"none"``, ``"selected"`` (estimate the tensorized
    KL of each method's chosen model only) or ``"all"`` (every fitted K).
    Trials run concurrently when ``threads > 1`` with identical results.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if divergence not in ("none", "selected", "all"):
        raise ValueError("divergence must be 'none', 'selected' or 'all'")
    for method in methods:
        if method not in SELECTION_METHODS:
            raise ValueError(f"unknown method {method!r}; expected {SELECTION_METHODS}")
    em = em or EmConfig()
    jobs = [(scenario, n, K_max, em, tuple(methods), divergence, n_y, seed, t)
            for t in range(n_trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_run_one_trial, jobs))
    else:
        outcomes = [_run_one_trial(job) for job in jobs]
    outcomes.sort(key=lambda o: o.trial)

    chosen = {m: tuple(o.chosen[m] for o in outcomes) for m in methods}
    kappa = {m: tuple(o.kappa_hat[m] for o in outcomes) for m in methods}
    ks_seen = sorted({K for o in outcomes for K in o.tkl_by_k})
    tkl = {K: tuple(o.tkl_by_k.get(K, math.nan) for o in outcomes) for K in ks_seen}
    tkl_sel = {m: tuple(o.tkl_selected.get(m, math.nan) for o in outcomes)
               for m in methods} if divergence != "none" else {}
    return TrialReport(
        scenario=scenario.name, n=n, K_max=K_max, n_trials=n_trials,
        methods=tuple(methods), seed=seed, chosen_K=chosen, kappa_hat=kappa,
        tkl=tkl, tkl_selected=tkl_sel,
        runtimes=tuple(o.runtime for o in outcomes),
        errors=tuple(o.errors for o in outcomes),
    )


# ---------------------------------------------------------------------------
# Error decay over the sample size
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayPoint:
    n: int
    mean_tkl: float
    std_err: float


@dataclass(frozen=True)
class DecayResult:
    """Log-log regression of the selected-model divergence against n."""

    scenario: str
    method: str
    n_trials: int
    seed: int
    slope: float
    intercept: float
    slope_std_err: float
    points: tuple[DecayPoint, ...]


def loglog_regression(ns, means) -> tuple[float, float, float]:
    """OLS of ``log(means)`` on ``log(ns)``: slope, intercept, slope stderr."""
    ns = np.asarray(ns, dtype=float)
    means = np.asarray(means, dtype=float)
    if ns.shape[0] < 3:
        raise ValueError("need at least three points for the decay regression")
    lx, ly = np.log(ns), np.log(means)
    dx = lx - lx.mean()
    sxx = float(dx @ dx)
    slope = float(dx @ ly) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    dof = ns.shape[0] - 2
    se = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else 0.0
    return slope, intercept, se


def error_decay_study(scenario: Scenario, n_grid, n_trials: int,
                      em: EmConfig | None = None, seed: int = 0, K_max: int = 8,
                      n_y: int = 100, method: str = "jump",
                      threads: int = 1) -> DecayResult:
    """Mean selected-model divergence per sample size, with a log-log fit."""
    n_grid = list(n_grid)
    if len(n_grid) < 3:
        raise ValueError("n_grid must contain at least three sizes")
    points = []
    for gi, n in enumerate(n_grid):
        report = run_selection_trials(
            scenario, n, K_max, n_trials, em=em, methods=(method,),
            seed=_derive_seed(seed, gi), divergence="selected", n_y=n_y,
            threads=threads,
        )
        vals = np.asarray(report.tkl_selected[method], dtype=float)
        vals = vals[np.isfinite(vals)]
        se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
        points.append(DecayPoint(n=int(n), mean_tkl=float(vals.mean()), std_err=se))
    slope, intercept, slope_se = loglog_regression(
        [p.n for p in points], [p.mean_tkl for p in points]
    )
    return DecayResult(
        scenario=scenario.name, method=method, n_trials=n_trials, seed=seed,
        slope=slope, intercept=intercept, slope_std_err=slope_se,
        points=tuple(points),
    )
