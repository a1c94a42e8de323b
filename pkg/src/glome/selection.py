"""Penalized selection of the number of mixture components.

Given per-K negative log-likelihoods and model dimensions, the selected K
minimizes ``nll + kappa * (dim + z)``.  The penalty multiplier ``kappa``
can be fixed (AIC uses 1, BIC uses ``ln(n)/2``) or calibrated from the data
by one of the two slope-heuristic criteria:

* the *jump* criterion reads the exact piecewise-constant path
  ``kappa -> dim(selected(kappa))`` off the lower convex hull of the
  ``(dim, nll)`` cloud, locates the breakpoint ``kappa_hat`` with the
  largest drop in selected dimension, and selects at ``2 * kappa_hat``;
* the *slope* criterion fits a robust (repeated-median) line to ``nll``
  against ``dim`` over the most complex models and selects with twice the
  absolute slope.
"""

from __future__ import annotations

import csv
import io as _io
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegeneratePath, DimensionMismatch, EmptyTable, WindowTooSmall
from .model import COV_STRUCTURES, Dataset, inverse_to_forward, log_likelihood

__all__ = [
    "CriterionEntry",
    "CriterionTable",
    "SelectionResult",
    "model_dimension",
    "select_fixed_kappa",
    "select_aic_bic",
    "jump_criterion",
    "slope_criterion",
    "criterion_table_from_fits",
]


def model_dimension(K: int, D: int, L: int, cov_structure: str = "full") -> int:
    """Number of free parameters of the K-component model.

    With full expert covariances this is
    ``K * (1 + D(L+1) + D(D+1)/2 + L(L+1)/2 + L) - 1``; the diagonal and
    isotropic structures replace the ``D(D+1)/2`` expert-covariance block by
    ``D`` and ``1`` respectively.
    """
    if K < 1 or D < 1 or L < 1:
        raise ValueError("K, D and L must all be >= 1")
    if cov_structure not in COV_STRUCTURES:
        raise ValueError(f"cov_structure must be one of {COV_STRUCTURES}")
    expert_cov = {"full": D * (D + 1) // 2, "diagonal": D, "isotropic": 1}[cov_structure]
    per_component = 1 + D * (L + 1) + expert_cov + L * (L + 1) // 2 + L
    return K * per_component - 1


@dataclass(frozen=True)
class CriterionEntry:
    K: int
    dim: int
    neg_loglik: float


@dataclass(frozen=True)
class CriterionTable:
    """Per-K selection inputs: model dimension and negative log-likelihood."""

    entries: tuple[CriterionEntry, ...]
    n: int

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda e: e.K))
        object.__setattr__(self, "entries", entries)
        ks = [e.K for e in entries]
        if len(set(ks)) != len(ks):
            raise ValueError(f"duplicate K values in table: {ks}")
        dims = [e.dim for e in entries]
        if any(d2 <= d1 for d1, d2 in zip(dims, dims[1:])):
            raise ValueError("dims must be strictly increasing with K")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    def __len__(self) -> int:
        return len(self.entries)

    def to_csv(self) -> str:
        """Serialize as ``K,dim,neg_loglik`` rows (header included)."""
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["K", "dim", "neg_loglik"])
        for e in self.entries:
            writer.writerow([e.K, e.dim, repr(e.neg_loglik)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n: int) -> "CriterionTable":
        reader = csv.reader(_io.StringIO(text))
        header = next(reader, None)
        if header != ["K", "dim", "neg_loglik"]:
            raise ValueError(f"expected header 'K,dim,neg_loglik', got {header}")
        entries = tuple(
            CriterionEntry(K=int(row[0]), dim=int(row[1]), neg_loglik=float(row[2]))
            for row in reader if row
        )
        return cls(entries=entries, n=n)


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one selection method.

    ``kappa_hat`` is the calibrated constant: the jump breakpoint for the
    jump criterion (the penalty then uses ``2 * kappa_hat``), the absolute
    regression slope for the slope criterion, the penalty multiplier itself
    for fixed-kappa selection, and NaN for AIC/BIC.  ``path`` (jump only)
    lists ``(kappa, K)`` pairs meaning K is selected for every penalty
    multiplier from that kappa up to the previous entry's.  ``fit_window``
    (slope only) is the inclusive ``(K_low, K_high)`` range regressed over.
    """

    chosen_K: int
    kappa_hat: float
    method: str
    path: tuple[tuple[float, int], ...] | None = None
    fit_window: tuple[int, int] | None = None


def _require_entries(table: CriterionTable) -> None:
    if len(table.entries) == 0:
        raise EmptyTable("criterion table has no entries")


def select_fixed_kappa(table: CriterionTable, kappa: float,
                       z: dict[int, float] | None = None) -> SelectionResult:
    """Select K minimizing ``neg_loglik + kappa * (dim + z_K)``.

    Ties go to the smaller K.  ``z`` holds optional per-K complexity
    offsets (Kraft weights), zero when omitted.
    """
    _require_entries(table)
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    z = z or {}
    crit = [e.neg_loglik + kappa * (e.dim + z.get(e.K, 0.0)) for e in table.entries]
    chosen = table.entries[int(np.argmin(crit))]
    return SelectionResult(chosen_K=chosen.K, kappa_hat=float(kappa), method="fixed_kappa")


def select_aic_bic(table: CriterionTable, which: str) -> SelectionResult:
    """AIC (``kappa = 1``) or BIC (``kappa = ln(n) / 2``) selection."""
    _require_entries(table)
    if which not in ("aic", "bic"):
        raise ValueError(f"which must be 'aic' or 'bic', got {which!r}")
    if which == "bic" and table.n < 2:
        raise ValueError("BIC requires n >= 2")
    kappa = 1.0 if which == "aic" else math.log(table.n) / 2.0
    inner = select_fixed_kappa(table, kappa)
    return SelectionResult(chosen_K=inner.chosen_K, kappa_hat=math.nan, method=which)


def _lower_hull(dims: np.ndarray, nlls: np.ndarray) -> list[int]:
    """Indices of the lower convex hull, sorted by dim (collinear points dropped)."""
    order = np.argsort(dims)
    hull: list[int] = []
    for idx in order:
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # Drop j if it lies on or above the segment i -> idx.
            lhs = (nlls[j] - nlls[i]) * (dims[idx] - dims[i])
            rhs = (nlls[idx] - nlls[i]) * (dims[j] - dims[i])
            if lhs >= rhs:
                hull.pop()
            else:
                break
        hull.append(int(idx))
    return hull


def jump_criterion(table: CriterionTable) -> SelectionResult:
    """Dimension-jump calibration of the penalty multiplier.

    The selected-dimension path is read exactly off the lower convex hull of
    the ``(dim, neg_loglik)`` points: crossing breakpoint
    ``kappa_j = (nll_j - nll_{j+1}) / (dim_{j+1} - dim_j)`` upward drops the
    selected dimension by ``dim_{j+1} - dim_j``.  ``kappa_hat`` is the
    breakpoint with the largest such drop (ties: the largest breakpoint),
    and the chosen model is the fixed-kappa selection at ``2 * kappa_hat``.
    """
    _require_entries(table)
    dims = np.array([e.dim for e in table.entries], dtype=float)
    nlls = np.array([e.neg_loglik for e in table.entries], dtype=float)
    if len(np.unique(dims)) < 2:
        raise DegeneratePath("jump criterion needs at least two distinct dimensions")

    hull = _lower_hull(dims, nlls)
    # Breakpoint j sits between hull vertices j and j+1; by convexity the
    # breakpoints decrease along the hull, so everything after the first
    # non-positive one is never selected at any kappa >= 0.
    breakpoints = []  # (kappa_j, drop_j)
    for i, j in zip(hull, hull[1:]):
        kappa_j = (nlls[i] - nlls[j]) / (dims[j] - dims[i])
        if kappa_j <= 0:
            break
        breakpoints.append((float(kappa_j), float(dims[j] - dims[i])))
    if not breakpoints:
        raise DegeneratePath(
            "negative log-likelihood never improves with dimension; path is constant"
        )

    # Path from kappa = 0 upward: entry (kappa, K) means K is selected for
    # multipliers in [kappa, next entry's kappa).
    path: list[tuple[float, int]] = [(0.0, table.entries[hull[len(breakpoints)]].K)]
    for j in range(len(breakpoints) - 1, -1, -1):
        path.append((breakpoints[j][0], table.entries[hull[j]].K))

    # Largest dimension drop; ties resolved toward the largest breakpoint.
    kappa_hat, _ = max(breakpoints, key=lambda bp: (bp[1], bp[0]))
    chosen = select_fixed_kappa(table, 2.0 * kappa_hat)
    return SelectionResult(
        chosen_K=chosen.chosen_K,
        kappa_hat=kappa_hat,
        method="jump",
        path=tuple(path),
    )


def _repeated_median_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Siegel repeated-median slope and intercept (50% breakdown)."""
    m = x.shape[0]
    per_point = np.empty(m)
    for i in range(m):
        others = np.arange(m) != i
        per_point[i] = np.median((y[others] - y[i]) / (x[others] - x[i]))
    slope = float(np.median(per_point))
    intercept = float(np.median(y - slope * x))
    return slope, intercept


def slope_criterion(table: CriterionTable, window_fraction: float = 0.5) -> SelectionResult:
    """Data-driven slope calibration of the penalty multiplier.

    Fits a repeated-median line to ``neg_loglik`` against ``dim`` over the
    most complex ``window_fraction`` of the models and selects at
    ``kappa = 2 |slope|``.
    """
    _require_entries(table)
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must lie in (0, 1]")
    m = math.ceil(window_fraction * len(table.entries))
    if m < 3:
        raise WindowTooSmall(
            f"slope window has {m} models, need at least 3 (table has {len(table.entries)})"
        )
    window = sorted(table.entries, key=lambda e: e.dim)[-m:]
    dims = np.array([e.dim for e in window], dtype=float)
    nlls = np.array([e.neg_loglik for e in window], dtype=float)
    slope, _ = _repeated_median_line(dims, nlls)
    kappa_hat = abs(slope)
    chosen = select_fixed_kappa(table, 2.0 * kappa_hat)
    return SelectionResult(
        chosen_K=chosen.chosen_K,
        kappa_hat=kappa_hat,
        method="slope",
        fit_window=(window[0].K, window[-1].K),
    )


def criterion_table_from_fits(data: Dataset, fits: dict[int, "FitResult"],
                              cov_structure: str = "full") -> CriterionTable:
    """Assemble the selection table from per-K inverse fits.

    Each fit is mapped to its forward parameters and scored by the forward
    conditional negative log-likelihood on ``data``.
    """
    if not fits:
        raise EmptyTable("no fits to tabulate")
    entries = []
    for K in sorted(fits):
        fit = fits[K]
        if fit.params.D != data.D or fit.params.L != data.L:
            raise DimensionMismatch(
                f"fit for K={K} has (D={fit.params.D}, L={fit.params.L}) but data has "
                f"(D={data.D}, L={data.L})"
            )
        forward = inverse_to_forward(fit.params)
        nll = -log_likelihood(data, forward, "forward")
        entries.append(CriterionEntry(
            K=K,
            dim=model_dimension(K, data.D, data.L, cov_structure),
            neg_loglik=nll,
        ))
    return CriterionTable(entries=tuple(entries), n=data.n)
