"""Internal Gaussian/linear-algebra kernels shared across modules.

Everything here works on plain ndarrays; validation against the public
parameter types happens in :mod:`glome.model`.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .exceptions import NotPositiveDefinite

# Floors used throughout: covariance eigenvalues are kept above EIG_FLOOR and
# mixture weights above PI_FLOOR (projection, then renormalization).
EIG_FLOOR = 1e-8
PI_FLOOR = 1e-6

# Relative slack when *checking* the eigenvalue floor, so matrices clipped at
# exactly EIG_FLOOR still validate after round-off.
_FLOOR_SLACK = 1.0 - 1e-6

_LOG_2PI = float(np.log(2.0 * np.pi))


def symmetrize(mat: np.ndarray) -> np.ndarray:
    """Return (M + M^T)/2."""
    return 0.5 * (mat + mat.swapaxes(-1, -2))


def spd_cholesky(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a covariance matrix.

    Raises
    ------
    NotPositiveDefinite
        If the factorization fails or the matrix contains non-finite entries.
    """
    cov = np.asarray(cov, dtype=float)
    if not np.all(np.isfinite(cov)):
        raise NotPositiveDefinite("covariance contains non-finite entries")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"covariance is not positive definite: {exc}") from exc


def check_spd(cov: np.ndarray, floor: float = EIG_FLOOR, name: str = "cov") -> None:
    """Validate symmetry and an eigenvalue floor.

    Symmetry is required up to 1e-10 relative tolerance; the smallest
    eigenvalue must reach ``floor`` (with a tiny relative slack so matrices
    clipped at exactly the floor pass).
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise NotPositiveDefinite(f"{name} must be square, got shape {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise NotPositiveDefinite(f"{name} contains non-finite entries")
    scale = max(1.0, float(np.max(np.abs(cov))))
    if np.max(np.abs(cov - cov.T)) > 1e-10 * scale:
        raise NotPositiveDefinite(f"{name} is not symmetric")
    min_eig = float(np.linalg.eigvalsh(cov)[0])
    if min_eig < floor * _FLOOR_SLACK:
        raise NotPositiveDefinite(
            f"{name} has eigenvalue {min_eig:.3e} below floor {floor:.3e}"
        )


def floor_eigenvalues(cov: np.ndarray, floor: float = EIG_FLOOR) -> np.ndarray:
    """Project a symmetric matrix onto {min eigenvalue >= floor}."""
    cov = symmetrize(np.asarray(cov, dtype=float))
    vals, vecs = np.linalg.eigh(cov)
    if vals[0] >= floor:
        return cov
    vals = np.maximum(vals, floor)
    return symmetrize((vecs * vals) @ vecs.T)


def floor_simplex(pi: np.ndarray, floor: float = PI_FLOOR) -> np.ndarray:
    """Clip weights at ``floor`` and renormalize to sum to one.

    The exactly-rounded total keeps the result invariant under permutation
    of the components.
    """
    pi = np.maximum(np.asarray(pi, dtype=float), floor)
    return pi / math.fsum(pi)


def chol_logdet(chol: np.ndarray) -> float:
    """log det(Sigma) from the lower Cholesky factor of Sigma."""
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def gaussian_logpdf_dev(dev: np.ndarray, chol: np.ndarray) -> np.ndarray:
    """Gaussian log-density at deviations ``dev`` for covariance L L^T.

    Parameters
    ----------
    dev : ndarray, shape (n, d) or (d,)
        Deviations ``point - mean``.
    chol : ndarray, shape (d, d)
        Lower Cholesky factor of the covariance.

    Returns
    -------
    ndarray of shape (n,), or a float for 1-D input.
    """
    dev = np.asarray(dev, dtype=float)
    single = dev.ndim == 1
    dev2 = dev[None, :] if single else dev
    z = solve_triangular(chol, dev2.T, lower=True)
    quad = np.sum(z * z, axis=0)
    d = chol.shape[0]
    out = -0.5 * (d * _LOG_2PI + chol_logdet(chol) + quad)
    return float(out[0]) if single else out


def solve_spd(cov_chol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve Sigma x = rhs given the lower Cholesky factor of Sigma."""
    return cho_solve((cov_chol, True), rhs)


def spd_inverse(cov: np.ndarray) -> np.ndarray:
    """Symmetric inverse of an SPD matrix via its Cholesky factor."""
    chol = spd_cholesky(cov)
    inv = cho_solve((chol, True), np.eye(cov.shape[0]))
    return symmetrize(inv)
