import numpy as np
import pytest

from glome.model import Dataset, ForwardParams, InverseParams


def random_spd(rng: np.random.Generator, d: int, lo: float = 0.5, hi: float = 2.0) -> np.ndarray:
    """Well-conditioned random SPD matrix with eigenvalues in [lo, hi]."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    vals = rng.uniform(lo, hi, size=d)
    mat = (q * vals) @ q.T
    return 0.5 * (mat + mat.T)


def random_inverse_params(rng: np.random.Generator, K: int, D: int, L: int,
                          spread: float = 1.0) -> InverseParams:
    pi = rng.uniform(0.2, 1.0, size=K)
    return InverseParams(
        pi=pi / pi.sum(),
        c=rng.normal(scale=spread, size=(K, L)),
        Gamma=np.stack([random_spd(rng, L) for _ in range(K)]),
        A=rng.normal(scale=spread, size=(K, D, L)),
        b=rng.normal(scale=spread, size=(K, D)),
        Sigma=np.stack([random_spd(rng, D) for _ in range(K)]),
    )


def random_forward_params(rng: np.random.Generator, K: int, D: int, L: int,
                          spread: float = 1.0) -> ForwardParams:
    pi = rng.uniform(0.2, 1.0, size=K)
    return ForwardParams(
        pi=pi / pi.sum(),
        c=rng.normal(scale=spread, size=(K, D)),
        Gamma=np.stack([random_spd(rng, D) for _ in range(K)]),
        A=rng.normal(scale=spread, size=(K, L, D)),
        b=rng.normal(scale=spread, size=(K, L)),
        Sigma=np.stack([random_spd(rng, L) for _ in range(K)]),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


def make_dataset(rng: np.random.Generator, n: int, D: int = 1, L: int = 1) -> Dataset:
    return Dataset(x=rng.standard_normal((n, D)), y=rng.standard_normal((n, L)))
