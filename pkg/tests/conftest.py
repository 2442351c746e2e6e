"""Shared helpers: independent brute-force oracles used across test modules."""

import numpy as np
import pytest

import sparsemp as sm


def block_matrix(scaled: np.ndarray) -> np.ndarray:
    """The symmetric block matrix V = [[0, X], [X^T, 0]]."""
    n, m = scaled.shape
    v = np.zeros((n + m, n + m))
    v[:n, n:] = scaled
    v[n:, :n] = scaled.T
    return v


def dense_resolvent(scaled: np.ndarray, z: complex) -> np.ndarray:
    """Resolvent by direct dense inversion; the oracle for the SVD assembly."""
    v = block_matrix(scaled)
    return np.linalg.inv(v - z * np.eye(v.shape[0]))


def gaussian_params(n: int, m: int, p: float, seed: int, delta: float = 2.0) -> sm.ModelParams:
    return sm.ModelParams(n=n, m=m, p=p, dist=sm.EntryDistribution.gaussian(),
                          delta=delta, seed=seed)


def zero_sample(n: int, m: int) -> sm.SampledMatrix:
    return sm.SampledMatrix(raw=np.zeros((n, m)), mask=np.ones((n, m), dtype=np.uint8),
                            scaled=np.zeros((n, m)))


@pytest.fixture(scope="session")
def medium_sample():
    """One 30 x 60 Gaussian sample at p = 0.5, reused by read-only tests."""
    params = gaussian_params(30, 60, 0.5, seed=42)
    return params, sm.sample_matrix(params, 0)
