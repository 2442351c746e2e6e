import math

import numpy as np
import pytest

import sparsemp as sm
from sparsemp import SampledMatrix

from conftest import dense_resolvent, gaussian_params, zero_sample


def test_zero_matrix_spectrum_and_resolvent():
    x = zero_sample(3, 5)
    spec = sm.singular_values(x)
    assert np.all(spec.singulars == 0.0)
    z = complex(0.4, 0.7)
    r = sm.resolvent(x, z)
    np.testing.assert_allclose(r.entries, -np.eye(8) / z, atol=1e-14)


def test_diagonal_injection_singulars():
    x = SampledMatrix.from_dense(np.array([[1.0, 0.0], [0.0, 2.0]]))
    spec = sm.singular_values(x)
    np.testing.assert_allclose(spec.singulars, [2.0, 1.0], atol=1e-14)


def test_svd_against_eigensolver_oracle():
    params = gaussian_params(50, 100, 0.6, seed=5)
    x = sm.sample_matrix(params, 0)
    spec = sm.singular_values(x)
    eigs = np.linalg.eigvalsh(x.scaled @ x.scaled.T)
    oracle = np.sqrt(np.clip(eigs, 0.0, None))[::-1]
    np.testing.assert_allclose(spec.singulars, oracle, atol=1e-9)
    # reconstruction and orthonormality
    rebuilt = spec.left_vectors @ np.diag(spec.singulars) @ spec.right_vectors.T
    assert np.linalg.norm(rebuilt - x.scaled) <= 1e-9 * np.linalg.norm(x.scaled)
    assert np.abs(spec.left_vectors.T @ spec.left_vectors - np.eye(50)).max() < 1e-10
    assert np.abs(spec.right_vectors.T @ spec.right_vectors - np.eye(50)).max() < 1e-10


def test_esd_values():
    spec = sm.SpectrumResult(singulars=np.array([2.0, 1.0]),
                             left_vectors=np.eye(2), right_vectors=np.eye(2))
    assert sm.esd(spec, 2.0) == 1.0
    assert sm.esd(spec, 5.0) == 1.0
    assert sm.esd(spec, 0.0) == 0.5
    assert sm.esd(spec, 1.5) == 0.75
    assert sm.esd(spec, -5.0) == 0.0
    # symmetry at continuity points
    for t in (0.5, 1.5, 2.5):
        assert sm.esd(spec, t) + sm.esd(spec, -t) == pytest.approx(1.0, abs=0)


def test_stieltjes_esd_values():
    spec0 = sm.SpectrumResult(singulars=np.zeros(4), left_vectors=np.eye(4),
                              right_vectors=np.eye(4))
    z = complex(0.3, 0.8)
    assert sm.stieltjes_esd(spec0, z) == pytest.approx(-1.0 / z, abs=1e-15)
    spec1 = sm.SpectrumResult(singulars=np.array([1.0, 1.0]),
                              left_vectors=np.eye(2), right_vectors=np.eye(2))
    assert sm.stieltjes_esd(spec1, 10j) == pytest.approx(10j / 101.0, abs=1e-15)


def test_stieltjes_esd_matches_resolvent_trace(medium_sample):
    _, x = medium_sample
    spec = sm.singular_values(x)
    for z in (complex(0.5, 0.4), complex(-1.2, 0.15), complex(0.0, 2.0)):
        r = sm.resolvent_from_spectrum(spec, z)
        trace = np.trace(r.entries[:x.n, :x.n]) / x.n
        assert abs(trace - sm.stieltjes_esd(spec, z)) < 1e-10


def test_resolvent_one_by_one_hand_case():
    a = 0.8
    x = SampledMatrix.from_dense(np.array([[a]]))
    z = complex(0.2, 0.5)
    r = sm.resolvent(x, z)
    denom = a * a - z * z
    assert r.entries[0, 0] == pytest.approx(z / denom, abs=1e-14)
    assert r.entries[0, 1] == pytest.approx(a / denom, abs=1e-14)
    assert r.entries[1, 1] == pytest.approx(z / denom, abs=1e-14)


def test_resolvent_against_dense_inverse(medium_sample):
    _, x = medium_sample
    rng = np.random.default_rng(17)
    v_mat = np.zeros((90, 90))
    v_mat[:30, 30:] = x.scaled
    v_mat[30:, :30] = x.scaled.T
    for _ in range(5):
        z = complex(rng.uniform(-2, 2), rng.uniform(0.05, 2.0))
        r = sm.resolvent(x, z)
        dense = dense_resolvent(x.scaled, z)
        assert np.abs(r.entries - dense).max() < 1e-9
        ident = (v_mat - z * np.eye(90)) @ r.entries - np.eye(90)
        assert np.abs(ident).max() < 1e-9
        assert np.abs(r.entries - r.entries.T).max() < 1e-10


def test_resolvent_minor_empty_equals_full(medium_sample):
    _, x = medium_sample
    z = complex(0.7, 0.3)
    full = sm.resolvent(x, z)
    minor = sm.resolvent_minor(x, z)
    np.testing.assert_allclose(minor.entries, full.entries, atol=1e-12)
    np.testing.assert_array_equal(minor.labels, full.labels)


def test_resolvent_minor_small_direct():
    x = SampledMatrix.from_dense(np.array([[1.0, -0.5], [0.3, 2.0]]))
    z = complex(0.4, 0.6)
    minor = sm.resolvent_minor(x, z, rows_j=[0])
    sub = SampledMatrix.from_dense(x.scaled[1:, :])
    direct = dense_resolvent(sub.scaled, z)
    np.testing.assert_allclose(minor.entries, direct, atol=1e-12)
    np.testing.assert_array_equal(minor.labels, [1, 2, 3])
    # column deletion can leave m' < n; the assembly must still be exact
    minor_c = sm.resolvent_minor(x, z, cols_k=[1])
    direct_c = dense_resolvent(x.scaled[:, :1], z)
    np.testing.assert_allclose(minor_c.entries, direct_c, atol=1e-12)
    np.testing.assert_array_equal(minor_c.labels, [0, 1, 2])


def test_resolvent_minor_out_of_range(medium_sample):
    _, x = medium_sample
    with pytest.raises(IndexError):
        sm.resolvent_minor(x, 1j, rows_j=[30])
    with pytest.raises(IndexError):
        sm.resolvent_minor(x, 1j, cols_k=[-1])


def test_trace_interlacing_bound():
    rng = np.random.default_rng(29)
    for _ in range(100):
        n = int(rng.integers(2, 10))
        m = int(rng.integers(n + 1, 2 * n + 4))
        params = gaussian_params(n, m, float(rng.uniform(0.3, 1.0)),
                                 seed=int(rng.integers(10**6)))
        x = sm.sample_matrix(params, 0)
        v = float(rng.uniform(0.05, 2.0))
        z = complex(rng.uniform(-2, 2), v)
        j = int(rng.integers(0, n))
        full = np.trace(sm.resolvent(x, z).entries)
        minor = np.trace(sm.resolvent_minor(x, z, rows_j=[j]).entries)
        assert abs(full - minor) <= 2.0 / v


def test_ward_identity(medium_sample):
    _, x = medium_sample
    v = 0.35
    z = complex(0.8, v)
    r = sm.resolvent(x, z)
    row_norms = (np.abs(r.entries) ** 2).sum(axis=1)
    np.testing.assert_allclose(row_norms, np.imag(np.diag(r.entries)) / v, atol=1e-8)


def test_multiplicative_inequality_diagonal(medium_sample):
    _, x = medium_sample
    spec = sm.singular_values(x)
    rng = np.random.default_rng(31)
    d = x.n + x.m
    for _ in range(1000):
        j = int(rng.integers(0, d))
        u = float(rng.uniform(-2, 2))
        v = float(rng.uniform(0.05, 1.0))
        s = float(rng.uniform(1.0, 10.0))
        r1 = sm.resolvent_from_spectrum(spec, complex(u, v))
        r2 = sm.resolvent_from_spectrum(spec, complex(u, s * v))
        assert abs(r1.entries[j, j]) <= s * abs(r2.entries[j, j]) + 1e-12


def test_large_v_limit(medium_sample):
    _, x = medium_sample
    z = complex(0.5, 1000.0)
    r = sm.resolvent(x, z)
    assert np.abs(np.diag(r.entries) + 1.0 / z).max() < 1e-4


def test_max_entry_examples(medium_sample):
    x0 = zero_sample(2, 3)
    r0 = sm.resolvent(x0, 1j)
    assert sm.max_entry(r0) == pytest.approx(1.0, abs=1e-15)
    _, x = medium_sample
    z = complex(0.9, 0.25)
    r = sm.resolvent(x, z)
    assert sm.max_entry(r) >= abs(r.entries[0, 0])
    # blockwise path equals the full scan
    spec = sm.singular_values(x)
    assert sm.resolvent_max_abs(spec, z) == pytest.approx(sm.max_entry(r), abs=1e-12)
    assert sm.resolvent_max_abs(spec, z, chunk=7) == pytest.approx(sm.max_entry(r), abs=1e-12)


def test_csv_exports(tmp_path, medium_sample):
    _, x = medium_sample
    spec = sm.singular_values(x)
    p1 = tmp_path / "spectrum.csv"
    sm.spectral.write_spectrum_csv(p1, spec)
    lines = p1.read_text().strip().splitlines()
    assert lines[0] == "index,singular_value"
    assert len(lines) == 1 + 30
    assert float(lines[1].split(",")[1]) == pytest.approx(spec.singulars[0], rel=1e-15)
    p2 = tmp_path / "hist.csv"
    edges = np.linspace(-2, 2, 9)
    sm.spectral.write_esd_histogram_csv(p2, spec, edges)
    rows = p2.read_text().strip().splitlines()[1:]
    counts = [int(r.split(",")[2]) for r in rows]
    assert sum(counts) == 60   # all +-s_j fall inside [-2, 2]
