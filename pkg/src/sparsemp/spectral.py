"""Spectra, symmetrized ESD, and the resolvent of the block matrix V.

V is the (n+m) x (n+m) symmetric matrix with X in the upper-right block and
X^T in the lower-left.  Its resolvent R(z) = (V - zI)^{-1} is assembled in
closed form from one SVD X = U diag(s) W^T:

    R_11 = U D_p U^T - I_n / z         D_p = diag(s^2 / (z (s^2 - z^2)))
    R_12 = U diag(s / (s^2 - z^2)) W^T
    R_22 = W D_p W^T - I_m / z

which is what makes hundreds of z evaluations per sample affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NumericalError, ParameterError
from .model import SampledMatrix
from .mplaw import ComplexPoint, _as_complex


@dataclass(frozen=True)
class SpectrumResult:
    """Full SVD of one sampled matrix, singular values descending."""

    singulars: np.ndarray
    left_vectors: np.ndarray   # n x r, orthonormal columns (r = min(n, m))
    right_vectors: np.ndarray  # m x r, orthonormal columns

    @property
    def n(self) -> int:
        return self.left_vectors.shape[0]

    @property
    def m(self) -> int:
        return self.right_vectors.shape[0]


@dataclass(frozen=True)
class ResolventEval:
    """Dense resolvent of the block matrix at one z.

    ``labels`` maps each row/column of ``entries`` back to its index in the
    undeleted block matrix, so minors keep their original bookkeeping.
    """

    z: complex
    entries: np.ndarray
    labels: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def singular_values(x: SampledMatrix) -> SpectrumResult:
    """Full SVD of the scaled matrix; raises NumericalError on non-convergence."""
    try:
        u, s, vt = np.linalg.svd(x.scaled, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed for shape {x.scaled.shape}: {exc}") from exc
    return SpectrumResult(singulars=s, left_vectors=u, right_vectors=vt.T)


def esd(spec: SpectrumResult, x: float) -> float:
    """Symmetrized empirical spectral CDF F_n(x) over the points {+-s_j}."""
    s = np.sort(spec.singulars)
    n = s.size
    pos = np.searchsorted(s, x, side="right")         # s_j <= x
    neg = n - np.searchsorted(s, -x, side="left")      # -s_j <= x
    return (pos + neg) / (2.0 * n)


def stieltjes_esd(spec: SpectrumResult, z: "ComplexPoint | complex") -> complex:
    """s_n(z) = (1/n) sum_j z / (s_j^2 - z^2)."""
    zc = _as_complex(z)
    s = spec.singulars
    return complex(np.mean(zc / (s * s - zc * zc)))


def _diag_factors(s: np.ndarray, z: complex) -> tuple[np.ndarray, np.ndarray]:
    denom = s * s - z * z
    d_proj = s * s / (z * denom)   # diagonal weight for the two corner blocks
    d_mid = s / denom              # weight for the off-diagonal block
    return d_proj, d_mid


def _assemble_resolvent(u: np.ndarray, s: np.ndarray, w: np.ndarray,
                        z: complex) -> np.ndarray:
    n, m = u.shape[0], w.shape[0]
    d_proj, d_mid = _diag_factors(s, z)
    out = np.empty((n + m, n + m), dtype=np.complex128)
    out[:n, :n] = (u * d_proj) @ u.T
    out[:n, :n].flat[:: n + 1] -= 1.0 / z
    out[:n, n:] = (u * d_mid) @ w.T
    out[n:, :n] = out[:n, n:].T
    out[n:, n:] = (w * d_proj) @ w.T
    out[n:, n:].flat[:: m + 1] -= 1.0 / z
    return out


def resolvent_from_spectrum(spec: SpectrumResult, z: "ComplexPoint | complex") -> ResolventEval:
    """Resolvent of the block matrix, reusing an existing SVD."""
    zc = _as_complex(z)
    entries = _assemble_resolvent(spec.left_vectors, spec.singulars,
                                  spec.right_vectors, zc)
    return ResolventEval(z=zc, entries=entries,
                         labels=np.arange(spec.n + spec.m))


def resolvent(x: SampledMatrix, z: "ComplexPoint | complex") -> ResolventEval:
    """R(z) = (V - zI)^{-1} assembled from a fresh SVD of the sample."""
    return resolvent_from_spectrum(singular_values(x), z)


def resolvent_minor(x: SampledMatrix, z: "ComplexPoint | complex",
                    rows_j: Iterable[int] = (), cols_k: Iterable[int] = ()) -> ResolventEval:
    """Resolvent of the block matrix built from X with rows/columns deleted.

    ``labels`` carries the original block-matrix indices of the survivors
    (rows keep their index, surviving column l becomes n + l).
    """
    zc = _as_complex(z)
    n, m = x.n, x.m
    rows = sorted(set(int(j) for j in rows_j))
    cols = sorted(set(int(k) for k in cols_k))
    if rows and (rows[0] < 0 or rows[-1] >= n):
        raise IndexError(f"row index out of range [0, {n}): {rows}")
    if cols and (cols[0] < 0 or cols[-1] >= m):
        raise IndexError(f"column index out of range [0, {m}): {cols}")
    keep_r = np.setdiff1d(np.arange(n), rows)
    keep_c = np.setdiff1d(np.arange(m), cols)
    sub = x.scaled[np.ix_(keep_r, keep_c)]
    try:
        u, s, vt = np.linalg.svd(sub, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"minor SVD failed for shape {sub.shape}: {exc}") from exc
    entries = _assemble_resolvent(u, s, vt.T, zc)
    labels = np.concatenate([keep_r, n + keep_c])
    return ResolventEval(z=zc, entries=entries, labels=labels)


def max_entry(r: ResolventEval) -> float:
    """max_{j,k} |R_jk| by a full scan."""
    return float(np.abs(r.entries).max())


def resolvent_max_abs(spec: SpectrumResult, z: "ComplexPoint | complex",
                      chunk: int = 1024) -> float:
    """max |R_jk| computed blockwise, never materializing the full matrix.

    Needed at campaign sizes where the m x m corner alone would be hundreds
    of megabytes per grid point.
    """
    zc = _as_complex(z)
    u, s, w = spec.left_vectors, spec.singulars, spec.right_vectors
    d_proj, d_mid = _diag_factors(s, zc)
    best = 0.0
    for factor in (u, w):
        scaled = factor * d_proj
        k = factor.shape[0]
        for lo in range(0, k, chunk):
            hi = min(lo + chunk, k)
            block = scaled[lo:hi] @ factor.T
            block[np.arange(lo, hi) - lo, np.arange(lo, hi)] -= 1.0 / zc
            best = max(best, float(np.abs(block).max()))
    scaled = u * d_mid
    m = w.shape[0]
    for lo in range(0, u.shape[0], chunk):
        hi = min(lo + chunk, u.shape[0])
        block = scaled[lo:hi] @ w.T
        best = max(best, float(np.abs(block).max()))
    return best


def write_spectrum_csv(path, spec: SpectrumResult) -> None:
    lines = ["index,singular_value"]
    for i, s in enumerate(spec.singulars):
        lines.append(f"{i},{float(s)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def esd_histogram(spec: SpectrumResult, edges: np.ndarray) -> np.ndarray:
    """Counts of the symmetrized spectrum {+-s_j} over the given bin edges."""
    sym = np.concatenate([-spec.singulars, spec.singulars])
    counts, _ = np.histogram(sym, bins=edges)
    return counts


def write_esd_histogram_csv(path, spec: SpectrumResult, edges: Sequence[float]) -> None:
    edges = np.asarray(edges, dtype=float)
    counts = esd_histogram(spec, edges)
    lines = ["bin_left,bin_right,count"]
    for i, c in enumerate(counts):
        lines.append(f"{float(edges[i])!r},{float(edges[i + 1])!r},{int(c)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
