"""Closed-form analytics of the symmetrized Marchenko-Pastur law.

Provides the density g_y, its CDF, the Stieltjes transform S_y(z), the
auxiliary function b(z), the spectral-domain grids, and the deterministic
error envelopes (Gamma_n, d, d_n and the two-branch prior bound) used by the
local-law experiments.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ParameterError, QuadratureError

D_MU = "d_mu"
D_A0 = "d_a0"


@dataclass(frozen=True)
class ComplexPoint:
    """A point z = u + iv strictly in the upper half-plane."""

    u: float
    v: float

    def __post_init__(self):
        if not (self.v > 0.0):
            raise ParameterError(f"spectral parameter needs v > 0, got v={self.v!r}")

    @property
    def z(self) -> complex:
        return complex(self.u, self.v)


def _as_complex(z: "ComplexPoint | complex") -> complex:
    zc = z.z if isinstance(z, ComplexPoint) else complex(z)
    if not (zc.imag > 0.0):
        raise ParameterError(f"spectral parameter must have positive imaginary part, got {zc}")
    return zc


def _check_y(y: float) -> float:
    if not (0.0 < y < 1.0):
        raise ParameterError(f"aspect ratio y must lie in (0, 1), got {y!r}")
    return float(y)


def mp_edges(y: float) -> tuple[float, float]:
    """Support edges (a, b) = (1 - sqrt(y), 1 + sqrt(y)) of the symmetrized law."""
    _check_y(y)
    r = math.sqrt(y)
    return 1.0 - r, 1.0 + r


def stieltjes_mp(z: "ComplexPoint | complex", y: float) -> complex:
    """Stieltjes transform S_y(z) of the symmetrized Marchenko-Pastur law.

    S solves y*S^2 + (z - (1-y)/z)*S + 1 = 0; of the two roots we return the
    one with positive imaginary part (the Herglotz branch).  The roots are
    computed by the stable quadratic recipe (large root first, small root via
    the product of roots 1/y) so the residual stays at machine precision.
    """
    _check_y(y)
    zc = _as_complex(z)
    w = zc - (1.0 - y) / zc
    disc = cmath.sqrt(w * w - 4.0 * y)
    # avoid cancellation: align the square root with w before adding
    if (w.real * disc.real + w.imag * disc.imag) < 0.0:
        disc = -disc
    big = -(w + disc) / (2.0 * y)
    small = 1.0 / (y * big)
    return big if big.imag > 0.0 else small


def b_function(z: "ComplexPoint | complex", y: float) -> complex:
    """b(z) = z - (1-y)/z + 2*y*S_y(z)  (equivalently -1/S + y*S)."""
    zc = _as_complex(z)
    return zc - (1.0 - y) / zc + 2.0 * y * stieltjes_mp(zc, y)


@dataclass(frozen=True)
class MPLawEval:
    """Analytic quantities of the symmetrized MP law at one complex point."""

    z: complex
    y: float
    S: complex
    b: complex
    a_edge: float
    b_edge: float


def mp_eval(z: "ComplexPoint | complex", y: float) -> MPLawEval:
    zc = _as_complex(z)
    S = stieltjes_mp(zc, y)
    a, b_edge = mp_edges(y)
    return MPLawEval(z=zc, y=float(y), S=S, b=zc - (1.0 - y) / zc + 2.0 * y * S,
                     a_edge=a, b_edge=b_edge)


def mp_density(x: float, y: float) -> float:
    """Symmetrized MP density g_y(x) = sqrt((x^2-a^2)(b^2-x^2)) / (2 pi y |x|)."""
    a, b = mp_edges(y)
    x2 = x * x
    if x2 <= a * a or x2 >= b * b:
        return 0.0
    return math.sqrt((x2 - a * a) * (b * b - x2)) / (2.0 * math.pi * y * abs(x))


def mp_cdf(x: float, y: float, tol: float = 1e-10) -> float:
    """CDF of the symmetrized MP law by adaptive quadrature of g_y.

    Uses the symmetry G(-x) = 1 - G(x) and G == 1/2 on the gap [-a, a].
    Raises QuadratureError (with the achieved bound) when the integrator
    cannot certify the requested tolerance.
    """
    if not (tol > 0.0):
        raise ParameterError(f"tol must be positive, got {tol!r}")
    a, b = mp_edges(y)
    if x < 0.0:
        return 1.0 - mp_cdf(-x, y, tol)
    if x <= a:
        return 0.5
    if x >= b:
        return 1.0
    val, err = quad(mp_density, a, x, args=(y,), epsabs=tol * 0.1, epsrel=1e-13, limit=200)
    if err > tol:
        raise QuadratureError(
            f"mp_cdf could not reach tol={tol}; achieved error bound {err}", achieved=err
        )
    return 0.5 + val


def gamma_n(n: int, p: float, v: float, C0: float) -> float:
    """Simplified error envelope Gamma_n = C0 * log(n) * (1/(n v) + 1/(n p)).

    This is the form valid inside D_mu, where |b(z)| is bounded below.
    """
    if not isinstance(n, int) or n < 2:
        raise ParameterError(f"n must be an integer >= 2, got {n!r}")
    if not (p > 0.0 and v > 0.0):
        raise ParameterError(f"p and v must be positive, got p={p!r}, v={v!r}")
    if C0 < 0.0:
        raise ParameterError(f"C0 must be nonnegative, got {C0!r}")
    return C0 * math.log(n) * (1.0 / (n * v) + 1.0 / (n * p))


def gamma_n_theorem1(z: "ComplexPoint | complex", n: int, p: float, C0: float, y: float) -> float:
    """Envelope with the min term: 2 C0 log(n) (1/(nv) + min(1/(np|b|), 1/sqrt(np)))."""
    if not isinstance(n, int) or n < 2:
        raise ParameterError(f"n must be an integer >= 2, got {n!r}")
    if not (p > 0.0):
        raise ParameterError(f"p must be positive, got {p!r}")
    zc = _as_complex(z)
    v = zc.imag
    absb = abs(b_function(zc, y))
    if absb > 0.0:
        min_term = min(1.0 / (n * p * absb), 1.0 / math.sqrt(n * p))
    else:
        min_term = 1.0 / math.sqrt(n * p)
    return 2.0 * C0 * math.log(n) * (1.0 / (n * v) + min_term)


def d_function(z: "ComplexPoint | complex", y: float) -> float:
    """d(z) = Im b(z) / |b(z)|."""
    b = b_function(z, y)
    return b.imag / abs(b)


def d_n_function(z: "ComplexPoint | complex", n: int, p: float, y: float) -> float:
    """d_n(z) = (1/(nv)) (d(z) + log(n)/(nv |b|)) + 1/(np |b|)."""
    zc = _as_complex(z)
    v = zc.imag
    b = b_function(zc, y)
    absb = abs(b)
    d = b.imag / absb
    return (d + math.log(n) / (n * v * absb)) / (n * v) + 1.0 / (n * p * absb)


def prior_bound_tn(z: "ComplexPoint | complex", n: int, p: float, C0: float, y: float) -> float:
    """Two-branch deterministic bound on |Lambda_n|, evaluated literally.

    The branch indicator compares |b(z)| against the min-form envelope; the
    |b| >= Gamma branch is driven by d_n(z), the other branch by powers of
    the envelope itself.  Both indicators are evaluated with non-strict
    inequalities as displayed, so at exact equality the two branches add.
    """
    zc = _as_complex(z)
    v = zc.imag
    gam = gamma_n_theorem1(zc, n, p, C0, y)
    absb = abs(b_function(zc, y))
    nv = n * v
    out = 0.0
    if absb >= gam:
        dn = d_n_function(zc, n, p, y)
        out += dn + dn ** 0.75 / nv ** 0.25 + dn ** 0.5 / nv ** 0.5
    if absb <= gam:
        out += math.sqrt(gam / nv) + math.sqrt(gam) * (math.sqrt(gam) / math.sqrt(nv)
                                                       + 1.0 / math.sqrt(n * p))
    return out


@dataclass(frozen=True)
class BoundSpec:
    """All deterministic envelopes at one (z, n, p, C0) configuration."""

    C0: float
    gamma_n: float
    d: float
    d_n: float
    t_script: float


def bound_eval(z: "ComplexPoint | complex", n: int, p: float, C0: float, y: float) -> BoundSpec:
    zc = _as_complex(z)
    return BoundSpec(
        C0=float(C0),
        gamma_n=gamma_n(n, p, zc.imag, C0),
        d=d_function(zc, y),
        d_n=d_n_function(zc, n, p, y),
        t_script=prior_bound_tn(zc, n, p, C0, y),
    )


@dataclass(frozen=True)
class DomainSpec:
    """Rectangular scan domain in the upper half-plane.

    kind "d_mu": the band 1 - sqrt(y) + mu <= |u| <= 1 + sqrt(y) - mu, fixed in v.
    kind "d_a0": the wider band (1 - sqrt(y) - v)_+ <= |u| <= 1 + sqrt(y) + v.
    In both cases v runs log-spaced from v0 = a0 (log n)^4 / n up to V.
    """

    kind: str
    a0: float
    V: float
    n: int
    grid_u: int
    grid_v: int
    mu: float = 0.0

    def __post_init__(self):
        if self.kind not in (D_MU, D_A0):
            raise ParameterError(f"unknown domain kind {self.kind!r}")
        if not (self.a0 > 0.0):
            raise ParameterError(f"a0 must be positive, got {self.a0!r}")
        if not (self.V > 0.0):
            raise ParameterError(f"V must be positive, got {self.V!r}")
        if not isinstance(self.n, int) or self.n < 2:
            raise ParameterError(f"n must be an integer >= 2, got {self.n!r}")
        if self.grid_u < 1 or self.grid_v < 1:
            raise ParameterError("grid_u and grid_v must be >= 1")
        if self.kind == D_MU and not (self.mu > 0.0):
            raise ParameterError(f"d_mu domain needs mu > 0, got {self.mu!r}")

    @property
    def v0(self) -> float:
        return self.a0 * math.log(self.n) ** 4 / self.n


def _u_band(spec: DomainSpec, y: float, v: float) -> tuple[float, float]:
    r = math.sqrt(y)
    if spec.kind == D_MU:
        lo, hi = 1.0 - r + spec.mu, 1.0 + r - spec.mu
    else:
        lo, hi = max(1.0 - r - v, 0.0), 1.0 + r + v
    if lo > hi:
        raise ParameterError(
            f"empty u-band for kind={spec.kind}, mu={spec.mu}, y={y}: [{lo}, {hi}]"
        )
    return lo, hi


def domain_grid(spec: DomainSpec, y: float) -> list[ComplexPoint]:
    """Grid points covering both sign bands of the domain.

    v is log-spaced on [v0, V]; u is uniform within each band.  Points are
    emitted v-ascending, negative band before positive, u ascending, which
    fixes a deterministic serialization order.
    """
    _check_y(y)
    v0 = spec.v0
    if v0 > spec.V:
        raise ParameterError(
            f"v0 = a0 log^4(n)/n = {v0:.6g} exceeds V = {spec.V}; "
            "reduce a0 or raise V for this n"
        )
    vs = np.geomspace(v0, spec.V, spec.grid_v)
    points: list[ComplexPoint] = []
    for v in vs:
        lo, hi = _u_band(spec, y, float(v))
        us = np.linspace(lo, hi, spec.grid_u)
        for u in us[::-1]:
            points.append(ComplexPoint(-float(u), float(v)))
        for u in us:
            points.append(ComplexPoint(float(u), float(v)))
    return points


def write_grid_csv(path, points: Sequence[ComplexPoint], y: float, n: int, p: float,
                   C0: float) -> None:
    """Export law/envelope evaluations over a grid as CSV."""
    lines = ["u,v,ReS,ImS,Reb,Imb,gamma_n,t_script"]
    for pt in points:
        S = stieltjes_mp(pt, y)
        b = b_function(pt, y)
        g = gamma_n(n, p, pt.v, C0)
        t = prior_bound_tn(pt, n, p, C0, y)
        lines.append(",".join(repr(float(x)) for x in
                              (pt.u, pt.v, S.real, S.imag, b.real, b.imag, g, t)))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
