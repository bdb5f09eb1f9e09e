"""Gamma-family functions and the explicit constants of the ball kernels.

Everything downstream (Green and Martin kernels, torsion oracle, boundary
values) is expressed through the few constants defined here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = [
    "INFINITY",
    "Normalization",
    "LogBranch",
    "ProblemParams",
    "log_gamma",
    "gamma",
    "kappa",
    "c_constant",
    "sphere_measure",
    "ball_volume",
    "torsion_constant",
    "martin_scale",
    "green_tail_integral",
]


class _Infinity:
    """Sentinel for an infinite upper limit; never stored as a float."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"


INFINITY = _Infinity()


class Normalization(str, enum.Enum):
    """Convention for the Martin kernel and fractional normal derivatives.

    GREEN_LIMIT is the limit of 2G/(1-|z|^2)^s, i.e. the plain closed-form
    Martin kernel; DELTA_LIMIT is the limit of G/dist(z, boundary)^s.  They
    differ by the factor 2^(s-1).
    """

    GREEN_LIMIT = "GreenLimit"
    DELTA_LIMIT = "DeltaLimit"


class LogBranch(str, enum.Enum):
    """How the Green function is evaluated when N == 2s.

    INTEGRAL uses the general tail-integral formula, which stays finite for
    x != y.  PRINTED uses the closed logarithmic expression with constant
    kappa, which is smaller by a factor 2 at (N, s) = (1, 1/2).
    """

    INTEGRAL = "integral"
    PRINTED = "printed"


_HALF_INTEGER_TOL = 1e-12


@dataclass(frozen=True)
class ProblemParams:
    N: int
    s: float
    normalization: Normalization = Normalization.DELTA_LIMIT
    log_branch: LogBranch = LogBranch.INTEGRAL

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"dimension N must be a positive integer, got {self.N!r}")
        if not (self.s > 0 and math.isfinite(self.s)):
            raise DomainError(f"order s must be positive and finite, got {self.s!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "normalization", Normalization(self.normalization))
        object.__setattr__(self, "log_branch", LogBranch(self.log_branch))

    @property
    def critical(self) -> bool:
        """True on the logarithmic branch N == 2s."""
        return abs(2.0 * self.s - self.N) <= _HALF_INTEGER_TOL

    def with_normalization(self, normalization) -> "ProblemParams":
        return ProblemParams(self.N, self.s, Normalization(normalization), self.log_branch)

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "s": self.s,
            "normalization": self.normalization.value,
            "log_branch": self.log_branch.value,
        }


# Lanczos approximation, g = 7, nine terms.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def log_gamma(x: float) -> float:
    """Natural log of the Gamma function for x > 0."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    shift = 0.0
    while x < 0.5:
        shift -= math.log(x)
        x += 1.0
    z = x - 1.0
    a = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        a += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return shift + _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(a)


def gamma(x: float) -> float:
    return math.exp(log_gamma(x))


def _check_order(s):
    if not s > 0:
        raise DomainError(f"order s must be positive, got {s!r}")


def kappa(N: int, s: float) -> float:
    """Gamma(N/2) / (pi^(N/2) 4^s Gamma(s)^2)."""
    _check_order(s)
    return math.exp(
        log_gamma(N / 2.0) - 0.5 * N * math.log(math.pi) - s * math.log(4.0) - 2.0 * log_gamma(s)
    )


def c_constant(N: int, s: float) -> float:
    """Normalising constant of the singular-integral fractional Laplacian."""
    _check_order(s)
    if abs(s - round(s)) < 1e-12:
        raise DomainError(f"c_constant has a pole at integer s, got s={s!r}")
    g1 = 1.0 - s
    # Gamma(1 - s) may be negative for s > 1; work with sign and magnitude.
    sign = 1.0
    if g1 < 0:
        k = math.ceil(-g1)
        sign = -1.0 if k % 2 else 1.0
        log_abs = log_gamma(g1 + k) - sum(math.log(abs(g1 + j)) for j in range(k))
    else:
        log_abs = log_gamma(g1)
    return sign * s * 4.0**s * math.exp(log_gamma(N / 2.0 + s) - 0.5 * N * math.log(math.pi) - log_abs)


def sphere_measure(N: int) -> float:
    """Surface measure of the unit sphere S^(N-1) in R^N."""
    if N < 1 or int(N) != N:
        raise DomainError(f"N must be a positive integer, got {N!r}")
    # omega_0 = 2, omega_1 = 2 pi, omega_{N+1} = 2 pi omega_{N-1} / N
    w = 2.0 if N % 2 == 1 else 2.0 * math.pi
    for k in range(2 - N % 2, N, 2):
        w *= 2.0 * math.pi / k
    return w


def ball_volume(N: int) -> float:
    return sphere_measure(N) / N


def torsion_constant(N: int, s: float) -> float:
    """gamma_{N,s} with u = gamma (1-|x|^2)^s solving (-Lap)^s u = 1 in B_1."""
    _check_order(s)
    return math.exp(log_gamma(N / 2.0) - s * math.log(4.0) - log_gamma(N / 2.0 + s) - log_gamma(1.0 + s))


def martin_scale(params: ProblemParams) -> float:
    """nu * 2 kappa / s, the Martin kernel prefactor under the chosen normalization."""
    nu = 1.0 if params.normalization is Normalization.GREEN_LIMIT else 2.0 ** (params.s - 1.0)
    return nu * 2.0 * kappa(params.N, params.s) / params.s


# ---------------------------------------------------------------------------
# tail integral  I(r0) = int_0^r0 t^(s-1) (1+t)^(-N/2) dt


_JACOBI_NODES = 28
_SERIES_TERMS = 64


@lru_cache(maxsize=256)
def _head_rule(s: float):
    """Rule for int_0^1 u^(s-1) g(u) du (weight folded in)."""
    from .quadrature import gauss_jacobi

    rule = gauss_jacobi(_JACOBI_NODES, 0.0, s - 1.0)
    u = 0.5 * (rule.nodes + 1.0)
    w = rule.weights * 2.0 ** (-s)
    return u, w


@lru_cache(maxsize=64)
def _legendre_unit(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _head(a: float, c: float, w: np.ndarray) -> np.ndarray:
    """int_0^w t^(a-1) (1+t)^(-c) dt for 0 <= w <= 1, a > 0."""
    u, wt = _head_rule(a)
    vals = (1.0 + np.multiply.outer(w, u)) ** (-c) @ wt
    return np.where(w > 0, w**a * vals, 0.0)


@lru_cache(maxsize=256)
def _series_coefficients(a: float, c: float):
    """Binomial series of (1+v)^(-c) integrated against v^(a-1) on [w, 1/2].

    Returns (C, P, L) with the integral = C - w^a P(w) + L (ln(1/2) - ln w);
    L is nonzero only when a is a nonpositive integer.
    """
    const = 0.0
    poly = np.zeros(_SERIES_TERMS)
    log_coef = 0.0
    coef = 1.0
    for k in range(_SERIES_TERMS):
        p = a + k
        if abs(p) < _HALF_INTEGER_TOL:
            log_coef = coef
        else:
            const += coef * 0.5**p / p
            poly[k] = coef / p
        coef *= -(c + k) / (k + 1.0)
    # np.polyval wants the leading coefficient first
    return const, poly[::-1].copy(), log_coef


def _tail_from(a: float, c: float, w: np.ndarray) -> np.ndarray:
    """int_w^1 v^(a-1) (1+v)^(-c) dv for 0 <= w <= 1 and any real a.

    Used with a = c - s after the substitution v = 1/t; diverges as w -> 0
    unless a > 0.
    """
    out = np.zeros_like(w)
    x, xw = _legendre_unit(24)

    upper = w >= 0.5
    if np.any(upper):
        wu = w[upper]
        span = 1.0 - wu
        v = wu[:, None] + span[:, None] * x[None, :]
        out[upper] = span * ((v ** (a - 1.0) * (1.0 + v) ** (-c)) @ xw)

    lower = ~upper
    if np.any(lower):
        wl = w[lower]
        v = 0.5 + 0.5 * x
        fixed = 0.5 * float(np.sum(xw * v ** (a - 1.0) * (1.0 + v) ** (-c)))
        const, poly, log_coef = _series_coefficients(a, c)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            logw = np.log(wl)
            acc = const - np.exp(a * logw) * np.polyval(poly, wl)
            if log_coef:
                acc += log_coef * (math.log(0.5) - logw)
        out[lower] = fixed + acc
    return out


def _tail_integral_array(N: int, s: float, r0: np.ndarray) -> np.ndarray:
    c = 0.5 * N
    out = np.empty_like(r0)
    small = r0 <= 1.0
    if np.any(small):
        out[small] = _head(s, c, r0[small])
    big = ~small
    if np.any(big):
        base = float(_head(s, c, np.array([1.0]))[0])
        out[big] = base + _tail_from(c - s, c, 1.0 / r0[big])
    return out


def green_tail_integral(N: int, s: float, r0):
    """int_0^r0 t^(s-1) (1+t)^(-N/2) dt.

    ``r0`` is a nonnegative float, an array of them, or ``INFINITY`` (only
    allowed when N > 2s, where the value is the Beta function B(s, N/2 - s)).
    """
    _check_order(s)
    if r0 is INFINITY:
        if N <= 2.0 * s + _HALF_INTEGER_TOL:
            raise DomainError(f"tail integral diverges at r0=+inf for N={N}, s={s} (needs N > 2s)")
        c = 0.5 * N
        return float(_head(s, c, np.array([1.0]))[0] + _tail_from(c - s, c, np.array([0.0]))[0])
    arr = np.asarray(r0, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("r0 must be finite and nonnegative (use INFINITY for +inf)")
    out = _tail_integral_array(N, float(s), np.atleast_1d(arr).ravel()).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out
