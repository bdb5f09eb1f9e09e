"""Green, Martin and Poisson kernels of the unit ball and the moments T_{N,tau}."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError, DomainError
from .special import (
    LogBranch,
    Normalization,
    ProblemParams,
    green_tail_integral,
    kappa,
    martin_scale,
    sphere_measure,
)

__all__ = [
    "COINCIDENCE_TOL",
    "r0",
    "green",
    "green_parts",
    "martin",
    "martin_parts",
    "martin_from_green_limit",
    "poisson",
    "t_moment",
]

COINCIDENCE_TOL = 1e-14


def _point(x, N=None, name="x"):
    p = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if N is not None and p.size != N:
        raise DomainError(f"{name} must have {N} coordinates, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise DomainError(f"{name} must be finite")
    return p


def _one_minus_norm2(p):
    n = float(np.linalg.norm(p))
    return (1.0 - n) * (1.0 + n), n


def r0(x, y) -> float:
    """(1-|x|^2)(1-|y|^2)/|x-y|^2."""
    x = _point(x)
    y = _point(y, x.size, "y")
    dist = float(np.linalg.norm(x - y))
    if dist < COINCIDENCE_TOL:
        raise DomainError("r0 is undefined for coincident points")
    ax, _ = _one_minus_norm2(x)
    ay, _ = _one_minus_norm2(y)
    return max(ax, 0.0) * max(ay, 0.0) / (dist * dist)


def green_parts(N: int, s: float, dist, ax, ay, log_branch=LogBranch.INTEGRAL):
    """Green function from |x-y| and the factors 1-|x|^2, 1-|y|^2 (arrays broadcast)."""
    dist = np.asarray(dist, dtype=float)
    prod = np.maximum(np.asarray(ax, dtype=float), 0.0) * np.maximum(np.asarray(ay, dtype=float), 0.0)
    k = kappa(N, s)
    if abs(2.0 * s - N) <= 1e-12 and LogBranch(log_branch) is LogBranch.PRINTED:
        # 1 - x.y = (|x-y|^2 + (1-|x|^2) + (1-|y|^2)) / 2
        one_minus_dot = 0.5 * (dist * dist + np.asarray(ax) + np.asarray(ay))
        return k * np.log((one_minus_dot + np.sqrt(prod)) / dist)
    rr = prod / (dist * dist)
    tail = green_tail_integral(N, s, rr)
    return k * dist ** (2.0 * s - N) * tail


def green(params: ProblemParams, x, y) -> float:
    """G_s(x, y) on the unit ball; x in the closed ball, y in the open ball."""
    N = params.N
    x = _point(x, N)
    y = _point(y, N, "y")
    ax, nx = _one_minus_norm2(x)
    ay, ny = _one_minus_norm2(y)
    if nx > 1.0 + 1e-14 or ny > 1.0 + 1e-14:
        raise DomainError("green requires both points in the closed unit ball")
    dist = float(np.linalg.norm(x - y))
    if dist < COINCIDENCE_TOL:
        raise DomainError(f"green is singular at x = y (|x-y| = {dist:.3e})")
    return float(green_parts(N, params.s, dist, max(ax, 0.0), max(ay, 0.0), params.log_branch))


def martin_parts(params: ProblemParams, dist, ay):
    """Martin kernel from |theta - y| and 1 - |y|^2."""
    ay = np.maximum(np.asarray(ay, dtype=float), 0.0)
    return martin_scale(params) * ay**params.s / np.asarray(dist, dtype=float) ** params.N


def _unit(theta, N):
    t = _point(theta, N, "theta")
    if abs(float(np.linalg.norm(t)) - 1.0) > 1e-12:
        raise DomainError("theta must be a unit vector")
    return t


def martin(params: ProblemParams, y, theta) -> float:
    """nu 2 kappa / s (1-|y|^2)^s / |theta - y|^N."""
    N = params.N
    y = _point(y, N, "y")
    theta = _unit(theta, N)
    ay, ny = _one_minus_norm2(y)
    if ny >= 1.0:
        raise DomainError("martin requires |y| < 1")
    return float(martin_parts(params, np.linalg.norm(theta - y), ay))


def martin_from_green_limit(params: ProblemParams, y, theta, k_max: int = 18, rtol: float = 1e-3) -> float:
    """GreenLimit Martin kernel as the limit of 2 G(y, z) / (1 - |z|^2)^s, z -> theta.

    Samples z_k = (1 - 2^-k) theta for k = 4..k_max and Richardson-extrapolates
    in powers of 2^-k.
    """
    if k_max < 4:
        raise DomainError("k_max must be at least 4")
    N, s = params.N, params.s
    y = _point(y, N, "y")
    theta = _unit(theta, N)
    ay, ny = _one_minus_norm2(y)
    if ny >= 1.0:
        raise DomainError("martin_from_green_limit requires |y| < 1")
    samples = []
    for k in range(4, k_max + 1):
        eps = 2.0**-k
        z = (1.0 - eps) * theta
        az = eps * (2.0 - eps)
        dist = float(np.linalg.norm(z - y))
        g = float(green_parts(N, s, dist, az, ay, params.log_branch))
        samples.append(2.0 * g / az**s)
    # Richardson table; the error expands in integer powers of 2^-k
    table = [samples]
    for j in range(1, min(6, len(samples))):
        prev = table[-1]
        f = 2.0**j
        table.append([(f * prev[i + 1] - prev[i]) / (f - 1.0) for i in range(len(prev) - 1)])
    best = table[-1]
    if len(best) >= 2:
        a, b = best[-2], best[-1]
    else:
        a, b = table[-2][-2], table[-2][-1]
    if abs(b - a) > rtol * abs(b):
        raise ConvergenceError(
            f"martin_from_green_limit: extrapolants {a!r}, {b!r} differ by more than {rtol}",
            "martin_from_green_limit",
            {"N": N, "s": s, "k_max": k_max},
        )
    return float(b)


def poisson(x, theta, N: int) -> float:
    """Classical Poisson kernel of the unit ball."""
    x = _point(x, N)
    theta = _unit(theta, N)
    ax, nx = _one_minus_norm2(x)
    if nx >= 1.0:
        raise DomainError("poisson requires |x| < 1")
    return float(ax / np.linalg.norm(theta - x) ** N / sphere_measure(N))


def _t_moment_polar(N, tau, r, order):
    if N == 2:
        phi = 2.0 * np.pi * np.arange(order) / order
        vals = (1.0 - 2.0 * r * np.cos(phi) + r * r) ** (0.5 * tau)
        return float(vals.mean())
    # N == 3: Gauss-Legendre in the polar cosine; the integrand does not
    # depend on azimuth once xi is rotated onto the pole
    z, w = np.polynomial.legendre.leggauss(order)
    vals = np.maximum((1.0 - r) ** 2 + 2.0 * r * (1.0 - z), 0.0) ** (0.5 * tau)
    return float(0.5 * np.dot(w, vals))


def t_moment(N: int, tau: float, xi, rtol: float = 1e-14) -> float:
    """Mean of |theta - xi|^tau over the unit sphere S^(N-1)."""
    if not tau > 0:
        raise DomainError("tau must be positive")
    xi = _point(xi, N, "xi")
    r = float(np.linalg.norm(xi))
    if r >= 1.0:
        raise DomainError("t_moment requires |xi| < 1")
    if N == 1:
        x = float(xi[0])
        return 0.5 * ((1.0 - x) ** tau + (1.0 + x) ** tau)
    if N not in (2, 3):
        raise DomainError(f"t_moment is provided for N in {{1, 2, 3}}, got N={N}")
    if r == 0.0:
        return 1.0
    order = 32
    prev = _t_moment_polar(N, tau, r, order)
    while order < 4096:
        order *= 2
        cur = _t_moment_polar(N, tau, r, order)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    return cur
