"""Quadrature rules: Gauss-Legendre/Jacobi, graded composite rules, sphere
rules for S^(N-1) with N <= 3, and a polar-coordinate integrator for balls
contained in the unit ball.

The ball integrator is built around one idea: put the origin of polar
coordinates at the (possible) singular point, so the Jacobian rho^(N-1)
cancels the kernel singularity, and grade the 1-D rules geometrically toward
every remaining endpoint singularity.  Distances to the singular point and
to the unit sphere are handed to the integrand directly, computed without
cancellation, so nodes 1e-25 away from a singularity still evaluate
accurately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError
from .special import log_gamma, sphere_measure

__all__ = [
    "QuadratureRule",
    "gauss_legendre",
    "gauss_jacobi",
    "graded_unit_rule",
    "adaptive_1d",
    "sphere_rule",
    "integrate_ball_piece",
    "adaptive_levels",
    "ball_integrate",
    "SCHEDULE",
]

SIGMA = 0.15
# (points per panel, max geometric levels) per refinement step
SCHEDULE = ((8, 8), (12, 12), (16, 17), (22, 24), (30, 32), (40, 40))
_CHUNK = 40000


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    domain: str = "interval"

    def __len__(self):
        return len(self.weights)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=128)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int) -> QuadratureRule:
    if not (1 <= n <= 512):
        raise DomainError(f"Gauss-Legendre size must be in [1, 512], got {n}")
    x, w = _leggauss(int(n))
    return QuadratureRule(x, w, "interval")


@lru_cache(maxsize=256)
def _jacobi(n: int, alpha: float, beta: float):
    k = np.arange(n, dtype=float)
    ab = alpha + beta
    diag = np.empty(n)
    diag[0] = (beta - alpha) / (ab + 2.0)
    if n > 1:
        kk = k[1:]
        diag[1:] = (beta**2 - alpha**2) / ((2 * kk + ab) * (2 * kk + ab + 2.0))
    off = np.empty(max(n - 1, 0))
    if n > 1:
        off[0] = 4.0 * (1 + alpha) * (1 + beta) / ((2 + ab) ** 2 * (3 + ab))
        kk = k[2:]
        off[1:] = (
            4.0 * kk * (kk + alpha) * (kk + beta) * (kk + ab)
            / ((2 * kk + ab) ** 2 * (2 * kk + ab + 1.0) * (2 * kk + ab - 1.0))
        )
    J = np.diag(diag) + np.diag(np.sqrt(off), 1) + np.diag(np.sqrt(off), -1)
    nodes, vecs = np.linalg.eigh(J)
    log_mu0 = (ab + 1.0) * math.log(2.0) + log_gamma(alpha + 1.0) + log_gamma(beta + 1.0) - log_gamma(ab + 2.0)
    weights = math.exp(log_mu0) * vecs[0, :] ** 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_jacobi(n: int, alpha: float, beta: float) -> QuadratureRule:
    """Rule for int_{-1}^{1} g(x) (1-x)^alpha (1+x)^beta dx (Golub-Welsch)."""
    if alpha <= -1 or beta <= -1:
        raise DomainError(f"Jacobi exponents must exceed -1, got alpha={alpha}, beta={beta}")
    if n < 1:
        raise DomainError(f"rule size must be >= 1, got {n}")
    x, w = _jacobi(int(n), round(float(alpha), 14), round(float(beta), 14))
    return QuadratureRule(x, w, "interval")


# ---------------------------------------------------------------------------
# graded rules on [0, 1]


def _unit_legendre(n):
    x, w = _leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _toward_zero(n, levels, exponent):
    """Composite rule on [0, 1] graded geometrically toward 0.

    Returns nodes and weights for the *full* integrand: the innermost panel
    uses Gauss-Jacobi with weight t^exponent, divided back out of the weights.
    """
    u, wu = _unit_legendre(n)
    ts, ws = [], []
    for k in range(levels):
        lo, hi = SIGMA ** (k + 1), SIGMA**k
        ts.append(lo + (hi - lo) * u)
        ws.append((hi - lo) * wu)
    h = SIGMA**levels
    if exponent is None:
        ts.append(h * u)
        ws.append(h * wu)
    else:
        x, w = _jacobi(n, 0.0, exponent)
        t = 0.5 * h * (x + 1.0)
        ts.append(t)
        ws.append(h * 0.5 ** (exponent + 1.0) * w / (0.5 * (x + 1.0)) ** exponent)
    t = np.concatenate(ts)
    w = np.concatenate(ws)
    order = np.argsort(t)
    return t[order], w[order]


def _norm_exp(e):
    return None if e is None else round(float(e), 12)


@lru_cache(maxsize=1024)
def _graded_cached(n, left_levels, left_exp, right_levels, right_exp):
    left = left_levels > 0 or left_exp is not None
    right = right_levels > 0 or right_exp is not None
    if not left and not right:
        u, w = _unit_legendre(n)
        return u, 1.0 - u, w
    if left and right:
        tl, wl = _toward_zero(n, left_levels, left_exp)
        tr, wr = _toward_zero(n, right_levels, right_exp)
        u = np.concatenate([0.5 * tl, 1.0 - 0.5 * tr[::-1]])
        ubar = np.concatenate([1.0 - 0.5 * tl, 0.5 * tr[::-1]])
        w = np.concatenate([0.5 * wl, 0.5 * wr[::-1]])
        return u, ubar, w
    if left:
        t, w = _toward_zero(n, left_levels, left_exp)
        return t, 1.0 - t, w
    t, w = _toward_zero(n, right_levels, right_exp)
    return 1.0 - t[::-1], t[::-1], w[::-1]


def graded_unit_rule(n, left_levels=0, left_exp=None, right_levels=0, right_exp=None):
    """Rule on [0, 1] as (u, 1-u, weights); 1-u is exact near u = 1."""
    return _graded_cached(int(n), int(left_levels), _norm_exp(left_exp), int(right_levels), _norm_exp(right_exp))


def adaptive_levels(gap_ratio: float, max_levels: int) -> int:
    """Geometric levels needed to resolve a singularity ``gap_ratio`` panel-lengths away."""
    if gap_ratio >= 0.5:
        return 0
    if gap_ratio <= 0:
        return max_levels
    return min(max_levels, int(math.ceil(math.log(gap_ratio) / math.log(SIGMA))) + 1)


# ---------------------------------------------------------------------------
# adaptive 1-D


def _call_vectorized(g, x):
    try:
        y = np.asarray(g(x), dtype=float)
        if y.shape == x.shape:
            return y
    except Exception:
        pass
    return np.array([float(g(float(t))) for t in x])


def adaptive_1d(g, a, b, tol=1e-10, singular_points=(), max_evals=1_000_000):
    """Integrate g over [a, b], grading dyadically-geometrically toward each singular point.

    ``g`` may be vectorized; scalar callables are accepted as well.  The
    estimate is accepted once two successive refinements agree to within
    ``tol`` (absolute, or relative to the integral if that is larger).
    """
    a, b = float(a), float(b)
    if not a < b:
        raise DomainError(f"need a < b, got [{a}, {b}]")
    if not tol > 0:
        raise DomainError("tol must be positive")
    sing = sorted(float(c) for c in singular_points if a <= c <= b)
    cuts = [a] + [c for c in sing if a < c < b] + [b]
    segments = [(lo, hi) for lo, hi in zip(cuts[:-1], cuts[1:]) if hi > lo]
    eps = np.finfo(float).eps

    def cap(point, length, lmax):
        if point == 0.0:
            return lmax
        # innermost Gauss nodes sit ~1e-3 of a panel from the end; keep them
        # distinguishable from the singular point in floating point
        smallest = 4096 * eps * abs(point) / length
        return max(0, min(lmax, int(math.floor(math.log(smallest) / math.log(SIGMA)))))

    evals = 0
    prev = None
    change = math.inf
    for n, lmax in SCHEDULE:
        total = 0.0
        for lo, hi in segments:
            length = hi - lo
            ls = cap(lo, length, lmax) if lo in sing else 0
            rs = cap(hi, length, lmax) if hi in sing else 0
            u, ubar, w = graded_unit_rule(n, ls, None, rs, None)
            x = np.where(u < 0.5, lo + length * u, hi - length * ubar)
            evals += len(x)
            total += length * float(np.dot(w, _call_vectorized(g, x)))
        if evals > max_evals:
            raise ConvergenceError("adaptive_1d exceeded its evaluation budget", "adaptive_1d", {"a": a, "b": b})
        if prev is not None:
            change = abs(total - prev)
            if change <= tol * max(1.0, abs(total)):
                return total
        prev = total
    raise ConvergenceError(
        f"adaptive_1d did not reach tol={tol} (last change {change:.3e})",
        "adaptive_1d",
        {"a": a, "b": b, "tol": tol},
    )


# ---------------------------------------------------------------------------
# sphere rules


@lru_cache(maxsize=64)
def _sphere_rule_cached(N, order):
    if N == 1:
        return np.array([[-1.0], [1.0]]), np.array([1.0, 1.0])
    if N == 2:
        ang = 2.0 * np.pi * np.arange(order) / order
        return np.column_stack([np.cos(ang), np.sin(ang)]), np.full(order, 2.0 * np.pi / order)
    if N == 3:
        z, wz = _leggauss(order)
        m = 2 * order
        phi = 2.0 * np.pi * (np.arange(m) + 0.5) / m
        rho = np.sqrt(1.0 - z**2)
        nodes = np.column_stack(
            [np.outer(rho, np.cos(phi)).ravel(), np.outer(rho, np.sin(phi)).ravel(), np.repeat(z, m)]
        )
        nodes /= np.linalg.norm(nodes, axis=1)[:, None]
        weights = np.repeat(wz, m) * (2.0 * np.pi / m)
        return nodes, weights
    raise DomainError(f"sphere rules are only provided for N in {{1, 2, 3}}, got N={N}")


def sphere_rule(N: int, order: int = 32) -> QuadratureRule:
    """Product rule on S^(N-1): two points (N=1), equispaced circle (N=2),
    Gauss-Legendre in cos(polar) x equispaced azimuth (N=3)."""
    if order < 1:
        raise DomainError("sphere rule order must be >= 1")
    nodes, weights = _sphere_rule_cached(int(N), int(order))
    return QuadratureRule(nodes, weights, "sphere")


# ---------------------------------------------------------------------------
# polar integration over balls inside B_1


def _frame(pole):
    """Orthonormal basis (pole, e1, e2) of R^3."""
    k = int(np.argmin(np.abs(pole)))
    helper = np.zeros(3)
    helper[k] = 1.0
    e1 = helper - pole * np.dot(helper, pole)
    e1 /= np.linalg.norm(e1)
    return pole, e1, np.cross(pole, e1)


def _directions(N, pole, phi_max, n, pole_levels, max_levels, max_exp, azimuth):
    """Directions about ``pole`` with polar angle in [0, phi_max].

    Returns (directions, weights, cos(phi), sin(phi/2)^2) with the surface
    measure folded into the weights.
    """
    if N == 1:
        if phi_max < np.pi:
            return pole[None, :], np.ones(1), np.ones(1), np.zeros(1)
        return np.stack([pole, -pole]), np.ones(2), np.array([1.0, -1.0]), np.array([0.0, 1.0])
    u, ubar, w = graded_unit_rule(n, pole_levels, None, max_levels, max_exp)
    phi = phi_max * u
    if phi_max == np.pi / 2:
        cphi = np.sin(phi_max * ubar)
    else:
        cphi = np.cos(phi)
    sphi = np.sin(phi)
    sh2 = np.sin(0.5 * phi) ** 2
    w = phi_max * w
    if N == 2:
        perp = np.array([-pole[1], pole[0]])
        d_plus = cphi[:, None] * pole + sphi[:, None] * perp
        d_minus = cphi[:, None] * pole - sphi[:, None] * perp
        return (
            np.concatenate([d_plus, d_minus]),
            np.concatenate([w, w]),
            np.concatenate([cphi, cphi]),
            np.concatenate([sh2, sh2]),
        )
    if N == 3:
        p, e1, e2 = _frame(pole)
        alpha = 2.0 * np.pi * (np.arange(azimuth) + 0.5) / azimuth
        ring = np.outer(np.cos(alpha), e1) + np.outer(np.sin(alpha), e2)
        dirs = cphi[:, None, None] * p + sphi[:, None, None] * ring[None, :, :]
        weights = np.repeat(w * sphi * (2.0 * np.pi / azimuth), azimuth)
        return (
            dirs.reshape(-1, 3),
            weights,
            np.repeat(cphi, azimuth),
            np.repeat(sh2, azimuth),
        )
    raise DomainError(f"ball integration is only provided for N in {{1, 2, 3}}, got N={N}")


def _unit_roots(p, ap, b0):
    """Distances R (forward) and R' (backward) from p to the unit sphere along a ray."""
    sq = np.sqrt(b0 * b0 + ap)
    with np.errstate(divide="ignore", invalid="ignore"):
        fwd = np.where(b0 > 0, ap / (sq + b0), sq - b0)
        bwd = np.where(b0 < 0, ap / (sq - b0), sq + b0)
    return np.nan_to_num(fwd), np.nan_to_num(bwd)


def _axisymmetric(point, center):
    if np.linalg.norm(center) == 0.0:
        return True
    c = np.cross(point, center)
    return float(np.linalg.norm(c)) <= 1e-14 * max(1.0, float(np.linalg.norm(point)))


def integrate_ball_piece(
    N,
    center,
    radius,
    point,
    integrand,
    *,
    level_index=2,
    point_singular=True,
    point_exponent=None,
    boundary_exponent=None,
    hemisphere_exponent=None,
    axisymmetric=None,
    one_minus_point_norm2=None,
):
    """Integrate ``integrand(y, dist, ay)`` over the ball B_radius(center) in B_1.

    ``dist`` is |y - point| and ``ay`` is 1 - |y|^2; both are supplied
    accurately, so kernels should use them rather than recomputing from y.

    Exponent hints describe the leading algebraic behaviour of the integrand
    times the polar Jacobian: ``point_exponent`` as dist -> 0,
    ``boundary_exponent`` in the distance to the unit sphere, and
    ``hemisphere_exponent`` in the angle to the tangent plane when ``point``
    sits on the unit sphere.  They sharpen the innermost panels only;
    correctness does not depend on them.
    """
    n, lmax = SCHEDULE[level_index]
    point = np.asarray(point, dtype=float).reshape(N)
    center = np.asarray(center, dtype=float).reshape(N)
    radius = float(radius)
    pn = float(np.linalg.norm(point))
    cn = float(np.linalg.norm(center))
    ap = (1.0 - pn) * (1.0 + pn) if one_minus_point_norm2 is None else float(one_minus_point_norm2)
    unit_piece = cn == 0.0 and radius == 1.0
    if cn + radius > 1.0 + 1e-14:
        raise DomainError("integration ball must lie inside the closed unit ball")
    on_sphere = ap <= 0.0 or abs(pn - 1.0) < 1e-15
    if on_sphere:
        ap = 0.0
    if axisymmetric is None:
        axisymmetric = _axisymmetric(point, center) if N == 3 else True
    azimuth = 1 if axisymmetric else max(8, 2 * n)
    diff = point - center
    d = float(np.linalg.norm(diff))
    gap_unit = max(1.0 - cn - radius, 0.0)

    if on_sphere and unit_piece:
        mode = "hemisphere"
    elif d < radius and not on_sphere:
        mode = "inside"
    else:
        mode = "outside"

    if mode == "hemisphere":
        pole = -point / pn
        dirs, dw, cphi, _ = _directions(N, pole, np.pi / 2, n, 0, lmax, hemisphere_exponent, azimuth)
        u, ubar, rw = graded_unit_rule(
            n, lmax if point_singular else 0, point_exponent if point_singular else None, lmax, boundary_exponent
        )
    elif mode == "inside":
        if d > 0:
            pole = diff / d
        elif cn > 0:
            pole = center / cn
        else:
            pole = np.eye(N)[0] if pn == 0 else point / pn
        # ray lengths vary fastest for nearly tangential rays, over an angle
        # of order sqrt(radius^2 - d^2) / radius
        tangent_levels = adaptive_levels(math.sqrt((radius - d) * (radius + d)) / radius, lmax)
        if tangent_levels > 0 and N > 1:
            fwd = _directions(N, pole, np.pi / 2, n, 0, tangent_levels, None, azimuth)
            bwd = _directions(N, -pole, np.pi / 2, n, 0, tangent_levels, None, azimuth)
            dirs = np.concatenate([fwd[0], bwd[0]])
            dw = np.concatenate([fwd[1], bwd[1]])
        else:
            dirs, dw, _, _ = _directions(N, pole, np.pi, n, 0, 0, None, azimuth)
        if unit_piece:
            right_levels, right_exp = lmax, boundary_exponent
        else:
            right_levels, right_exp = adaptive_levels(gap_unit / (2 * radius), lmax), None
        u, ubar, rw = graded_unit_rule(
            n,
            lmax if point_singular else 0,
            point_exponent if point_singular else None,
            right_levels,
            right_exp,
        )
    else:
        pole = diff / d if d > 0 else np.eye(N)[0]
        gap = d - radius
        pole_levels = adaptive_levels(gap / radius, lmax)
        dirs, dw, cphi, sh2 = _directions(N, pole, np.pi, n, pole_levels, 0, None, azimuth)
        right = adaptive_levels(min(gap, gap_unit) / radius, lmax)
        u, ubar, rw = graded_unit_rule(n, 0, None, right, None)

    total = 0.0
    m = len(dw)
    step = max(1, _CHUNK // len(u))
    for start in range(0, m, step):
        D = dirs[start : start + step]
        W = dw[start : start + step]
        if mode == "hemisphere":
            # chord length 2 cos(phi) taken from the accurate polar cosine
            R = 2.0 * cphi[start : start + step]
            Rb = np.zeros_like(R)
        elif mode == "inside":
            R, Rb = _unit_roots(point, ap, D @ point)
        if mode in ("hemisphere", "inside"):
            if mode == "hemisphere" or unit_piece:
                L = R
            else:
                b = D @ diff
                q = (radius - d) * (radius + d)
                sq = np.sqrt(b * b + q)
                L = np.where(b > 0, q / (sq + b), sq - b)
            rho = L[:, None] * u[None, :]
            if mode == "hemisphere" or unit_piece:
                to_end = L[:, None] * ubar[None, :]
            else:
                to_end = R[:, None] - rho
            ay = to_end * (Rb[:, None] + rho)
            y = point[None, None, :] + rho[:, :, None] * D[:, None, :]
            jac = rho ** (N - 1) if N > 1 else np.ones_like(rho)
            vals = integrand(y, rho, ay)
            total += float(np.sum(W * L * ((vals * jac) @ rw)))
        else:
            s2 = sh2[start : start + step]
            t = radius * u
            d_minus_t = (d - radius) + radius * ubar
            dist = np.sqrt(d_minus_t[None, :] ** 2 + 4.0 * d * t[None, :] * s2[:, None])
            y = center[None, None, :] + t[None, :, None] * D[:, None, :]
            if cn == 0.0:
                ay = np.broadcast_to((1.0 - t) * (1.0 + t), dist.shape)
            else:
                cdot = D @ center
                ay = (1.0 - cn) * (1.0 + cn) - 2.0 * t[None, :] * cdot[:, None] - t[None, :] ** 2
            jac = t ** (N - 1) if N > 1 else np.ones_like(t)
            vals = integrand(y, dist, ay)
            total += float(np.sum(W * radius * ((vals * jac[None, :]) @ rw)))
    return total


def adaptive_schedule(fn, tol, operation="integral", params=None, start=0, atol=1e-300):
    """Run ``fn(level_index)`` on the refinement schedule until two successive
    values agree to ``tol`` relative (or ``atol`` absolute)."""
    prev = None
    val = None
    for idx in range(start, len(SCHEDULE)):
        if val is not None:
            prev = val
        val = fn(idx)
        if not math.isfinite(val):
            break
        if prev is not None and abs(val - prev) <= max(tol * abs(val), atol):
            return val
    raise ConvergenceError(
        f"{operation}: no convergence to tol={tol} (last two estimates {prev!r}, {val!r})",
        operation,
        params,
    )


def ball_integrate(
    params,
    g,
    tol=1e-8,
    interior_singularity=None,
    *,
    point_exponent=None,
    boundary_exponent=None,
    axisymmetric=False,
    boundary_aware=False,
):
    """Integrate g over B_1 in R^N with a polar product rule.

    Without a singular point, polar coordinates are centred at the origin; a
    declared interior singularity becomes the polar origin instead, which
    cancels algebraic point singularities through the Jacobian.  When
    ``boundary_aware`` is set, g is called as g(y, 1 - |y|^2) with the second
    argument computed without cancellation.
    """
    N = params.N
    if N > 3:
        raise DomainError(f"ball integration is only provided for N <= 3, got N={N}")
    if boundary_aware:
        def integrand(y, dist, ay):
            return np.asarray(g(y, ay), dtype=float)
    else:
        def integrand(y, dist, ay):
            return np.asarray(g(y), dtype=float)

    singular = interior_singularity is not None
    point = np.zeros(N) if not singular else np.asarray(interior_singularity, dtype=float).reshape(N)
    if singular and np.linalg.norm(point) >= 1.0:
        raise DomainError("interior singularity must lie strictly inside the unit ball")

    def run(idx):
        return integrate_ball_piece(
            N,
            np.zeros(N),
            1.0,
            point,
            integrand,
            level_index=idx,
            point_singular=singular,
            point_exponent=point_exponent,
            boundary_exponent=boundary_exponent,
            axisymmetric=axisymmetric or N < 3,
        )

    return adaptive_schedule(run, tol, "ball_integrate", {"N": N, "tol": tol})


def sphere_integral(N, values_fn, order=32) -> float:
    """Integrate a function of unit vectors over S^(N-1) with ``sphere_rule``."""
    rule = sphere_rule(N, order)
    return rule.integrate(values_fn(rule.nodes))


def check_sphere_rule(rule: QuadratureRule, N: int) -> float:
    """Relative defect of the total weight against the sphere measure."""
    return abs(rule.weights.sum() - sphere_measure(N)) / sphere_measure(N)
