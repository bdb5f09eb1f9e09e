"""Checks of the boundary Talenti inequalities, their admissibility conditions
and related comparison statements, each producing a signed-margin report."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConditionNotSatisfied, DomainError, FracTalentiError
from .kernels import t_moment
from .quadrature import sphere_rule
from .solver import (
    SolutionHandle,
    _trace_at,
    default_radial_grid,
    radial_boundary_value,
    radial_solution_profile,
    source_pieces,
    symmetrized_boundary_value,
)
from .sources import (
    BumpSource,
    RadialProfile,
    centered_bump,
    lp_norm,
    measure_not_rearranged,
    rearrange_radial_samples,
    schwarz,
)
from .special import ProblemParams, martin_scale

__all__ = [
    "DEFAULT_TOL",
    "VerificationReport",
    "NoCrossingFound",
    "CrossingInterval",
    "verify_reverse_boundary_talenti",
    "locate_crossing",
    "rho_condition_sides",
    "check_rho_condition",
    "max_admissible_rho",
    "verify_bump_boundary_talenti",
    "verify_green_boundary_talenti",
    "verify_s_gt1",
    "higher_order_condition_sides",
    "check_higher_order_condition",
    "verify_higher_order_bump",
    "verify_mass_concentration",
    "verify_classical_equality",
    "sharpness_sweep",
    "exploratory_sweep",
    "default_trace_rule",
]

DEFAULT_TOL = 1e-7
# measure of {f != f*} above which a strict margin is demanded
STRICT_MEASURE = 1e-6


@dataclass
class VerificationReport:
    """Outcome of one check.  ``margin`` is signed so that positive means the
    claimed inequality holds; ``tol`` applies to ``margin / |rhs|``."""

    claim: str
    lhs: float
    rhs: float
    margin: float
    tol: float
    passed: bool
    normalization: str
    metadata: dict = field(default_factory=dict)

    @property
    def relative_margin(self) -> float:
        return self.margin / abs(self.rhs) if self.rhs else self.margin

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    def csv_row(self) -> list:
        m = self.metadata
        return [
            self.claim,
            m.get("N", ""),
            m.get("s", ""),
            self.normalization,
            repr(float(self.lhs)),
            repr(float(self.rhs)),
            repr(float(self.margin)),
            repr(float(self.tol)),
            "true" if self.passed else "false",
        ]


class NoCrossingFound(FracTalentiError):
    """No grid interval next to r = 1 where u_{f*} < (u_f)^*."""


@dataclass(frozen=True)
class CrossingInterval:
    lower: float
    upper: float
    index: int
    grid_size: int
    refined: bool


def _norm(xi) -> float:
    return float(np.linalg.norm(np.atleast_1d(np.asarray(xi, dtype=float))))


def _echo(params: ProblemParams, **extra) -> dict:
    return {**params.as_dict(), **extra}


def _require_fractional(params: ProblemParams, op: str):
    if not 0 < params.s < 1:
        raise DomainError(f"{op} needs s in (0, 1), got s={params.s}")


def _require_nonzero(f):
    if f.sup <= 0:
        raise DomainError("f must not vanish identically")


def _radial_comparison(claim, params, f, tol, reverse):
    """Shared body of the radial boundary comparisons.

    ``reverse`` True: (u_f)^* >= u_{f*} on the boundary (s < 1); False: the
    opposite direction (s > 1).
    """
    N = params.N
    fs = schwarz(f, N)
    b_f = radial_boundary_value(params, f)
    b_fs = radial_boundary_value(params, fs)
    equality = f.symmetric_decreasing
    diff_measure = measure_not_rearranged(f, N)
    if reverse:
        lhs, rhs = b_fs, b_f
    else:
        lhs, rhs = b_f, b_fs
    margin = rhs - lhs
    rel = margin / abs(rhs) if rhs else margin
    if equality:
        passed = abs(rel) <= tol
    elif diff_measure > STRICT_MEASURE:
        passed = rel > tol
    else:
        passed = rel >= -tol
    meta = _echo(
        params,
        equality_expected=equality,
        measure_f_ne_fstar=diff_measure,
        strict_required=(not equality and diff_measure > STRICT_MEASURE),
        boundary_difference=b_f - b_fs,
    )
    return VerificationReport(claim, lhs, rhs, margin, tol, bool(passed), params.normalization.value, meta)


def verify_reverse_boundary_talenti(params: ProblemParams, f: RadialProfile, tol: float = DEFAULT_TOL):
    """u_{f*}/delta^s <= (u_f)^*/delta^s on the boundary for radial f, s < 1."""
    if params.s >= 1:
        raise DomainError("verify_reverse_boundary_talenti needs s < 1; use verify_s_gt1 for s > 1")
    _require_fractional(params, "verify_reverse_boundary_talenti")
    _require_nonzero(f)
    return _radial_comparison("thm1", params, f, tol, reverse=True)


def verify_s_gt1(params: ProblemParams, f: RadialProfile, tol: float = DEFAULT_TOL):
    """(u_f)^*/delta^s <= u_{f*}/delta^s on the boundary for radial f, s > 1."""
    if params.s <= 1:
        raise DomainError("verify_s_gt1 needs s > 1")
    _require_nonzero(f)
    return _radial_comparison("s-gt1", params, f, tol, reverse=False)


def verify_classical_equality(params: ProblemParams, f: RadialProfile, tol: float = 1e-12):
    """At s = 1 the boundary values of u_f and u_{f*} coincide for radial f."""
    if params.s != 1.0:
        raise DomainError("verify_classical_equality needs s = 1")
    lhs = radial_boundary_value(params, schwarz(f, params.N))
    rhs = radial_boundary_value(params, f)
    margin = rhs - lhs
    passed = abs(margin) <= tol * max(1.0, abs(rhs))
    return VerificationReport(
        "classical", lhs, rhs, margin, tol, bool(passed), params.normalization.value, _echo(params)
    )


# ---------------------------------------------------------------------------
# crossing and mass concentration (interior comparisons for radial f)


def _profiles(params, f, grid, tol):
    N = params.N
    fs = schwarz(f, N)
    u = radial_solution_profile(SolutionHandle(params, f), grid, tol)
    us = radial_solution_profile(SolutionHandle(params, fs), grid, tol)
    return u, us, rearrange_radial_samples(grid, u, N)


def _crossing_on(params, f, grid, tol):
    u, us, rearranged = _profiles(params, f, grid, tol)
    ok = us < rearranged.value_at(grid)
    bad = np.flatnonzero(~ok)
    start = 0 if bad.size == 0 else int(bad[-1]) + 1
    return start


def locate_crossing(params: ProblemParams, f: RadialProfile, grid=None, tol: float = 1e-8) -> CrossingInterval:
    """Largest grid interval (r, 1) on which u_{f*} < (u_f)^* at every node."""
    _require_fractional(params, "locate_crossing")
    if measure_not_rearranged(f, params.N) <= 0:
        raise DomainError("locate_crossing needs f different from its rearrangement")
    grid = default_radial_grid(512) if grid is None else np.asarray(grid, dtype=float)
    start = _crossing_on(params, f, grid, tol)
    refined = False
    if start >= grid.size:
        refined = True
        grid = default_radial_grid(2 * grid.size)
        start = _crossing_on(params, f, grid, tol)
        if start >= grid.size:
            raise NoCrossingFound(f"no crossing found for N={params.N}, s={params.s} on {grid.size} radii")
    return CrossingInterval(float(grid[start]), 1.0, start, int(grid.size), refined)


def _ball_mass(profile: RadialProfile, r: float, N: int) -> float:
    """Integral of a radial step function over B_r, in units of |S^(N-1)|/N."""
    out = []
    bp = profile.breakpoints
    for i, v in enumerate(profile.values):
        a, b = bp[i], min(bp[i + 1], r)
        if b <= a:
            break
        out.append(v * (b**N - a**N))
    return math.fsum(out)


def verify_mass_concentration(
    params: ProblemParams, f: RadialProfile, radii: Sequence[float], grid=None, tol: float = DEFAULT_TOL, quad_tol=1e-8
):
    """int_{B_r} (u_f)^* <= int_{B_r} u_{f*} at each requested r."""
    _require_fractional(params, "verify_mass_concentration")
    N = params.N
    grid = default_radial_grid(256) if grid is None else np.asarray(grid, dtype=float)
    u, us, rearranged = _profiles(params, f, grid, quad_tol)
    edges = np.concatenate([[0.0], 0.5 * (grid[1:] + grid[:-1]), [1.0]])
    star_profile = RadialProfile(tuple(edges), tuple(np.maximum(us, 0.0)))
    worst = None
    rows = []
    for r in radii:
        lhs = _ball_mass(rearranged, float(r), N)
        rhs = _ball_mass(star_profile, float(r), N)
        rel = (rhs - lhs) / abs(rhs) if rhs else rhs - lhs
        rows.append({"r": float(r), "lhs": lhs, "rhs": rhs, "relative_margin": rel})
        if worst is None or rel < worst[2]:
            worst = (lhs, rhs, rel)
    lhs, rhs, rel = worst
    passed = all(row["relative_margin"] >= -tol for row in rows)
    meta = _echo(params, radii=rows, grid_size=int(grid.size))
    return VerificationReport(
        "mass-concentration", lhs, rhs, rhs - lhs, tol, bool(passed), params.normalization.value, meta
    )


# ---------------------------------------------------------------------------
# admissibility conditions for off-centre bumps


def _check_bump_geometry(xi, rho):
    r = _norm(xi)
    if not (r > 0 and 0 < rho < min(r, 1.0 - r)):
        raise DomainError(f"need 0 < rho < min(|xi|, 1-|xi|); got |xi|={r}, rho={rho}")
    return r


def rho_condition_sides(N: int, s: float, xi, rho: float):
    """(lhs, rhs) = ((1-(|xi|-rho)^2)^s, (1 - rho/(1-|xi|))^N)."""
    r = _norm(xi)
    return (1.0 - (r - rho) ** 2) ** s, (1.0 - rho / (1.0 - r)) ** N


def check_rho_condition(N: int, s: float, xi, rho: float) -> bool:
    if not 0 < s < 1:
        raise DomainError("the rho condition needs s in (0, 1)")
    _check_bump_geometry(xi, rho)
    lhs, rhs = rho_condition_sides(N, s, xi, rho)
    return lhs <= rhs


def max_admissible_rho(N: int, s: float, xi, width: float = 1e-10) -> float:
    """Largest rho in (0, min(|xi|, 1-|xi|)) satisfying the rho condition."""
    if not 0 < s < 1:
        raise DomainError("the rho condition needs s in (0, 1)")
    r = _norm(xi)
    if not 0 < r < 1:
        raise DomainError("need 0 < |xi| < 1")
    bound = min(r, 1.0 - r)

    def ok(rho):
        lhs, rhs = rho_condition_sides(N, s, xi, rho)
        return lhs <= rhs

    lo, hi = 0.0, bound
    if ok(hi * (1.0 - 1e-15)):
        return hi
    # lhs grows and rhs shrinks in rho, so the admissible set is an interval
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def higher_order_condition_sides(N: int, s: float, xi, rho: float):
    """(lhs, rhs) = ((1-(|xi|-rho)^2)^s, (1-rho/(1-|xi|))^N (1-rho^2)^(s-1))."""
    r = _norm(xi)
    return (1.0 - (r - rho) ** 2) ** s, (1.0 - rho / (1.0 - r)) ** N * (1.0 - rho * rho) ** (s - 1.0)


def check_higher_order_condition(N: int, s: float, xi, rho: float) -> bool:
    if not 1 < s <= N:
        raise DomainError(f"the higher-order condition needs s in (1, N], got s={s}, N={N}")
    _check_bump_geometry(xi, rho)
    lhs, rhs = higher_order_condition_sides(N, s, xi, rho)
    return lhs <= rhs


# ---------------------------------------------------------------------------
# bump comparisons


def default_trace_rule(N: int):
    return sphere_rule(N, {1: 1, 2: 64, 3: 24}[N])


def _bump_comparison(claim, params, f, tol, rule, quad_tol, lower_factor):
    N, s = params.N, params.s
    rule = default_trace_rule(N) if rule is None else rule
    r = _norm(f.center)
    rho = f.radius
    h = SolutionHandle(params, f)
    lhs = symmetrized_boundary_value(h, rule, quad_tol)
    rhs = radial_boundary_value(params, schwarz(f))
    margin = rhs - lhs
    rel = margin / abs(rhs)
    mass = lp_norm(f, 1)
    scale = martin_scale(params)
    upper = scale * (1.0 - (r - rho) ** 2) ** s * (1.0 - rho / (1.0 - r)) ** (-N) * mass
    lower = scale * lower_factor * mass
    meta = _echo(
        params,
        xi=[float(c) for c in f.center],
        rho=rho,
        height=f.height,
        upper_bound_lhs=upper,
        lower_bound_rhs=lower,
        bounds_bracket=bool(lhs <= upper * (1.0 + tol) and rhs > lower),
        trace_nodes=len(rule),
        quad_tol=quad_tol,
    )
    return VerificationReport(claim, lhs, rhs, margin, tol, bool(rel > tol), params.normalization.value, meta)


def _as_bump(f):
    if not isinstance(f, BumpSource):
        raise DomainError("expected a bump source")
    _require_nonzero(f)
    return f


def verify_bump_boundary_talenti(
    params: ProblemParams, f: BumpSource, tol: float = DEFAULT_TOL, rule=None, quad_tol: float = 1e-8
):
    """(u_f)^*/delta^s < u_{f*}/delta^s for an admissible off-centre bump, s < 1."""
    _require_fractional(params, "verify_bump_boundary_talenti")
    f = _as_bump(f)
    if not check_rho_condition(params.N, params.s, f.center, f.radius):
        lhs, rhs = rho_condition_sides(params.N, params.s, f.center, f.radius)
        raise ConditionNotSatisfied(
            f"rho condition fails: (1-(|xi|-rho)^2)^s = {lhs:.6g} > (1-rho/(1-|xi|))^N = {rhs:.6g}"
        )
    return _bump_comparison("thm2", params, f, tol, rule, quad_tol, 1.0)


def verify_higher_order_bump(
    params: ProblemParams, f: BumpSource, tol: float = DEFAULT_TOL, rule=None, quad_tol: float = 1e-8
):
    """Same comparison for s in (1, N] under the strengthened condition."""
    N, s = params.N, params.s
    if not 1 < s <= N:
        raise DomainError(f"verify_higher_order_bump needs s in (1, N], got s={s}, N={N}")
    f = _as_bump(f)
    if not check_higher_order_condition(N, s, f.center, f.radius):
        lhs, rhs = higher_order_condition_sides(N, s, f.center, f.radius)
        raise ConditionNotSatisfied(f"higher-order condition fails: {lhs:.6g} > {rhs:.6g}")
    report = _bump_comparison("higher-order", params, f, tol, rule, quad_tol, (1.0 - f.radius**2) ** (s - 1.0))
    # the condition is measured from the bump centre: 1-|xi|
    report.metadata["condition_base"] = "1-|xi|"
    return report


def verify_green_boundary_talenti(params: ProblemParams, xi) -> VerificationReport:
    """(1-|xi|^2)^s T_{N,N/s}(xi)^(-s) < 1 for xi != 0."""
    N, s = params.N, params.s
    if not 0 < s <= N:
        raise DomainError(f"verify_green_boundary_talenti needs s in (0, N], got s={s}")
    r = _norm(xi)
    if not 0 < r < 1:
        raise DomainError("need 0 < |xi| < 1")
    T = t_moment(N, N / s, xi)
    lhs = ((1.0 - r) * (1.0 + r)) ** s * T ** (-s)
    scale = martin_scale(params)
    meta = _echo(
        params,
        xi=[float(c) for c in np.atleast_1d(xi)],
        t_moment=T,
        rearranged_martin=scale * lhs,
        martin_at_origin=scale,
    )
    return VerificationReport("green-talenti", lhs, 1.0, 1.0 - lhs, 0.0, bool(lhs < 1.0), params.normalization.value, meta)


# ---------------------------------------------------------------------------
# sweeps


def sharpness_sweep(params: ProblemParams, epsilons: Sequence[float], tol: float = 1e-12) -> list:
    """Boundary values for the unit-mass centred bumps f_eps against their limit."""
    _require_fractional(params, "sharpness_sweep")
    N = params.N
    limit = martin_scale(params)
    theta = np.zeros(N)
    theta[0] = 1.0
    rows = []
    for eps in epsilons:
        f = centered_bump(N, float(eps))
        value = _trace_at(params, source_pieces(f, N), theta, tol)
        excess = value - limit
        rows.append(
            {
                "epsilon": float(eps),
                "value": value,
                "radial_formula": radial_boundary_value(params, schwarz(f)),
                "limit": limit,
                "excess": excess,
                "excess_over_eps2": excess / float(eps) ** 2,
                "above_limit": bool(excess > 0),
            }
        )
    return rows


def exploratory_sweep(N: int, s_values, xi_values, rho_values, rule=None, quad_tol: float = 1e-8) -> list:
    """Bump comparisons outside the proven range; informational, no verdict."""
    rows = []
    for s in s_values:
        params = ProblemParams(N, s)
        for r in xi_values:
            xi = np.zeros(N)
            xi[0] = r
            for rho in rho_values:
                if not 0 < rho < min(r, 1 - r):
                    continue
                f = BumpSource(tuple(xi), rho, 1.0)
                h = SolutionHandle(params, f)
                lhs = symmetrized_boundary_value(h, default_trace_rule(N) if rule is None else rule, quad_tol)
                rhs = radial_boundary_value(params, schwarz(f))
                rows.append({"N": N, "s": float(s), "xi": float(r), "rho": float(rho), "lhs": lhs, "rhs": rhs, "margin": rhs - lhs})
    return rows
