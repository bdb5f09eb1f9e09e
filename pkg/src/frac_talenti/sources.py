"""Source functions, distribution functions and Schwarz symmetrization.

Radial profiles are step functions in |x|.  Every measure is accumulated
with ``math.fsum`` over signed terms r^N, so that rearrangement identities
(equimeasurability, commutation with truncation) hold exactly in floating
point rather than up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConvergenceError, DomainError, PositivityError
from .special import ball_volume, sphere_measure

__all__ = [
    "RadialProfile",
    "BumpSource",
    "BoundaryTrace",
    "SourceFunction",
    "centered_bump",
    "parse_profile",
    "source_from_dict",
    "source_to_dict",
    "eval_source",
    "distribution_mu",
    "schwarz",
    "truncate",
    "lp_norm",
    "rearrange_radial_samples",
    "angular_model_rearranged",
    "measure_not_rearranged",
    "random_profile",
]


def _canonical(breakpoints, values, terms):
    """Merge adjacent pieces with equal values."""
    bp = [breakpoints[0]]
    vals: list = []
    tms: list = []
    for i, v in enumerate(values):
        t = terms[i] if terms is not None else None
        if vals and vals[-1] == v:
            bp[-1] = breakpoints[i + 1]
            if t is not None:
                tms[-1] = tms[-1] + t
        else:
            vals.append(v)
            bp.append(breakpoints[i + 1])
            tms.append(t)
    return tuple(bp), tuple(vals), (tuple(tms) if terms is not None else None)


@dataclass(frozen=True)
class RadialProfile:
    """Step function f(x) = values[i] for breakpoints[i] <= |x| < breakpoints[i+1].

    Adjacent equal values are merged on construction, so two profiles
    compare equal exactly when they describe the same function.
    """

    breakpoints: tuple
    values: tuple
    # exact volume bookkeeping in units of |B_1|, valid only for ``dim``
    terms: Optional[tuple] = field(default=None, compare=False, repr=False)
    dim: Optional[int] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(bp) != len(vals) + 1 or not vals:
            raise DomainError("a profile needs k values and k+1 breakpoints")
        if bp[0] != 0.0 or bp[-1] != 1.0:
            raise DomainError("profile breakpoints must start at 0 and end at 1")
        if any(b1 <= b0 for b0, b1 in zip(bp, bp[1:])):
            raise DomainError("profile breakpoints must be strictly increasing")
        if any(not (math.isfinite(v) and v >= 0.0) for v in vals):
            raise DomainError("profile values must be finite and nonnegative")
        terms = self.terms
        if terms is not None and len(terms) != len(vals):
            raise DomainError("volume terms do not match the pieces")
        bp, vals, terms = _canonical(bp, vals, terms)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_pairs(cls, pairs):
        """Build from (outer radius, value) pairs in increasing radius."""
        radii = [float(r) for r, _ in pairs]
        return cls((0.0, *radii), tuple(float(v) for _, v in pairs))

    @property
    def symmetric_decreasing(self) -> bool:
        return all(b <= a for a, b in zip(self.values, self.values[1:]))

    @property
    def sup(self) -> float:
        return max(self.values)

    def piece_terms(self, N: int):
        """Per-piece signed terms whose sum is the normalised piece volume."""
        if self.terms is not None and self.dim == N:
            return self.terms
        bp = self.breakpoints
        return tuple((bp[i + 1] ** N, -(bp[i] ** N)) for i in range(len(self.values)))

    def layers(self):
        """(radius, weight) pairs with f = sum weight * 1_{B_radius}."""
        out = []
        vals = self.values + (0.0,)
        for i in range(len(self.values)):
            d = vals[i] - vals[i + 1]
            if d != 0.0:
                out.append((self.breakpoints[i + 1], d))
        return out

    def value_at(self, r):
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(np.asarray(self.breakpoints), r, side="right") - 1
        vals = np.asarray(self.values + (0.0,))
        idx = np.clip(idx, 0, len(self.values))
        out = np.where(r >= 1.0, 0.0, vals[idx])
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BumpSource:
    """height * 1_{B_radius(center)}.

    The standing hypothesis 0 < radius < min(|center|, 1 - |center|) is
    enforced unless ``standing`` is False (used for centred bumps).
    """

    center: tuple
    radius: float
    height: float = 1.0
    standing: bool = True

    def __post_init__(self):
        c = tuple(float(x) for x in np.atleast_1d(np.asarray(self.center, dtype=float)).ravel())
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "height", float(self.height))
        xi = math.sqrt(math.fsum(x * x for x in c))
        if not (self.height > 0 and math.isfinite(self.height)):
            raise DomainError("bump height must be positive and finite")
        if not self.radius > 0:
            raise DomainError("bump radius must be positive")
        if self.standing:
            if not (xi > 0 and self.radius < min(xi, 1.0 - xi)):
                raise DomainError(
                    f"bump needs 0 < rho < min(|xi|, 1-|xi|); got |xi|={xi}, rho={self.radius}"
                )
        elif xi + self.radius > 1.0:
            raise DomainError("bump must lie inside the unit ball")

    @property
    def N(self) -> int:
        return len(self.center)

    @property
    def sup(self) -> float:
        return self.height


SourceFunction = Union[RadialProfile, BumpSource]


def centered_bump(N: int, eps: float) -> BumpSource:
    """|B_eps|^-1 1_{B_eps(0)}, the unit-mass bump at the origin."""
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    return BumpSource(tuple([0.0] * N), eps, 1.0 / (ball_volume(N) * eps**N), standing=False)


@dataclass(frozen=True)
class BoundaryTrace:
    """Values of u/delta^s at the nodes of a sphere rule."""

    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    N: int

    def __post_init__(self):
        for name in ("nodes", "weights", "values"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_rule(cls, rule, values, N: int):
        return cls(rule.nodes, rule.weights, np.asarray(values, dtype=float), N)

    def mean(self, values=None) -> float:
        v = self.values if values is None else values
        return float(np.dot(self.weights, v) / sphere_measure(self.N))

    def require_positive(self):
        if not np.all(self.values > 0):
            raise PositivityError(
                f"boundary trace has nonpositive values (min {float(self.values.min())!r}); "
                "this indicates a quadrature failure"
            )


def random_profile(rng: np.random.Generator, max_pieces: int = 6, nonsymmetric: bool = False) -> RadialProfile:
    """Random step profile with at most ``max_pieces`` pieces and values in [0, 1]."""
    while True:
        k = int(rng.integers(2 if nonsymmetric else 1, max_pieces + 1))
        inner = np.sort(rng.uniform(0.0, 1.0, k - 1))
        if np.any(np.diff(np.concatenate([[0.0], inner, [1.0]])) <= 1e-6):
            continue
        f = RadialProfile((0.0, *inner.tolist(), 1.0), tuple(rng.uniform(0.0, 1.0, k).tolist()))
        if f.sup > 0 and not (nonsymmetric and f.symmetric_decreasing):
            return f


# ---------------------------------------------------------------------------
# parsing and serialization


def parse_profile(text: str) -> RadialProfile:
    """Parse "r1:v1,r2:v2,...,1:vk" into a profile."""
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            r, v = chunk.split(":")
            pairs.append((float(r), float(v)))
        except ValueError as exc:
            raise DomainError(f"bad profile entry {chunk!r}; expected radius:value") from exc
    if not pairs:
        raise DomainError("empty profile")
    return RadialProfile.from_pairs(pairs)


def source_from_dict(d: dict) -> SourceFunction:
    kind = d.get("kind")
    if kind == "radial":
        return RadialProfile(tuple(d["breakpoints"]), tuple(d["values"]))
    if kind == "bump":
        return BumpSource(tuple(d["center"]), d["rho"], d.get("height", 1.0))
    raise DomainError(f"unknown source kind {kind!r}")


def source_to_dict(f: SourceFunction) -> dict:
    if isinstance(f, RadialProfile):
        return {"kind": "radial", "breakpoints": list(f.breakpoints), "values": list(f.values)}
    return {"kind": "bump", "center": list(f.center), "rho": f.radius, "height": f.height}


# ---------------------------------------------------------------------------
# pointwise values and level sets


def eval_source(f: SourceFunction, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(f, BumpSource):
        d = float(np.linalg.norm(x - np.asarray(f.center)))
        return f.height if d < f.radius else 0.0
    return float(f.value_at(float(np.linalg.norm(x))))


def _bump_terms(f: BumpSource):
    return (f.radius**f.N,)


def distribution_mu(f: SourceFunction, t: float, N: Optional[int] = None) -> float:
    """Lebesgue measure of {f > t}."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    if isinstance(f, BumpSource):
        N = f.N
        frac = math.fsum(_bump_terms(f)) if t < f.height else 0.0
        return ball_volume(N) * frac
    if N is None:
        raise DomainError("distribution_mu of a radial profile needs the dimension N")
    terms = f.piece_terms(N)
    picked = [x for v, tm in zip(f.values, terms) if v > t for x in tm]
    return ball_volume(N) * math.fsum(picked)


def schwarz(f: SourceFunction, N: Optional[int] = None) -> RadialProfile:
    """Symmetric decreasing rearrangement as a radial profile."""
    if isinstance(f, BumpSource):
        N = f.N
        rho = f.radius
        if rho >= 1.0:
            return RadialProfile((0.0, 1.0), (f.height,), ((1.0,),), N)
        return RadialProfile((0.0, rho, 1.0), (f.height, 0.0), (_bump_terms(f), (1.0, -(rho**N))), N)
    if N is None:
        raise DomainError("schwarz of a radial profile needs the dimension N")
    if f.symmetric_decreasing:
        return f
    terms = f.piece_terms(N)
    # descending value; ties by original radius ascending (stable sort)
    order = sorted(range(len(f.values)), key=lambda i: -f.values[i])
    levels: list = []
    for i in order:
        v = f.values[i]
        if levels and levels[-1][0] == v:
            levels[-1][1].extend(terms[i])
        else:
            levels.append([v, list(terms[i])])
    bp = [0.0]
    acc: list = []
    vals = []
    tms = []
    for k, (v, tm) in enumerate(levels):
        acc.extend(tm)
        vol = math.fsum(acc)
        r = 1.0 if k == len(levels) - 1 else min(vol ** (1.0 / N), 1.0)
        bp.append(r)
        vals.append(v)
        tms.append(tuple(tm))
    return RadialProfile(tuple(bp), tuple(vals), tuple(tms), N)


def truncate(f: SourceFunction, tau: float) -> SourceFunction:
    """Pointwise min(f, tau)."""
    if not tau > 0:
        raise DomainError("truncation level must be positive")
    if isinstance(f, BumpSource):
        return BumpSource(f.center, f.radius, min(f.height, tau), f.standing)
    return RadialProfile(f.breakpoints, tuple(min(v, tau) for v in f.values), f.terms, f.dim)


def lp_norm(f: SourceFunction, p: float, N: Optional[int] = None) -> float:
    if not p >= 1:
        raise DomainError("p must be at least 1")
    if isinstance(f, BumpSource):
        levels = [(f.height, list(_bump_terms(f)))]
        N = f.N
    else:
        if N is None:
            raise DomainError("lp_norm of a radial profile needs the dimension N")
        by_value: dict = {}
        for v, tm in zip(f.values, f.piece_terms(N)):
            by_value.setdefault(v, []).extend(tm)
        levels = sorted(by_value.items(), reverse=True)
    total = math.fsum(v**p * math.fsum(tm) for v, tm in levels if v > 0)
    return (ball_volume(N) * total) ** (1.0 / p)


def measure_not_rearranged(f: RadialProfile, N: int) -> float:
    """Measure of {f != f*} from the exact piecewise representation."""
    g = schwarz(f, N)
    edges = sorted(set(f.breakpoints) | set(g.breakpoints))
    out = []
    for a, b in zip(edges, edges[1:]):
        m = 0.5 * (a + b)
        if f.value_at(m) != g.value_at(m):
            out.extend((b**N, -(a**N)))
    return ball_volume(N) * math.fsum(out)


def rearrange_radial_samples(radii: Sequence[float], values: Sequence[float], N: int) -> RadialProfile:
    """Decreasing rearrangement of a radial grid function.

    Sample i is taken as the value on the shell between the midpoints to
    its neighbours (the first shell starts at 0, the last ends at 1).
    """
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.size != v.size or r.size == 0:
        raise DomainError("radii and values must be 1-D of equal length")
    if np.any(np.diff(r) <= 0) or r[0] <= 0 or r[-1] > 1:
        raise DomainError("radii must be strictly increasing in (0, 1]")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise DomainError("values must be finite and nonnegative")
    edges = np.concatenate([[0.0], 0.5 * (r[1:] + r[:-1]), [1.0]])
    return schwarz(RadialProfile(tuple(edges), tuple(v)), N)


# ---------------------------------------------------------------------------
# rearrangement of the angular model h(x) = psi(x/|x|) (1-|x|)^s


def angular_model_rearranged(psi: BoundaryTrace, s: float, r: float, max_iter: int = 200) -> float:
    """h*(r) from r^N = mean over the sphere of (1 - (h*/psi)^(1/s))_+^N."""
    if not 0 < r < 1:
        raise DomainError("r must lie in (0, 1)")
    psi.require_positive()
    vals = psi.values
    N = psi.N
    target = r**N

    def frac(h):
        q = np.clip(1.0 - (h / vals) ** (1.0 / s), 0.0, None)
        return psi.mean(q**N)

    top = float(vals.max())
    hi = min(2.0 * top * (1.0 - r) ** s, top)
    lo = 0.0
    width = 1e-12 * max(hi, np.finfo(float).tiny)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if frac(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= width or mid in (lo, hi) and hi - lo <= 4 * np.spacing(hi):
            return 0.5 * (lo + hi)
    raise ConvergenceError(
        f"angular_model_rearranged: bisection did not reach width {width} in {max_iter} steps",
        "angular_model_rearranged",
        {"s": s, "r": r},
    )
