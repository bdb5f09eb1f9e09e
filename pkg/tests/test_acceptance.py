"""Acceptance suite: one test (or a small group) per criterion.

Random inputs come from numpy generators with the fixed seeds below, so
every run sees the same cases.  A summary line per criterion is printed at
the end of the pytest run.
"""

import json
import math
import time

import numpy as np
import pytest

from frac_talenti.cli import main
from frac_talenti.kernels import martin, martin_from_green_limit, martin_parts
from frac_talenti.quadrature import sphere_rule
from frac_talenti.solver import (
    SolutionHandle,
    boundary_trace,
    default_radial_grid,
    harmonic_mean_value,
    radial_boundary_value,
    solve_at,
    torsion_oracle,
)
from frac_talenti.sources import (
    BoundaryTrace,
    BumpSource,
    RadialProfile,
    angular_model_rearranged,
    distribution_mu,
    random_profile,
    schwarz,
    truncate,
)
from frac_talenti.special import LogBranch, Normalization, ProblemParams, kappa, sphere_measure, torsion_constant
from frac_talenti.talenti import (
    locate_crossing,
    max_admissible_rho,
    verify_bump_boundary_talenti,
    verify_classical_equality,
    verify_green_boundary_talenti,
    verify_higher_order_bump,
    verify_mass_concentration,
    verify_reverse_boundary_talenti,
    verify_s_gt1,
)

GL = Normalization.GREEN_LIMIT
DL = Normalization.DELTA_LIMIT
TORSION_SET = [(1, 0.25), (1, 0.75), (2, 0.5), (3, 0.25), (3, 0.5), (3, 0.75)]

SEED_TORSION = 101
SEED_MARTIN = 103
SEED_SPHERE = 107
SEED_RADIAL = 109
SEED_CROSSING = 113
SEED_GREEN = 127
SEED_MASS = 131
SEED_CLASSICAL = 137
SEED_REARRANGE = 139


def _random_point(rng, N, rmax):
    v = rng.normal(size=N)
    return v / np.linalg.norm(v) * rmax * rng.uniform() ** (1.0 / N)


def _random_unit(rng, N):
    v = rng.normal(size=N)
    return v / np.linalg.norm(v)


# -- 1 ---------------------------------------------------------------------


@pytest.mark.criterion(1, "solve_at matches the torsion function (rel 1e-5, <= 60 s)")
def test_c01_torsion_cross_validation(record_property):
    rng = np.random.default_rng(SEED_TORSION)
    one = RadialProfile((0.0, 1.0), (1.0,))
    start = time.perf_counter()
    worst = 0.0
    for N, s in TORSION_SET:
        h = SolutionHandle(ProblemParams(N, s), one)
        for _ in range(10):
            x = _random_point(rng, N, 0.98)
            err = abs(solve_at(h, x) / torsion_oracle(h.params, x) - 1.0)
            worst = max(worst, err)
    elapsed = time.perf_counter() - start
    record_property("note", f"max relative error {worst:.2e}, {elapsed:.1f} s")
    assert worst <= 1e-5
    assert elapsed <= 60.0


# -- 2 ---------------------------------------------------------------------


@pytest.mark.criterion(2, "boundary trace of f = 1 equals 2^s gamma_{N,s} (rel 1e-6)")
@pytest.mark.parametrize("N,s", TORSION_SET + [(1, 0.5)])
def test_c02_calibration(N, s):
    tr = boundary_trace(SolutionHandle(ProblemParams(N, s, DL), RadialProfile((0.0, 1.0), (1.0,))), sphere_rule(N, 8))
    expected = 2.0**s * torsion_constant(N, s)
    np.testing.assert_allclose(tr.values, expected, rtol=1e-6)
    if (N, s) == (1, 0.5):
        # torsion oracle: gamma_{1,1/2} = 1
        assert expected == pytest.approx(math.sqrt(2), rel=1e-15)
        np.testing.assert_allclose(tr.values, math.sqrt(2), rtol=1e-6)


# -- 3 ---------------------------------------------------------------------


@pytest.mark.criterion(3, "Green-function limit reproduces the closed-form Martin kernel (rel 1e-3)")
@pytest.mark.parametrize("s", [0.25, 0.75])
def test_c03_martin_consistency(s):
    rng = np.random.default_rng(SEED_MARTIN + int(4 * s))
    p = ProblemParams(3, s, GL)
    for _ in range(20):
        y = _random_point(rng, 3, 0.95)
        theta = _random_unit(rng, 3)
        assert martin_from_green_limit(p, y, theta) == pytest.approx(martin(p, y, theta), rel=1e-3)


@pytest.mark.criterion(3, "Green-function limit reproduces the closed-form Martin kernel (rel 1e-3)")
def test_c03_critical_case_reported(record_property):
    # N = 2s: the logarithmic closed form carries half the constant; reported, not asserted
    y, theta = np.array([0.5]), np.array([1.0])
    closed = martin(ProblemParams(1, 0.5, GL), y, theta)
    via_integral = martin_from_green_limit(ProblemParams(1, 0.5, GL), y, theta)
    via_printed = martin_from_green_limit(ProblemParams(1, 0.5, GL, LogBranch.PRINTED), y, theta)
    record_property(
        "note",
        f"(N, s) = (1, 1/2): closed form {closed:.7f}, integral branch {via_integral:.7f}, "
        f"log form {via_printed:.7f} (ratio {via_printed / closed:.4f}, flagged)",
    )


# -- 4 ---------------------------------------------------------------------

SUPPORTED = [(1, 0.25), (1, 0.5), (1, 0.75), (2, 0.25), (2, 0.5), (2, 1.0), (2, 1.5), (3, 0.25), (3, 0.5), (3, 0.75), (3, 1.5), (3, 2.5)]


@pytest.mark.criterion(4, "sphere integral of the Martin kernel (rel 1e-8)")
@pytest.mark.parametrize("N,s", SUPPORTED)
def test_c04_spherical_martin_integral(N, s):
    rng = np.random.default_rng(SEED_SPHERE + 10 * N + int(4 * s))
    p = ProblemParams(N, s, GL)
    rule = sphere_rule(N, {1: 1, 2: 512, 3: 256}[N])
    nodes = np.atleast_2d(rule.nodes)
    for _ in range(10):
        x = _random_point(rng, N, 0.9)
        ax = 1.0 - float(x @ x)
        got = rule.integrate(martin_parts(p, np.linalg.norm(nodes - x, axis=1), ax))
        expected = 2.0 * kappa(N, s) * sphere_measure(N) / s * ax ** (s - 1.0)
        assert got == pytest.approx(expected, rel=1e-8)


# -- 5 ---------------------------------------------------------------------


@pytest.mark.criterion(5, "reverse boundary comparison for radial sources, s < 1")
def test_c05_annulus_exact_values():
    f = RadialProfile((0.0, 0.5, 1.0), (0.0, 1.0))
    p = ProblemParams(1, 0.5, GL)
    # arcsine antiderivatives: 4/3 for the annulus, 2/3 for the centred ball
    assert radial_boundary_value(p, f) == pytest.approx(4 / 3, abs=1e-9)
    assert radial_boundary_value(p, schwarz(f, 1)) == pytest.approx(2 / 3, abs=1e-9)
    rep = verify_reverse_boundary_talenti(p, f)
    assert rep.passed and rep.margin > 0


@pytest.mark.criterion(5, "reverse boundary comparison for radial sources, s < 1")
def test_c05_randomized_suite(record_property):
    rng = np.random.default_rng(SEED_RADIAL)
    profiles = [random_profile(rng) for _ in range(100)]
    start = time.perf_counter()
    count = 0
    for N in (1, 3):
        for s in (0.25, 0.5, 0.75):
            p = ProblemParams(N, s)
            for f in profiles:
                rep = verify_reverse_boundary_talenti(p, f)
                assert rep.passed, rep
                assert rep.metadata["equality_expected"] == f.symmetric_decreasing
                sym = verify_reverse_boundary_talenti(p, schwarz(f, N))
                assert sym.passed and sym.metadata["equality_expected"] and sym.margin == 0.0
                count += 2
    elapsed = time.perf_counter() - start
    record_property("note", f"{count} comparisons in {elapsed:.1f} s")
    assert elapsed <= 120.0


# -- 6 ---------------------------------------------------------------------


@pytest.mark.criterion(6, "pointwise comparison fails on an interval next to r = 1")
@pytest.mark.slow
def test_c06_crossing(record_property):
    rng = np.random.default_rng(SEED_CROSSING)
    p = ProblemParams(1, 0.5)
    shifts = []
    for _ in range(10):
        f = random_profile(rng, nonsymmetric=True)
        coarse = locate_crossing(p, f, default_radial_grid(512))
        fine = locate_crossing(p, f, default_radial_grid(1024))
        for c in (coarse, fine):
            assert c.upper == 1.0 and c.lower < 1.0
        shifts.append(abs(coarse.lower - fine.lower))
        assert shifts[-1] <= 0.01
    record_property("note", f"largest change of the crossing radius under refinement {max(shifts):.1e}")


# -- 7 ---------------------------------------------------------------------


@pytest.mark.criterion(7, "boundary comparison for admissible off-centre bumps")
@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("r", [0.25, 0.5, 0.75])
def test_c07_bump_grid(N, s, r):
    xi = np.zeros(N)
    xi[0] = r
    rho = 0.9 * max_admissible_rho(N, s, xi)
    rep = verify_bump_boundary_talenti(ProblemParams(N, s), BumpSource(tuple(xi), rho))
    assert rep.passed and rep.margin > 0


@pytest.mark.criterion(7, "boundary comparison for admissible off-centre bumps")
def test_c07_rho_star_closed_form():
    assert max_admissible_rho(1, 0.5, [0.5]) == pytest.approx(0.5 - math.sqrt(0.2), abs=1e-9)


# -- 8 ---------------------------------------------------------------------


@pytest.mark.criterion(8, "rearranged Martin kernel stays below its value at the origin")
def test_c08_green_talenti():
    rep = verify_green_boundary_talenti(ProblemParams(1, 0.5), [0.5])
    assert rep.lhs == pytest.approx(math.sqrt(0.6), abs=1e-10)
    rng = np.random.default_rng(SEED_GREEN)
    for k in range(50):
        N = 1 + k % 3
        s = float(rng.uniform(0.0, N)) or N
        xi = _random_point(rng, N, 0.999)
        rep = verify_green_boundary_talenti(ProblemParams(N, s), xi)
        assert rep.passed and rep.lhs < 1.0


# -- 9 ---------------------------------------------------------------------


@pytest.mark.criterion(9, "boundary comparison reverses for s > 1")
def test_c09_s_gt1_randomized():
    rng = np.random.default_rng(SEED_RADIAL)
    profiles = [random_profile(rng) for _ in range(100)]
    for f in profiles:
        low = [verify_reverse_boundary_talenti(ProblemParams(3, s), f) for s in (0.25, 0.5, 0.75)]
        high = [verify_s_gt1(ProblemParams(3, s), f) for s in (1.5, 2.5)]
        assert all(r.passed for r in low + high)
        if not f.symmetric_decreasing:
            assert all(r.metadata["boundary_difference"] > 0 for r in low)
            assert all(r.metadata["boundary_difference"] < 0 for r in high)


@pytest.mark.criterion(9, "boundary comparison reverses for s > 1")
def test_c09_higher_order_bump():
    rep = verify_higher_order_bump(ProblemParams(3, 1.5), BumpSource((0.5, 0.0, 0.0), 0.01))
    assert rep.passed


# -- 10 --------------------------------------------------------------------


@pytest.mark.criterion(10, "mass concentration at 20 radii")
@pytest.mark.slow
def test_c10_mass_concentration():
    rng = np.random.default_rng(SEED_MASS)
    p = ProblemParams(1, 0.5)
    radii = np.linspace(0.05, 1.0, 20)
    for _ in range(20):
        f = random_profile(rng, nonsymmetric=True)
        rep = verify_mass_concentration(p, f, radii)
        assert rep.passed, rep.metadata["radii"]
        assert len(rep.metadata["radii"]) == 20


# -- 11 --------------------------------------------------------------------


@pytest.mark.criterion(11, "boundary values coincide at s = 1 (margin <= 1e-12)")
@pytest.mark.parametrize("N", [1, 3])
def test_c11_classical(N):
    rng = np.random.default_rng(SEED_CLASSICAL + N)
    for _ in range(100):
        f = random_profile(rng, max_pieces=8)
        rep = verify_classical_equality(ProblemParams(N, 1.0), f)
        assert abs(rep.margin) <= 1e-12
        assert rep.passed


# -- 12 --------------------------------------------------------------------


@pytest.mark.criterion(12, "rearrangement properties")
@pytest.mark.parametrize("N", [1, 2, 3])
def test_c12_equimeasurability_and_truncation(N):
    rng = np.random.default_rng(SEED_REARRANGE + N)
    for _ in range(200):
        f = random_profile(rng, max_pieces=8)
        fs = schwarz(f, N)
        levels = sorted(set(f.values)) + [0.5 * v for v in f.values]
        for t in levels:
            assert distribution_mu(fs, t, N) == distribution_mu(f, t, N)
        for tau in f.values:
            if tau > 0:
                assert schwarz(truncate(f, tau), N) == truncate(fs, tau)


@pytest.mark.criterion(12, "rearrangement properties")
@pytest.mark.parametrize("N,s", [(1, 0.5), (2, 0.5), (3, 0.25), (3, 0.75)])
def test_c12_angular_model_asymptote(N, s):
    rule = sphere_rule(N, 24)
    th = np.atleast_2d(rule.nodes)
    psi = np.array([1.0, 2.0]) if N == 1 else 1.0 + 0.3 * th[:, 0] + 0.1 * th[:, -1] ** 2
    tr = BoundaryTrace.from_rule(rule, psi, N)
    r = 1.0 - 2.0**-12
    scaled = angular_model_rearranged(tr, s, r) / (1.0 - r) ** s
    assert scaled == pytest.approx(harmonic_mean_value(tr, s), rel=1e-4)


def _scan(psi, s, r):
    psi = np.asarray(psi, dtype=float)
    lo, hi = 0.0, float(psi.max())
    for _ in range(6):
        h = np.linspace(lo, hi, 20001)
        meas = np.clip(1.0 - (h[:, None] / psi[None, :]) ** (1.0 / s), 0.0, None).sum(axis=1)
        k = int(np.flatnonzero(meas > 2.0 * r)[-1])
        lo, hi = h[k], h[min(k + 1, h.size - 1)]
    return 0.5 * (lo + hi)


@pytest.mark.criterion(12, "rearrangement properties")
def test_c12_two_node_scan():
    rng = np.random.default_rng(SEED_REARRANGE)
    for _ in range(20):
        psi = rng.uniform(0.2, 3.0, 2)
        s = float(rng.uniform(0.1, 0.9))
        r = float(rng.uniform(0.01, 0.99))
        tr = BoundaryTrace.from_rule(sphere_rule(1), psi, 1)
        assert angular_model_rearranged(tr, s, r) == pytest.approx(_scan(psi, s, r), abs=1e-8)


# -- 13 --------------------------------------------------------------------


@pytest.mark.criterion(13, "repeated verify runs give byte-identical JSON")
@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "thm1", "--N", "3", "--s", "0.25", "--profile", "0.3:1,0.7:0,1:2", "--seed", "5"],
        ["verify", "thm2", "--N", "2", "--s", "0.5", "--xi", "0.5", "--rho", "0.03", "--seed", "5"],
        ["sweep", "thm1", "--N-list", "1,3", "--s-list", "0.5", "--count", "10", "--seed", "5"],
    ],
)
def test_c13_determinism(tmp_path, argv):
    outputs = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        assert main(argv + ["--json", str(path)]) == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0])["schema"] == 1
