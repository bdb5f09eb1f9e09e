import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frac_talenti.errors import DomainError, PositivityError
from frac_talenti.quadrature import sphere_rule
from frac_talenti.sources import (
    BoundaryTrace,
    BumpSource,
    RadialProfile,
    angular_model_rearranged,
    centered_bump,
    distribution_mu,
    eval_source,
    lp_norm,
    measure_not_rearranged,
    parse_profile,
    random_profile,
    rearrange_radial_samples,
    schwarz,
    source_from_dict,
    source_to_dict,
    truncate,
)
from frac_talenti.special import ball_volume


@st.composite
def profiles(draw, max_pieces=6):
    k = draw(st.integers(min_value=1, max_value=max_pieces))
    cuts = draw(st.lists(st.floats(min_value=0.01, max_value=0.99), min_size=k - 1, max_size=k - 1, unique=True))
    cuts = sorted(cuts)
    if any(b - a < 1e-6 for a, b in zip([0.0] + cuts, cuts + [1.0])):
        cuts = [(i + 1) / k for i in range(k - 1)]
    vals = draw(st.lists(st.sampled_from([0.0, 0.25, 0.5, 1.0, 1.5, 3.0]), min_size=k, max_size=k))
    if max(vals) == 0:
        vals[0] = 1.0
    return RadialProfile((0.0, *cuts, 1.0), tuple(vals))


def test_profile_canonical_merge_and_equality():
    f = RadialProfile((0.0, 0.3, 0.6, 1.0), (1.0, 1.0, 2.0))
    assert f.breakpoints == (0.0, 0.6, 1.0)
    assert f == RadialProfile((0.0, 0.6, 1.0), (1.0, 2.0))


@pytest.mark.parametrize(
    "bp,vals",
    [((0.0, 0.5), (1.0,)), ((0.1, 1.0), (1.0,)), ((0.0, 0.5, 0.5, 1.0), (1, 2, 3)), ((0.0, 1.0), (-1.0,))],
)
def test_profile_validation(bp, vals):
    with pytest.raises(DomainError):
        RadialProfile(bp, vals)


def test_value_at_is_right_continuous_and_zero_outside():
    f = RadialProfile((0.0, 0.5, 1.0), (2.0, 1.0))
    np.testing.assert_array_equal(f.value_at([0.0, 0.49, 0.5, 0.99, 1.0, 1.5]), [2, 2, 1, 1, 0, 0])


def test_layers_reconstruct_profile():
    f = RadialProfile((0.0, 0.2, 0.5, 1.0), (1.0, 3.0, 0.5))
    r = np.linspace(0, 0.999, 50)
    rebuilt = sum(w * (r < rad) for rad, w in f.layers())
    np.testing.assert_allclose(rebuilt, f.value_at(r), atol=1e-15)


def test_parse_profile_and_roundtrip():
    f = parse_profile("0.5:0, 1:1")
    assert f == RadialProfile((0.0, 0.5, 1.0), (0.0, 1.0))
    assert source_from_dict(source_to_dict(f)) == f
    b = BumpSource((0.5, 0.0), 0.1, 2.0)
    assert source_from_dict(source_to_dict(b)) == b


@pytest.mark.parametrize("text", ["", "0.5", "0.5:a", "0.5:1,0.4:2,1:0", "0.5:1,0.9:2"])
def test_parse_profile_errors(text):
    with pytest.raises(DomainError):
        parse_profile(text)


def test_bump_standing_hypothesis():
    with pytest.raises(DomainError):
        BumpSource((0.5,), 0.6)
    with pytest.raises(DomainError):
        BumpSource((0.0, 0.0), 0.1)
    assert centered_bump(2, 0.1).height == pytest.approx(1 / (math.pi * 0.01))


def test_eval_source():
    b = BumpSource((0.5, 0.0), 0.1, 2.0)
    assert eval_source(b, [0.55, 0.0]) == 2.0
    assert eval_source(b, [0.3, 0.0]) == 0.0
    f = RadialProfile((0.0, 0.5, 1.0), (0.0, 1.0))
    assert eval_source(f, [0.0, 0.6]) == 1.0


def test_annulus_rearrangement():
    f = RadialProfile((0.0, 0.5, 1.0), (0.0, 1.0))
    fs = schwarz(f, 1)
    assert fs == RadialProfile((0.0, 0.5, 1.0), (1.0, 0.0))
    assert measure_not_rearranged(f, 1) == 2.0
    fs3 = schwarz(f, 3)
    assert fs3.breakpoints[1] == pytest.approx(0.875 ** (1 / 3), rel=1e-15)


def test_schwarz_needs_dimension_for_radial():
    with pytest.raises(DomainError):
        schwarz(RadialProfile((0.0, 1.0), (1.0,)))


def test_bump_rearrangement():
    b = BumpSource((0.0, 0.5, 0.0), 0.2, 3.0)
    fs = schwarz(b)
    assert fs == RadialProfile((0.0, 0.2, 1.0), (3.0, 0.0))
    assert distribution_mu(b, 1.0) == distribution_mu(fs, 1.0, 3)
    assert lp_norm(b, 1) == pytest.approx(3.0 * ball_volume(3) * 0.008, rel=1e-15)


@pytest.mark.parametrize("N", [1, 2, 3])
@settings(max_examples=60, deadline=None)
@given(f=profiles(), t=st.sampled_from([0.0, 0.1, 0.25, 0.4, 0.5, 1.0, 1.2, 2.0, 3.0]))
def test_equimeasurable_exact(N, f, t):
    assert distribution_mu(schwarz(f, N), t, N) == distribution_mu(f, t, N)


@pytest.mark.parametrize("N", [1, 3])
@settings(max_examples=60, deadline=None)
@given(f=profiles(), tau=st.sampled_from([0.1, 0.25, 0.7, 1.0, 2.0]))
def test_truncation_commutes_exact(N, f, tau):
    assert schwarz(truncate(f, tau), N) == truncate(schwarz(f, N), tau)


@pytest.mark.parametrize("N", [1, 2, 3])
@settings(max_examples=40, deadline=None)
@given(f=profiles(), p=st.sampled_from([1.0, 2.0, 3.5]))
def test_lp_norms_preserved(N, f, p):
    assert lp_norm(schwarz(f, N), p, N) == lp_norm(f, p, N)


@pytest.mark.parametrize("N", [1, 3])
@settings(max_examples=40, deadline=None)
@given(f=profiles())
def test_schwarz_idempotent_and_decreasing(N, f):
    fs = schwarz(f, N)
    assert fs.symmetric_decreasing
    assert schwarz(fs, N) == fs
    assert (measure_not_rearranged(f, N) == 0.0) == f.symmetric_decreasing


def test_random_profile_reproducible():
    a = random_profile(np.random.default_rng(3), nonsymmetric=True)
    b = random_profile(np.random.default_rng(3), nonsymmetric=True)
    assert a == b
    assert not a.symmetric_decreasing


def test_rearrange_radial_samples():
    r = np.array([0.25, 0.5, 0.75])
    g = rearrange_radial_samples(r, [1.0, 3.0, 2.0], 1)
    assert g.values == (3.0, 2.0, 1.0)
    # shell widths 0.375, 0.25, 0.375 in N = 1
    np.testing.assert_allclose(g.breakpoints, [0.0, 0.25, 0.625, 1.0], atol=1e-15)
    with pytest.raises(DomainError):
        rearrange_radial_samples([0.5, 0.25], [1, 2], 1)


def _two_node_trace(a, b):
    return BoundaryTrace.from_rule(sphere_rule(1), [a, b], 1)


def _scan_oracle(psi, s, r):
    # brute force: h*(r) solves sum_i (1 - (h/psi_i)^(1/s))_+ = 2 r; scan h, zoom in
    psi = np.asarray(psi, dtype=float)
    lo, hi = 0.0, psi.max()
    for _ in range(6):
        h = np.linspace(lo, hi, 20001)
        meas = np.clip(1 - (h[:, None] / psi[None, :]) ** (1 / s), 0, None).sum(axis=1)
        k = int(np.flatnonzero(meas > 2 * r)[-1])
        lo, hi = h[k], h[min(k + 1, h.size - 1)]
    return 0.5 * (lo + hi)


@pytest.mark.parametrize("psi", [(1.0, 2.0), (0.3, 0.31), (5.0, 0.5)])
@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("r", [0.05, 0.4, 0.9])
def test_angular_model_two_nodes_against_scan(psi, s, r):
    got = angular_model_rearranged(_two_node_trace(*psi), s, r)
    assert got == pytest.approx(_scan_oracle(psi, s, r), abs=1e-8)


def test_angular_model_requires_positive_trace():
    with pytest.raises(PositivityError):
        angular_model_rearranged(_two_node_trace(1.0, -1.0), 0.5, 0.5)
    with pytest.raises(DomainError):
        angular_model_rearranged(_two_node_trace(1.0, 1.0), 0.5, 1.0)


def test_angular_model_decreasing_in_r():
    tr = _two_node_trace(1.0, 2.0)
    vals = [angular_model_rearranged(tr, 0.5, r) for r in np.linspace(0.05, 0.95, 10)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
