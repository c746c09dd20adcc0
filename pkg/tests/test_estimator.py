import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twinkernel.errors import AtRiskZero, EmptySample
from twinkernel.estimator import (
    LITERAL,
    ORBIT_AVERAGED,
    ORBIT_POOLED,
    EstimatorConfig,
    IntensityEstimate,
    ci_band,
    contrast,
    estimate_level,
    level_profiles,
    penalty_weight,
    pointwise_ci,
    ramlau_hansen,
    select_from_contrasts,
    select_level,
    twin_kernel_weight,
)
from twinkernel.group import dyadic_scale, identity, periodic_shift
from twinkernel.kernels import EPANECHNIKOV, KERNELS, BandwidthLadder
from twinkernel.process import EventSample, at_risk
from twinkernel.sim import ScenarioSpec, simulate_sample, true_intensity

from conftest import brute_ramlau_hansen, samples

PER = periodic_shift(1.0, 5.0)


def test_twin_weight_examples():
    cfg = EstimatorConfig(identity(), EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 3))
    assert twin_kernel_weight(cfg, 0, 0.5, 0.5) == 0.75
    dy = EstimatorConfig(dyadic_scale(), EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 3), LITERAL)
    assert twin_kernel_weight(dy, 1, 4.0, 2.0) == 0.0
    avg = EstimatorConfig(PER, EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 3), ORBIT_AVERAGED)
    assert twin_kernel_weight(avg, 1, 0.3, 4.3) == pytest.approx(0.75)


def test_single_event_estimate():
    s = EventSample.from_arrays([2.0], [1], 5.0)
    cfg = EstimatorConfig(identity(5.0), EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 0))
    est = estimate_level(cfg, s, 0, np.array([2.0, 2.5, 3.5]))
    np.testing.assert_allclose(est.values, [0.75, 0.5625, 0.0], atol=1e-15)
    np.testing.assert_allclose(est.variance_proxy, est.values**2, atol=1e-15)


def test_all_censored_is_zero():
    s = EventSample.from_arrays([1.0, 2.0, 3.0], [0, 0, 0], 5.0)
    for cfg in (EstimatorConfig(identity(5.0)), EstimatorConfig(PER)):
        est = estimate_level(cfg, s, 2)
        assert len(est) == 512
        assert np.all(est.values == 0) and np.all(est.variance_proxy == 0)


def test_empty_sample_raises():
    s = EventSample.from_arrays([], [], 5.0)
    with pytest.raises(EmptySample):
        estimate_level(EstimatorConfig(identity(5.0)), s, 0)


@settings(max_examples=50, deadline=None)
@given(s=samples(max_n=30), h=st.sampled_from([0.25, 0.5, 1.0]),
       kname=st.sampled_from(sorted(KERNELS)))
def test_level_zero_identity_is_ramlau_hansen(s, h, kname):
    k = KERNELS[kname]
    grid = np.linspace(0, s.window_end, 97)
    cfg = EstimatorConfig(identity(s.window_end), k, BandwidthLadder(h, 0.5, 4))
    ours = estimate_level(cfg, s, 0, grid).values
    ref = brute_ramlau_hansen(s.times, s.status, grid, h, k)
    np.testing.assert_allclose(ours, ref, atol=1e-12, rtol=0)
    np.testing.assert_allclose(ramlau_hansen(s, h, k, grid).values, ref, atol=1e-12, rtol=0)


def _reference(cfg, s, j, grid):
    w = s.weights
    return np.array([sum(twin_kernel_weight(cfg, j, t, x) * wi
                         for x, wi in zip(s.times, w) if wi > 0) for t in grid])


@settings(max_examples=30, deadline=None)
@given(s=samples(max_n=25), j=st.integers(0, 5),
       mode=st.sampled_from([LITERAL, ORBIT_AVERAGED]))
def test_compiled_matches_definition_periodic(s, j, mode):
    cfg = EstimatorConfig(PER, EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 5), mode)
    grid = np.linspace(0, 5, 41)
    np.testing.assert_allclose(estimate_level(cfg, s, j, grid).values, _reference(cfg, s, j, grid),
                               atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(s=samples(max_n=25), j=st.integers(0, 3), mode=st.sampled_from([LITERAL, ORBIT_AVERAGED]))
def test_compiled_matches_definition_dyadic(s, j, mode):
    cfg = EstimatorConfig(dyadic_scale(), EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 3), mode)
    grid = np.linspace(0, 5, 41)
    np.testing.assert_allclose(estimate_level(cfg, s, j, grid).values, _reference(cfg, s, j, grid),
                               atol=1e-12)


def _pooled_reference(s, j, h, grid, act=PER, k=EPANECHNIKOV):
    out = np.zeros(grid.size)
    for g, t in enumerate(grid):
        for c in range(j + 1):
            tc = act.power(-c, t)
            for x, d in zip(s.times, s.status):
                if not d or at_risk(s, x) == 0:
                    continue
                pool = sum(at_risk(s, act.power(c - c2, x)) for c2 in range(j + 1))
                out[g] += k.eval(act.distance(tc, x) / h) / h / pool
    return out


@settings(max_examples=25, deadline=None)
@given(s=samples(max_n=20), j=st.integers(0, 6))
def test_pooled_matches_definition(s, j):
    cfg = EstimatorConfig(PER, EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 6), ORBIT_POOLED)
    grid = np.linspace(0, 5, 31)
    np.testing.assert_allclose(estimate_level(cfg, s, j, grid).values,
                               _pooled_reference(s, j, cfg.bandwidth(j), grid), atol=1e-12)


def test_pooled_equals_averaged_for_shift_invariant_risk_set():
    # every record sits at T (the origin of the circle), so Y is n at every shifted point
    s = EventSample.from_arrays(np.full(6, 5.0), [1, 1, 0, 1, 0, 1], 5.0)
    avg = EstimatorConfig(PER, EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 6), ORBIT_AVERAGED)
    pool = EstimatorConfig(PER, EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 6), ORBIT_POOLED)
    grid = np.linspace(0, 5, 201)
    for j in range(7):
        np.testing.assert_allclose(estimate_level(pool, s, j, grid).values,
                                   estimate_level(avg, s, j, grid).values, atol=1e-13)


def test_pooled_mass_matches_nelson_aalen_increment():
    # integrating the pooled estimate over the circle recovers sum_i Delta_i * (j+1) / Y_pool
    s = simulate_sample(ScenarioSpec("A1", 400, 11))
    cfg = EstimatorConfig(PER, EPANECHNIKOV, BandwidthLadder(0.5, 0.5, 5))
    for j in (0, 2, 4):
        grid = np.linspace(0, 5, 20001)
        mass = np.trapezoid(estimate_level(cfg, s, j, grid).values, grid)
        ev = s.times[s.status]
        pool = np.zeros(ev.size)
        expected = 0.0
        for c in range(j + 1):
            pool = sum(at_risk(s, PER.power(c - c2, ev)) for c2 in range(j + 1))
            expected += np.sum(1.0 / pool)
        assert mass == pytest.approx(expected, rel=1e-6)


def test_pooled_rejected_for_dyadic():
    with pytest.raises(ValueError):
        EstimatorConfig(dyadic_scale(), kernel_mode=ORBIT_POOLED)


def test_defaults():
    assert EstimatorConfig(PER).kernel_mode == ORBIT_POOLED
    assert EstimatorConfig().kernel_mode == LITERAL
    assert penalty_weight(0) == pytest.approx(math.log(2))
    assert sum(math.exp(-penalty_weight(j)) for j in range(60)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        EstimatorConfig(periodic_shift(1.0, 1.0), ladder=BandwidthLadder(0.5, 0.5, 2))


def test_nonnegative_and_variance():
    s = simulate_sample(ScenarioSpec("A3", 300, 5))
    for cfg in (EstimatorConfig(identity(5.0)), EstimatorConfig(PER)):
        est = estimate_level(cfg, s, 3)
        assert np.all(est.values >= 0) and np.all(est.variance_proxy >= 0)


def test_variance_proxy_definition():
    s = EventSample.from_arrays([0.5, 1.0, 1.2, 2.0, 2.5], [1, 1, 0, 1, 1], 3.0)
    cfg = EstimatorConfig(identity(3.0), EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 2))
    grid = np.linspace(0, 3, 25)
    est = estimate_level(cfg, s, 1, grid)
    ref = [sum((twin_kernel_weight(cfg, 1, t, x) * w) ** 2 for x, w in zip(s.times, s.weights))
           for t in grid]
    np.testing.assert_allclose(est.variance_proxy, ref, atol=1e-14)


def test_ci_hand_example():
    s = EventSample.from_arrays(np.full(100, 4.0), np.zeros(100, bool), 5.0)
    est = IntensityEstimate(np.array([1.0]), np.array([1.0]), np.array([0.0]), 2, 0.25)
    lo, hi = pointwise_ci(est, s, 1.0, 0.05)
    half = 1.959963984540054 * math.sqrt(0.6 / 25)
    assert hi - 1 == pytest.approx(half, abs=1e-12)
    assert 1 - lo == pytest.approx(half, abs=1e-12)
    assert half == pytest.approx(0.3036, abs=1e-4)
    zero = IntensityEstimate(np.array([1.0]), np.array([0.0]), np.array([0.0]), 2, 0.25)
    assert pointwise_ci(zero, s, 1.0) == (0.0, 0.0)
    with pytest.raises(AtRiskZero):
        pointwise_ci(est, EventSample.from_arrays([0.5], [1], 5.0), 1.0)
    with pytest.raises(ValueError):
        pointwise_ci(est, s, 1.0, gamma=1.5)


def test_ci_band_matches_pointwise():
    s = simulate_sample(ScenarioSpec("A1", 200, 3))
    est = estimate_level(EstimatorConfig(identity(5.0)), s, 2)
    lo, hi = ci_band(est, s)
    for idx in (0, 100, 300):
        t = est.grid[idx]
        if at_risk(s, t) > 0:
            assert (lo[idx], hi[idx]) == pytest.approx(pointwise_ci(est, s, t))
    assert np.isnan(hi[-1]) == (at_risk(s, 5.0) == 0)


def test_contrast_examples():
    cfg = EstimatorConfig(identity(5.0), EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 0))
    none = EventSample.from_arrays([1.0, 3.0], [0, 0], 5.0)
    assert contrast(cfg, none, 0) == 0.0
    one = EventSample.from_arrays([2.0], [1], 5.0)
    # trapezoid rule at step h/4 on a piecewise quartic: error well below 1e-3
    assert contrast(cfg, one, 0, leave_one_out=False) == pytest.approx(-0.9, abs=1e-3)
    # without the diagonal pair only the squared norm remains
    assert contrast(cfg, one, 0) == pytest.approx(0.6, abs=1e-3)


def brute_contrast(s, h, grid, k=EPANECHNIKOV):
    est = brute_ramlau_hansen(s.times, s.status, grid, h, k)
    sq = np.trapezoid(est * est, grid)
    cross = 0.0
    for i, (xi, wi) in enumerate(zip(s.times, s.weights)):
        if wi == 0:
            continue
        for l, (xl, wl) in enumerate(zip(s.times, s.weights)):
            if l != i and wl > 0:
                cross += wi * wl * k.eval((xi - xl) / h) / h
    return sq - 2 * cross


@settings(max_examples=15, deadline=None)
@given(s=samples(min_n=2, max_n=12))
def test_contrast_matches_brute_force(s):
    cfg = EstimatorConfig(identity(s.window_end), EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 2))
    prof = level_profiles(cfg, s, (0, 2))
    for j in (0, 2):
        ref = brute_contrast(s, cfg.bandwidth(j), prof.grid)
        assert prof.contrasts[j] == pytest.approx(ref, abs=1e-10)


def test_select_single_candidate():
    s = simulate_sample(ScenarioSpec("A1", 100, 1))
    cfg = EstimatorConfig(identity(5.0), candidate_levels=(0,))
    assert select_level(cfg, s).chosen_level == 0


def test_select_two_event_hand_sample():
    s = EventSample.from_arrays([1.0, 3.0], [1, 1], 5.0)
    cfg = EstimatorConfig(identity(5.0), EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 1))
    sel = select_level(cfg, s)
    # far-apart events: the cross term vanishes, so gamma(j) = int alpha_hat_j^2 = R(K)/h sum w^2
    g0 = 0.6 * (0.25 + 1.0)
    g1 = 0.6 / 0.5 * (0.25 + 1.0)
    assert sel.scores[0][0] == pytest.approx(g0, abs=1e-3)
    assert sel.scores[1][0] == pytest.approx(g1, abs=1e-3)
    assert sel.chosen_level == 0


def test_select_ties_go_to_smaller_level():
    sel = select_from_contrasts({0: 1.0, 1: 1.0 - 2.0 * math.log(2) / 10}, 2.0, 10)
    assert sel.chosen_level == 0
    assert sel.totals[0] == pytest.approx(sel.totals[1])


def test_contrast_unbiased_mc():
    """E[gamma_j] + ||alpha||^2 equals E||alpha_hat_j - alpha||^2 within 3 standard errors.

    Uses a window where the risk set stays large so the plug-in weights are
    well behaved.
    """
    cfg = EstimatorConfig(identity(2.0), EPANECHNIKOV, BandwidthLadder(0.5, 0.5, 3))
    reps = 300
    diffs = {j: [] for j in cfg.candidate_levels}
    for r in range(reps):
        s = simulate_sample(ScenarioSpec("A1", 200, 1000 + r, domain_end=2.0))
        prof = level_profiles(cfg, s)
        truth = true_intensity("A1", prof.grid)
        norm = np.trapezoid(truth**2, prof.grid)
        for j in cfg.candidate_levels:
            err = np.trapezoid((prof.values[j] - truth) ** 2, prof.grid)
            diffs[j].append(prof.contrasts[j] + norm - err)
    for j, d in diffs.items():
        d = np.asarray(d)
        assert abs(d.mean()) <= 3 * d.std(ddof=1) / math.sqrt(reps), j


def _mass(cfg, j, t, end):
    from scipy import integrate

    pts = np.sort(np.unique(np.clip(np.concatenate(
        [[0.0, end], np.ravel([[cfg.action.power(-k, t) + d * cfg.bandwidth(j) for d in (-1, 0, 1)]
                               for k in range(j + 1)])]), 0.0, end)))
    return sum(integrate.quad(lambda s: twin_kernel_weight(cfg, j, t, s), a, b, epsabs=1e-12)[0]
               for a, b in zip(pts[:-1], pts[1:]))


@pytest.mark.parametrize("j", [0, 1, 3])
def test_kernel_mass_identity_interior(j):
    cfg = EstimatorConfig(identity(5.0), EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 3))
    for t in (1.5, 2.5, 3.2):
        assert _mass(cfg, j, t, 5.0) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("j", [0, 2, 5])
def test_kernel_mass_orbit_averaged_everywhere(j):
    cfg = EstimatorConfig(PER, EPANECHNIKOV, BandwidthLadder(1.0, 0.5, 5), ORBIT_AVERAGED)
    for t in (0.0, 0.1, 2.5, 4.95):
        assert _mass(cfg, j, t, 5.0) == pytest.approx(1.0, abs=1e-8)


def test_invariant_intensity_mean_no_worse_than_level_zero():
    from scipy import integrate

    # same bandwidth at every level; the orbit copies of a periodic truth agree
    cfg = EstimatorConfig(PER, EPANECHNIKOV, BandwidthLadder(0.3, 0.999, 5), ORBIT_AVERAGED)
    for t in (0.1, 1.7, 4.9):
        dev = []
        for j in (0, 3, 5):
            mean = integrate.quad(lambda s: twin_kernel_weight(cfg, j, t, s)
                                  * true_intensity("A1", s), 0, 5, limit=400, epsabs=1e-12)[0]
            dev.append(abs(mean - true_intensity("A1", t)))
        assert dev[1] <= dev[0] + 1e-6 and dev[2] <= dev[0] + 1e-6


def test_support_edge_matches_kernel_evaluation():
    # t - x rounds to exactly h while t - h rounds to just above x
    k = KERNELS["uniform"]
    cfg = EstimatorConfig(identity(5.0), k, BandwidthLadder(0.5, 0.5, 0))
    s = EventSample.from_arrays([1.0 / 3.0], [1], 5.0)
    t = np.linspace(0, 5, 97)[16]
    assert k.eval((t - 1.0 / 3.0) / 0.5) == 0.5
    assert estimate_level(cfg, s, 0, np.array([t])).values[0] == 1.0
    grid = np.linspace(0, 5, 97)
    for num in range(1, 15):
        s = EventSample.from_arrays([num / 3.0], [1], 5.0)
        want = k.eval((grid - num / 3.0) / 0.5) / 0.5
        np.testing.assert_array_equal(estimate_level(cfg, s, 0, grid).values, want)
