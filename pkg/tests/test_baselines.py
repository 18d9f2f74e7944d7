"""Benchmark scheme tests.

Oracles used here:
  * a from-scratch nested-loop enumeration replays the grid position search;
  * the joint brute-force oracle upper-bounds AO on a coarse two-antenna
    setup whose continuous optimum lies exactly on the grid;
  * matched-filter identities pin the MRT scheme's SNRs;
  * every scheme's stored SNR pair is recomputed from (w, x) from scratch.
"""

import itertools
import math

import numpy as np
import pytest

from ma_multicast import (
    GridSpec,
    Scheme,
    SystemConfig,
    ao_optimize,
    ao_scheme,
    aps_search,
    brute_force_joint,
    closed_form_beamformer,
    correlation,
    correlation_objective,
    fpa_scheme,
    ma_mrt,
    min_snr_from_correlation,
    multi_start_sca,
    proposed_scheme,
    run_scheme,
    snr_pair,
)


ALL_SCHEMES = list(Scheme)


def enumerate_grid_search(cfg, grid_step):
    """Independent APS oracle: plain nested loops over index tuples."""
    obj = correlation_objective(cfg)
    m = int(math.floor(cfg.span_l / grid_step + 1e-9)) + 1
    points = [grid_step * i for i in range(m)]
    best_f, best_x = -1.0, None
    for combo in itertools.combinations(range(m), cfg.n_antennas):
        x = [points[i] for i in combo]
        if any(b - a < cfg.d_min - 1e-9 for a, b in zip(x, x[1:])):
            continue
        f = abs(sum(np.exp(1j * obj.kappa * xi) for xi in x))
        if f > best_f + 1e-12:
            best_f, best_x = f, x
    return np.array(best_x), best_f


# ---------------------------------------------------------------------------
# Result invariants shared by every scheme


@pytest.mark.parametrize("scheme", ALL_SCHEMES)
def test_scheme_results_are_consistent(scheme):
    cfg = SystemConfig()
    res = run_scheme(scheme, cfg, n_starts=5, seed=3)
    assert res.scheme is scheme
    assert res.x[0] >= -1e-12
    assert res.x[-1] <= cfg.span_l + 1e-12
    assert np.all(np.diff(res.x) >= cfg.d_min - 1e-9)
    assert abs(np.linalg.norm(res.w.w) - 1.0) < 1e-12
    snr = snr_pair(res.w.w, res.x, cfg)
    assert snr.gamma_u1 == pytest.approx(res.snr.gamma_u1, rel=1e-9)
    assert snr.gamma_u2 == pytest.approx(res.snr.gamma_u2, rel=1e-9)
    assert snr.min_rate == pytest.approx(res.snr.min_rate, rel=1e-9)


@pytest.mark.parametrize("scheme", ALL_SCHEMES)
def test_schemes_deterministic(scheme):
    cfg = SystemConfig()
    ra = run_scheme(scheme, cfg, n_starts=4, seed=11)
    rb = run_scheme(scheme, cfg, n_starts=4, seed=11)
    assert np.array_equal(ra.x, rb.x)
    assert np.array_equal(ra.w.w, rb.w.w)
    assert ra.snr.min_rate == rb.snr.min_rate


def test_run_scheme_rejects_unknown():
    with pytest.raises(ValueError):
        run_scheme("nonsense", SystemConfig(), 1, 0, 0.5)


# ---------------------------------------------------------------------------
# Proposed scheme


def test_proposed_uses_correlation_positions():
    cfg = SystemConfig()
    res = proposed_scheme(cfg, n_starts=6, seed=2)
    x_ref, _ = multi_start_sca(cfg, n_starts=6, seed=2)
    assert np.array_equal(res.x, x_ref)
    bf = closed_form_beamformer(res.x, cfg)
    assert np.array_equal(res.w.w, bf.w)


# ---------------------------------------------------------------------------
# Alternating optimization


def test_ao_fixed_point_at_proposed_solution():
    cfg = SystemConfig()
    prop = proposed_scheme(cfg, n_starts=10, seed=1)
    res = ao_optimize(cfg, prop.x)
    assert res.trace.outer_iterations == 1
    assert res.snr.min_rate == pytest.approx(prop.snr.min_rate, abs=1e-9, rel=1e-9)


def test_ao_trace_monotone():
    cfg = SystemConfig()
    rng = np.random.default_rng(60)
    for _ in range(5):
        hi = cfg.span_l - (cfg.n_antennas - 1) * cfg.d_min
        u = np.sort(rng.uniform(0.0, hi, cfg.n_antennas))
        init = u + cfg.d_min * np.arange(cfg.n_antennas)
        res = ao_optimize(cfg, init)
        rates = np.array(res.trace.min_rates)
        assert np.all(np.diff(rates) >= -1e-9)
        init_bf = closed_form_beamformer(init, cfg)
        init_rate = snr_pair(init_bf.w, init, cfg).min_rate
        assert res.snr.min_rate >= init_rate - 1e-9


def test_ao_never_beats_joint_grid_on_lattice_aligned_setup():
    # beat period 2 pi / kappa = 2.5 sits exactly on the 0.05 grid and the
    # aligned optimum has t = 1, so the grid value is the true joint optimum
    cfg = SystemConfig(
        n_antennas=2, span_l=3.0, theta_su=(0.0, math.asin(0.4)), d_su=(100.0, 100.0)
    )
    joint = brute_force_joint(cfg, GridSpec(position_step=0.05, t_step=1e-4))
    res = ao_scheme(cfg, n_starts=6, seed=0)
    assert res.snr.min_rate <= joint.min_rate + 1e-6
    # and the warm start reaches that optimum
    assert res.snr.min_rate == pytest.approx(joint.min_rate, rel=1e-9)


def test_ao_validates_init():
    cfg = SystemConfig()
    with pytest.raises(ValueError):
        ao_optimize(cfg, np.array([0.0, 0.5, 1.0]))


# ---------------------------------------------------------------------------
# Grid position selection


def test_aps_matches_independent_enumeration():
    cfg = SystemConfig(n_antennas=3, span_l=3.0)
    res = aps_search(cfg, grid_step=0.5)
    want_x, want_f = enumerate_grid_search(cfg, 0.5)
    assert np.allclose(res.x, want_x, atol=1e-12)
    assert correlation(res.x, correlation_objective(cfg)) == pytest.approx(want_f, rel=1e-12)


def test_aps_single_candidate():
    cfg = SystemConfig(n_antennas=3, span_l=1.0)
    res = aps_search(cfg, grid_step=0.5)
    assert np.allclose(res.x, [0.0, 0.5, 1.0])


def test_aps_lexicographic_tie_break():
    # matching sine angles make every subset tie at f = n, so the first
    # lexicographic one must win
    th = 0.8
    cfg = SystemConfig(n_antennas=3, span_l=3.0, theta_su=(th, math.pi - th))
    res = aps_search(cfg, grid_step=0.5)
    assert np.allclose(res.x, [0.0, 0.5, 1.0])


def test_aps_guard_refuses_blow_up():
    cfg = SystemConfig(n_antennas=5, span_l=4.0)
    with pytest.raises(ValueError, match="coarser"):
        aps_search(cfg, grid_step=0.001)


def test_aps_uses_optimal_beamformer():
    cfg = SystemConfig()
    res = aps_search(cfg, grid_step=0.5)
    bf = closed_form_beamformer(res.x, cfg)
    assert np.array_equal(res.w.w, bf.w)


# ---------------------------------------------------------------------------
# MRT and fixed arrays


def test_mrt_first_user_snr_is_matched_filter_bound():
    cfg = SystemConfig(d_su=(70.0, 180.0))
    res = ma_mrt(cfg, n_starts=5, seed=4)
    assert res.snr.gamma_u1 == pytest.approx(cfg.snr_scale(0) * cfg.n_antennas, rel=1e-12)
    # second user sees the correlation squared over n
    f = correlation(res.x, correlation_objective(cfg))
    want = cfg.snr_scale(1) * f * f / cfg.n_antennas
    assert res.snr.gamma_u2 == pytest.approx(want, rel=1e-9)
    assert res.w.t == 1.0


def test_mrt_parallel_channels_serve_both():
    th = 0.9
    cfg = SystemConfig(theta_su=(th, math.pi - th))
    res = ma_mrt(cfg, n_starts=3, seed=0)
    assert res.snr.gamma_u2 == pytest.approx(cfg.snr_scale(1) * cfg.n_antennas, rel=1e-9)


def test_mrt_equals_full_mixing_objective():
    cfg = SystemConfig()
    res = ma_mrt(cfg, n_starts=5, seed=9)
    f = correlation(res.x, correlation_objective(cfg))
    want = math.log2(1.0 + min_snr_from_correlation(1.0, f, cfg))
    assert res.snr.min_rate == pytest.approx(want, rel=1e-9)


def test_fpa_positions_and_errors():
    res = fpa_scheme(SystemConfig())
    assert np.allclose(res.x, [0.0, 0.5, 1.0, 1.5, 2.0])
    res2 = fpa_scheme(SystemConfig(n_antennas=2, span_l=4.0))
    assert np.allclose(res2.x, [0.0, 0.5])
    # config is feasible (4 * 0.4 = 1.6 fits) but the 0.5-spaced array is not
    with pytest.raises(ValueError):
        fpa_scheme(SystemConfig(n_antennas=5, span_l=1.9, d_min=0.4))
    # spacing below the separation floor is also rejected
    with pytest.raises(ValueError):
        fpa_scheme(SystemConfig(n_antennas=3, span_l=4.0, d_min=0.7))


def test_fpa_independent_of_span():
    ra = fpa_scheme(SystemConfig(span_l=4.0))
    rb = fpa_scheme(SystemConfig(span_l=9.0))
    assert np.array_equal(ra.x, rb.x)
    assert ra.snr.min_rate == rb.snr.min_rate


# ---------------------------------------------------------------------------
# Dominance


def test_proposed_dominates_simpler_schemes():
    cfg = SystemConfig()
    prop = proposed_scheme(cfg, n_starts=10, seed=1).snr.min_rate
    for scheme in (Scheme.APS, Scheme.MA_MRT, Scheme.FPA):
        other = run_scheme(scheme, cfg, n_starts=10, seed=1).snr.min_rate
        assert prop >= other - 1e-9
