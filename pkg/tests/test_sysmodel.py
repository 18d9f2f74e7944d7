"""System model tests.

Oracles used here:
  * scalar cmath loops recompute steering vectors and beam gains entry by
    entry, independent of the vectorized numpy path;
  * hand-derived power conversions pin the dBm defaults;
  * Cauchy-Schwarz bounds the gain of any unit-norm beamformer.
"""

import cmath
import math

import numpy as np
import pytest

from ma_multicast import (
    SystemConfig,
    beam_gain,
    beam_pattern,
    channel_vector,
    dbm_to_watt,
    default_config,
    snr_pair,
    steering_vector,
    validate_positions,
)


def scalar_steering(x, theta, wavelength=1.0):
    return [cmath.exp(1j * (2.0 * math.pi / wavelength) * xi * math.sin(theta)) for xi in x]


def scalar_gain(w, x, theta, wavelength=1.0):
    acc = 0.0 + 0.0j
    for wi, hi in zip(w, scalar_steering(x, theta, wavelength)):
        acc += hi * wi
    return abs(acc) ** 2


def random_feasible(rng, n, span_l, d_min):
    hi = span_l - (n - 1) * d_min
    u = np.sort(rng.uniform(0.0, hi, n))
    return u + d_min * np.arange(n)


def random_unit_beamformer(rng, n):
    w = rng.normal(size=n) + 1j * rng.normal(size=n)
    return w / np.linalg.norm(w)


# ---------------------------------------------------------------------------
# Power conversions and SNR scale


def test_dbm_to_watt_known_values():
    assert dbm_to_watt(30.0) == pytest.approx(1.0, rel=1e-15)
    assert dbm_to_watt(0.0) == pytest.approx(1e-3, rel=1e-15)
    assert dbm_to_watt(25.0) == pytest.approx(10.0 ** (-0.5), rel=1e-15)
    assert dbm_to_watt(-80.0) == pytest.approx(1e-11, rel=1e-15)


def test_default_snr_scale():
    # 10^(-0.5) W / (100^2 * 10^(-11) W) = 10^6.5
    cfg = SystemConfig()
    assert cfg.snr_scale(0) == pytest.approx(10.0**6.5, rel=1e-12)
    assert cfg.snr_scale(1) == pytest.approx(10.0**6.5, rel=1e-12)


def test_snr_scale_tracks_distance():
    cfg = SystemConfig(d_su=(50.0, 200.0))
    assert cfg.snr_scale(0) == pytest.approx(dbm_to_watt(25.0) / (50.0**2 * 1e-11), rel=1e-12)
    assert cfg.snr_scale(1) == pytest.approx(dbm_to_watt(25.0) / (200.0**2 * 1e-11), rel=1e-12)
    cfg4 = SystemConfig(tau=4.0)
    assert cfg4.snr_scale(0) == pytest.approx(dbm_to_watt(25.0) / (100.0**4 * 1e-11), rel=1e-12)


# ---------------------------------------------------------------------------
# Config validation


def test_default_config_matches_reference_setup():
    cfg = default_config()
    assert cfg.n_antennas == 5
    assert cfg.span_l == 4.0
    assert cfg.d_min == 0.5
    assert cfg.wavelength == 1.0
    assert cfg.tau == 2.0
    assert cfg.d_su == (100.0, 100.0)
    assert cfg.theta_su[0] == pytest.approx(math.pi / 4.0)
    assert cfg.theta_su[1] == pytest.approx(9.0 * math.pi / 10.0)


def test_default_config_overrides():
    cfg = default_config(n_antennas=3, span_l=2.0)
    assert cfg.n_antennas == 3
    assert cfg.span_l == 2.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_antennas": 1},
        {"n_antennas": 2.5},
        {"span_l": 0.0},
        {"span_l": -1.0},
        {"d_min": -0.5},
        {"n_antennas": 10, "span_l": 4.0},  # (N-1) d_min > L
        {"theta_su": (-0.1, 1.0)},
        {"theta_su": (0.5, 3.3)},
        {"d_su": (0.0, 100.0)},
        {"tau": 0.0},
        {"wavelength": 0.0},
        {"ps_dbm": math.nan},
    ],
)
def test_config_rejects_bad_fields(kwargs):
    with pytest.raises(ValueError):
        SystemConfig(**kwargs)


def test_validate_positions_accepts_feasible():
    x = validate_positions([0.0, 0.5, 1.2, 4.0], 4.0, 0.5)
    assert isinstance(x, np.ndarray)
    assert x.dtype == float


def test_validate_positions_rejects_violations():
    with pytest.raises(ValueError):
        validate_positions([0.0, 0.4], 4.0, 0.5)  # spacing
    with pytest.raises(ValueError):
        validate_positions([-0.1, 0.5], 4.0, 0.5)  # below zero
    with pytest.raises(ValueError):
        validate_positions([0.0, 4.1], 4.0, 0.5)  # beyond span
    with pytest.raises(ValueError):
        validate_positions([1.0, 0.0], 4.0, 0.5)  # unsorted
    with pytest.raises(ValueError):
        validate_positions([[0.0, 1.0]], 4.0, 0.5)  # not 1-D


def test_validate_positions_tolerates_boundary_noise():
    validate_positions([0.0, 0.5 - 1e-12, 4.0 + 1e-12], 4.0, 0.5)


# ---------------------------------------------------------------------------
# Steering vectors against the scalar oracle


def test_steering_vector_matches_scalar_oracle():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(2, 9))
        x = np.sort(rng.uniform(0.0, 10.0, n))
        theta = float(rng.uniform(0.0, math.pi))
        lam = float(rng.uniform(0.25, 4.0))
        got = steering_vector(x, theta, lam).entries
        want = scalar_steering(x, theta, lam)
        assert np.max(np.abs(got - np.array(want))) < 1e-12


def test_steering_vector_unit_modulus():
    rng = np.random.default_rng(8)
    x = np.sort(rng.uniform(0.0, 5.0, 6))
    h = steering_vector(x, 1.234).entries
    assert np.allclose(np.abs(h), 1.0, atol=1e-14)


def test_steering_translation_is_global_phase():
    # shifting every antenna by s multiplies the vector by a unit scalar,
    # so inner-product magnitudes cannot change
    rng = np.random.default_rng(9)
    x = random_feasible(rng, 5, 4.0, 0.5)
    h0 = steering_vector(x, 0.9).entries
    h1 = steering_vector(x + 0.37, 0.9).entries
    phase = h1[0] / h0[0]
    assert abs(abs(phase) - 1.0) < 1e-12
    assert np.max(np.abs(h1 - phase * h0)) < 1e-12


def test_channel_vector_uses_user_angle():
    cfg = SystemConfig()
    x = np.array([0.0, 0.5, 1.0, 1.5, 4.0])
    h0 = channel_vector(x, cfg, 0).entries
    h1 = channel_vector(x, cfg, 1).entries
    assert np.max(np.abs(h0 - steering_vector(x, cfg.theta_su[0]).entries)) == 0.0
    assert np.max(np.abs(h1 - steering_vector(x, cfg.theta_su[1]).entries)) == 0.0
    with pytest.raises(ValueError):
        channel_vector(x, cfg, 2)


# ---------------------------------------------------------------------------
# Beam gains


def test_beam_gain_matches_scalar_oracle():
    rng = np.random.default_rng(10)
    for _ in range(200):
        n = int(rng.integers(2, 9))
        x = random_feasible(rng, n, 6.0, 0.5)
        w = random_unit_beamformer(rng, n)
        theta = float(rng.uniform(0.0, math.pi))
        got = beam_gain(w, x, theta)
        want = scalar_gain(w, x, theta)
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_beam_gain_bounded_by_n():
    rng = np.random.default_rng(11)
    for _ in range(300):
        n = int(rng.integers(2, 9))
        x = random_feasible(rng, n, 6.0, 0.5)
        w = random_unit_beamformer(rng, n)
        theta = float(rng.uniform(0.0, math.pi))
        assert beam_gain(w, x, theta) <= n + 1e-9


def test_matched_beamformer_reaches_n():
    rng = np.random.default_rng(12)
    n = 6
    x = random_feasible(rng, n, 6.0, 0.5)
    theta = 1.1
    h = steering_vector(x, theta).entries
    w = np.conj(h) / math.sqrt(n)
    assert beam_gain(w, x, theta) == pytest.approx(n, rel=1e-12)


def test_beam_gain_rejects_unnormalized():
    x = np.array([0.0, 0.5])
    with pytest.raises(ValueError):
        beam_gain(np.array([1.0, 1.0]), x, 0.5)


def test_beam_pattern_matches_pointwise_gain():
    rng = np.random.default_rng(13)
    x = random_feasible(rng, 5, 4.0, 0.5)
    w = random_unit_beamformer(rng, 5)
    thetas = np.linspace(0.0, math.pi, 37)
    pat = beam_pattern(w, x, thetas)
    for th, g in zip(thetas, pat):
        assert g == pytest.approx(beam_gain(w, x, float(th)), rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# SNR pairs


def test_snr_pair_is_scaled_beam_gain():
    # same code path as beam_gain, so equality must be exact
    rng = np.random.default_rng(14)
    cfg = SystemConfig(d_su=(80.0, 230.0))
    x = random_feasible(rng, 5, 4.0, 0.5)
    w = random_unit_beamformer(rng, 5)
    snr = snr_pair(w, x, cfg)
    assert snr.gamma_u1 == cfg.snr_scale(0) * beam_gain(w, x, cfg.theta_su[0])
    assert snr.gamma_u2 == cfg.snr_scale(1) * beam_gain(w, x, cfg.theta_su[1])


def test_snr_pair_min_rate_definition():
    rng = np.random.default_rng(15)
    cfg = SystemConfig()
    x = random_feasible(rng, 5, 4.0, 0.5)
    w = random_unit_beamformer(rng, 5)
    snr = snr_pair(w, x, cfg)
    assert snr.min_rate == pytest.approx(
        math.log2(1.0 + min(snr.gamma_u1, snr.gamma_u2)), rel=1e-15
    )


def test_snr_pair_rejects_bad_norm():
    cfg = SystemConfig(n_antennas=2, span_l=4.0)
    x = np.array([0.0, 1.0])
    with pytest.raises(ValueError):
        snr_pair(np.array([0.9, 0.1j]), x, cfg)
