"""Physical model of a linear movable-antenna multicast downlink.

Antenna positions are expressed in carrier wavelengths, transmit power and
noise power in dBm, user angles in radians.  Every function here is pure,
so the module is safe to use from worker threads.
"""

import math
from dataclasses import dataclass

import numpy as np

# Absolute slack applied to every geometric feasibility check.
FEASIBILITY_TOL = 1e-9
# Allowed deviation of ||w||^2 from 1 for anything used as a beamformer.
UNIT_NORM_TOL = 1e-12


def dbm_to_watt(dbm: float) -> float:
    """Convert a power figure in dBm to watts."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Constants of one downlink instance.

    Defaults encode the benchmark setup used throughout the test suite:
    both users 100 m away at angles pi/4 and 9*pi/10, 25 dBm transmit
    power, -80 dBm noise, free-space-like path-loss exponent 2, unit
    wavelength and half-wavelength minimum spacing on a 4-wavelength
    aperture with five antennas.
    """

    n_antennas: int = 5
    span_l: float = 4.0
    d_min: float = 0.5
    wavelength: float = 1.0
    tau: float = 2.0
    ps_dbm: float = 25.0
    sigma2_dbm: float = -80.0
    d_su: tuple = (100.0, 100.0)
    theta_su: tuple = (math.pi / 4.0, 9.0 * math.pi / 10.0)

    def __post_init__(self):
        object.__setattr__(self, "d_su", tuple(float(d) for d in self.d_su))
        object.__setattr__(self, "theta_su", tuple(float(t) for t in self.theta_su))
        if not isinstance(self.n_antennas, (int, np.integer)) or self.n_antennas < 2:
            raise ValueError("n_antennas must be an integer >= 2")
        object.__setattr__(self, "n_antennas", int(self.n_antennas))
        if not (self.span_l > 0.0):
            raise ValueError("span_l must be positive")
        if not (self.d_min > 0.0):
            raise ValueError("d_min must be positive")
        if (self.n_antennas - 1) * self.d_min > self.span_l + FEASIBILITY_TOL:
            raise ValueError(
                "infeasible geometry: (n_antennas - 1) * d_min = "
                f"{(self.n_antennas - 1) * self.d_min:g} exceeds span_l = {self.span_l:g}"
            )
        if not (self.wavelength > 0.0):
            raise ValueError("wavelength must be positive")
        if not (self.tau > 0.0):
            raise ValueError("tau must be positive")
        if not (math.isfinite(self.ps_dbm) and math.isfinite(self.sigma2_dbm)):
            raise ValueError("ps_dbm and sigma2_dbm must be finite")
        if len(self.d_su) != 2 or any(not (d > 0.0) for d in self.d_su):
            raise ValueError("d_su must be a pair of positive distances")
        if len(self.theta_su) != 2 or any(
            not (0.0 <= t <= math.pi) for t in self.theta_su
        ):
            raise ValueError("theta_su must be a pair of angles in [0, pi]")

    @property
    def ps_w(self) -> float:
        return dbm_to_watt(self.ps_dbm)

    @property
    def sigma2_w(self) -> float:
        return dbm_to_watt(self.sigma2_dbm)

    def snr_scale(self, user: int) -> float:
        """Per-user SNR prefactor ps / (d^tau * sigma^2) for user index 0 or 1."""
        return self.ps_w / (self.d_su[user] ** self.tau * self.sigma2_w)


def default_config(**overrides) -> SystemConfig:
    """Benchmark configuration, optionally with individual fields replaced."""
    return SystemConfig(**overrides)


@dataclass(frozen=True, eq=False)
class ChannelVector:
    """Unit-modulus steering entries together with the scalar path gain."""

    entries: np.ndarray
    gain: float = 1.0

    @property
    def full(self) -> np.ndarray:
        return self.gain * self.entries


@dataclass(frozen=True)
class SnrPair:
    """Receive SNRs of both users and the resulting common rate."""

    gamma_u1: float
    gamma_u2: float
    min_rate: float

    @classmethod
    def from_gammas(cls, gamma_u1: float, gamma_u2: float) -> "SnrPair":
        if gamma_u1 < 0.0 or gamma_u2 < 0.0:
            raise ValueError("SNRs must be nonnegative")
        return cls(gamma_u1, gamma_u2, math.log2(1.0 + min(gamma_u1, gamma_u2)))


def _as_position_array(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("positions must form a non-empty 1-D array")
    if not np.all(np.isfinite(x)):
        raise ValueError("positions must be finite")
    return x


def validate_positions(x, span_l: float, d_min: float, tol: float = FEASIBILITY_TOL) -> np.ndarray:
    """Check the ascending/spacing/aperture constraints and return x as floats."""
    x = _as_position_array(x)
    if x[0] < -tol:
        raise ValueError(f"first position {x[0]:g} lies left of the aperture")
    if x.size > 1 and np.min(np.diff(x)) < d_min - tol:
        raise ValueError(
            f"adjacent spacing {np.min(np.diff(x)):g} violates the minimum {d_min:g}"
        )
    if x[-1] > span_l + tol:
        raise ValueError(f"last position {x[-1]:g} exceeds the aperture span {span_l:g}")
    return x


def steering_vector(x, theta: float, wavelength: float = 1.0) -> ChannelVector:
    """Unit-gain steering vector of the array seen from direction theta.

    Parameters
    ----------
    x : array-like
        Ascending antenna positions in wavelengths.
    theta : float
        Physical angle of the user in radians.
    wavelength : float
        Carrier wavelength in the same unit as ``x``.
    """
    x = _as_position_array(x)
    if x.size > 1 and np.min(np.diff(x)) < -FEASIBILITY_TOL:
        raise ValueError("positions must be sorted ascending")
    if x[0] < -FEASIBILITY_TOL:
        raise ValueError("positions must be nonnegative")
    if not (wavelength > 0.0):
        raise ValueError("wavelength must be positive")
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    phase = (2.0 * math.pi / wavelength) * math.sin(theta)
    return ChannelVector(entries=np.exp(1j * phase * x), gain=1.0)


def channel_vector(x, cfg: SystemConfig, user: int) -> ChannelVector:
    """Line-of-sight channel of one user, path gain included."""
    if user not in (0, 1):
        raise ValueError("user must be 0 or 1")
    x = validate_positions(x, cfg.span_l, cfg.d_min)
    sv = steering_vector(x, cfg.theta_su[user], cfg.wavelength)
    gain = 1.0 / math.sqrt(cfg.d_su[user] ** cfg.tau)
    return ChannelVector(entries=sv.entries, gain=gain)


def _check_unit_norm(w) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    if w.ndim != 1:
        raise ValueError("beamformer must be a 1-D vector")
    nrm2 = float(np.vdot(w, w).real)
    if abs(nrm2 - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"beamformer norm^2 = {nrm2!r} is not 1 within {UNIT_NORM_TOL:g}")
    return w


def beam_gain(w, x, theta: float, wavelength: float = 1.0) -> float:
    """Array gain |h(theta)^T w|^2 of a unit-norm beamformer; lies in [0, N]."""
    w = _check_unit_norm(w)
    sv = steering_vector(x, theta, wavelength)
    if sv.entries.size != w.size:
        raise ValueError("beamformer length does not match the number of antennas")
    return float(abs(sv.entries @ w) ** 2)


def beam_pattern(w, x, thetas, wavelength: float = 1.0) -> np.ndarray:
    """Array gain evaluated over a batch of angles."""
    w = _check_unit_norm(w)
    x = _as_position_array(x)
    thetas = np.asarray(thetas, dtype=float)
    phases = (2.0 * math.pi / wavelength) * np.sin(thetas)
    ent = np.exp(1j * np.outer(phases, x))
    return np.abs(ent @ w) ** 2


def snr_pair(w, x, cfg: SystemConfig) -> SnrPair:
    """Receive SNRs of both users under beamformer w and positions x."""
    x = validate_positions(x, cfg.span_l, cfg.d_min)
    if x.size != cfg.n_antennas:
        raise ValueError("positions do not match n_antennas")
    gamma = tuple(
        cfg.snr_scale(i) * beam_gain(w, x, cfg.theta_su[i], cfg.wavelength)
        for i in (0, 1)
    )
    return SnrPair.from_gammas(*gamma)
