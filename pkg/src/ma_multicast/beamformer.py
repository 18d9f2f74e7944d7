"""Closed-form beamforming for the two-user max-min multicast problem.

Given fixed antenna positions the optimal unit beamformer lives in the span
of the two conjugated steering vectors; a single mixing parameter t in [0, 1]
trades the users off, and the best t follows from a three-case analysis.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .sysmodel import SystemConfig, steering_vector, validate_positions

# Below this norm the component of user 2's steering vector orthogonal to
# user 1's is considered numerically absent (channels parallel).
PARALLEL_TOL = 1e-8
# Relative slack for the endpoint comparisons of the case analysis.
CASE_SLACK = 1e-12


class CaseLabel(str, Enum):
    CROSSING = "crossing"
    LEFT_ENDPOINT = "left_endpoint"
    RIGHT_ENDPOINT = "right_endpoint"
    DEGENERATE_PARALLEL = "degenerate_parallel"


@dataclass(frozen=True, eq=False)
class Beamformer:
    """Unit-norm transmit vector, its mixing parameter and the case it came from."""

    w: np.ndarray
    t: float
    case_label: CaseLabel | None = None


@dataclass(frozen=True)
class ThetaCoefficients:
    """Coefficients of the min-SNR objective as a function of the mixing t alone."""

    a1: float
    a2: float
    a3: float
    f_max: float


def project_onto(v, u) -> np.ndarray:
    """Orthogonal projection of u onto the line spanned by v."""
    v = np.asarray(v, dtype=complex)
    u = np.asarray(u, dtype=complex)
    nv2 = float(np.vdot(v, v).real)
    if nv2 <= 0.0:
        raise ValueError("cannot project onto a zero vector")
    return v * (np.vdot(v, u) / nv2)


def project_complement(v, u) -> np.ndarray:
    """Component of u orthogonal to v."""
    u = np.asarray(u, dtype=complex)
    return u - project_onto(v, u)


def projection_coefficients(x, cfg: SystemConfig) -> tuple:
    """Gains (a, b, c) of the two users along and across the shared direction.

    a is user 1's gain along the in-span unit direction, b and c are user 2's
    gains along that direction and its orthogonal complement.  Computed from
    actual vector projections, not from any simplified expression.
    """
    x = validate_positions(x, cfg.span_l, cfg.d_min)
    h1 = steering_vector(x, cfg.theta_su[0], cfg.wavelength).entries
    h2 = steering_vector(x, cfg.theta_su[1], cfg.wavelength).entries
    p = project_onto(h1, h2)
    b = float(np.linalg.norm(p))
    c = float(np.linalg.norm(h2 - p))
    n = x.size
    if b < PARALLEL_TOL:
        # orthogonal channels: the in-span direction degenerates to h1 itself
        a = math.sqrt(n)
    else:
        a = float(abs(h1 @ np.conj(p)) / b)
    return a, b, c


def min_snr_from_correlation(t: float, f: float, cfg: SystemConfig) -> float:
    """Worst-user SNR as a function of the mixing t and the correlation f."""
    n = cfg.n_antennas
    if not (-CASE_SLACK <= t <= 1.0 + CASE_SLACK):
        raise ValueError("mixing parameter t must lie in [0, 1]")
    if not (-1e-9 <= f <= n + 1e-9):
        raise ValueError(f"correlation f = {f!r} outside [0, n_antennas]")
    t = min(max(t, 0.0), 1.0)
    f = min(max(f, 0.0), float(n))
    y1 = cfg.snr_scale(0) * n * t * t
    inner = (f / math.sqrt(n)) * t + math.sqrt(max(n - f * f / n, 0.0)) * math.sqrt(
        max(1.0 - t * t, 0.0)
    )
    y2 = cfg.snr_scale(1) * inner * inner
    return min(y1, y2)


def min_snr_from_projections(t: float, x, cfg: SystemConfig) -> float:
    """Worst-user SNR computed through explicit projections of the channels."""
    if not (-CASE_SLACK <= t <= 1.0 + CASE_SLACK):
        raise ValueError("mixing parameter t must lie in [0, 1]")
    t = min(max(t, 0.0), 1.0)
    a, b, c = projection_coefficients(x, cfg)
    y1 = cfg.snr_scale(0) * (a * t) ** 2
    if c < PARALLEL_TOL:
        # parallel channels: the complement direction carries nothing
        y2 = cfg.snr_scale(1) * (b * t) ** 2
    else:
        y2 = cfg.snr_scale(1) * (b * t + c * math.sqrt(max(1.0 - t * t, 0.0))) ** 2
    return min(y1, y2)


def theta_coefficients(f_max: float, cfg: SystemConfig) -> ThetaCoefficients:
    """Bundle the mixing objective's constants for a given correlation value."""
    n = cfg.n_antennas
    if not (-1e-9 <= f_max <= n + 1e-9):
        raise ValueError(f"correlation f_max = {f_max!r} outside [0, n_antennas]")
    f_max = min(max(f_max, 0.0), float(n))
    c2 = cfg.snr_scale(1)
    a1 = cfg.snr_scale(0) * n
    a2 = math.sqrt(c2) * f_max / math.sqrt(n)
    a3 = math.sqrt(c2 * max(n - f_max * f_max / n, 0.0))
    return ThetaCoefficients(a1=a1, a2=a2, a3=a3, f_max=f_max)


def theta_at(coeffs: ThetaCoefficients, t) -> np.ndarray | float:
    """Evaluate the min-SNR objective from its coefficients; accepts arrays."""
    t = np.asarray(t, dtype=float)
    y1 = coeffs.a1 * t * t
    y2 = (coeffs.a2 * t + coeffs.a3 * np.sqrt(np.maximum(1.0 - t * t, 0.0))) ** 2
    out = np.minimum(y1, y2)
    return float(out) if out.ndim == 0 else out


def optimize_mixing(coeffs: ThetaCoefficients, n: int) -> tuple:
    """Best mixing parameter for the min of the two SNR branches.

    The first branch grows with t, the second peaks at t = f/n and falls
    afterwards, so the maximizer is either an endpoint of [f/n, 1] or the
    crossing of the branches inside it.
    """
    a1, a2, a3 = coeffs.a1, coeffs.a2, coeffs.a3
    scale = math.sqrt(a2 * a2 + a3 * a3)
    if a3 <= CASE_SLACK * max(scale, 1.0):
        return 1.0, CaseLabel.DEGENERATE_PARALLEL
    t_left = min(max(coeffs.f_max / n, 0.0), 1.0)
    y1_left = a1 * t_left * t_left
    y2_left = (a2 * t_left + a3 * math.sqrt(max(1.0 - t_left * t_left, 0.0))) ** 2
    y1_right = a1
    y2_right = a2 * a2
    slack = CASE_SLACK * max(y1_left, y2_left, y1_right, y2_right, 1.0)
    if y2_left < y1_left - slack:
        return t_left, CaseLabel.LEFT_ENDPOINT
    if y2_right > y1_right + slack:
        return 1.0, CaseLabel.RIGHT_ENDPOINT
    t = a3 / math.sqrt((a2 - math.sqrt(a1)) ** 2 + a3 * a3)
    return min(max(t, 0.0), 1.0), CaseLabel.CROSSING


def build_beamformer(
    x, t: float, cfg: SystemConfig, case_label: CaseLabel | None = None
) -> Beamformer:
    """Assemble the unit beamformer for mixing t at positions x.

    The vector is t times the unit in-span direction plus sqrt(1 - t^2)
    times the unit complement direction (both conjugated), then rotated so
    its first significant entry is real nonnegative.
    """
    x = validate_positions(x, cfg.span_l, cfg.d_min)
    if x.size != cfg.n_antennas:
        raise ValueError("positions do not match n_antennas")
    if not (-CASE_SLACK <= t <= 1.0 + CASE_SLACK):
        raise ValueError("mixing parameter t must lie in [0, 1]")
    t = min(max(t, 0.0), 1.0)
    n = cfg.n_antennas
    h1 = steering_vector(x, cfg.theta_su[0], cfg.wavelength).entries
    h2 = steering_vector(x, cfg.theta_su[1], cfg.wavelength).entries
    p = project_onto(h1, h2)
    b = float(np.linalg.norm(p))
    perp = h2 - p
    c = float(np.linalg.norm(perp))
    if b < PARALLEL_TOL:
        p_hat = np.conj(h1) / math.sqrt(n)
    else:
        p_hat = np.conj(p) / b
    if c < PARALLEL_TOL:
        # parallel channels: only the in-span direction exists
        w = np.conj(h1) / math.sqrt(n)
        t = 1.0
        case_label = CaseLabel.DEGENERATE_PARALLEL
    else:
        w = t * p_hat + math.sqrt(1.0 - t * t) * np.conj(perp) / c
    sig = np.flatnonzero(np.abs(w) > 1e-12)
    if sig.size:
        lead = w[sig[0]]
        w = w * (np.conj(lead) / abs(lead))
    w = w / np.linalg.norm(w)
    return Beamformer(w=w, t=t, case_label=case_label)
