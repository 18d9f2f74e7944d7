"""The proposed correlation-first scheme and the comparison schemes.

Alternating optimization (AO) re-solves the beamformer in closed form for the
current positions, then improves the positions for the current beamformer by
successive concave minorization of the worst-user array gain.  The remaining
schemes quantize the aperture (APS), keep the optimized positions but point at
user 1 only (MA-MRT), or fix a half-wavelength grid (FPA).
"""

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .beamformer import (
    Beamformer,
    build_beamformer,
    optimize_mixing,
    theta_coefficients,
)
from .posopt import (
    correlation,
    correlation_objective,
    multi_start_sca,
    project_polytope,
    uniform_positions,
    random_positions,
)
from .sysmodel import FEASIBILITY_TOL, SnrPair, SystemConfig, snr_pair, steering_vector, validate_positions

APS_MAX_COMBINATIONS = 10_000_000
# absolute window for treating two grid subsets as tied on the objective
APS_TIE_TOL = 1e-9
# Half-wavelength spacing used by the fixed-array and quantized-grid schemes.
REFERENCE_SPACING = 0.5


class Scheme(str, Enum):
    PROPOSED = "proposed"
    AO = "ao"
    APS = "aps"
    MA_MRT = "ma_mrt"
    FPA = "fpa"


@dataclass(frozen=True, eq=False)
class SchemeResult:
    scheme: Scheme
    x: np.ndarray
    w: Beamformer
    snr: SnrPair
    trace: object = None


@dataclass(frozen=True, eq=False)
class AoTrace:
    """Worst-user rates recorded after each beamformer update."""

    min_rates: list
    outer_iterations: int
    converged: bool


def closed_form_beamformer(x, cfg: SystemConfig) -> Beamformer:
    """Optimal beamformer for fixed positions via the three-case mixing rule."""
    obj = correlation_objective(cfg)
    f = correlation(x, obj)
    t, label = optimize_mixing(theta_coefficients(f, cfg), cfg.n_antennas)
    return build_beamformer(x, t, cfg, label)


def proposed_scheme(cfg: SystemConfig, n_starts: int = 10, seed: int = 0) -> SchemeResult:
    """Correlation-first decoupled design: optimize positions, then the beamformer."""
    x, trace = multi_start_sca(cfg, n_starts=n_starts, seed=seed)
    bf = closed_form_beamformer(x, cfg)
    return SchemeResult(Scheme.PROPOSED, x, bf, snr_pair(bf.w, x, cfg), trace)


# ---------------------------------------------------------------------------
# Alternating optimization


def _user_kappas(cfg: SystemConfig) -> tuple:
    return tuple(
        (2.0 * math.pi / cfg.wavelength) * math.sin(cfg.theta_su[i]) for i in (0, 1)
    )


def _gain_and_grad(x: np.ndarray, w: np.ndarray, kappa: float):
    """|h(x)^T w|^2 and its position gradient for one user."""
    v = w * np.exp(1j * kappa * x)
    s = v.sum()
    gain = float(abs(s) ** 2)
    grad = -2.0 * kappa * np.imag(np.conj(s) * v)
    return gain, grad


def _fd_hessian_norm(x: np.ndarray, w: np.ndarray, kappa: float, h: float = 1e-4) -> float:
    n = x.size

    def gain(y):
        return float(abs((w * np.exp(1j * kappa * y)).sum()) ** 2)

    hess = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            val = (
                gain(x + ei + ej) - gain(x + ei - ej) - gain(x - ei + ej) + gain(x - ei - ej)
            ) / (4.0 * h * h)
            hess[i, j] = hess[j, i] = val
    return float(np.linalg.norm(hess, 2))


def _check_ao_curvature(x: np.ndarray, w: np.ndarray, cfg: SystemConfig, delta_w: float):
    for kappa in _user_kappas(cfg):
        norm = _fd_hessian_norm(x, w, kappa, h=1e-4)
        if norm > delta_w * (1.0 + 1e-3) + 1e-6:
            raise RuntimeError(
                "position-step curvature bound violated: finite-difference Hessian "
                f"norm {norm:g} exceeds delta_w {delta_w:g} (kappa {kappa:g})"
            )


def _ao_position_step(
    x_k: np.ndarray,
    w: np.ndarray,
    cfg: SystemConfig,
    max_rounds: int = 30,
    inner_iters: int = 200,
    tol: float = 1e-10,
) -> np.ndarray:
    """Improve min_i c_i |h_i(x)^T w|^2 from x_k while staying feasible.

    Each round freezes a concave quadratic minorant per user (shared curvature
    delta_w, branch slopes scaled to a common unit) and ascends their pointwise
    minimum by projected supergradient steps with the diminishing schedule
    2 / (delta_w (k + 2)) suited to its delta_w-strong concavity, keeping the
    best iterate so the true objective never decreases.
    """
    kappas = _user_kappas(cfg)
    c = np.array([cfg.snr_scale(0), cfg.snr_scale(1)])
    s = c / c.max()
    n = cfg.n_antennas
    delta_w = 2.0 * max(abs(k) for k in kappas) ** 2 * n

    def objective(y):
        return min(
            s[i] * _gain_and_grad(y, w, kappas[i])[0] for i in (0, 1)
        )

    x = np.asarray(x_k, dtype=float)
    val = objective(x)
    for _ in range(max_rounds):
        _check_ao_curvature(x, w, cfg, delta_w)
        base = [_gain_and_grad(x, w, kappas[i]) for i in (0, 1)]
        gains = np.array([b[0] for b in base])
        grads = [b[1] for b in base]

        def phi(y):
            d = y - x
            q = 0.5 * delta_w * float(d @ d)
            return min(s[i] * (gains[i] + float(grads[i] @ d)) - q for i in (0, 1))

        best_y, best_phi = x, phi(x)
        # each branch's own maximizer is a natural candidate before iterating
        for i in (0, 1):
            cand = project_polytope(x + s[i] * grads[i] / delta_w, cfg.span_l, cfg.d_min)
            phi_cand = phi(cand)
            if phi_cand > best_phi:
                best_y, best_phi = cand, phi_cand
        y = best_y
        for k in range(inner_iters):
            d = y - x
            branch = [s[i] * (gains[i] + float(grads[i] @ d)) for i in (0, 1)]
            i_star = int(np.argmin(branch))
            step = s[i_star] * grads[i_star] - delta_w * d
            alpha = 2.0 / (delta_w * (k + 2.0))
            y_new = project_polytope(y + alpha * step, cfg.span_l, cfg.d_min)
            move = float(np.linalg.norm(y_new - y))
            y = y_new
            phi_y = phi(y)
            if phi_y > best_phi:
                best_y, best_phi = y, phi_y
            if move <= 1e-13 * (1.0 + float(np.linalg.norm(y))):
                break
        val_new = objective(best_y)
        improvement = val_new - val
        if val_new >= val:
            x, val = best_y, val_new
        if improvement < tol:
            break
    return x


def ao_optimize(
    cfg: SystemConfig, init_x, outer_tol: float = 1e-8, max_outer: int = 100
) -> SchemeResult:
    """Alternate closed-form beamforming and position ascent from init_x."""
    x = validate_positions(init_x, cfg.span_l, cfg.d_min)
    if x.size != cfg.n_antennas:
        raise ValueError("init_x does not match n_antennas")
    rates = []
    converged = False
    bf = closed_form_beamformer(x, cfg)
    for _ in range(max_outer):
        snr = snr_pair(bf.w, x, cfg)
        rates.append(snr.min_rate)
        if len(rates) > 1 and rates[-1] - rates[-2] < outer_tol:
            converged = True
            break
        x = _ao_position_step(x, bf.w, cfg)
        bf = closed_form_beamformer(x, cfg)
    snr = snr_pair(bf.w, x, cfg)
    if not converged:
        # ran out of outer iterations: report the final synchronized pair
        rates.append(snr.min_rate)
    trace = AoTrace(min_rates=rates, outer_iterations=len(rates) - 1, converged=converged)
    return SchemeResult(Scheme.AO, x, bf, snr, trace)


def ao_scheme(cfg: SystemConfig, n_starts: int = 10, seed: int = 0) -> SchemeResult:
    """AO restarted from the same initial positions the proposed scheme uses.

    The alternation stops at whatever block fixed point the first beamformer
    balance pins it to, so a single run can settle well below the best known
    operating point.  The benchmark therefore takes the best over the shared
    starts plus a warm start at the correlation-ascent positions; from that
    last start AO either certifies the decoupled solution as a fixed point or
    improves on it.
    """
    rng = np.random.default_rng(seed)
    starts = [uniform_positions(cfg)]
    starts += [random_positions(cfg, rng) for _ in range(max(n_starts, 1) - 1)]
    warm, _trace = multi_start_sca(cfg, n_starts=n_starts, seed=seed)
    starts.append(warm)
    best = None
    for init in starts:
        result = ao_optimize(cfg, init)
        if best is None or result.snr.min_rate > best.snr.min_rate:
            best = result
    return best


# ---------------------------------------------------------------------------
# Grid / fixed-array schemes


def _grid_combination_chunks(m: int, n: int, gap: int, chunk: int = 100_000):
    """Index n-subsets of range(m) with consecutive gaps >= gap, in lex order."""
    reduced = m - (n - 1) * (gap - 1)
    if reduced < n:
        return
    shift = (gap - 1) * np.arange(n)
    combos = itertools.combinations(range(reduced), n)
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            return
        yield np.asarray(block, dtype=int) + shift


def aps_search(cfg: SystemConfig, grid_step: float = REFERENCE_SPACING) -> SchemeResult:
    """Exhaustive correlation maximization over a quantized aperture.

    Candidate positions live on {0, grid_step, 2 grid_step, ...}; subsets keep
    the minimum spacing.  Exact ties go to the lexicographically smallest
    subset.  Refuses blow-ups beyond APS_MAX_COMBINATIONS candidates.
    """
    if not (grid_step > 0.0):
        raise ValueError("grid_step must be positive")
    n = cfg.n_antennas
    m = int(math.floor(cfg.span_l / grid_step + FEASIBILITY_TOL)) + 1
    gap = max(1, math.ceil((cfg.d_min - FEASIBILITY_TOL) / grid_step))
    reduced = m - (n - 1) * (gap - 1)
    if reduced < n:
        raise ValueError("no feasible antenna subset on this grid")
    count = math.comb(reduced, n)
    if count > APS_MAX_COMBINATIONS:
        raise ValueError(
            f"{count} candidate subsets exceed the cap {APS_MAX_COMBINATIONS}; "
            "use a coarser grid_step"
        )
    obj = correlation_objective(cfg)
    values = grid_step * np.arange(m)
    best_f = -math.inf
    best_x = None
    # Subsets with identical inter-element difference multisets give the same
    # objective up to summation rounding, so ties are resolved within a small
    # absolute window; enumeration order is lexicographic and the first hit wins.
    for idx in _grid_combination_chunks(m, n, gap):
        pos = values[idx]
        f = np.abs(np.exp(1j * obj.kappa * pos).sum(axis=1))
        j = int(np.flatnonzero(f >= f.max() - APS_TIE_TOL)[0])
        if f[j] > best_f + APS_TIE_TOL:
            best_f = float(f[j])
            best_x = pos[j].copy()
    bf = closed_form_beamformer(best_x, cfg)
    return SchemeResult(Scheme.APS, best_x, bf, snr_pair(bf.w, best_x, cfg))


def ma_mrt(cfg: SystemConfig, n_starts: int = 10, seed: int = 0) -> SchemeResult:
    """Optimized positions but a matched filter pointed at user 1 only."""
    x, trace = multi_start_sca(cfg, n_starts=n_starts, seed=seed)
    h1 = steering_vector(x, cfg.theta_su[0], cfg.wavelength).entries
    w = np.conj(h1) / math.sqrt(cfg.n_antennas)
    bf = Beamformer(w=w, t=1.0, case_label=None)
    return SchemeResult(Scheme.MA_MRT, x, bf, snr_pair(w, x, cfg), trace)


def fpa_scheme(cfg: SystemConfig) -> SchemeResult:
    """Fixed array at half-wavelength spacing with the optimal beamformer."""
    n = cfg.n_antennas
    if (n - 1) * REFERENCE_SPACING > cfg.span_l + FEASIBILITY_TOL:
        raise ValueError("fixed half-wavelength array does not fit the aperture")
    if cfg.d_min > REFERENCE_SPACING + FEASIBILITY_TOL:
        raise ValueError("fixed half-wavelength spacing violates d_min")
    x = REFERENCE_SPACING * np.arange(n, dtype=float)
    bf = closed_form_beamformer(x, cfg)
    return SchemeResult(Scheme.FPA, x, bf, snr_pair(bf.w, x, cfg))


def run_scheme(
    scheme: Scheme,
    cfg: SystemConfig,
    n_starts: int = 10,
    seed: int = 0,
    aps_grid_step: float = REFERENCE_SPACING,
) -> SchemeResult:
    """Dispatch a scheme by name with shared defaults."""
    scheme = Scheme(scheme)
    if scheme is Scheme.PROPOSED:
        return proposed_scheme(cfg, n_starts=n_starts, seed=seed)
    if scheme is Scheme.AO:
        return ao_scheme(cfg, n_starts=n_starts, seed=seed)
    if scheme is Scheme.APS:
        return aps_search(cfg, grid_step=aps_grid_step)
    if scheme is Scheme.MA_MRT:
        return ma_mrt(cfg, n_starts=n_starts, seed=seed)
    return fpa_scheme(cfg)
