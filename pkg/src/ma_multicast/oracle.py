"""Brute-force references used to certify the optimizers on small instances."""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .beamformer import (
    PARALLEL_TOL,
    optimize_mixing,
    min_snr_from_projections,
    projection_coefficients,
    theta_coefficients,
)
from .posopt import correlation, correlation_objective, multi_start_sca
from .sysmodel import FEASIBILITY_TOL, SystemConfig

MAX_EVALUATIONS = 100_000_000
# relative window for treating grid candidates as tied on the objective
JOINT_TIE_RTOL = 1e-12
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GridSpec:
    """Resolution of the joint position/mixing search."""

    position_step: float = 0.05
    t_step: float = 1e-4
    n_max: int = 3

    def __post_init__(self):
        if not (self.position_step > 0.0):
            raise ValueError("position_step must be positive")
        if not (0.0 < self.t_step <= 0.01):
            raise ValueError("t_step must lie in (0, 0.01]")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")


class JointOptimum(NamedTuple):
    x: np.ndarray
    t: float
    min_rate: float


def _mixing_grid(t_step: float) -> np.ndarray:
    return np.linspace(0.0, 1.0, int(round(1.0 / t_step)) + 1)


def _feasible_tuples(values: np.ndarray, n: int, d_min: float):
    """All ascending n-tuples of grid values with spacing >= d_min, lex order."""
    m = len(values)

    def rec(start, prefix):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for i in range(start, m):
            if prefix and values[i] - prefix[-1] < d_min - FEASIBILITY_TOL:
                continue
            prefix.append(values[i])
            yield from rec(i + 1, prefix)
            prefix.pop()

    yield from rec(0, [])


def _tuple_chunks(values: np.ndarray, n: int, d_min: float, chunk: int = 128):
    block = []
    for tup in _feasible_tuples(values, n, d_min):
        block.append(tup)
        if len(block) == chunk:
            yield np.asarray(block, dtype=float)
            block = []
    if block:
        yield np.asarray(block, dtype=float)


def brute_force_joint(cfg: SystemConfig, grid: GridSpec = GridSpec()) -> JointOptimum:
    """Joint grid search over positions and mixing, via the projection route.

    Intended for tiny arrays only.  Translation invariance makes every shifted
    copy of an optimal spacing an exact tie up to summation rounding, so
    candidates within a small relative window count as equal and the
    lexicographically first position tuple (then the smallest t) wins.
    """
    n = cfg.n_antennas
    if n > grid.n_max:
        raise ValueError(f"brute force is capped at n_max = {grid.n_max} antennas")
    m = int(math.floor(cfg.span_l / grid.position_step + FEASIBILITY_TOL)) + 1
    gap = max(1, math.ceil((cfg.d_min - FEASIBILITY_TOL) / grid.position_step))
    reduced = m - (n - 1) * (gap - 1)
    if reduced < n:
        raise ValueError("no feasible position tuple on this grid")
    t_grid = _mixing_grid(grid.t_step)
    if math.comb(reduced, n) * t_grid.size > MAX_EVALUATIONS:
        raise ValueError(
            "grid search would exceed the evaluation cap; coarsen the grid"
        )
    values = grid.position_step * np.arange(m)
    kappa1 = (2.0 * math.pi / cfg.wavelength) * math.sin(cfg.theta_su[0])
    kappa2 = (2.0 * math.pi / cfg.wavelength) * math.sin(cfg.theta_su[1])
    c1, c2 = cfg.snr_scale(0), cfg.snr_scale(1)
    root = np.sqrt(np.maximum(1.0 - t_grid * t_grid, 0.0))
    best_theta = -math.inf
    best_x = None
    best_t = None
    for pos in _tuple_chunks(values, n, cfg.d_min):
        e1 = np.exp(1j * kappa1 * pos)
        e2 = np.exp(1j * kappa2 * pos)
        ip = (np.conj(e1) * e2).sum(axis=1)
        proj = e1 * (ip / n)[:, None]
        b = np.linalg.norm(proj, axis=1)
        residual = e2 - proj
        c_perp = np.linalg.norm(residual, axis=1)
        along = (e1 * np.conj(proj)).sum(axis=1)
        a = np.where(b > PARALLEL_TOL, np.abs(along) / np.maximum(b, 1e-300), math.sqrt(n))
        c_eff = np.where(c_perp < PARALLEL_TOL, 0.0, c_perp)
        y1 = c1 * (a[:, None] * t_grid[None, :]) ** 2
        y2 = c2 * (b[:, None] * t_grid[None, :] + c_eff[:, None] * root[None, :]) ** 2
        theta = np.minimum(y1, y2)
        row_best = theta.max(axis=1)
        tol = JOINT_TIE_RTOL * max(float(row_best.max()), 1.0)
        j = int(np.flatnonzero(row_best >= row_best.max() - tol)[0])
        if row_best[j] > best_theta + JOINT_TIE_RTOL * max(best_theta, 1.0):
            best_theta = float(row_best[j])
            best_x = pos[j].copy()
            row = theta[j]
            best_t = float(t_grid[int(np.flatnonzero(row >= row.max() - tol)[0])])
    return JointOptimum(x=best_x, t=best_t, min_rate=math.log2(1.0 + best_theta))


def _theta_from_gains(a: float, b: float, c: float, cfg: SystemConfig, t: float) -> float:
    y1 = cfg.snr_scale(0) * (a * t) ** 2
    c_eff = 0.0 if c < PARALLEL_TOL else c
    amp = b * t + c_eff * math.sqrt(max(1.0 - t * t, 0.0))
    return min(y1, cfg.snr_scale(1) * amp * amp)


def grid_best_t(x, cfg: SystemConfig, t_step: float = 1e-4, refine: bool = True) -> tuple:
    """Best mixing parameter for fixed positions by dense search over [0, 1].

    The min of a rising and a falling branch is unimodal, so after the grid
    pass a golden-section polish inside the winning bracket pins the kink down
    to machine precision; pass refine=False for the raw grid argmax.
    """
    if not (0.0 < t_step <= 0.01):
        raise ValueError("t_step must lie in (0, 0.01]")
    a, b, c = projection_coefficients(x, cfg)
    t_grid = _mixing_grid(t_step)
    root = np.sqrt(np.maximum(1.0 - t_grid * t_grid, 0.0))
    c_eff = 0.0 if c < PARALLEL_TOL else c
    y1 = cfg.snr_scale(0) * (a * t_grid) ** 2
    y2 = cfg.snr_scale(1) * (b * t_grid + c_eff * root) ** 2
    theta = np.minimum(y1, y2)
    j = int(np.argmax(theta))
    t_best, theta_best = float(t_grid[j]), float(theta[j])
    if not refine:
        return t_best, theta_best
    lo = max(t_best - t_step, 0.0)
    hi = min(t_best + t_step, 1.0)
    t_lo, t_hi = lo, hi
    t_c = t_hi - _INVPHI * (t_hi - t_lo)
    t_d = t_lo + _INVPHI * (t_hi - t_lo)
    f_c = _theta_from_gains(a, b, c, cfg, t_c)
    f_d = _theta_from_gains(a, b, c, cfg, t_d)
    for _ in range(200):
        if t_hi - t_lo <= 1e-15:
            break
        if f_c > f_d:
            t_hi, t_d, f_d = t_d, t_c, f_c
            t_c = t_hi - _INVPHI * (t_hi - t_lo)
            f_c = _theta_from_gains(a, b, c, cfg, t_c)
        else:
            t_lo, t_c, f_c = t_c, t_d, f_d
            t_d = t_lo + _INVPHI * (t_hi - t_lo)
            f_d = _theta_from_gains(a, b, c, cfg, t_d)
        cand_t, cand_f = (t_c, f_c) if f_c >= f_d else (t_d, f_d)
        if cand_f > theta_best:
            t_best, theta_best = cand_t, cand_f
    return t_best, theta_best


def snap_positions_to_grid(x, cfg: SystemConfig, step: float) -> np.ndarray:
    """Nearest feasible grid positions; requires d_min to sit on the grid."""
    ratio = cfg.d_min / step
    if abs(ratio - round(ratio)) > 1e-6:
        raise ValueError("d_min must be an integer multiple of the grid step")
    x = np.asarray(x, dtype=float)
    n = x.size
    offsets = cfg.d_min * np.arange(n)
    u = np.round((x - offsets) / step) * step
    hi = cfg.span_l - (n - 1) * cfg.d_min
    hi_grid = math.floor(hi / step + FEASIBILITY_TOL) * step
    np.clip(u, 0.0, max(hi_grid, 0.0), out=u)
    return u + offsets


def snap_mixing_to_grid(t: float, t_step: float) -> float:
    return min(max(round(t / t_step) * t_step, 0.0), 1.0)


def resolution_bound(cfg: SystemConfig, grid: GridSpec, theta_ref: float) -> float:
    """Worst-case rate loss of snapping an optimum onto the search grid.

    Combines the position Lipschitz constant of the correlation, the square
    root moduli of continuity of both complement terms, and the mixing-grid
    spacing, then maps the SNR increment into rate units at theta_ref.
    """
    obj = correlation_objective(cfg)
    k = abs(obj.kappa)
    n = cfg.n_antennas
    hx, ht = grid.position_step, grid.t_step
    df = k * n * hx / 2.0
    dg_pos = (df + math.sqrt(2.0 * n * df)) / math.sqrt(n)
    dg_mix = math.sqrt(n) * (ht + math.sqrt(2.0 * ht))
    dy2 = 2.0 * cfg.snr_scale(1) * math.sqrt(n) * (dg_pos + dg_mix)
    dy1 = 2.0 * cfg.snr_scale(0) * n * ht
    return max(dy1, dy2) / ((1.0 + max(theta_ref, 0.0)) * math.log(2.0))


def joint_vs_decoupled(
    cfg: SystemConfig,
    grid: GridSpec = GridSpec(),
    n_starts: int = 10,
    seed: int = 0,
) -> dict:
    """Compare the decoupled pipeline against the joint grid optimum.

    The decoupled solution is snapped onto the search grid; the joint optimum
    can then exceed it by at most the grid resolution bound if correlation
    maximization alone is enough to pick the positions.
    """
    joint = brute_force_joint(cfg, grid)
    x_dec, _ = multi_start_sca(cfg, n_starts=n_starts, seed=seed)
    obj = correlation_objective(cfg)
    f = correlation(x_dec, obj)
    t_dec, _label = optimize_mixing(theta_coefficients(f, cfg), cfg.n_antennas)
    theta_dec = min_snr_from_projections(t_dec, x_dec, cfg)
    x_snap = snap_positions_to_grid(x_dec, cfg, grid.position_step)
    t_snap = snap_mixing_to_grid(t_dec, grid.t_step)
    theta_snap = min_snr_from_projections(t_snap, x_snap, cfg)
    theta_joint = min_snr_from_projections(joint.t, joint.x, cfg)
    eps = resolution_bound(cfg, grid, min(theta_joint, theta_snap))
    gap = joint.min_rate - math.log2(1.0 + theta_snap)
    return {
        "rate_joint": joint.min_rate,
        "rate_decoupled": math.log2(1.0 + theta_dec),
        "rate_decoupled_snapped": math.log2(1.0 + theta_snap),
        "epsilon_rate": eps,
        "gap_rate": gap,
        "passed": bool(-1e-9 <= gap <= eps + 1e-12),
        "x_joint": joint.x.tolist(),
        "t_joint": joint.t,
        "x_decoupled": np.asarray(x_dec, dtype=float).tolist(),
        "t_decoupled": t_dec,
    }
