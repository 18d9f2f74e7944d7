"""Experiment harness: JSON config in, JSON/CSV artifacts out, CLI front end.

All runs are deterministic for a fixed (config, seed) pair.  Sweep points are
independent tasks; set MA_MULTICAST_WORKERS to run them on a thread pool
(results are assembled in sweep order either way).
"""

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .baselines import REFERENCE_SPACING, Scheme, SchemeResult, run_scheme
from .beamformer import (
    min_snr_from_correlation,
    min_snr_from_projections,
    optimize_mixing,
    projection_coefficients,
    theta_at,
    theta_coefficients,
)
from .oracle import GridSpec, grid_best_t, joint_vs_decoupled
from .posopt import correlation, correlation_objective, random_positions
from .sysmodel import FEASIBILITY_TOL, SystemConfig, beam_pattern

log = logging.getLogger(__name__)

WORKERS_ENV_VAR = "MA_MULTICAST_WORKERS"
VALIDATION_SEED = 20240517


class ConfigError(Exception):
    """Configuration document rejected; the message carries the field path."""


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig
    schemes: tuple
    seed: int = 1
    n_starts: int = 10
    aps_grid_step: float = REFERENCE_SPACING
    sweep: dict | None = None
    output_dir: str = "."


def default_experiment() -> ExperimentConfig:
    return ExperimentConfig(system=SystemConfig(), schemes=tuple(Scheme))


# ---------------------------------------------------------------------------
# Config ingestion


def _expect_number(value, path, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite")
    if positive and value <= 0.0:
        raise ConfigError(f"{path}: must be positive")
    return value


def _expect_int(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}")
    return value


def _expect_pair(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{path}: expected a pair of numbers")
    return tuple(_expect_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _system_from_dict(doc, path="system") -> SystemConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected an object")
    known = {
        "n_antennas",
        "span_l",
        "d_min",
        "wavelength",
        "tau",
        "ps_dbm",
        "sigma2_dbm",
        "d_su",
        "theta_su",
    }
    for key in doc:
        if key not in known:
            raise ConfigError(f"{path}.{key}: unknown field")
    kwargs = {}
    if "n_antennas" in doc:
        kwargs["n_antennas"] = _expect_int(doc["n_antennas"], f"{path}.n_antennas", minimum=2)
    for key in ("span_l", "d_min", "wavelength", "tau"):
        if key in doc:
            kwargs[key] = _expect_number(doc[key], f"{path}.{key}", positive=True)
    for key in ("ps_dbm", "sigma2_dbm"):
        if key in doc:
            kwargs[key] = _expect_number(doc[key], f"{path}.{key}")
    if "d_su" in doc:
        kwargs["d_su"] = _expect_pair(doc["d_su"], f"{path}.d_su")
    if "theta_su" in doc:
        kwargs["theta_su"] = _expect_pair(doc["theta_su"], f"{path}.theta_su")
    try:
        return SystemConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _sweep_from_dict(doc, path="sweep"):
    if doc is None:
        return None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected an object")
    kind = doc.get("kind")
    if kind == "over_n":
        keys = {"kind", "n_min", "n_max"}
        out = {
            "kind": kind,
            "n_min": _expect_int(doc.get("n_min"), f"{path}.n_min", minimum=2),
            "n_max": _expect_int(doc.get("n_max"), f"{path}.n_max", minimum=2),
        }
    elif kind == "over_l":
        keys = {"kind", "l_min", "l_max", "l_step"}
        out = {
            "kind": kind,
            "l_min": _expect_number(doc.get("l_min"), f"{path}.l_min", positive=True),
            "l_max": _expect_number(doc.get("l_max"), f"{path}.l_max", positive=True),
            "l_step": _expect_number(doc.get("l_step"), f"{path}.l_step", positive=True),
        }
    elif kind == "beam_pattern":
        keys = {"kind", "angle_count"}
        out = {
            "kind": kind,
            "angle_count": _expect_int(doc.get("angle_count"), f"{path}.angle_count", minimum=2),
        }
    else:
        raise ConfigError(f"{path}.kind: expected one of over_n, over_l, beam_pattern")
    for key in doc:
        if key not in keys:
            raise ConfigError(f"{path}.{key}: unknown field")
    return out


def config_from_dict(doc) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected an object")
    known = {"system", "schemes", "seed", "n_starts", "aps_grid_step", "sweep", "output_dir"}
    for key in doc:
        if key not in known:
            raise ConfigError(f"{key}: unknown field")
    system = _system_from_dict(doc.get("system", {}))
    raw_schemes = doc.get("schemes", [s.value for s in Scheme])
    if not isinstance(raw_schemes, list) or not raw_schemes:
        raise ConfigError("schemes: expected a non-empty list")
    schemes = []
    for i, name in enumerate(raw_schemes):
        try:
            schemes.append(Scheme(name))
        except ValueError:
            valid = ", ".join(s.value for s in Scheme)
            raise ConfigError(f"schemes[{i}]: unknown scheme {name!r} (valid: {valid})")
    seed = _expect_int(doc.get("seed", 1), "seed", minimum=0)
    n_starts = _expect_int(doc.get("n_starts", 10), "n_starts", minimum=1)
    aps_grid_step = _expect_number(doc.get("aps_grid_step", REFERENCE_SPACING), "aps_grid_step", positive=True)
    sweep = _sweep_from_dict(doc.get("sweep"))
    output_dir = doc.get("output_dir", ".")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir: expected a string")
    return ExperimentConfig(
        system=system,
        schemes=tuple(schemes),
        seed=seed,
        n_starts=n_starts,
        aps_grid_step=aps_grid_step,
        sweep=sweep,
        output_dir=output_dir,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


# ---------------------------------------------------------------------------
# Runs


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV_VAR, "")
    try:
        workers = int(raw)
    except ValueError:
        return 1
    return max(workers, 1)


def _map_tasks(fn, items):
    items = list(items)
    workers = _worker_count()
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _db(value: float):
    return 10.0 * math.log10(value) if value > 0.0 else None


def _result_dict(res: SchemeResult, cfg: SystemConfig) -> dict:
    obj = correlation_objective(cfg)
    iterations = None
    trace = res.trace
    if trace is not None:
        iterations = getattr(trace, "iterations", None)
        if iterations is None:
            iterations = getattr(trace, "outer_iterations", None)
    return {
        "x": [float(v) for v in res.x],
        "w_re": [float(v) for v in res.w.w.real],
        "w_im": [float(v) for v in res.w.w.imag],
        "t": float(res.w.t),
        "case": res.w.case_label.value if res.w.case_label is not None else None,
        "gamma_u1": float(res.snr.gamma_u1),
        "gamma_u2": float(res.snr.gamma_u2),
        "gamma_u1_db": _db(res.snr.gamma_u1),
        "gamma_u2_db": _db(res.snr.gamma_u2),
        "min_rate_bps_hz": float(res.snr.min_rate),
        "correlation": correlation(res.x, obj),
        "iterations": iterations,
    }


def _system_dict(cfg: SystemConfig) -> dict:
    return {
        "n_antennas": cfg.n_antennas,
        "span_l": cfg.span_l,
        "d_min": cfg.d_min,
        "wavelength": cfg.wavelength,
        "tau": cfg.tau,
        "ps_dbm": cfg.ps_dbm,
        "sigma2_dbm": cfg.sigma2_dbm,
        "d_su": list(cfg.d_su),
        "theta_su": list(cfg.theta_su),
    }


def run_single(exp: ExperimentConfig) -> dict:
    report = {
        "config": {
            "system": _system_dict(exp.system),
            "schemes": [s.value for s in exp.schemes],
            "seed": exp.seed,
            "n_starts": exp.n_starts,
            "aps_grid_step": exp.aps_grid_step,
        },
        "schemes": {},
    }
    for scheme in exp.schemes:
        res = run_scheme(scheme, exp.system, exp.n_starts, exp.seed, exp.aps_grid_step)
        report["schemes"][scheme.value] = _result_dict(res, exp.system)
    return report


def run_beampattern(exp: ExperimentConfig, angle_count: int = 361):
    if angle_count < 2:
        raise ValueError("angle_count must be >= 2")
    thetas = np.linspace(0.0, math.pi, angle_count)
    rows = []
    for scheme in exp.schemes:
        res = run_scheme(scheme, exp.system, exp.n_starts, exp.seed, exp.aps_grid_step)
        gains = beam_pattern(res.w.w, res.x, thetas, exp.system.wavelength)
        rows.extend(
            (float(th), scheme.value, float(g)) for th, g in zip(thetas, gains)
        )
    return rows


def _sweep_point(exp: ExperimentConfig, cfg: SystemConfig, label: str):
    """Rates of every scheme at one sweep point; infeasible schemes are skipped."""
    rates = []
    skips = []
    for scheme in exp.schemes:
        try:
            res = run_scheme(scheme, cfg, exp.n_starts, exp.seed, exp.aps_grid_step)
        except ValueError as exc:
            skips.append(f"{label} scheme={scheme.value}: {exc}")
            continue
        rates.append((scheme.value, res.snr.min_rate))
    return rates, skips


def run_sweep_n(exp: ExperimentConfig, n_min: int, n_max: int):
    if n_min < 2 or n_max < n_min:
        raise ValueError("need 2 <= n_min <= n_max")
    points = list(range(n_min, n_max + 1))

    def task(n):
        if (n - 1) * exp.system.d_min > exp.system.span_l + FEASIBILITY_TOL:
            return n, None, [f"n={n}: (n - 1) * d_min exceeds span_l"]
        cfg = replace(exp.system, n_antennas=n)
        rates, skips = _sweep_point(exp, cfg, f"n={n}")
        return n, rates, skips

    rows = []
    skips = []
    for n, rates, point_skips in _map_tasks(task, points):
        for message in point_skips:
            log.warning("sweep-n skip: %s", message)
            skips.append(message)
        if rates:
            rows.extend((n, scheme, rate) for scheme, rate in rates)
    return rows, skips


def run_sweep_l(exp: ExperimentConfig, l_min: float, l_max: float, l_step: float):
    if not (l_min > 0.0 and l_step > 0.0 and l_max >= l_min):
        raise ValueError("need 0 < l_min <= l_max and l_step > 0")
    count = int(math.floor((l_max - l_min) / l_step + FEASIBILITY_TOL)) + 1
    points = [l_min + k * l_step for k in range(count)]

    def task(l_value):
        if (exp.system.n_antennas - 1) * exp.system.d_min > l_value + FEASIBILITY_TOL:
            return l_value, None, [f"l={l_value:g}: smaller than (n - 1) * d_min"]
        cfg = replace(exp.system, span_l=l_value)
        rates, skips = _sweep_point(exp, cfg, f"l={l_value:g}")
        return l_value, rates, skips

    rows = []
    skips = []
    for l_value, rates, point_skips in _map_tasks(task, points):
        for message in point_skips:
            log.warning("sweep-l skip: %s", message)
            skips.append(message)
        if rates:
            rows.extend((l_value, scheme, rate) for scheme, rate in rates)
    return rows, skips


# ---------------------------------------------------------------------------
# Output formatting


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def write_csv(path, header, rows):
    """CSV with 12-significant-digit numbers, '.' decimal separator, LF endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(cell) for cell in row) + "\n")


def write_json(path, document):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Validation suite


def _random_validation_config(rng, n=None, span=None) -> SystemConfig:
    n = int(n if n is not None else rng.integers(2, 9))
    while True:
        th1, th2 = rng.uniform(0.0, math.pi, 2)
        if abs(math.sin(th2) - math.sin(th1)) >= 0.05:
            break
    d1, d2 = np.exp(rng.uniform(math.log(20.0), math.log(500.0), 2))
    span_l = span if span is not None else (n - 1) * 0.5 + rng.uniform(0.5, 4.0)
    return SystemConfig(
        n_antennas=n,
        span_l=float(span_l),
        d_su=(float(d1), float(d2)),
        theta_su=(float(th1), float(th2)),
    )


def _check_path_equivalence(rng, samples: int) -> dict:
    worst = 0.0
    for _ in range(samples):
        cfg = _random_validation_config(rng)
        x = random_positions(cfg, rng)
        t = float(rng.uniform())
        f = correlation(x, correlation_objective(cfg))
        va = min_snr_from_correlation(t, f, cfg)
        vb = min_snr_from_projections(t, x, cfg)
        worst = max(worst, abs(va - vb) / max(abs(va), abs(vb), 1e-300))
    return {
        "name": "min_snr_path_equivalence",
        "samples": samples,
        "worst_rel_diff": worst,
        "passed": bool(worst <= 1e-9),
    }


def _check_projection_identities(rng, samples: int) -> dict:
    worst = 0.0
    for _ in range(samples):
        cfg = _random_validation_config(rng)
        x = random_positions(cfg, rng)
        a, b, c = projection_coefficients(x, cfg)
        n = cfg.n_antennas
        worst = max(
            worst,
            abs(a - math.sqrt(n)) / math.sqrt(n),
            abs(b * b + c * c - n) / n,
        )
    return {
        "name": "projection_identities",
        "samples": samples,
        "worst_rel_diff": worst,
        "passed": bool(worst <= 1e-9),
    }


def _check_mixing_rule(rng, samples: int) -> dict:
    worst = 0.0
    for _ in range(samples):
        cfg = _random_validation_config(rng)
        x = random_positions(cfg, rng)
        f = correlation(x, correlation_objective(cfg))
        coeffs = theta_coefficients(f, cfg)
        t_star, _label = optimize_mixing(coeffs, cfg.n_antennas)
        theta_closed = float(theta_at(coeffs, t_star))
        _t_ref, theta_ref = grid_best_t(x, cfg, t_step=1e-5)
        worst = max(worst, abs(theta_closed - theta_ref) / max(theta_closed, theta_ref, 1e-300))
    return {
        "name": "closed_form_mixing_vs_grid",
        "samples": samples,
        "worst_rel_diff": worst,
        "passed": bool(worst <= 1e-6),
    }


def _check_separation(rng, pairs_per_n: int, grid: GridSpec) -> dict:
    details = []
    passed = True
    for n in (2, 3):
        for _ in range(pairs_per_n):
            cfg = _random_validation_config(rng, n=n, span=2.0)
            outcome = joint_vs_decoupled(cfg, grid, n_starts=10, seed=0)
            outcome["n_antennas"] = n
            outcome["theta_su"] = list(cfg.theta_su)
            details.append(outcome)
            passed = passed and outcome["passed"]
    return {
        "name": "separation_certificate",
        "grid": {"position_step": grid.position_step, "t_step": grid.t_step},
        "runs": details,
        "passed": bool(passed),
    }


def run_validate(quick: bool = False) -> tuple:
    """Deterministic self-check suite; returns (report, all_passed)."""
    rng = np.random.default_rng(VALIDATION_SEED)
    checks = [
        _check_path_equivalence(rng, 40 if quick else 200),
        _check_projection_identities(rng, 40 if quick else 200),
        _check_mixing_rule(rng, 10 if quick else 40),
        _check_separation(
            rng,
            pairs_per_n=2 if quick else 6,
            grid=GridSpec(0.1, 1e-3, 3) if quick else GridSpec(0.05, 1e-4, 3),
        ),
    ]
    passed = all(c["passed"] for c in checks)
    return {"quick": quick, "checks": checks, "passed": passed}, passed


# ---------------------------------------------------------------------------
# CLI


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ma-multicast",
        description="Max-min rate experiments for a two-user movable-antenna multicast downlink",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_opt = sub.add_parser("optimize", help="run every configured scheme once")
    p_opt.add_argument("--config", help="JSON experiment configuration")
    p_opt.add_argument("--out", default="result.json", help="output JSON path")

    p_beam = sub.add_parser("beampattern", help="array gain over angles for each scheme")
    p_beam.add_argument("--config", help="JSON experiment configuration")
    p_beam.add_argument("--points", type=int, default=None, help="number of angle samples")
    p_beam.add_argument("--out", default="beampattern.csv", help="output CSV path")

    p_n = sub.add_parser("sweep-n", help="rates versus the number of antennas")
    p_n.add_argument("--config", help="JSON experiment configuration")
    p_n.add_argument("--n-min", type=int, default=None)
    p_n.add_argument("--n-max", type=int, default=None)
    p_n.add_argument("--out", default="sweep_n.csv", help="output CSV path")

    p_l = sub.add_parser("sweep-l", help="rates versus the aperture span")
    p_l.add_argument("--config", help="JSON experiment configuration")
    p_l.add_argument("--l-min", type=float, default=None)
    p_l.add_argument("--l-max", type=float, default=None)
    p_l.add_argument("--l-step", type=float, default=None)
    p_l.add_argument("--out", default="sweep_l.csv", help="output CSV path")

    p_val = sub.add_parser("validate", help="run the oracle-backed self checks")
    p_val.add_argument("--quick", action="store_true", help="reduced sample counts")
    p_val.add_argument("--out", default=None, help="optional JSON report path")
    return parser


def _sweep_param(args_value, sweep, kind, key, label):
    if args_value is not None:
        return args_value
    if sweep and sweep.get("kind") == kind and key in sweep:
        return sweep[key]
    raise ConfigError(f"{label} is required (flag or sweep section of the config)")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        exp = load_config(args.config) if getattr(args, "config", None) else default_experiment()
        if args.command == "optimize":
            write_json(args.out, run_single(exp))
            print(f"wrote {args.out}")
        elif args.command == "beampattern":
            points = args.points
            if points is None:
                sweep = exp.sweep or {}
                points = sweep.get("angle_count", 361) if sweep.get("kind") == "beam_pattern" else 361
            rows = run_beampattern(exp, points)
            write_csv(args.out, ["theta_rad", "scheme", "gain"], rows)
            print(f"wrote {args.out} ({len(rows)} rows)")
        elif args.command == "sweep-n":
            n_min = _sweep_param(args.n_min, exp.sweep, "over_n", "n_min", "--n-min")
            n_max = _sweep_param(args.n_max, exp.sweep, "over_n", "n_max", "--n-max")
            rows, skips = run_sweep_n(exp, n_min, n_max)
            write_csv(args.out, ["n", "scheme", "min_rate_bps_hz"], rows)
            print(f"wrote {args.out} ({len(rows)} rows, {len(skips)} skips)")
        elif args.command == "sweep-l":
            l_min = _sweep_param(args.l_min, exp.sweep, "over_l", "l_min", "--l-min")
            l_max = _sweep_param(args.l_max, exp.sweep, "over_l", "l_max", "--l-max")
            l_step = _sweep_param(args.l_step, exp.sweep, "over_l", "l_step", "--l-step")
            rows, skips = run_sweep_l(exp, l_min, l_max, l_step)
            write_csv(args.out, ["l", "scheme", "min_rate_bps_hz"], rows)
            print(f"wrote {args.out} ({len(rows)} rows, {len(skips)} skips)")
        elif args.command == "validate":
            report, passed = run_validate(quick=args.quick)
            for check in report["checks"]:
                status = "PASS" if check["passed"] else "FAIL"
                print(f"[{status}] {check['name']}")
            if args.out:
                write_json(args.out, report)
                print(f"wrote {args.out}")
            if not passed:
                return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return 0


def cli_entry():
    sys.exit(main())
