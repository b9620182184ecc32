"""Command-line experiment harness emitting CSV result tables.

Three experiments: per-iteration convergence of the two optimizers, mean
min-SINR versus transmit power for all schemes, and the same sweep with user
positions redrawn uniformly inside the base-station triangle each trial.
Configuration comes from an INI file (sections: scenario, algorithm,
experiment) with unknown keys rejected; command-line flags override file
values. All randomness is seeded, so result values are reproducible from the
config alone; wall-clock columns are the only machine-dependent output.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import conic
from .driver import AlgorithmOptions, InitKind, Variant, compare_schemes, run
from .scenario import (
    ScenarioSpec,
    dbm_to_watt,
    linear_to_db,
    paper_default_scenario,
    scenario_from_mapping,
)

__all__ = ["ExperimentConfig", "cmd_convergence", "cmd_power_sweep",
           "cmd_random_users", "main"]

_TAG_USER_POS = 0x1B5EED04

_ALGORITHM_KEYS = {"variant", "epsilon", "max_iters", "init_v", "init_seed",
                   "bisection_tol", "randomization_count", "solver_tol"}
_EXPERIMENT_KEYS = {"trials", "p_max_dbm", "base_seed", "out_dir"}
_SECTIONS = {"scenario", "algorithm", "experiment"}

_SCHEME_ORDER = (Variant.SCA, Variant.SDR, Variant.RANDOM_PHASE, Variant.NO_IRS)


class CliError(Exception):
    """Bad configuration or a failed run; message is the user diagnostic."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioSpec
    algorithm: AlgorithmOptions
    out_dir: str
    kind: str
    trials: int
    p_max_dbm: tuple
    base_seed: int
    schemes: tuple = _SCHEME_ORDER

    def __post_init__(self):
        if self.kind not in ("convergence", "power-sweep", "random-users"):
            raise CliError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise CliError("trials must be >= 1")
        if not self.p_max_dbm:
            raise CliError("at least one power level is required")
        if self.kind != "convergence":
            diffs = np.diff(self.p_max_dbm)
            if len(diffs) and not np.all(diffs > 0):
                raise CliError("power sweep list must be strictly increasing")
        elif len(self.p_max_dbm) != 1:
            raise CliError("convergence runs at a single power level")


def _parse_float_or_none(text):
    return None if text.strip().lower() == "none" else float(text)


def _algorithm_from_mapping(mapping, base=AlgorithmOptions()):
    unknown = set(mapping) - _ALGORITHM_KEYS
    if unknown:
        raise CliError(f"unknown algorithm keys: {sorted(unknown)}")
    kwargs = {}
    try:
        if "variant" in mapping:
            kwargs["variant"] = Variant(mapping["variant"].strip())
        if "epsilon" in mapping:
            kwargs["epsilon"] = float(mapping["epsilon"])
        if "max_iters" in mapping:
            kwargs["max_iters"] = int(mapping["max_iters"])
        if "init_v" in mapping:
            kwargs["init_v"] = InitKind(mapping["init_v"].strip())
        if "init_seed" in mapping:
            kwargs["init_seed"] = int(mapping["init_seed"])
        if "bisection_tol" in mapping:
            kwargs["bisection_tol"] = _parse_float_or_none(mapping["bisection_tol"])
        if "randomization_count" in mapping:
            kwargs["randomization_count"] = int(mapping["randomization_count"])
        if "solver_tol" in mapping:
            kwargs["solver_tol"] = float(mapping["solver_tol"])
    except ValueError as exc:
        raise CliError(f"bad algorithm value: {exc}") from exc
    return replace(base, **kwargs)


def _read_config_file(path):
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise CliError(f"cannot read config file {path}")
    extra = set(cp.sections()) - _SECTIONS
    if extra:
        raise CliError(f"unknown config sections in {path}: {sorted(extra)}")
    return cp


def _experiment_config(args):
    """Merge defaults, the optional config file, and command-line flags."""
    scenario = None
    algorithm = AlgorithmOptions()
    trials = 20
    p_max = None
    base_seed = 1
    out_dir = "."

    if args.config is not None:
        cp = _read_config_file(args.config)
        if cp.has_section("scenario"):
            try:
                scenario = scenario_from_mapping(dict(cp["scenario"]))
            except ValueError as exc:
                raise CliError(f"bad scenario in {args.config}: {exc}") from exc
        if cp.has_section("algorithm"):
            algorithm = _algorithm_from_mapping(dict(cp["algorithm"]), algorithm)
        if cp.has_section("experiment"):
            exp = dict(cp["experiment"])
            unknown = set(exp) - _EXPERIMENT_KEYS
            if unknown:
                raise CliError(f"unknown experiment keys: {sorted(unknown)}")
            try:
                if "trials" in exp:
                    trials = int(exp["trials"])
                if "p_max_dbm" in exp:
                    p_max = tuple(float(s) for s in exp["p_max_dbm"].split(","))
                if "base_seed" in exp:
                    base_seed = int(exp["base_seed"])
            except ValueError as exc:
                raise CliError(f"bad experiment value: {exc}") from exc
            out_dir = exp.get("out_dir", out_dir)

    if args.seed is not None:
        base_seed = args.seed
    if getattr(args, "trials", None) is not None:
        trials = args.trials
    if args.pmax is not None:
        try:
            p_max = tuple(float(s) for s in args.pmax.split(","))
        except ValueError as exc:
            raise CliError(f"bad --pmax value {args.pmax!r}") from exc
    if p_max is None:
        p_max = (35.0,)
    if args.out is not None:
        out_dir = args.out
    if args.max_iters is not None:
        algorithm = replace(algorithm, max_iters=args.max_iters)
    if args.epsilon is not None:
        algorithm = replace(algorithm, epsilon=args.epsilon)

    schemes = _SCHEME_ORDER
    if getattr(args, "variant", None) is not None and args.variant != "all":
        schemes = (Variant(args.variant),)

    if scenario is None:
        scenario = paper_default_scenario(p_max[0], seed=base_seed)
    elif args.seed is not None:
        scenario = replace(scenario, seed=base_seed)

    try:
        return ExperimentConfig(scenario=scenario, algorithm=algorithm,
                                out_dir=out_dir, kind=args.command,
                                trials=trials, p_max_dbm=p_max,
                                base_seed=base_seed, schemes=schemes)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _fmt(x):
    if x is None:
        return ""
    return f"{x:.10g}"


def _write_csv(path, header, rows):
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from exc
    return path


def _powered(scenario, p_dbm):
    K = scenario.config.num_cells
    cfg = replace(scenario.config, power_budget=np.full(K, dbm_to_watt(p_dbm)))
    return replace(scenario, config=cfg)


def cmd_convergence(cfg):
    """One seeded run of each optimizer; per-iteration objective and time."""
    scenario = _powered(cfg.scenario, cfg.p_max_dbm[0])
    traces = {}
    for variant in (Variant.SCA, Variant.SDR):
        trace = run(scenario, replace(cfg.algorithm, variant=variant))
        if trace.failure is not None:
            raise CliError(f"{variant.value} run failed: {trace.failure}")
        traces[variant] = trace

    def columns(trace):
        vals = [linear_to_db(r.after_v_update) for r in trace.records]
        elapsed = np.cumsum([r.duration_s for r in trace.records])
        return vals, list(elapsed)

    sca_vals, sca_el = columns(traces[Variant.SCA])
    sdr_vals, sdr_el = columns(traces[Variant.SDR])
    depth = max(len(sca_vals), len(sdr_vals))

    def cell(seq, i):
        return _fmt(seq[i]) if i < len(seq) else ""

    rows = [[i + 1, cell(sca_vals, i), cell(sdr_vals, i),
             cell(sca_el, i), cell(sdr_el, i)] for i in range(depth)]
    return _write_csv(os.path.join(cfg.out_dir, "convergence.csv"),
                      ["iteration", "min_sinr_db_sca", "min_sinr_db_sdr",
                       "elapsed_s_sca", "elapsed_s_sdr"], rows)


def _sweep_rows(cfg, scenario_for_trial):
    """Mean min-SINR rows over trials, per power level and scheme.

    scenario_for_trial(trial) supplies the geometry for that trial; power and
    channel seed are applied on top of it here.
    """
    rows = []
    warnings = []
    for p_dbm in cfg.p_max_dbm:
        for variant in cfg.schemes:
            vals = []
            failed = 0
            for trial in range(cfg.trials):
                spec = _powered(scenario_for_trial(trial), p_dbm)
                spec = replace(spec, seed=cfg.base_seed + trial)
                trace = run(spec, replace(cfg.algorithm, variant=variant))
                if trace.failure is not None:
                    failed += 1
                    continue
                vals.append(trace.final_min_sinr)
            mean_db = float(linear_to_db(np.mean(vals))) if vals else float("nan")
            rows.append([_fmt(float(p_dbm)), variant.value, _fmt(mean_db),
                         len(vals)])
            if failed:
                warnings.append(f"{variant.value} at {p_dbm} dBm: "
                                f"{failed} of {cfg.trials} trials failed")
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return rows


def cmd_power_sweep(cfg):
    """Mean min-SINR of every scheme across the power list."""
    table = compare_schemes(cfg.scenario, list(cfg.p_max_dbm), cfg.trials,
                            cfg.base_seed, opts=cfg.algorithm,
                            schemes=cfg.schemes)
    for row in table:
        if row.failed_count:
            print(f"warning: {row.scheme} at {row.p_max_dbm} dBm: "
                  f"{row.failed_count} trials failed", file=sys.stderr)
    rows = [[_fmt(r.p_max_dbm), r.scheme, _fmt(r.mean_min_sinr_db),
             r.trial_count] for r in table]
    return _write_csv(os.path.join(cfg.out_dir, "power_sweep.csv"),
                      ["p_max_dbm", "scheme", "mean_min_sinr_db", "trial_count"],
                      rows)


def _triangle_points(corners, rng, count):
    # barycentric draw, folded into the triangle for exact uniformity
    a, b, c = (np.asarray(p, dtype=float) for p in corners)
    u = rng.random(count)
    w = rng.random(count)
    over = u + w > 1.0
    u[over], w[over] = 1.0 - u[over], 1.0 - w[over]
    return a + u[:, None] * (b - a) + w[:, None] * (c - a)


def cmd_random_users(cfg):
    """Power sweep with user positions redrawn inside the BS triangle."""
    base = cfg.scenario
    if base.config.num_cells != 3:
        raise CliError("random-users needs exactly 3 base stations")

    def scenario_for_trial(trial):
        rng = np.random.default_rng([cfg.base_seed, trial, _TAG_USER_POS])
        users = _triangle_points(base.geometry.bs_positions, rng, 3)
        geom = replace(base.geometry, user_positions=users)
        return replace(base, geometry=geom)

    rows = _sweep_rows(cfg, scenario_for_trial)
    return _write_csv(os.path.join(cfg.out_dir, "random_users.csv"),
                      ["p_max_dbm", "scheme", "mean_min_sinr_db", "trial_count"],
                      rows)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="irsbeam",
        description="Max-min SINR beamforming experiments; results land as "
                    "CSV files with fixed column contracts.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sweep):
        p.add_argument("--config", metavar="PATH",
                       help="INI file with scenario/algorithm/experiment sections")
        p.add_argument("--out", metavar="DIR", help="output directory (default .)")
        p.add_argument("--seed", type=int, metavar="U64",
                       help="base seed for channels and trials (default 1)")
        p.add_argument("--pmax", metavar="DBM[,DBM...]",
                       help="transmit power levels in dBm (default 35)")
        p.add_argument("--max-iters", type=int, dest="max_iters", metavar="N")
        p.add_argument("--epsilon", type=float, metavar="F")
        if sweep:
            p.add_argument("--trials", type=int, metavar="N",
                           help="channel realizations per point (default 20)")
            p.add_argument("--variant",
                           choices=[v.value for v in Variant] + ["all"],
                           help="restrict to one scheme (default all)")

    common(sub.add_parser("convergence",
                          help="per-iteration objective of both optimizers"),
           sweep=False)
    common(sub.add_parser("power-sweep",
                          help="mean min-SINR versus transmit power"),
           sweep=True)
    common(sub.add_parser("random-users",
                          help="power sweep with users redrawn in the BS triangle"),
           sweep=True)
    return parser


_COMMANDS = {
    "convergence": cmd_convergence,
    "power-sweep": cmd_power_sweep,
    "random-users": cmd_random_users,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        cfg = _experiment_config(args)
        path = _COMMANDS[args.command](cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
