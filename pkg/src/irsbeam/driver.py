"""Alternating optimization loops, benchmark schemes, and trial aggregation.

One iteration is a transmit-beamforming solve at the current reflection vector
followed by the variant's reflect update at the level just achieved. Both
sub-steps only ever replace the incumbent when the directly evaluated
objective does not drop: the incumbent is always feasible for the subproblem,
so with exact arithmetic the optimizer could never do worse, and the guard
removes the residual bisection slack. The relaxation route's randomized
candidate is still adopted unconditionally, as that method prescribes; its
fluctuation shows in the trace and a best-so-far iterate is kept alongside.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import conic
from .model import ReflectVector, TransmitBeamformers, min_weighted_sinr, quadratic_data
from .rbf_sca import sca_update
from .rbf_sdr import SdrOptions, sdr_update
from .scenario import dbm_to_watt, generate_channels, linear_to_db
from .txbf import solve_p2

__all__ = ["Variant", "InitKind", "AlgorithmOptions", "IterationRecord", "RunTrace",
           "CompareRow", "run", "compare_schemes"]

# fixed stream tags so the driver's random draws never collide with channel streams
_TAG_INIT_V = 0x1B5EED01
_TAG_BENCH_PHASE = 0x1B5EED02
_TAG_RANDOMIZE = 0x1B5EED03


class Variant(enum.Enum):
    SDR = "sdr"
    SCA = "sca"
    RANDOM_PHASE = "random-phase"
    NO_IRS = "no-irs"


class InitKind(enum.Enum):
    ZERO_REFLECT = "zero"
    RANDOM_UNIT_PHASE = "random-phase"


@dataclass(frozen=True)
class AlgorithmOptions:
    """Loop controls plus knobs forwarded to the subproblem solvers.

    epsilon is in linear SINR units; the loop stops once one full iteration
    raises the objective by less than it. The unit-phase initialization mixes
    init_seed with the scenario seed so repeated trials start independently.
    """

    variant: Variant = Variant.SCA
    epsilon: float = 1e-3
    max_iters: int = 30
    init_v: InitKind = InitKind.RANDOM_UNIT_PHASE
    init_seed: int = 0
    bisection_tol: float | None = None
    randomization_count: int = 200
    solver_tol: float = conic.DEFAULT_TOL

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    after_w_update: float
    after_v_update: float
    duration_s: float
    t_relaxed: float | None = None   # relaxation level, SDR variant only
    achieved_randomized: float | None = None


@dataclass(frozen=True)
class RunTrace:
    """Per-iteration objective values plus final and best-so-far iterates.

    final_* is the last iterate the algorithm actually held (the faithful
    output); best_* is the highest-objective iterate seen, which can differ
    for the randomized variant.
    """

    variant: Variant
    records: list
    final_v: ReflectVector
    final_w: TransmitBeamformers
    final_min_sinr: float
    best_v: ReflectVector
    best_w: TransmitBeamformers
    best_min_sinr: float
    termination_reason: str
    failure: str | None = None


def _initial_v(scenario, opts):
    N = scenario.config.num_reflect
    if opts.init_v is InitKind.ZERO_REFLECT:
        return ReflectVector.zero(N)
    rng = np.random.default_rng([int(opts.init_seed), int(scenario.seed), _TAG_INIT_V])
    return ReflectVector(np.exp(2j * np.pi * rng.random(N)))


def _benchmark_v(scenario, variant):
    N = scenario.config.num_reflect
    if variant is Variant.NO_IRS:
        return ReflectVector.zero(N)
    rng = np.random.default_rng([int(scenario.seed), _TAG_BENCH_PHASE])
    return ReflectVector(np.exp(2j * np.pi * rng.random(N)))


def run(scenario, opts=AlgorithmOptions()):
    """Execute one optimization run on a freshly drawn channel realization."""
    config = scenario.config
    channels = generate_channels(scenario)

    if opts.variant in (Variant.RANDOM_PHASE, Variant.NO_IRS):
        start = time.perf_counter()
        v = _benchmark_v(scenario, opts.variant)
        res = solve_p2(channels, v, config, delta_t=opts.bisection_tol,
                       solver_tol=opts.solver_tol)
        rec = IterationRecord(1, res.t_star, res.t_star, time.perf_counter() - start)
        return RunTrace(variant=opts.variant, records=[rec], final_v=v, final_w=res.w,
                        final_min_sinr=res.t_star, best_v=v, best_w=res.w,
                        best_min_sinr=res.t_star, termination_reason="converged")

    v = _initial_v(scenario, opts)
    w = TransmitBeamformers(np.zeros((config.num_cells, config.num_antennas),
                                     dtype=np.complex128))
    value = 0.0
    best = (v, w, 0.0)
    records = []
    reason = "max_iters"
    failure = None
    prev_objective = 0.0
    try:
        for it in range(1, opts.max_iters + 1):
            start = time.perf_counter()
            res = solve_p2(channels, v, config, delta_t=opts.bisection_tol,
                           solver_tol=opts.solver_tol)
            if res.t_star >= value:
                w, value = res.w, res.t_star
                if value > best[2]:
                    best = (v, w, value)
            after_w = value

            t_relaxed = None
            achieved = None
            if opts.variant is Variant.SDR:
                data = quadratic_data(channels, w)
                seed = [int(scenario.seed), int(it), _TAG_RANDOMIZE]
                sdr = sdr_update(data, config,
                                 SdrOptions(delta_t=opts.bisection_tol,
                                            randomization_count=opts.randomization_count,
                                            seed=seed, solver_tol=opts.solver_tol))
                v = sdr.v_candidate            # adopted unconditionally, as prescribed
                value = sdr.achieved_min_sinr
                t_relaxed = sdr.t_relaxed
                achieved = sdr.achieved_min_sinr
            else:
                data = quadratic_data(channels, w)
                v_new, _ = sca_update(v, data, after_w, config,
                                      solver_tol=opts.solver_tol)
                cand = min_weighted_sinr(v_new, w, channels, config)
                if cand >= value:
                    v, value = v_new, cand
            if value > best[2]:
                best = (v, w, value)

            records.append(IterationRecord(it, after_w, value,
                                           time.perf_counter() - start,
                                           t_relaxed=t_relaxed,
                                           achieved_randomized=achieved))
            if value - prev_objective < opts.epsilon:
                reason = "converged"
                break
            prev_objective = value
    except (RuntimeError, ValueError) as exc:
        failure = f"{type(exc).__name__}: {exc}"

    return RunTrace(variant=opts.variant, records=records, final_v=v, final_w=w,
                    final_min_sinr=value, best_v=best[0], best_w=best[1],
                    best_min_sinr=best[2], termination_reason=reason, failure=failure)


@dataclass(frozen=True)
class CompareRow:
    p_max_dbm: float
    scheme: str
    mean_min_sinr_db: float
    trial_count: int
    failed_count: int = 0


_ALL_SCHEMES = (Variant.SCA, Variant.SDR, Variant.RANDOM_PHASE, Variant.NO_IRS)


def compare_schemes(scenario, p_max_list, trials, base_seed, opts=AlgorithmOptions(),
                    schemes=_ALL_SCHEMES):
    """Mean final min weighted SINR per (scheme, power) over seeded trials.

    Each trial re-seeds the scenario (base_seed + trial index) and re-draws the
    channels; every scheme sees the same realizations. Means are taken in
    linear units and reported in dB; failed trials are left out of the mean
    and counted.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows = []
    for p_dbm in p_max_list:
        K = scenario.config.num_cells
        powered = replace(
            scenario.config, power_budget=np.full(K, dbm_to_watt(p_dbm)))
        for variant in schemes:
            vals = []
            failed = 0
            for trial in range(trials):
                spec = replace(scenario, config=powered, seed=int(base_seed) + trial)
                trace = run(spec, replace(opts, variant=variant))
                if trace.failure is not None:
                    failed += 1
                    continue
                vals.append(trace.final_min_sinr)
            mean_db = float(linear_to_db(np.mean(vals))) if vals else float("nan")
            rows.append(CompareRow(p_max_dbm=float(p_dbm), scheme=variant.value,
                                   mean_min_sinr_db=mean_db, trial_count=len(vals),
                                   failed_count=failed))
    return rows
