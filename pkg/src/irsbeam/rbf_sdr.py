"""Reflective beamforming by semidefinite relaxation and Gaussian randomization.

At fixed transmit beamformers every received power is a quadratic in the
reflection vector. Appending a unit entry turns each quadratic into a single
trace form Tr(R vv^H) + |d|^2, the rank constraint on vv^H is dropped, and the
supportable SINR level is bisected with an SDP feasibility probe per step.
Unit-modulus candidates are recovered from the relaxed matrix by sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import conic
from .model import ReflectVector, min_weighted_sinr_from_quadratic
from .txbf import BisectionFailure

__all__ = ["LiftedData", "SdrOptions", "SdrResult", "lift", "build_p34", "solve_p33",
           "randomize", "sdr_update"]


@dataclass(frozen=True)
class LiftedData:
    """Trace-form data: R[i, k] = [[C, u], [u^H, 0]] of size N+1, plus |d|^2."""

    R: np.ndarray
    d_abs2: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.complex128)
        if R.ndim != 4 or R.shape[0] != R.shape[1] or R.shape[2] != R.shape[3]:
            raise ValueError("R must have shape (K, K, N+1, N+1)")
        d2 = np.asarray(self.d_abs2, dtype=np.float64)
        if d2.shape != R.shape[:2]:
            raise ValueError("d_abs2 must have shape (K, K)")
        herm_err = np.max(np.abs(R - np.conj(np.swapaxes(R, 2, 3))))
        if herm_err > 1e-12 * max(1.0, float(np.max(np.abs(R)))):
            raise ValueError("R blocks must be Hermitian")
        if np.max(np.abs(R[:, :, -1, -1])) != 0.0:
            raise ValueError("bottom-right entry of each R must be exactly 0")
        R.setflags(write=False)
        d2.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "d_abs2", d2)

    @property
    def num_cells(self):
        return self.R.shape[0]

    @property
    def num_reflect(self):
        return self.R.shape[2] - 1


@dataclass(frozen=True)
class SdrOptions:
    """Knobs of the relaxation route, forwarded by the driver."""

    delta_t: float | None = None          # bisection width; None = 1e-4 * upper bracket
    randomization_count: int = 200
    seed: object = 0                      # anything numpy's default_rng accepts
    solver_tol: float = conic.DEFAULT_TOL


@dataclass(frozen=True)
class SdrResult:
    V_star: np.ndarray
    t_relaxed: float
    v_candidate: ReflectVector
    achieved_min_sinr: float
    rank_one_exact: bool


def lift(data):
    """Assemble the (N+1)-sized trace-form matrices from quadratic data."""
    K = data.c.shape[0]
    N = data.c.shape[2]
    R = np.zeros((K, K, N + 1, N + 1), dtype=np.complex128)
    R[:, :, :N, :N] = data.C
    R[:, :, :N, N] = data.u
    R[:, :, N, :N] = np.conj(data.u)
    return LiftedData(R=R, d_abs2=np.abs(data.d) ** 2)


def build_p34(t, lifted, config):
    """PSD feasibility: per-user SINR >= weighted level t for the lifted matrix.

    One Hermitian trace inequality per user, unit bounds on the first N
    diagonal entries, the augmented corner pinned to 1. Each user's row is
    divided by sigma_i^2 * max(1, alpha_i t) to sit near unit scale.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    K = lifted.num_cells
    N = lifted.num_reflect
    traces = []
    for i in range(K):
        alpha_t = config.weight[i] * t
        H = lifted.R[i, i].copy()
        rhs = -lifted.d_abs2[i, i] + alpha_t * config.noise_power[i]
        for k in range(K):
            if k == i:
                continue
            H -= alpha_t * lifted.R[i, k]
            rhs += alpha_t * lifted.d_abs2[i, k]
        scale = config.noise_power[i] * max(1.0, alpha_t)
        traces.append((H / scale, rhs / scale, "ge"))
    entries = [(n, n, 1.0, "le") for n in range(N)] + [(N, N, 1.0, "eq")]
    return conic.PsdFeasibilityProgram(matrix_dim=N + 1, trace_ineq=traces,
                                       entry_constraints=entries)


def _upper_bracket(lifted, config):
    """Interference-free bound: Tr(R'V) <= (N+1) * lambda_max(R') with R' the
    |d|^2-augmented rank-one block, so lambda_max = ||c||^2 + |d|^2."""
    K = lifted.num_cells
    N = lifted.num_reflect
    best = 0.0
    for i in range(K):
        lam = float(np.trace(lifted.R[i, i, :N, :N]).real) + lifted.d_abs2[i, i]
        best = max(best, (N + 1) * lam / (config.weight[i] * config.noise_power[i]))
    return best


def solve_p33(lifted, config, delta_t=None, solver_tol=conic.DEFAULT_TOL):
    """Bisect the relaxed max-min level; returns (V from last feasible probe, level)."""
    N = lifted.num_reflect
    hi = _upper_bracket(lifted, config)
    V_best = np.eye(N + 1, dtype=np.complex128)  # the t = 0 witness
    if hi <= 0.0:
        return V_best, 0.0
    if delta_t is None:
        delta_t = 1e-4 * hi
    if delta_t <= 0:
        raise ValueError("delta_t must be > 0")
    lo = 0.0
    while hi - lo > delta_t:
        mid = 0.5 * (lo + hi)
        out = conic.solve_psd_feasibility(build_p34(mid, lifted, config), tol=solver_tol)
        if out.status == conic.SolveStatus.NUMERICAL_FAILURE:
            raise BisectionFailure(f"SDP solver failed at t={mid:.6g} in [{lo:.6g}, {hi:.6g}]")
        if out.status == conic.SolveStatus.FEASIBLE:
            lo = mid
            V_best = out.point
        else:
            hi = mid
    return V_best, lo


def _quotient_phase(vbar):
    """Unit-modulus vector from phases relative to the last entry."""
    denom = vbar[-1]
    if abs(denom) < 1e-300:
        denom = 1.0
    return np.exp(1j * np.angle(vbar * np.conj(denom)))


def randomize(V_star, lifted, config, count=200, seed=0):
    """Draw unit-modulus candidates from the relaxed matrix, keep the best.

    Samples are U Sigma^(1/2) r with r standard complex Gaussian; each is
    mapped entrywise to the unit circle by the phase relative to the augmented
    entry. A numerically rank-one V skips sampling and uses the principal
    eigenvector deterministically.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    N = lifted.num_reflect
    if N == 0:
        return ReflectVector.zero(0)
    evals, evecs = np.linalg.eigh(0.5 * (V_star + V_star.conj().T))
    evals = np.clip(evals, 0.0, None)
    if evals[-1] <= 0.0 or (evals.size > 1 and evals[-2] <= 1e-6 * evals[-1]):
        return ReflectVector(_quotient_phase(evecs[:, -1])[:N])
    root = evecs * np.sqrt(evals)[None, :]
    rng = np.random.default_rng(seed)
    best_v = None
    best_val = -np.inf
    for _ in range(count):
        r = rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1)
        vbar = _quotient_phase(root @ (r / np.sqrt(2.0)))
        cand = vbar[:N]
        val = _min_weighted_sinr_lifted(cand, lifted, config)
        if val > best_val:
            best_val = val
            best_v = cand
    return ReflectVector(best_v)


def _min_weighted_sinr_lifted(v, lifted, config):
    """min weighted SINR via the trace forms; avoids rebuilding QuadraticData."""
    K = lifted.num_cells
    N = lifted.num_reflect
    vbar = np.concatenate([np.asarray(v, dtype=np.complex128), [1.0]])
    worst = np.inf
    for i in range(K):
        # vbar^H R vbar + |d|^2, all k at once
        quad = np.real(np.einsum("m,kmn,n->k", vbar.conj(), lifted.R[i], vbar)) + lifted.d_abs2[i]
        signal = quad[i]
        interf = quad.sum() - signal
        worst = min(worst, signal / (interf + config.noise_power[i]) / config.weight[i])
    return float(worst)


def sdr_update(data, config, opts=SdrOptions()):
    """One reflect update: lift, bisect the relaxation, randomize a candidate.

    t_relaxed is reported as max(bisection level, achieved value): the achieved
    candidate itself certifies its own level as feasible for the relaxation, so
    this is a tighter valid lower estimate of the relaxed optimum.
    """
    lifted = lift(data)
    N = lifted.num_reflect
    if N == 0:
        v = ReflectVector.zero(0)
        achieved = min_weighted_sinr_from_quadratic(v, data, config)
        return SdrResult(V_star=np.ones((1, 1), dtype=np.complex128), t_relaxed=achieved,
                         v_candidate=v, achieved_min_sinr=achieved, rank_one_exact=True)
    V_star, t_bisect = solve_p33(lifted, config, delta_t=opts.delta_t,
                                 solver_tol=opts.solver_tol)
    v = randomize(V_star, lifted, config, count=opts.randomization_count, seed=opts.seed)
    achieved = min_weighted_sinr_from_quadratic(v, data, config)
    evals = np.linalg.eigvalsh(0.5 * (V_star + V_star.conj().T))
    rank_one = bool(evals.size < 2 or evals[-2] <= 1e-6 * max(evals[-1], 0.0))
    return SdrResult(V_star=V_star, t_relaxed=max(t_bisect, achieved), v_candidate=v,
                     achieved_min_sinr=achieved, rank_one_exact=rank_one)
