"""Coordinated transmit beamforming at fixed reflection coefficients.

For a fixed candidate level t, feasibility of per-user SINR targets is a
second-order-cone program once each user's own signal term is rotated real
(phase rotations of any beamformer leave all moduli unchanged, so the rotation
costs nothing). The best supportable level is then found by bisection on t.

Variable layout: the K beamformers are stacked into one complex vector of
length K*M and lifted to [Re; Im] of length 2*K*M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import conic
from .model import TransmitBeamformers, effective_channels_all, min_weighted_sinr

__all__ = ["TxbfResult", "BisectionFailure", "build_p22", "solve_p2"]


class BisectionFailure(RuntimeError):
    """Solver numerical failure inside the bisection, with bracket context."""


@dataclass(frozen=True)
class TxbfResult:
    """Outcome of one transmit-beamforming solve.

    t_star is the min weighted SINR evaluated directly at the returned
    beamformers; bracket_width is the final bisection bracket.
    """

    w: TransmitBeamformers
    t_star: float
    bisection_iters: int
    bracket_width: float


def _inner_rows(a, block, K, M):
    """Real rows picking out Re and Im of a^H w_block from the lifted stack."""
    nreal = 2 * K * M
    re_row = np.zeros(nreal)
    im_row = np.zeros(nreal)
    lo = block * M
    re_row[lo:lo + M] = a.real
    re_row[K * M + lo:K * M + lo + M] = a.imag
    im_row[lo:lo + M] = -a.imag
    im_row[K * M + lo:K * M + lo + M] = a.real
    return re_row, im_row


def build_p22(t, a, config):
    """SOC feasibility program for per-user weighted SINR >= t at fixed t > 0.

    Per user i: sqrt(1 + 1/(alpha_i t)) * Re(a_ii^H w_i) bounds the norm of all
    K received terms stacked with the noise deviation; Re(a_ii^H w_i) >= 0 and
    Im(a_ii^H w_i) = 0 pin the free phase; ||w_i|| <= sqrt(P_i). Rows are
    divided by the per-user noise deviation so all data sits near unit scale.
    """
    if t <= 0:
        raise ValueError("t must be > 0")
    a = np.asarray(a, dtype=np.complex128)
    K = config.num_cells
    M = config.num_antennas
    if a.shape != (K, K, M):
        raise ValueError("effective channels must have shape (K, K, M)")
    nreal = 2 * K * M
    soc, lin_eq, lin_ineq = [], [], []
    for i in range(K):
        sigma = float(np.sqrt(config.noise_power[i]))
        coef = float(np.sqrt(1.0 + 1.0 / (config.weight[i] * t)))
        F = np.zeros((2 * K + 1, nreal))
        g = np.zeros(2 * K + 1)
        for j in range(K):
            re_row, im_row = _inner_rows(a[i, j], j, K, M)
            F[2 * j] = re_row / sigma
            F[2 * j + 1] = im_row / sigma
        g[2 * K] = 1.0  # noise term, already normalized
        re_own, im_own = _inner_rows(a[i, i], i, K, M)
        soc.append((F, g, coef * re_own / sigma, 0.0))
        lin_ineq.append((re_own / sigma, 0.0))
        lin_eq.append((im_own / sigma, 0.0))
        P = np.zeros((2 * M, nreal))
        lo = i * M
        P[:M, lo:lo + M] = np.eye(M)
        P[M:, K * M + lo:K * M + lo + M] = np.eye(M)
        soc.append((P, np.zeros(2 * M), np.zeros(nreal), float(np.sqrt(config.power_budget[i]))))
    return conic.SocFeasibilityProgram(
        num_vars=nreal, soc_constraints=soc, linear_eq=lin_eq, linear_ineq=lin_ineq
    )


def _unstack(x, K, M):
    w = conic.unlift_complex_vector(np.asarray(x))
    return w.reshape(K, M)


def solve_p2(channels, v, config, delta_t=None, solver_tol=conic.DEFAULT_TOL):
    """Max-min transmit beamforming by bisection on the supportable level t.

    The bracket starts at [0, max_i P_i ||a_ii||^2 / (alpha_i sigma_i^2)], the
    interference-free bound; t = 0 is feasible with w = 0 and needs no solve.
    Beamformers come from the last feasible probe. delta_t defaults to 1e-4
    of the upper bracket.
    """
    K = config.num_cells
    M = config.num_antennas
    a = effective_channels_all(v, channels)
    own_gain = np.array([np.sum(np.abs(a[i, i]) ** 2) for i in range(K)])
    hi = float(np.max(config.power_budget * own_gain / (config.weight * config.noise_power)))
    w_best = np.zeros((K, M), dtype=np.complex128)
    if hi <= 0.0:
        return TxbfResult(TransmitBeamformers(w_best), 0.0, 0, 0.0)
    if delta_t is None:
        delta_t = 1e-4 * hi
    if delta_t <= 0:
        raise ValueError("delta_t must be > 0")
    lo = 0.0
    iters = 0
    while hi - lo > delta_t:
        mid = 0.5 * (lo + hi)
        out = conic.solve_soc_feasibility(build_p22(mid, a, config), tol=solver_tol)
        iters += 1
        if out.status == conic.SolveStatus.NUMERICAL_FAILURE:
            raise BisectionFailure(f"solver failed at t={mid:.6g} in bracket [{lo:.6g}, {hi:.6g}]")
        if out.status == conic.SolveStatus.FEASIBLE:
            lo = mid
            w_best = _unstack(out.point, K, M)
        else:
            hi = mid
    w = TransmitBeamformers(w_best)
    t_star = min_weighted_sinr(v, w, channels, config)
    return TxbfResult(w=w, t_star=t_star, bisection_iters=iters, bracket_width=hi - lo)
