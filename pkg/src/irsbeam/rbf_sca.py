"""Reflective beamforming by successive convex approximation.

Per user, an auxiliary gap function compares the weighted target level t
against the achieved SINR: it is nonpositive exactly when the user meets the
level. The gap is the difference of two convex quadratics in the reflection
vector; linearizing the (concave, signal) part at the current point gives a
convex majorant, and minimizing the worst majorant over the unit polydisc
yields an update that never decreases the minimum weighted SINR.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import conic
from .model import ReflectVector

__all__ = ["ScaState", "ScaContractViolation", "f_aux", "f_upper", "sca_update"]


class ScaContractViolation(RuntimeError):
    """The convex update returned a positive optimum, which the construction forbids."""


@dataclass(frozen=True)
class ScaState:
    """One linearization step: expansion point, its level, and the update optimum."""

    v_local: ReflectVector
    t_current: float
    z_star: float


def _as_values(v, n, name):
    vv = np.asarray(v.values if isinstance(v, ReflectVector) else v, dtype=np.complex128)
    if vv.shape != (n,):
        raise ValueError(f"{name}: expected length {n}, got shape {vv.shape}")
    return vv


def _signal_quad(v, data, i):
    """v^H C_ii v + 2 Re(v^H u_ii) + |d_ii|^2 evaluated directly."""
    Cv = data.C[i, i] @ v
    return float(np.real(np.vdot(v, Cv)) + 2.0 * np.real(np.vdot(v, data.u[i, i]))
                 + np.abs(data.d[i, i]) ** 2)


def f_aux(v, data, t, config):
    """Per-user gap: weighted level t minus achieved, in received-power units.

    F_i = alpha_i t [interference(v) + noise] - signal_i(v); nonpositive iff
    user i's weighted SINR is at least t.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    K = config.num_cells
    N = data.c.shape[2]
    vv = _as_values(v, N, "v")
    out = np.empty(K)
    for i in range(K):
        interf = 0.0
        for k in range(K):
            if k == i:
                continue
            Cv = data.C[i, k] @ vv
            interf += float(np.real(np.vdot(vv, Cv)) + 2.0 * np.real(np.vdot(vv, data.u[i, k]))
                            + np.abs(data.d[i, k]) ** 2)
        out[i] = config.weight[i] * t * (interf + config.noise_power[i]) - _signal_quad(vv, data, i)
    return out


def f_upper(v, v_local, data, t, config):
    """Convex majorant of f_aux: interference exact, signal linearized at v_local.

    The signal quadratic is replaced by its value at v_local plus
    2 Re{(C_ii v_local + u_ii)^H (v - v_local)}; the real part is forced by
    f_aux being real-valued.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    K = config.num_cells
    N = data.c.shape[2]
    vv = _as_values(v, N, "v")
    vl = _as_values(v_local, N, "v_local")
    full = f_aux(vv, data, t, config)
    out = np.empty(K)
    for i in range(K):
        grad = data.C[i, i] @ vl + data.u[i, i]
        lin = _signal_quad(vl, data, i) + 2.0 * np.real(np.vdot(grad, vv - vl))
        out[i] = full[i] + _signal_quad(vv, data, i) - lin
    return out


def sca_update(v_local, data, t_current, config, solver_tol=conic.DEFAULT_TOL,
               violation_tol=1e-8):
    """Minimize the worst per-user majorant over the unit polydisc.

    Returns (v_new, z_star). v_local itself achieves z = max_i F_i <= 0 when
    t_current is the level it supports, so a positive optimum can only mean a
    broken setup and raises ScaContractViolation.
    """
    if t_current < 0:
        raise ValueError("t_current must be >= 0")
    K = config.num_cells
    N = data.c.shape[2]
    vl = _as_values(v_local, N, "v_local")
    # one positive scale for all users; any common factor keeps the argmin
    lam = float(np.max(config.weight * config.noise_power)) * max(1.0, t_current)
    quads, factors = [], []
    for i in range(K):
        at = config.weight[i] * t_current
        others = [k for k in range(K) if k != i]
        P = np.zeros((N, N), dtype=np.complex128)
        q = np.zeros(N, dtype=np.complex128)
        r = at * config.noise_power[i]
        rows = []
        for k in others:
            P += at * data.C[i, k]
            q += at * data.u[i, k]
            r += at * float(np.abs(data.d[i, k]) ** 2)
            rows.append(np.sqrt(at) * data.c[i, k].conj())
        grad = data.C[i, i] @ vl + data.u[i, i]
        q -= grad
        r += -_signal_quad(vl, data, i) + 2.0 * np.real(np.vdot(grad, vl))
        quads.append((P / lam, q / lam, r / lam))
        factors.append(np.array(rows) / np.sqrt(lam) if rows else np.zeros((0, N), dtype=np.complex128))
    program = conic.QcqpMinProgram(num_vars=N, quad_constraints=quads,
                                   modulus_bounds=np.ones(N), quad_factors=factors)
    out = conic.solve_qcqp_min(program, tol=solver_tol)
    if out.status != conic.SolveStatus.OPTIMAL:
        raise RuntimeError("convex update failed to solve")
    z_star = float(out.objective) * lam
    if out.objective > violation_tol:
        raise ScaContractViolation(
            f"update optimum {z_star:.3e} > 0; the expansion point should be feasible at z=0"
        )
    vals = np.asarray(out.point, dtype=np.complex128)
    mags = np.abs(vals)
    over = mags > 1.0
    if np.any(over):
        vals = vals.copy()
        vals[over] /= mags[over]
    return ReflectVector(vals), z_star
