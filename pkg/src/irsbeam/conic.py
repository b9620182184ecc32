"""Small conic solving layer: SOC feasibility, Hermitian-PSD feasibility, convex QCQP.

All three entry points lower their program onto cvxopt's cone LP solver and give
back a SolverOutcome. Feasibility questions are answered through a phase-I pass:
a shared slack relaxes the operative inequality constraints (equalities and
entry bounds stay hard), the slack is minimized, and the program is declared
feasible exactly when the optimal slack is at most `tol`.

The PSD path does not optimize over the lifted matrix directly. The programs we
face have few scalar constraints, so the Lagrangian dual is a linear matrix
inequality in a handful of multipliers; that dual is what gets solved, and the
matrix point is read back from the cone-LP dual variables. This is an order of
magnitude faster than parametrizing the matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix as cvxmatrix
from cvxopt import solvers

__all__ = [
    "SolveStatus",
    "SolverOutcome",
    "SocFeasibilityProgram",
    "PsdFeasibilityProgram",
    "QcqpMinProgram",
    "solve_soc_feasibility",
    "solve_psd_feasibility",
    "solve_qcqp_min",
    "lift_complex_vector",
    "unlift_complex_vector",
    "embed_hermitian",
    "unembed_hermitian",
    "dump_program",
]

DEFAULT_TOL = 1e-8
DEFAULT_ITER_CAP = 200

# Lower cap for the phase-I slack; bounds the objective and, at feasible
# instances, lets the minimizer certify a uniform interior margin.
_SLACK_CAP = 1.0


class SolveStatus(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    OPTIMAL = "optimal"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverOutcome:
    """Result of one solve: status, the point when one exists, and a residual.

    certificate_gap is the phase-I optimum for feasibility problems (<= tol
    when feasible, the least achievable violation otherwise) and the duality
    gap for minimization problems.
    """

    status: SolveStatus
    point: object = None
    certificate_gap: float = float("nan")
    objective: float | None = None

    @property
    def ok(self):
        return self.status in (SolveStatus.FEASIBLE, SolveStatus.OPTIMAL)


def lift_complex_vector(x):
    """Complex n-vector -> real 2n-vector [Re x; Im x]."""
    x = np.asarray(x, dtype=np.complex128)
    return np.concatenate([x.real, x.imag])


def unlift_complex_vector(xr):
    xr = np.asarray(xr, dtype=np.float64)
    n = xr.shape[0] // 2
    return xr[:n] + 1j * xr[n:]


def embed_hermitian(H):
    """Hermitian n x n -> real symmetric 2n x 2n [[Re, -Im], [Im, Re]]."""
    H = np.asarray(H, dtype=np.complex128)
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def unembed_hermitian(E):
    """Left inverse of embed_hermitian; projects onto the embedded subspace."""
    E = np.asarray(E, dtype=np.float64)
    n = E.shape[0] // 2
    re = 0.5 * (E[:n, :n] + E[n:, n:])
    im = 0.5 * (E[n:, :n] - E[:n, n:])
    V = re + 1j * im
    return 0.5 * (V + V.conj().T)


@dataclass(frozen=True)
class SocFeasibilityProgram:
    """Find x with ||F x + g|| <= c^T x + b per cone, row^T x >= rhs, eq rows exact.

    All data is real; complex programs are lifted by the caller.
    """

    num_vars: int
    soc_constraints: list = field(default_factory=list)  # (F, g, c, b)
    linear_eq: list = field(default_factory=list)        # (row, rhs)
    linear_ineq: list = field(default_factory=list)      # (row, rhs): row.x >= rhs

    def __post_init__(self):
        n = self.num_vars
        if n < 1:
            raise ValueError("num_vars must be >= 1")
        for F, g, c, b in self.soc_constraints:
            F = np.asarray(F, dtype=float)
            if F.ndim != 2 or F.shape[1] != n or F.shape[0] < 1:
                raise ValueError("SOC matrix must be (m >= 1, num_vars)")
            if np.asarray(g, dtype=float).shape != (F.shape[0],):
                raise ValueError("SOC offset length mismatch")
            if np.asarray(c, dtype=float).shape != (n,):
                raise ValueError("SOC head vector length mismatch")
            float(b)
        for row, rhs in list(self.linear_eq) + list(self.linear_ineq):
            if np.asarray(row, dtype=float).shape != (n,):
                raise ValueError("linear row length mismatch")
            float(rhs)


@dataclass(frozen=True)
class PsdFeasibilityProgram:
    """Find Hermitian V >= 0 with trace inequalities and diagonal entry bounds.

    trace_ineq entries are (H, rhs, sense): Tr(H V) >= rhs ('ge') or <= ('le').
    entry_constraints are (row, col, bound, sense) with row == col, constraining
    the real diagonal entry; sense in {'ge', 'le', 'eq'}.
    """

    matrix_dim: int
    trace_ineq: list = field(default_factory=list)
    entry_constraints: list = field(default_factory=list)

    def __post_init__(self):
        n = self.matrix_dim
        if n < 1:
            raise ValueError("matrix_dim must be >= 1")
        for H, rhs, sense in self.trace_ineq:
            H = np.asarray(H, dtype=np.complex128)
            if H.shape != (n, n):
                raise ValueError("trace matrix has wrong shape")
            scale = max(1.0, float(np.max(np.abs(H))))
            if np.max(np.abs(H - H.conj().T)) > 1e-12 * scale:
                raise ValueError("trace matrix is not Hermitian")
            if sense not in ("ge", "le"):
                raise ValueError(f"bad trace sense {sense!r}")
            float(rhs)
        for r, c0, bound, sense in self.entry_constraints:
            if r != c0:
                raise ValueError("entry constraints must reference diagonal entries")
            if not 0 <= r < n:
                raise ValueError("entry constraint index out of range")
            if sense not in ("ge", "le", "eq"):
                raise ValueError(f"bad entry sense {sense!r}")
            float(bound)


@dataclass(frozen=True)
class QcqpMinProgram:
    """Minimize z over complex x: x^H P x + 2 Re(q^H x) + r <= z, |x[i]| <= bound[i].

    quad_factors may supply, per constraint, a matrix L with P = L^H L (or None);
    when the caller knows a low-rank factor this skips the eigendecomposition.
    """

    num_vars: int
    quad_constraints: list = field(default_factory=list)  # (P, q, r)
    modulus_bounds: np.ndarray = None
    quad_factors: list = None

    def __post_init__(self):
        n = self.num_vars
        if n < 0:
            raise ValueError("num_vars must be >= 0")
        if not self.quad_constraints:
            raise ValueError("need at least one quadratic constraint (objective unbounded)")
        for P, q, r in self.quad_constraints:
            P = np.asarray(P, dtype=np.complex128)
            if P.shape != (n, n):
                raise ValueError("quadratic matrix has wrong shape")
            scale = max(1.0, float(np.max(np.abs(P))) if n else 1.0)
            if n and np.max(np.abs(P - P.conj().T)) > 1e-10 * scale:
                raise ValueError("quadratic matrix is not Hermitian")
            if n and np.linalg.eigvalsh(0.5 * (P + P.conj().T)).min() < -1e-10 * scale:
                raise ValueError("quadratic matrix is not PSD")
            if np.asarray(q).shape != (n,):
                raise ValueError("linear term has wrong shape")
            float(r)
        if self.quad_factors is not None:
            if len(self.quad_factors) != len(self.quad_constraints):
                raise ValueError("quad_factors must match quad_constraints one to one")
            for L, (P, _, _) in zip(self.quad_factors, self.quad_constraints):
                if L is None:
                    continue
                L = np.asarray(L, dtype=np.complex128)
                if L.ndim != 2 or L.shape[1] != n:
                    raise ValueError("factor must have num_vars columns")
                scale = max(1.0, float(np.max(np.abs(P))) if n else 1.0)
                if n and np.max(np.abs(L.conj().T @ L - P)) > 1e-8 * scale:
                    raise ValueError("factor does not reproduce the quadratic matrix")
        bounds = np.asarray(
            self.modulus_bounds if self.modulus_bounds is not None else np.ones(n),
            dtype=float,
        )
        if bounds.shape != (n,) or not np.all(np.isfinite(bounds)) or np.any(bounds < 0):
            raise ValueError("modulus_bounds must be finite nonnegative, one per variable")
        bounds.setflags(write=False)
        object.__setattr__(self, "modulus_bounds", bounds)


def _conelp_options(inner, iter_cap):
    return {
        "show_progress": False,
        "abstol": inner,
        "reltol": inner,
        "feastol": inner,
        "maxiters": int(iter_cap),
    }


_DECISIVE = ("optimal", "primal infeasible", "dual infeasible")


def _run_conelp(cobj, G, h, dims, A=None, b=None, tol=DEFAULT_TOL, iter_cap=DEFAULT_ITER_CAP):
    # Near-degenerate instances (bisection probes at the feasibility boundary,
    # converged outer iterates) can stall the interior-point method or crash it
    # outright at the tightest setting, while one rung looser succeeds and
    # agrees to many digits. Retry on a short ladder before giving up.
    inner = max(tol / 10.0, 1e-9)
    ladder = []
    for mult in (1.0, 10.0, 100.0):
        step = min(inner * mult, 1e-6)
        if step not in ladder:
            ladder.append(step)
    kwargs = {}
    if A is not None and A.shape[0] > 0:
        kwargs["A"] = cvxmatrix(A)
        kwargs["b"] = cvxmatrix(b)
    sol = {"status": "numerical_error"}
    for step in ladder:
        options = _conelp_options(step, iter_cap)
        try:
            sol = solvers.conelp(
                cvxmatrix(cobj), cvxmatrix(G), cvxmatrix(h), dims=dims,
                options=options, **kwargs,
            )
        except ArithmeticError:
            sol = {"status": "numerical_error"}
            continue
        except ValueError as exc:
            # cvxopt raises ValueError("math domain error") or ("domain
            # error") from inside its scaling updates when an iterate leaves
            # the cone numerically. Malformed inputs raise before the
            # iteration starts, with a message naming the offending argument;
            # let those propagate.
            if "domain error" not in str(exc):
                raise
            sol = {"status": "numerical_error"}
            continue
        if sol["status"] in _DECISIVE:
            return sol
    return sol


def solve_soc_feasibility(p, tol=DEFAULT_TOL, iter_cap=DEFAULT_ITER_CAP):
    """Phase-I feasibility for a second-order-cone program.

    Cones and inequality rows are relaxed by one shared slack; equality rows
    stay exact. Feasible iff the minimized slack is <= tol.
    """
    n = p.num_vars
    nvar = n + 1
    Grows, hvals, qdims = [], [], []
    lrows, lh = [], []
    for row, rhs in p.linear_ineq:
        r = np.zeros(nvar)
        r[:n] = -np.asarray(row, dtype=float)
        r[n] = -1.0
        lrows.append(r)
        lh.append(-float(rhs))
    cap_row = np.zeros(nvar)
    cap_row[n] = -1.0
    lrows.append(cap_row)
    lh.append(_SLACK_CAP)
    for F, g, c, b in p.soc_constraints:
        F = np.asarray(F, dtype=float)
        head = np.zeros(nvar)
        head[:n] = -np.asarray(c, dtype=float)
        head[n] = -1.0
        Grows.append(head)
        hvals.append(float(b))
        tail = np.zeros((F.shape[0], nvar))
        tail[:, :n] = -F
        Grows.append(tail)
        hvals.extend(np.asarray(g, dtype=float))
        qdims.append(1 + F.shape[0])
    G = np.vstack([np.array(lrows)] + [np.atleast_2d(r) for r in Grows])
    h = np.array(lh + hvals)
    Aeq, beq = [], []
    for row, rhs in p.linear_eq:
        row = np.asarray(row, dtype=float)
        if not row.any():
            if abs(float(rhs)) > tol:
                return SolverOutcome(SolveStatus.INFEASIBLE, None, float("inf"))
            continue
        r = np.zeros(nvar)
        r[:n] = row
        Aeq.append(r)
        beq.append(float(rhs))
    if Aeq:
        # conelp requires full row rank in A; drop dependent rows, declaring
        # infeasibility when a dropped row contradicts the ones kept
        A0 = np.array(Aeq)
        b0 = np.array(beq)
        rank = np.linalg.matrix_rank(A0)
        if rank < len(Aeq):
            if np.linalg.matrix_rank(np.column_stack([A0, b0])) > rank:
                return SolverOutcome(SolveStatus.INFEASIBLE, None, float("inf"))
            kept, kept_b = [], []
            for r, rb in zip(A0, b0):
                if np.linalg.matrix_rank(np.array(kept + [r])) > len(kept):
                    kept.append(r)
                    kept_b.append(rb)
            Aeq, beq = kept, kept_b
    cobj = np.zeros(nvar)
    cobj[n] = 1.0
    sol = _run_conelp(
        cobj, G, h, {"l": len(lrows), "q": qdims, "s": []},
        A=np.array(Aeq) if Aeq else None, b=np.array(beq) if beq else None,
        tol=tol, iter_cap=iter_cap,
    )
    if sol["status"] == "primal infeasible":
        # only the hard equality rows can make the relaxed program empty
        return SolverOutcome(SolveStatus.INFEASIBLE, None, float("inf"))
    if sol["status"] != "optimal":
        return SolverOutcome(SolveStatus.NUMERICAL_FAILURE)
    x = np.array(sol["x"]).ravel()
    slack = float(x[n])
    point = x[:n]
    if slack <= tol:
        return SolverOutcome(SolveStatus.FEASIBLE, point, slack)
    return SolverOutcome(SolveStatus.INFEASIBLE, point, slack)


def _diag_embed_vec(n, idx):
    m = 2 * n
    E = np.zeros((m, m))
    E[idx, idx] = 1.0
    E[n + idx, n + idx] = 1.0
    return E.reshape(-1, order="F")


def solve_psd_feasibility(p, tol=DEFAULT_TOL, iter_cap=DEFAULT_ITER_CAP):
    """Phase-I feasibility for a Hermitian-PSD program, solved in dual form.

    The slack relaxes the trace inequalities; entry bounds, the equality
    entries, and the PSD cone stay hard. The matrix point is recovered from
    the dual variable of the linear matrix inequality.
    """
    n = p.matrix_dim
    m = 2 * n
    traces = []
    for H, rhs, sense in p.trace_ineq:
        H = np.asarray(H, dtype=np.complex128)
        H = 0.5 * (H + H.conj().T)
        if sense == "ge":
            traces.append((H, float(rhs)))
        else:
            traces.append((-H, -float(rhs)))
    ent_le = [(r, float(b)) for r, _, b, s in p.entry_constraints if s == "le"]
    ent_ge = [(r, float(b)) for r, _, b, s in p.entry_constraints if s == "ge"]
    ent_eq = [(r, float(b)) for r, _, b, s in p.entry_constraints if s == "eq"]
    mt = len(traces)
    nvar = mt + len(ent_le) + len(ent_ge) + len(ent_eq)
    if nvar == 0:
        # no scalar constraints at all: V = 0 works
        return SolverOutcome(SolveStatus.FEASIBLE, np.zeros((n, n), dtype=np.complex128), -_SLACK_CAP)

    cobj = np.zeros(nvar)
    Gs = np.zeros((m * m, nvar))
    col = 0
    for H, b in traces:
        cobj[col] = -(b + _SLACK_CAP)
        Gs[:, col] = embed_hermitian(H).reshape(-1, order="F")
        col += 1
    for r, b in ent_le:
        cobj[col] = b
        Gs[:, col] = -_diag_embed_vec(n, r)
        col += 1
    for r, b in ent_ge:
        cobj[col] = -b
        Gs[:, col] = _diag_embed_vec(n, r)
        col += 1
    for r, b in ent_eq:
        cobj[col] = b
        Gs[:, col] = -_diag_embed_vec(n, r)
        col += 1

    lrows, lh = [], []
    for i in range(mt):
        r = np.zeros(nvar)
        r[i] = -1.0
        lrows.append(r)
        lh.append(0.0)
    if mt:
        r = np.zeros(nvar)
        r[:mt] = 1.0
        lrows.append(r)
        lh.append(1.0)
    for j in range(len(ent_le) + len(ent_ge)):
        r = np.zeros(nvar)
        r[mt + j] = -1.0
        lrows.append(r)
        lh.append(0.0)
    numl = len(lrows)
    G = np.vstack([np.array(lrows), Gs]) if numl else Gs
    h = np.concatenate([np.array(lh), np.zeros(m * m)])

    sol = _run_conelp(cobj, G, h, {"l": numl, "q": [], "s": [m]}, tol=tol, iter_cap=iter_cap)
    if sol["status"] == "dual infeasible":
        # unbounded multipliers == the hard constraints alone are inconsistent
        return SolverOutcome(SolveStatus.INFEASIBLE, None, float("inf"))
    if sol["status"] != "optimal":
        return SolverOutcome(SolveStatus.NUMERICAL_FAILURE)
    slack = float(-sol["primal objective"] - _SLACK_CAP)
    z = np.array(sol["z"]).ravel()
    Zt = z[numl:numl + m * m].reshape(m, m, order="F")
    V = 2.0 * unembed_hermitian(Zt)
    if slack <= tol:
        return SolverOutcome(SolveStatus.FEASIBLE, V, slack)
    return SolverOutcome(SolveStatus.INFEASIBLE, V, slack)


def _psd_factor(P, n):
    """Rows L with P = L^H L, dropping numerically null directions."""
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    P = 0.5 * (np.asarray(P, dtype=np.complex128) + np.asarray(P, dtype=np.complex128).conj().T)
    evals, evecs = np.linalg.eigh(P)
    top = float(evals[-1]) if evals.size else 0.0
    keep = evals > max(top, 1.0) * 1e-14
    if not np.any(keep):
        return np.zeros((0, n), dtype=np.complex128)
    return (np.sqrt(evals[keep])[:, None] * evecs[:, keep].conj().T)


def solve_qcqp_min(p, tol=DEFAULT_TOL, iter_cap=DEFAULT_ITER_CAP):
    """Minimize the auxiliary bound z subject to quadratic and modulus constraints.

    Each quadratic x^H P x + 2 Re(q^H x) + r <= z becomes, after P = L^H L and
    real lifting, the cone row ||(2 L x, w - 1)|| <= w + 1 with
    w = z - 2 Re(q^H x) - r.
    """
    n = p.num_vars
    nreal = 2 * n
    nvar = nreal + 1
    Grows, hvals, qdims = [], [], []
    factors = p.quad_factors if p.quad_factors is not None else [None] * len(p.quad_constraints)
    for (P, q, r), Lgiven in zip(p.quad_constraints, factors):
        q = np.asarray(q, dtype=np.complex128)
        L = np.asarray(Lgiven, dtype=np.complex128) if Lgiven is not None else _psd_factor(P, n)
        qrow = np.zeros(nvar)
        qrow[:n] = 2.0 * q.real
        qrow[n:nreal] = 2.0 * q.imag
        ez = np.zeros(nvar)
        ez[nreal] = 1.0
        w_lin = ez - qrow  # w = w_lin . x  - r
        head = -w_lin
        Grows.append(head)
        hvals.append(1.0 - float(r))
        if L.shape[0]:
            tail = np.zeros((2 * L.shape[0], nvar))
            tail[:L.shape[0], :n] = -2.0 * L.real
            tail[:L.shape[0], n:nreal] = 2.0 * L.imag
            tail[L.shape[0]:, :n] = -2.0 * L.imag
            tail[L.shape[0]:, n:nreal] = -2.0 * L.real
            Grows.append(tail)
            hvals.extend([0.0] * (2 * L.shape[0]))
        Grows.append(-w_lin)
        hvals.append(-1.0 - float(r))
        qdims.append(2 + 2 * L.shape[0])
    for i in range(n):
        head = np.zeros(nvar)
        Grows.append(head)
        hvals.append(float(p.modulus_bounds[i]))
        tail = np.zeros((2, nvar))
        tail[0, i] = -1.0
        tail[1, n + i] = -1.0
        Grows.append(tail)
        hvals.extend([0.0, 0.0])
        qdims.append(3)
    G = np.vstack([np.atleast_2d(r) for r in Grows])
    h = np.array(hvals)
    cobj = np.zeros(nvar)
    cobj[nreal] = 1.0
    sol = _run_conelp(cobj, G, h, {"l": 0, "q": qdims, "s": []}, tol=tol, iter_cap=iter_cap)
    if sol["status"] != "optimal":
        return SolverOutcome(SolveStatus.NUMERICAL_FAILURE)
    xz = np.array(sol["x"]).ravel()
    x = unlift_complex_vector(xz[:nreal])
    z_star = float(xz[nreal])
    return SolverOutcome(SolveStatus.OPTIMAL, x, float(sol["gap"]), objective=z_star)


def dump_program(p):
    """Plain-text dump of any program, one constraint per line, for triage."""
    lines = [type(p).__name__]
    if isinstance(p, SocFeasibilityProgram):
        lines.append(f"vars {p.num_vars}")
        for F, g, c, b in p.soc_constraints:
            lines.append(f"soc rows={np.asarray(F).shape[0]} head_b={float(b):.6g}")
        for row, rhs in p.linear_eq:
            lines.append(f"eq rhs={float(rhs):.6g} row={np.array2string(np.asarray(row), precision=4)}")
        for row, rhs in p.linear_ineq:
            lines.append(f"ineq rhs={float(rhs):.6g} row={np.array2string(np.asarray(row), precision=4)}")
    elif isinstance(p, PsdFeasibilityProgram):
        lines.append(f"dim {p.matrix_dim}")
        for H, rhs, sense in p.trace_ineq:
            lines.append(f"trace {sense} {float(rhs):.6g} |H|max={float(np.max(np.abs(H))):.4g}")
        for r, c0, bound, sense in p.entry_constraints:
            lines.append(f"entry ({r},{c0}) {sense} {float(bound):.6g}")
    elif isinstance(p, QcqpMinProgram):
        lines.append(f"vars {p.num_vars}")
        for P, q, r in p.quad_constraints:
            lines.append(f"quad r={float(r):.6g} |P|max={float(np.max(np.abs(P))) if p.num_vars else 0:.4g}")
        lines.append("modulus " + np.array2string(p.modulus_bounds, precision=4))
    else:
        raise TypeError(f"not a conic program: {type(p)!r}")
    return "\n".join(lines)
