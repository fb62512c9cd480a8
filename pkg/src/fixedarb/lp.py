"""Dense two-phase simplex with dual vectors and Farkas certificates.

Problems are stated as::

    minimize    c @ w
    subject to  A @ w == b
                G @ w >= h
                w[k] >= 0   for k not in free_vars

Internally every free variable is split into a difference of two nonnegative
parts, every inequality row receives a surplus column, and each row is scaled
to unit max-norm. Pivoting follows Bland's least-index rule, so the method
terminates and is deterministic.
"""

from __future__ import annotations

import contextlib
import contextvars
import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

from .core import DEFAULT_TOL, ArrayLike, DimensionError, TolerancePolicy, max_norm

PIVOT_TOL = 1e-11
MAX_PIVOTS = 100_000
MAX_ORACLE_VARS = 12


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


def _matrix(a: ArrayLike | None, n: int, name: str) -> np.ndarray:
    if a is None:
        return np.zeros((0, n))
    m = np.array(a, dtype=float)
    if m.size == 0:
        return np.zeros((0, n))
    m = np.atleast_2d(m)
    if m.shape[1] != n:
        raise DimensionError(f"{name} has {m.shape[1]} columns, expected {n}")
    return m


@dataclass(frozen=True)
class LpProblem:
    objective: np.ndarray
    eq_lhs: np.ndarray
    eq_rhs: np.ndarray
    ineq_lhs: np.ndarray
    ineq_rhs: np.ndarray
    free_vars: frozenset = frozenset()

    def __post_init__(self) -> None:
        c = np.array(self.objective, dtype=float).reshape(-1)
        n = c.size
        A = _matrix(self.eq_lhs, n, "eq_lhs")
        G = _matrix(self.ineq_lhs, n, "ineq_lhs")
        b = np.array(self.eq_rhs if self.eq_rhs is not None else [], dtype=float).reshape(-1)
        h = np.array(self.ineq_rhs if self.ineq_rhs is not None else [], dtype=float).reshape(-1)
        if b.size != A.shape[0]:
            raise DimensionError(f"eq_rhs has length {b.size}, expected {A.shape[0]}")
        if h.size != G.shape[0]:
            raise DimensionError(f"ineq_rhs has length {h.size}, expected {G.shape[0]}")
        for name, arr in (("objective", c), ("eq_lhs", A), ("eq_rhs", b), ("ineq_lhs", G), ("ineq_rhs", h)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            arr.setflags(write=False)
        free = frozenset(int(k) for k in self.free_vars)
        if any(k < 0 or k >= n for k in free):
            raise DimensionError("free variable index out of range")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "eq_lhs", A)
        object.__setattr__(self, "eq_rhs", b)
        object.__setattr__(self, "ineq_lhs", G)
        object.__setattr__(self, "ineq_rhs", h)
        object.__setattr__(self, "free_vars", free)

    @classmethod
    def build(
        cls,
        objective: ArrayLike,
        *,
        eq: tuple[ArrayLike, ArrayLike] | None = None,
        ineq: tuple[ArrayLike, ArrayLike] | None = None,
        free: Iterable[int] = (),
    ) -> LpProblem:
        A, b = eq if eq is not None else (None, None)
        G, h = ineq if ineq is not None else (None, None)
        return cls(np.asarray(objective, dtype=float), A, b, G, h, frozenset(free))

    @property
    def n_vars(self) -> int:
        return self.objective.size

    def residuals(self, w: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
        """``(A w - b, G w - h)`` for a candidate point."""
        w = np.asarray(w, dtype=float)
        return self.eq_lhs @ w - self.eq_rhs, self.ineq_lhs @ w - self.ineq_rhs

    def is_feasible(self, w: ArrayLike, tol: float = 1e-9) -> bool:
        w = np.asarray(w, dtype=float)
        r_eq, r_in = self.residuals(w)
        scale = max(1.0, max_norm(self.eq_lhs, self.ineq_lhs, self.eq_rhs, self.ineq_rhs)) * max(1.0, max_norm(w))
        bounded = [k for k in range(self.n_vars) if k not in self.free_vars]
        return bool(
            np.all(np.abs(r_eq) <= tol * scale)
            and np.all(r_in >= -tol * scale)
            and np.all(w[bounded] >= -tol * max(1.0, max_norm(w)))
        )

    def dump(self) -> str:
        """Fixed-format text rendering: objective row, then constraint rows."""
        fmt = lambda row: " ".join(f"{x:>20.12e}" for x in row)  # noqa: E731
        lines = [
            f"# n_vars={self.n_vars} n_eq={self.eq_lhs.shape[0]} n_ineq={self.ineq_lhs.shape[0]}",
            f"# free={sorted(self.free_vars)}",
            f"MIN {fmt(self.objective)}",
        ]
        for row, rhs in zip(self.eq_lhs, self.eq_rhs):
            lines.append(f"EQ  {fmt(row)} = {rhs:.12e}")
        for row, rhs in zip(self.ineq_lhs, self.ineq_rhs):
            lines.append(f"GE  {fmt(row)} >= {rhs:.12e}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LpOutcome:
    status: Status
    primal: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    dual_eq: Optional[np.ndarray] = None
    dual_ineq: Optional[np.ndarray] = None
    farkas: Optional[np.ndarray] = None
    ray: Optional[np.ndarray] = None
    dual_degenerate: bool = False
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def farkas_parts(self, problem: LpProblem) -> tuple[np.ndarray, np.ndarray]:
        """Split the certificate into its equality-row and inequality-row parts."""
        m_eq = problem.eq_lhs.shape[0]
        return self.farkas[:m_eq], self.farkas[m_eq:]


# --- LP recording (used by the CLI --dump-lp flag) -------------------------

_recorder: contextvars.ContextVar[Optional[list]] = contextvars.ContextVar("lp_recorder", default=None)


@contextlib.contextmanager
def recording() -> Iterator[list]:
    """Collect every problem passed to :func:`solve` inside the block."""
    sink: list = []
    token = _recorder.set(sink)
    try:
        yield sink
    finally:
        _recorder.reset(token)


# --- standard form -----------------------------------------------------------


@dataclass
class _StandardForm:
    A: np.ndarray  # m x n_std, rows scaled, rhs made nonnegative
    b: np.ndarray
    c: np.ndarray
    row_factor: np.ndarray  # original row r = row_factor[r] * standard row r
    plus: np.ndarray  # standard column of each original variable
    minus: np.ndarray  # mirror column for free variables, -1 otherwise
    n_std: int
    mirror: dict = field(default_factory=dict)


def _standardize(problem: LpProblem) -> _StandardForm:
    n = problem.n_vars
    M = np.vstack([problem.eq_lhs, problem.ineq_lhs]) if n else np.zeros((0, 0))
    rhs = np.concatenate([problem.eq_rhs, problem.ineq_rhs])
    m_eq, m_in = problem.eq_lhs.shape[0], problem.ineq_lhs.shape[0]
    m = m_eq + m_in

    plus = np.arange(n)
    minus = -np.ones(n, dtype=int)
    free = sorted(problem.free_vars)
    for j, k in enumerate(free):
        minus[k] = n + j
    n_split = n + len(free)
    n_std = n_split + m_in

    A = np.zeros((m, n_std))
    A[:, :n] = M
    for k in free:
        A[:, minus[k]] = -M[:, k]
    A[m_eq + np.arange(m_in), n_split + np.arange(m_in)] = -1.0

    c = np.zeros(n_std)
    c[:n] = problem.objective
    for k in free:
        c[minus[k]] = -problem.objective[k]

    scale = np.max(np.abs(M), axis=1) if n else np.ones(m)
    scale = np.where(scale > 0, scale, 1.0)
    sign = np.where(rhs < 0, -1.0, 1.0)
    factor = sign / scale
    A *= factor[:, None]
    b = rhs * factor

    mirror = {}
    for k in free:
        mirror[int(plus[k])] = int(minus[k])
        mirror[int(minus[k])] = int(plus[k])
    return _StandardForm(A, b, c, factor, plus, minus, n_std, mirror)


# --- tableau -----------------------------------------------------------------


class _Tableau:
    """Rows hold ``B^-1 [A | I | b]``; artificial columns give ``B^-1`` directly."""

    def __init__(self, std: _StandardForm):
        m, n = std.A.shape
        self.m, self.n = m, n
        self.T = np.hstack([std.A, np.eye(m), std.b[:, None]])
        self.basis = list(range(n, n + m))
        self.pivots = 0

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        colvals = T[:, col].copy()
        colvals[row] = 0.0
        T -= np.outer(colvals, T[row])
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col
        self.pivots += 1
        if self.pivots > MAX_PIVOTS:
            raise RuntimeError("simplex exceeded the pivot limit")

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        cb = cost[self.basis]
        return cost - cb @ self.T[:, :-1]

    def run(self, cost: np.ndarray, allowed: np.ndarray, rc_tol: float) -> Optional[int]:
        """Iterate to optimality; return the entering column if unbounded."""
        while True:
            r = self.reduced_costs(cost)
            candidates = np.flatnonzero(allowed & (r < -rc_tol))
            if candidates.size == 0:
                return None
            col = int(candidates[0])
            a = self.T[:, col]
            rows = np.flatnonzero(a > PIVOT_TOL)
            if rows.size == 0:
                return col
            ratios = np.maximum(self.T[rows, -1], 0.0) / a[rows]
            best = ratios.min()
            ties = rows[ratios <= best + PIVOT_TOL * max(1.0, best)]
            row = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(row, col)

    def basic_solution(self, A_full: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Basic variable values re-solved from the original columns."""
        x = np.zeros(A_full.shape[1])
        if self.m:
            B = A_full[:, self.basis]
            try:
                x[self.basis] = np.linalg.solve(B, b)
            except np.linalg.LinAlgError:
                x[self.basis] = self.T[:, -1]
        return x

    def duals(self, A_full: np.ndarray, cost: np.ndarray) -> np.ndarray:
        """Simplex multipliers ``y`` with ``B^T y = c_B``."""
        if not self.m:
            return np.zeros(0)
        cb = cost[self.basis]
        B = A_full[:, self.basis]
        try:
            return np.linalg.solve(B.T, cb)
        except np.linalg.LinAlgError:
            return cb @ self.T[:, self.n : self.n + self.m]


def _to_original(std: _StandardForm, x: np.ndarray) -> np.ndarray:
    w = x[std.plus].copy()
    has_minus = std.minus >= 0
    w[has_minus] -= x[std.minus[has_minus]]
    return w


def solve(problem: LpProblem, tol: TolerancePolicy = DEFAULT_TOL) -> LpOutcome:
    """Solve ``problem``; the outcome is exactly one of Optimal, Infeasible, Unbounded."""
    sink = _recorder.get()
    if sink is not None:
        sink.append(problem)

    std = _standardize(problem)
    m, n = std.A.shape
    tab = _Tableau(std)
    A_full = np.hstack([std.A, np.eye(m)])
    artificial = np.arange(n, n + m)

    # phase I: minimize the sum of artificials
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    allowed1 = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    tab.run(cost1, allowed1, tol.feas_tol)
    x = tab.basic_solution(A_full, std.b)
    infeas = float(np.sum(x[artificial]))
    if infeas > tol.feas_tol * max(1.0, max_norm(std.b)):
        y = tab.duals(A_full, cost1)
        return LpOutcome(Status.INFEASIBLE, farkas=y * std.row_factor, pivots=tab.pivots)

    # drive remaining artificials out of the basis; rows with no pivot are redundant
    for row in range(m):
        if tab.basis[row] >= n:
            tab.T[row, -1] = 0.0
            nz = np.flatnonzero(np.abs(tab.T[row, :n]) > PIVOT_TOL)
            if nz.size:
                tab.pivot(row, int(nz[0]))

    # phase II
    cost2 = np.concatenate([std.c, np.zeros(m)])
    rc_tol = tol.feas_tol * max(1.0, max_norm(std.c))
    entering = tab.run(cost2, allowed1, rc_tol)
    x = tab.basic_solution(A_full, std.b)
    w = _to_original(std, x[:n])

    if entering is not None:
        d = np.zeros(n + m)
        d[entering] = 1.0
        for i, bi in enumerate(tab.basis):
            d[bi] = -tab.T[i, entering]
        ray = _to_original(std, d[:n])
        return LpOutcome(
            Status.UNBOUNDED,
            primal=w,
            objective_value=float(problem.objective @ w),
            ray=ray,
            pivots=tab.pivots,
        )

    y = tab.duals(A_full, cost2) * std.row_factor
    m_eq = problem.eq_lhs.shape[0]
    dual_ineq = y[m_eq:]
    dual_ineq = np.where(dual_ineq < 0, np.where(dual_ineq >= -rc_tol, 0.0, dual_ineq), dual_ineq)

    r = tab.reduced_costs(cost2)
    basic = set(tab.basis)
    degenerate = False
    for j in range(n):
        if j in basic or std.mirror.get(j) in basic:
            continue
        if abs(r[j]) <= rc_tol:
            degenerate = True
            break

    return LpOutcome(
        Status.OPTIMAL,
        primal=w,
        objective_value=float(problem.objective @ w),
        dual_eq=y[:m_eq],
        dual_ineq=dual_ineq,
        dual_degenerate=degenerate,
        pivots=tab.pivots,
    )


def feasible_point(problem: LpProblem, tol: TolerancePolicy = DEFAULT_TOL) -> Optional[np.ndarray]:
    """Any point of the feasible set, or ``None`` (then :func:`solve` yields a certificate)."""
    out = solve(LpProblem.build(np.zeros(problem.n_vars),
                                eq=(problem.eq_lhs, problem.eq_rhs),
                                ineq=(problem.ineq_lhs, problem.ineq_rhs),
                                free=problem.free_vars), tol)
    return out.primal if out.optimal else None


# --- brute-force oracle ------------------------------------------------------


def _constraint_rows(problem: LpProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n = problem.n_vars
    bounds = np.array([np.eye(n)[k] for k in range(n) if k not in problem.free_vars]).reshape(-1, n)
    cand = np.vstack([problem.ineq_lhs, bounds])
    cand_rhs = np.concatenate([problem.ineq_rhs, np.zeros(bounds.shape[0])])
    return problem.eq_lhs, problem.eq_rhs, cand, cand_rhs


def _independent_rows(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    """Greedy maximal independent subset of ``A w = b``; flag if the system is inconsistent."""
    keep: list[int] = []
    for i in range(A.shape[0]):
        trial = keep + [i]
        if np.linalg.matrix_rank(A[trial]) == len(trial):
            keep.append(i)
    if A.shape[0]:
        w, *_ = np.linalg.lstsq(A[keep], b[keep], rcond=None) if keep else (np.zeros(A.shape[1]),)
        consistent = np.allclose(A @ w, b, atol=1e-9 * max(1.0, max_norm(A, b)))
    else:
        consistent = True
    return A[keep], b[keep], consistent


def _check_size(problem: LpProblem) -> None:
    if problem.n_vars > MAX_ORACLE_VARS:
        raise ValueError(f"brute-force enumeration is limited to {MAX_ORACLE_VARS} variables")


def is_pointed(problem: LpProblem) -> bool:
    """True when the feasible set (if nonempty) has at least one vertex."""
    _, _, cand, _ = _constraint_rows(problem)
    M = np.vstack([problem.eq_lhs, cand])
    return M.shape[0] > 0 and np.linalg.matrix_rank(M) == problem.n_vars


def _square_solves(rows_fixed: np.ndarray, rhs_fixed: np.ndarray, cand: np.ndarray, cand_rhs: np.ndarray, k: int):
    """Solve every square system ``[fixed; cand[S]] w = rhs`` with ``|S| = k`` that is nonsingular."""
    n = rows_fixed.shape[1]
    if k < 0:
        return np.zeros((0, n))
    combos = list(itertools.combinations(range(cand.shape[0]), k))
    combos = np.array(combos, dtype=int) if k else np.zeros((len(combos), 0), dtype=int)
    if combos.shape[0] == 0:
        return np.zeros((0, n))
    mats = np.concatenate([np.broadcast_to(rows_fixed, (combos.shape[0],) + rows_fixed.shape), cand[combos]], axis=1)
    rhs = np.concatenate([np.broadcast_to(rhs_fixed, (combos.shape[0], rhs_fixed.size)), cand_rhs[combos]], axis=1)
    sv = np.linalg.svd(mats, compute_uv=False)
    ok = sv[:, -1] > 1e-10 * np.maximum(sv[:, 0], 1e-300)
    if not np.any(ok):
        return np.zeros((0, n))
    return np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]


def _dedupe(points: np.ndarray) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for p in points:
        if not any(np.allclose(p, o, atol=1e-9, rtol=1e-9) for o in out):
            out.append(p)
    out.sort(key=lambda p: tuple(np.round(p, 9)))
    return out


def enumerate_vertices(problem: LpProblem, tol: TolerancePolicy = DEFAULT_TOL) -> list[np.ndarray]:
    """All basic feasible solutions, found by solving every candidate active set."""
    _check_size(problem)
    n = problem.n_vars
    A, b, cand, cand_rhs = _constraint_rows(problem)
    A, b, consistent = _independent_rows(A, b)
    if not consistent:
        return []
    pts = _square_solves(A, b, cand, cand_rhs, n - A.shape[0])
    feas = [p for p in pts if problem.is_feasible(p, tol.feas_tol * 10)]
    return _dedupe(np.array(feas).reshape(-1, n))


def enumerate_rays(problem: LpProblem) -> list[np.ndarray]:
    """Extreme rays of the recession cone, each normalized to unit max-norm."""
    _check_size(problem)
    n = problem.n_vars
    A, _, cand, _ = _constraint_rows(problem)
    A, _, _ = _independent_rows(A, np.zeros(A.shape[0]))
    k = n - 1 - A.shape[0]
    if k < 0:
        return []
    rays = []
    for S in itertools.combinations(range(cand.shape[0]), k):
        M = np.vstack([A, cand[list(S)]]).reshape(-1, n)
        if M.shape[0] and np.linalg.matrix_rank(M) != n - 1:
            continue
        if M.shape[0] == 0 and n != 1:
            continue
        d = np.linalg.svd(M if M.shape[0] else np.zeros((1, n)))[2][-1]
        for s in (1.0, -1.0):
            r = s * d / np.max(np.abs(d))
            if (
                np.all(np.abs(problem.eq_lhs @ r) <= 1e-9 * max(1.0, max_norm(problem.eq_lhs)))
                and np.all(problem.ineq_lhs @ r >= -1e-9 * max(1.0, max_norm(problem.ineq_lhs)))
                and all(r[j] >= -1e-12 for j in range(n) if j not in problem.free_vars)
            ):
                rays.append(r)
    return _dedupe(np.array(rays).reshape(-1, n))
