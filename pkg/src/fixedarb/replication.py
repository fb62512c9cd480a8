"""Replicating liability cash flows with a fixed-income universe.

Covers exact replication, the super-replication feasibility test with its
obstruction certificate, the least-cost super-replicating portfolio with its
dual discount vector, cash-flow aggregation between liability dates, and the
ridge-penalized quadratic hedge.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import lp
from .arbitrage import ArbitrageVerdict, check_arbitrage, column_rank
from .core import (
    DEFAULT_TOL,
    DiscountCurve,
    LiabilitySchedule,
    Market,
    Portfolio,
    TolerancePolicy,
    curve_vector,
    max_norm,
)

log = logging.getLogger(__name__)


class ReplicationError(Exception):
    pass


class InfeasibleLiability(ReplicationError):
    def __init__(self, obstruction: np.ndarray):
        super().__init__("no portfolio super-replicates the liabilities")
        self.obstruction = obstruction


class ArbitragePrecluded(ReplicationError):
    def __init__(self, verdict: ArbitrageVerdict):
        super().__init__(f"market is not arbitrage-free ({verdict.level.value})")
        self.verdict = verdict


class UnboundedBelow(ReplicationError):
    def __init__(self, ray: np.ndarray):
        super().__init__("super-replication cost is unbounded below")
        self.ray = ray


@dataclass(frozen=True)
class FeasibilityCertificate:
    feasible: bool
    portfolio: Optional[Portfolio] = None
    obstruction: Optional[np.ndarray] = None
    via_instrument: Optional[int] = None


@dataclass(frozen=True)
class SuperReplicationResult:
    portfolio: Portfolio
    cost: float
    slack: np.ndarray
    dual_discount: np.ndarray
    possibly_non_unique: bool
    verdict: Optional[ArbitrageVerdict] = None

    def to_json(self) -> dict:
        return {
            "portfolio": [float(x) for x in self.portfolio.positions],
            "cost": self.cost,
            "slack": [float(x) for x in self.slack],
            "dual_discount": [float(x) for x in self.dual_discount],
            "possibly_non_unique": self.possibly_non_unique,
        }


def _check_grid(market: Market, liab: LiabilitySchedule) -> None:
    if liab.grid != market.grid:
        raise ValueError("liability schedule and market use different date grids")


def replicate_exact(
    market: Market, liab: LiabilitySchedule, tol: TolerancePolicy = DEFAULT_TOL
) -> Optional[Portfolio]:
    """Solve ``q C = Z`` when ``Z`` lies in the row space of ``C``; ``None`` otherwise."""
    _check_grid(market, liab)
    C, Z = market.cashflows, liab.amounts
    q, *_ = np.linalg.lstsq(C.T, Z, rcond=tol.rank_tol)
    if max_norm(q @ C - Z) <= tol.feas_tol * max_norm(Z):
        return Portfolio(q)
    return None


def sufficient_instrument(market: Market, liab: LiabilitySchedule) -> Optional[int]:
    """First instrument with nonnegative cash flows paying exactly on the liability dates."""
    _check_grid(market, liab)
    pays = liab.amounts != 0
    for i, row in enumerate(market.cashflows):
        if np.all(row >= 0) and np.array_equal(row > 0, pays):
            return i
    return None


def check_feasibility(
    market: Market, liab: LiabilitySchedule, tol: TolerancePolicy = DEFAULT_TOL
) -> FeasibilityCertificate:
    """Either a portfolio with ``q C >= Z`` or ``v >= 0`` with ``C v = 0`` and ``Z v > 0``."""
    _check_grid(market, liab)
    C, Z = market.cashflows, liab.amounts
    M = market.n_instruments
    if not np.any(Z):
        return FeasibilityCertificate(True, portfolio=Portfolio(np.zeros(M)))

    i = sufficient_instrument(market, liab)
    if i is not None:
        t = max(float(Z.max()), 0.0) / float(C[i, C[i] > 0].min())
        q = np.zeros(M)
        q[i] = t
        return FeasibilityCertificate(True, portfolio=Portfolio(q), via_instrument=i)

    problem = lp.LpProblem.build(np.zeros(M), ineq=(C.T, Z), free=range(M))
    out = lp.solve(problem, tol)
    if out.optimal:
        return FeasibilityCertificate(True, portfolio=Portfolio(out.primal))
    # farkas y >= 0 on the rows of C^T q >= Z: y @ C^T = 0 and y @ Z > 0
    v = np.maximum(out.farkas, 0.0)
    return FeasibilityCertificate(False, obstruction=v / max_norm(v))


def superreplicate(
    market: Market,
    liab: LiabilitySchedule,
    tol: TolerancePolicy = DEFAULT_TOL,
    verdict: ArbitrageVerdict | None = None,
) -> SuperReplicationResult:
    """Least-cost portfolio with ``q C >= Z``, with its dual discount vector.

    Raises :class:`ArbitragePrecluded` unless the market is arbitrage-free and
    :class:`InfeasibleLiability` when no super-replicating portfolio exists.
    """
    _check_grid(market, liab)
    C, P, Z = market.cashflows, market.prices, liab.amounts
    M = market.n_instruments
    if verdict is None:
        verdict = check_arbitrage(market, tol)
    if not verdict.arbitrage_free:
        raise ArbitragePrecluded(verdict)
    if column_rank(C, tol) < M:
        log.warning("cash-flow matrix has rank below the number of instruments; existence is not guaranteed")
    feas = check_feasibility(market, liab, tol)
    if not feas.feasible:
        raise InfeasibleLiability(feas.obstruction)

    out = lp.solve(lp.LpProblem.build(P, ineq=(C.T, Z), free=range(M)), tol)
    if out.status is lp.Status.UNBOUNDED:
        raise UnboundedBelow(out.ray)
    if not out.optimal:
        raise InfeasibleLiability(np.maximum(out.farkas, 0.0))
    q = out.primal
    return SuperReplicationResult(
        portfolio=Portfolio(q),
        cost=float(q @ P),
        slack=q @ C - Z,
        dual_discount=out.dual_ineq,
        possibly_non_unique=out.dual_degenerate,
        verdict=verdict,
    )


# --- cash-flow aggregation ---------------------------------------------------


def _aggregate(C: np.ndarray, Z: np.ndarray, weights: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(Z != 0)
    if idx.size == 0:
        raise ValueError("aggregation needs at least one nonzero liability")
    out = C.copy()
    start = 0
    for jk in idx:
        window = slice(start, jk + 1)
        total = (C[:, window] * weights[window] / weights[jk]).sum(axis=1)
        out[:, window] = 0.0
        out[:, jk] = total
        start = jk + 1
    return out


def aggregate_buffer(market: Market, liab: LiabilitySchedule) -> Market:
    """Roll intermediate payments forward, at face value, onto the next liability date."""
    _check_grid(market, liab)
    ones = np.ones(market.n_dates)
    return market.with_cashflows(_aggregate(market.cashflows, liab.amounts, ones))


def aggregate_forward(market: Market, liab: LiabilitySchedule, curve: DiscountCurve, tol: TolerancePolicy = DEFAULT_TOL) -> Market:
    """Accumulate intermediate payments at the forward rates implied by ``curve``.

    Preserves ``P = C g(x)`` whenever ``curve`` reprices the original market.
    """
    _check_grid(market, liab)
    g = curve_vector(curve, market.grid)
    if np.any(g <= tol.strict_tol):
        raise ValueError("forward aggregation needs a strictly positive curve on the grid")
    return market.with_cashflows(_aggregate(market.cashflows, liab.amounts, g))


# --- quadratic hedge ---------------------------------------------------------


def hedge_quadratic(market: Market, liab: LiabilitySchedule, lam: float) -> Portfolio:
    """Minimizer of ``|Z - q C|^2 + lam |q|^2``, from ``(C C^T + lam I) q = C Z``."""
    _check_grid(market, liab)
    if not lam > 0:
        raise ValueError("lambda must be strictly positive")
    C, Z = market.cashflows, liab.amounts
    H = C @ C.T + lam * np.eye(market.n_instruments)
    L = np.linalg.cholesky(H)
    q = np.linalg.solve(L.T, np.linalg.solve(L, C @ Z))
    return Portfolio(q)


def quadratic_objective(market: Market, liab: LiabilitySchedule, lam: float, q: np.ndarray) -> float:
    r = liab.amounts - q @ market.cashflows
    return float(r @ r + lam * (q @ q))
