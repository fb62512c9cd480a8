"""Static arbitrage checks: law of one price, strict arbitrage, arbitrage.

Every check returns a certificate that can be re-verified with plain
arithmetic: a discount curve that reprices the market, or a portfolio that
violates the corresponding no-arbitrage condition.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import lp
from .core import (
    DEFAULT_TOL,
    ArrayLike,
    DiscountCurve,
    Market,
    Portfolio,
    TolerancePolicy,
    curve_vector,
    max_norm,
    portfolio_cashflows,
    portfolio_price,
)

log = logging.getLogger(__name__)


class Level(str, enum.Enum):
    LAW_OF_ONE_PRICE_FAILS = "LawOfOnePriceFails"
    STRICT_ARBITRAGE = "StrictArbitrage"
    ARBITRAGE = "Arbitrage"
    ARBITRAGE_FREE = "ArbitrageFree"
    # only produced by check_strict_arbitrage: a nonnegative curve exists
    NO_STRICT_ARBITRAGE = "NoStrictArbitrage"


class NumericalAmbiguity(ArithmeticError):
    """Neither branch of a dichotomy could be certified at the working tolerance."""


@dataclass(frozen=True)
class ArbitrageVerdict:
    level: Level
    witness_curve: Optional[DiscountCurve] = None
    violating_portfolio: Optional[Portfolio] = None
    non_unique: bool = False
    min_discount: Optional[float] = None

    @property
    def arbitrage_free(self) -> bool:
        return self.level is Level.ARBITRAGE_FREE

    def to_json(self) -> dict:
        return {
            "level": self.level.value,
            "witness_curve": self.witness_curve.to_json() if self.witness_curve else None,
            "portfolio": [float(x) for x in self.violating_portfolio.positions]
            if self.violating_portfolio is not None
            else None,
            "non_unique": self.non_unique,
        }


def column_rank(C: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> int:
    if C.size == 0:
        return 0
    s = np.linalg.svd(C, compute_uv=False)
    return int(np.sum(s > tol.rank_tol * s[0])) if s[0] > 0 else 0


def _lstsq(C: np.ndarray, P: np.ndarray, tol: TolerancePolicy) -> np.ndarray:
    v, *_ = np.linalg.lstsq(C, P, rcond=tol.rank_tol)
    return v


def check_law_of_one_price(
    market: Market, tol: TolerancePolicy = DEFAULT_TOL
) -> tuple[bool, Union[DiscountCurve, Portfolio]]:
    """Test whether prices lie in the column space of the cash-flow matrix.

    Returns ``(True, curve)`` with a (possibly signed) curve that reprices the
    market, or ``(False, q)`` where ``q`` is the normalized least-squares
    residual: it generates zero cash flows and has positive price.
    """
    C, P = market.cashflows, market.prices
    v = _lstsq(C, P, tol)
    resid = P - C @ v
    if max_norm(resid) <= tol.feas_tol * max_norm(P):
        return True, DiscountCurve.from_grid_values(market.grid, v)
    # the residual is orthogonal to Im(C): resid @ C ~ 0 and resid @ P = |resid|^2 > 0
    return False, Portfolio(resid).normalized()


def _strict_arbitrage_from_farkas(y: np.ndarray) -> Portfolio:
    # farkas y: y @ C <= 0 and y @ P > 0, so q = -y is a strict arbitrage
    return Portfolio(-y).normalized()


def check_strict_arbitrage(market: Market, tol: TolerancePolicy = DEFAULT_TOL) -> ArbitrageVerdict:
    """Find a nonnegative discount vector ``v`` with ``C v = P`` or a strict arbitrage.

    The portfolio is the Farkas certificate of the infeasible system
    ``{C v = P, v >= 0}``.
    """
    C, P = market.cashflows, market.prices
    problem = lp.LpProblem.build(np.zeros(market.n_dates), eq=(C, P))
    out = lp.solve(problem, tol)
    if out.optimal:
        v = np.maximum(out.primal, 0.0)
        return ArbitrageVerdict(
            Level.NO_STRICT_ARBITRAGE,
            witness_curve=DiscountCurve.from_grid_values(market.grid, v),
            non_unique=column_rank(C, tol) < market.n_dates,
            min_discount=float(v.min()),
        )
    return ArbitrageVerdict(Level.STRICT_ARBITRAGE, violating_portfolio=_strict_arbitrage_from_farkas(out.farkas))


def max_min_discount(market: Market, tol: TolerancePolicy = DEFAULT_TOL) -> lp.LpOutcome:
    """Solve ``max t  s.t.  C v = P,  v >= t,  0 <= t <= 1``; variables are ``[v, t]``."""
    M, N = market.cashflows.shape
    c = np.zeros(N + 1)
    c[-1] = -1.0
    eq = (np.hstack([market.cashflows, np.zeros((M, 1))]), market.prices)
    G = np.hstack([np.eye(N), -np.ones((N, 1))])
    cap = np.zeros((1, N + 1))
    cap[0, -1] = -1.0
    ineq = (np.vstack([G, cap]), np.concatenate([np.zeros(N), [-1.0]]))
    return lp.solve(lp.LpProblem.build(c, eq=eq, ineq=ineq), tol)


def find_arbitrage_portfolio(market: Market, tol: TolerancePolicy = DEFAULT_TOL) -> Optional[Portfolio]:
    """Cheapest ``q`` with ``q P <= 0``, ``q C >= 0`` and ``sum(q C) = 1``, or ``None``."""
    C, P = market.cashflows, market.prices
    M, N = C.shape
    G = np.vstack([C.T, -P[None, :]])
    h = np.zeros(N + 1)
    eq = (C.sum(axis=1)[None, :], [1.0])
    out = lp.solve(lp.LpProblem.build(P, eq=eq, ineq=(G, h), free=range(M)), tol)
    if out.status is lp.Status.INFEASIBLE:
        return None
    # bounded below by zero whenever a nonnegative curve exists; unbounded means strict arbitrage
    q = out.primal if out.optimal else out.ray
    return Portfolio(q).normalized()


def check_arbitrage(market: Market, tol: TolerancePolicy = DEFAULT_TOL) -> ArbitrageVerdict:
    """Classify the market, reporting the most basic condition that fails."""
    holds, witness = check_law_of_one_price(market, tol)
    if not holds:
        return ArbitrageVerdict(Level.LAW_OF_ONE_PRICE_FAILS, violating_portfolio=witness)

    C, P = market.cashflows, market.prices
    N = market.n_dates
    out = max_min_discount(market, tol)
    if out.status is lp.Status.INFEASIBLE:
        y = out.farkas[: market.n_instruments]
        return ArbitrageVerdict(Level.STRICT_ARBITRAGE, violating_portfolio=_strict_arbitrage_from_farkas(y))
    if not out.optimal:  # t is capped, so this cannot happen
        raise NumericalAmbiguity("max-min discount problem reported unbounded")

    v, t = out.primal[:N], float(out.primal[N])
    non_unique = column_rank(C, tol) < N
    if t > tol.strict_tol:
        return ArbitrageVerdict(
            Level.ARBITRAGE_FREE,
            witness_curve=DiscountCurve.from_grid_values(market.grid, v),
            non_unique=non_unique,
            min_discount=t,
        )

    q = find_arbitrage_portfolio(market, tol)
    if q is None:
        raise NumericalAmbiguity(
            f"largest attainable minimum discount {t:.3e} is below strict_tol, "
            "yet no arbitrage portfolio was found"
        )
    price = float(q.positions @ P)
    level = Level.STRICT_ARBITRAGE if price < -tol.strict_tol * max_norm(P) else Level.ARBITRAGE
    curve = DiscountCurve.from_grid_values(market.grid, np.maximum(v, 0.0))
    return ArbitrageVerdict(level, witness_curve=curve, violating_portfolio=q, non_unique=non_unique, min_discount=t)


# --- re-verification ---------------------------------------------------------


def verify_curve(market: Market, curve: DiscountCurve) -> float:
    """Max-norm pricing error ``|P - C g(x)|`` relative to ``|P|`` (absolute when P = 0)."""
    err = max_norm(market.prices - market.cashflows @ curve_vector(curve, market.grid))
    norm = max_norm(market.prices)
    return err / norm if norm else err


def is_strict_arbitrage(market: Market, q: Portfolio | ArrayLike, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    price = portfolio_price(market, q)
    flows = portfolio_cashflows(market, q)
    scale = max(1.0, max_norm(market.cashflows))
    return price < -tol.strict_tol * max_norm(market.prices) and bool(np.all(flows >= -tol.feas_tol * scale))


def is_arbitrage(market: Market, q: Portfolio | ArrayLike, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    price = portfolio_price(market, q)
    flows = portfolio_cashflows(market, q)
    scale = max(1.0, max_norm(market.cashflows))
    return (
        price <= tol.feas_tol * max(1.0, max_norm(market.prices))
        and bool(np.all(flows >= -tol.feas_tol * scale))
        and float(flows.max()) > tol.strict_tol
    )
