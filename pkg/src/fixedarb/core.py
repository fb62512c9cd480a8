"""Domain data model: date grids, markets, portfolios, discount curves, liabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

ArrayLike = Union[Sequence[float], np.ndarray]


class DimensionError(ValueError):
    """Raised when vectors and matrices do not line up."""


def _frozen(a: ArrayLike, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        if ndim == 2 and arr.size == 0:
            arr = arr.reshape(0, 0)
        else:
            raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def max_norm(*arrays: ArrayLike) -> float:
    """Largest absolute entry over all given arrays (0 for empty input)."""
    m = 0.0
    for a in arrays:
        a = np.asarray(a, dtype=float)
        if a.size:
            m = max(m, float(np.max(np.abs(a))))
    return m


@dataclass(frozen=True)
class TolerancePolicy:
    feas_tol: float = 1e-9
    strict_tol: float = 1e-9
    rank_tol: float = 1e-10

    def __post_init__(self) -> None:
        for name in ("feas_tol", "strict_tol", "rank_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


DEFAULT_TOL = TolerancePolicy()


@dataclass(frozen=True)
class DateGrid:
    """Strictly increasing, strictly positive cash-flow dates in year fractions."""

    dates: np.ndarray

    def __post_init__(self) -> None:
        d = _frozen(self.dates, 1, "dates")
        if d.size < 1:
            raise ValueError("a date grid needs at least one date")
        if d[0] <= 0:
            raise ValueError("dates must be strictly positive")
        if np.any(np.diff(d) <= 0):
            raise ValueError("dates must be strictly increasing without duplicates")
        object.__setattr__(self, "dates", d)

    def __len__(self) -> int:
        return self.dates.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DateGrid):
            return NotImplemented
        return self.dates.shape == other.dates.shape and bool(np.all(self.dates == other.dates))

    def __hash__(self) -> int:
        return hash(self.dates.tobytes())

    def index_of(self, t: float, atol: float = 1e-9) -> int:
        """Position of date ``t`` in the grid, matched within ``atol`` years."""
        k = int(np.argmin(np.abs(self.dates - t)))
        if abs(self.dates[k] - t) > atol:
            raise KeyError(f"date {t} is not on the grid")
        return k


@dataclass(frozen=True)
class Market:
    """Prices ``P`` (length M) and cash-flow matrix ``C`` (M x N) on a date grid."""

    grid: DateGrid
    prices: np.ndarray
    cashflows: np.ndarray

    def __post_init__(self) -> None:
        p = _frozen(self.prices, 1, "prices")
        c = _frozen(self.cashflows, 2, "cashflows")
        if p.size < 1:
            raise ValueError("a market needs at least one instrument")
        if c.shape != (p.size, len(self.grid)):
            raise DimensionError(
                f"cashflows shape {c.shape} does not match (M={p.size}, N={len(self.grid)})"
            )
        object.__setattr__(self, "prices", p)
        object.__setattr__(self, "cashflows", c)

    @classmethod
    def from_arrays(cls, prices: ArrayLike, cashflows: ArrayLike, dates: ArrayLike | None = None) -> Market:
        c = np.atleast_2d(np.asarray(cashflows, dtype=float))
        if dates is None:
            dates = np.arange(1, c.shape[1] + 1, dtype=float)
        return cls(DateGrid(np.asarray(dates, dtype=float)), np.asarray(prices, dtype=float), c)

    @property
    def n_instruments(self) -> int:
        return self.prices.size

    @property
    def n_dates(self) -> int:
        return len(self.grid)

    def with_cashflows(self, cashflows: ArrayLike) -> Market:
        return Market(self.grid, self.prices, np.asarray(cashflows, dtype=float))


@dataclass(frozen=True)
class Portfolio:
    """Positions per instrument; short positions are negative."""

    positions: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "positions", _frozen(self.positions, 1, "positions"))

    def __len__(self) -> int:
        return self.positions.size

    def normalized(self) -> Portfolio:
        """Rescaled so the largest absolute position is 1."""
        m = max_norm(self.positions)
        if m == 0:
            return self
        return Portfolio(self.positions / m)


@dataclass(frozen=True)
class LiabilitySchedule:
    """Expected liability cash flows ``Z`` on the market grid (any sign)."""

    grid: DateGrid
    amounts: np.ndarray

    def __post_init__(self) -> None:
        z = _frozen(self.amounts, 1, "amounts")
        if z.size != len(self.grid):
            raise DimensionError(f"{z.size} liability amounts for {len(self.grid)} dates")
        object.__setattr__(self, "amounts", z)

    @classmethod
    def on(cls, market: Market, amounts: ArrayLike) -> LiabilitySchedule:
        return cls(market.grid, np.asarray(amounts, dtype=float))

    def effective_dates(self) -> np.ndarray:
        """Indices with a nonzero liability payment (exact zero test)."""
        return np.flatnonzero(self.amounts != 0)


@dataclass(frozen=True)
class DiscountCurve:
    """Piecewise-linear discount curve anchored at ``g(0) = 1``.

    Beyond the last knot the curve decays as ``exp(-long_end_yield * (t - t_last))``
    times the last knot value.
    """

    knot_times: np.ndarray
    knot_values: np.ndarray
    long_end_yield: float = 0.0

    def __post_init__(self) -> None:
        t = _frozen(self.knot_times, 1, "knot_times")
        v = _frozen(self.knot_values, 1, "knot_values")
        if t.size != v.size or t.size < 1:
            raise DimensionError("knot_times and knot_values must have equal, nonzero length")
        if t[0] != 0.0 or v[0] != 1.0:
            raise ValueError("the curve must be anchored at g(0) = 1")
        if np.any(np.diff(t) <= 0):
            raise ValueError("knot times must be strictly increasing")
        if not (math.isfinite(self.long_end_yield) and self.long_end_yield >= 0):
            raise ValueError("long_end_yield must be finite and nonnegative")
        object.__setattr__(self, "knot_times", t)
        object.__setattr__(self, "knot_values", v)
        object.__setattr__(self, "long_end_yield", float(self.long_end_yield))

    @classmethod
    def from_grid_values(cls, grid: DateGrid, values: ArrayLike, long_end_yield: float = 0.0) -> DiscountCurve:
        """Curve through ``g(0) = 1`` and ``g(grid) = values``."""
        v = np.asarray(values, dtype=float)
        if v.size != len(grid):
            raise DimensionError(f"{v.size} values for {len(grid)} grid dates")
        return cls(np.concatenate(([0.0], grid.dates)), np.concatenate(([1.0], v)), long_end_yield)

    def __call__(self, t: float | ArrayLike) -> float | np.ndarray:
        return curve_eval(self, t)

    def to_json(self) -> dict:
        return {
            "knot_times": [float(x) for x in self.knot_times],
            "knot_values": [float(x) for x in self.knot_values],
            "long_end_yield": self.long_end_yield,
        }

    @classmethod
    def from_json(cls, obj: dict) -> DiscountCurve:
        extra = set(obj) - {"knot_times", "knot_values", "long_end_yield"}
        if extra:
            raise ValueError(f"unknown curve fields: {sorted(extra)}")
        return cls(
            np.asarray(obj["knot_times"], dtype=float),
            np.asarray(obj["knot_values"], dtype=float),
            float(obj.get("long_end_yield", 0.0)),
        )


def curve_eval(curve: DiscountCurve, t: float | ArrayLike) -> float | np.ndarray:
    """Evaluate the curve at one or more nonnegative times."""
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 0) or not np.all(np.isfinite(ts)):
        raise ValueError("discount curve is only defined for finite t >= 0")
    t_last = curve.knot_times[-1]
    g_last = curve.knot_values[-1]
    inside = np.interp(np.minimum(ts, t_last), curve.knot_times, curve.knot_values)
    # exp(-y * 0) == 1 keeps the two branches equal at t_last
    tail = np.exp(-curve.long_end_yield * np.maximum(ts - t_last, 0.0)) * g_last
    out = np.where(ts > t_last, tail, inside)
    return float(out) if out.ndim == 0 else out


def curve_vector(curve: DiscountCurve, grid: DateGrid) -> np.ndarray:
    return np.asarray(curve_eval(curve, grid.dates), dtype=float).reshape(len(grid))


def _positions(market: Market, q: Portfolio | ArrayLike) -> np.ndarray:
    pos = q.positions if isinstance(q, Portfolio) else np.asarray(q, dtype=float)
    if pos.shape != (market.n_instruments,):
        raise DimensionError(f"portfolio of length {pos.size} for {market.n_instruments} instruments")
    return pos


def portfolio_price(market: Market, q: Portfolio | ArrayLike) -> float:
    return float(_positions(market, q) @ market.prices)


def portfolio_cashflows(market: Market, q: Portfolio | ArrayLike) -> np.ndarray:
    return _positions(market, q) @ market.cashflows


def scaled_tol(tol: float, *data: ArrayLike, floor: float = 0.0) -> float:
    """``tol`` scaled by the max-norm of ``data`` (never below ``tol * floor``)."""
    return tol * max(floor, max_norm(*data))
