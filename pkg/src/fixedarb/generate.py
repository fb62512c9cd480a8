"""Seeded random markets for testing and the ``gen`` subcommand."""

from __future__ import annotations

import numpy as np

from .core import DateGrid, DiscountCurve, LiabilitySchedule, Market, curve_vector


def random_curve(rng: np.random.Generator, grid: DateGrid, low: float = 0.2) -> DiscountCurve:
    """Strictly positive, decreasing curve through the grid dates."""
    yields = rng.uniform(-0.01, 0.08, size=len(grid))
    values = np.maximum(np.exp(-np.cumsum(yields * np.diff(np.concatenate(([0.0], grid.dates))))), low)
    return DiscountCurve.from_grid_values(grid, values, long_end_yield=float(rng.uniform(0, 0.05)))


def random_grid(rng: np.random.Generator, n: int) -> DateGrid:
    steps = rng.uniform(0.25, 2.0, size=n)
    return DateGrid(np.round(np.cumsum(steps), 6))


def random_cashflows(rng: np.random.Generator, m: int, n: int, density: float = 0.6) -> np.ndarray:
    """Mostly nonnegative bond-like rows with occasional short legs."""
    C = rng.uniform(0.0, 1.2, size=(m, n)) * (rng.random((m, n)) < density)
    flip = rng.random((m, n)) < 0.1
    C[flip] *= -1
    for i in range(m):
        if not np.any(C[i]):
            C[i, rng.integers(n)] = 1.0
    return C


def arbitrage_free_market(rng: np.random.Generator, m: int, n: int) -> tuple[Market, DiscountCurve]:
    grid = random_grid(rng, n)
    curve = random_curve(rng, grid)
    C = random_cashflows(rng, m, n)
    return Market(grid, C @ curve_vector(curve, grid), C), curve


def perturbed_market(rng: np.random.Generator, m: int, n: int, size: float = 0.05) -> Market:
    base, _ = arbitrage_free_market(rng, m, n)
    bump = rng.normal(0.0, size, size=m) * np.maximum(np.abs(base.prices), 1e-3)
    return Market(base.grid, base.prices + bump, base.cashflows)


def random_liabilities(rng: np.random.Generator, market: Market, density: float = 0.7) -> LiabilitySchedule:
    Z = np.round(rng.uniform(0.0, 2.0, size=market.n_dates), 6) * (rng.random(market.n_dates) < density)
    if not np.any(Z):
        Z[-1] = 1.0
    return LiabilitySchedule(market.grid, Z)
