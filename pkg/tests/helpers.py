"""Test-only utilities: brute-force LP oracle, random problem generators, par rates."""

from __future__ import annotations

import numpy as np

from fixedarb import lp
from fixedarb.core import Market


def par_rates(curve, accrual: float, periods) -> np.ndarray:
    """Fixed rates that price each swap-repo synthetic bond at exactly one under ``curve``."""
    out = []
    for n in periods:
        g = np.array([curve(k * accrual) for k in range(1, n + 1)])
        out.append((1.0 - g[-1]) / (accrual * g.sum()))
    return np.array(out)


def example_market(c: float) -> Market:
    """Two instruments: a unit zero-coupon bond at x1 and a coupon-c bond paying 1 at x2."""
    return Market.from_arrays([1.0, c], [[1.0, 0.0], [c, 1.0]], [1.0, 2.0])


def oracle_status(problem: lp.LpProblem) -> tuple[lp.Status, float | None]:
    """Status and optimum from vertex and extreme-ray enumeration (pointed problems only)."""
    vertices = lp.enumerate_vertices(problem)
    if not vertices:
        return lp.Status.INFEASIBLE, None
    if any(problem.objective @ r < -1e-9 for r in lp.enumerate_rays(problem)):
        return lp.Status.UNBOUNDED, None
    return lp.Status.OPTIMAL, min(float(problem.objective @ v) for v in vertices)


def random_lp(rng: np.random.Generator, max_vars: int = 6, max_eq: int = 2, max_ineq: int = 6) -> lp.LpProblem:
    """Small integer LP whose feasible set, if nonempty, has a vertex."""
    while True:
        n = int(rng.integers(1, max_vars + 1))
        me = int(rng.integers(0, max_eq + 1))
        mi = int(rng.integers(0, max_ineq + 1))
        free = [k for k in range(n) if rng.random() < 0.2]
        p = lp.LpProblem.build(
            rng.integers(-3, 4, n),
            eq=(rng.integers(-3, 4, (me, n)), rng.integers(-3, 4, me)),
            ineq=(rng.integers(-3, 4, (mi, n)), rng.integers(-3, 4, mi)),
            free=free,
        )
        if lp.is_pointed(p):
            return p
