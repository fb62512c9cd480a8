"""Coupon bonds and swap-repo synthetic bonds as cash-flow rows."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import ArrayLike, DateGrid, DimensionError, Market, Portfolio

DATE_ATOL = 1e-9


@dataclass(frozen=True)
class CouponBondSpec:
    face: float
    coupon_dates: tuple[float, ...]
    coupons: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.face > 0:
            raise ValueError("face value must be positive")
        if len(self.coupon_dates) != len(self.coupons) or not self.coupon_dates:
            raise ValueError("need one coupon per coupon date, and at least one date")
        d = np.asarray(self.coupon_dates, dtype=float)
        if d[0] <= 0 or np.any(np.diff(d) <= 0):
            raise ValueError("coupon dates must be positive and strictly increasing")

    @property
    def maturity(self) -> float:
        return self.coupon_dates[-1]


def bond_row(spec: CouponBondSpec, grid: DateGrid) -> np.ndarray:
    """Cash-flow row of a coupon bond: coupons on coupon dates, coupon plus face at maturity."""
    row = np.zeros(len(grid))
    for t, c in zip(spec.coupon_dates, spec.coupons):
        try:
            row[grid.index_of(t, DATE_ATOL)] += c
        except KeyError:
            raise ValueError(f"coupon date {t} is not on the grid") from None
    row[grid.index_of(spec.maturity, DATE_ATOL)] += spec.face
    return row


@dataclass(frozen=True)
class Swap:
    periods: int
    rate: float


@dataclass(frozen=True)
class SwapUniverseSpec:
    """Receiver swaps on a common accrual grid ``{accrual, 2 accrual, ...}`` with repo fixings."""

    accrual: float
    swaps: tuple[Swap, ...]
    fixings: tuple[float, ...]
    dates: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if not self.accrual > 0:
            raise ValueError("accrual period must be positive")
        if not self.swaps:
            raise ValueError("a swap universe needs at least one swap")
        if not self.fixings:
            raise ValueError("need at least one repo fixing")
        N = len(self.fixings)
        if self.dates is not None:
            d = np.asarray(self.dates, dtype=float)
            expected = self.accrual * np.arange(1, N + 1)
            if d.shape != expected.shape or np.any(np.abs(d - expected) > DATE_ATOL):
                raise ValueError("grid dates must be the multiples accrual, 2 accrual, ... of the accrual period")
        for s in self.swaps:
            if not 1 <= s.periods <= N:
                raise ValueError(f"swap maturity of {s.periods} periods is off the {N}-date grid")

    @classmethod
    def from_json(cls, obj: dict) -> SwapUniverseSpec:
        extra = set(obj) - {"accrual", "swaps", "fixings", "dates"}
        if extra:
            raise ValueError(f"unknown universe fields: {sorted(extra)}")
        swaps = []
        for s in obj["swaps"]:
            if set(s) != {"periods", "rate"}:
                raise ValueError(f"swap entries need exactly 'periods' and 'rate', got {sorted(s)}")
            if int(s["periods"]) != s["periods"]:
                raise ValueError("swap periods must be an integer")
            swaps.append(Swap(int(s["periods"]), float(s["rate"])))
        dates = obj.get("dates")
        return cls(
            float(obj["accrual"]),
            tuple(swaps),
            tuple(float(x) for x in obj["fixings"]),
            tuple(float(x) for x in dates) if dates is not None else None,
        )

    @property
    def grid(self) -> DateGrid:
        return DateGrid(self.accrual * np.arange(1, len(self.fixings) + 1))

    @property
    def periods(self) -> np.ndarray:
        return np.array([s.periods for s in self.swaps])

    @property
    def rates(self) -> np.ndarray:
        return np.array([s.rate for s in self.swaps], dtype=float)


def swap_repo_matrices(spec: SwapUniverseSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fixed-leg matrix ``S``, floating-leg matrix ``Xi`` and face-value matrix ``F``."""
    N = len(spec.fixings)
    k = np.arange(1, N + 1)
    live = k[None, :] <= spec.periods[:, None]
    S = np.where(live, spec.accrual * spec.rates[:, None], 0.0)
    Xi = np.where(live, np.asarray(spec.fixings, dtype=float)[None, :], 0.0)
    F = (k[None, :] == spec.periods[:, None]).astype(float)
    return S, Xi, F


def synthetic_market(spec: SwapUniverseSpec) -> Market:
    """Swap plus rolled repo: a coupon bond ``C = S + F`` priced at one."""
    S, _, F = swap_repo_matrices(spec)
    return Market(spec.grid, np.ones(len(spec.swaps)), S + F)


@dataclass(frozen=True)
class LedgerEntry:
    date: float
    repo_receipt: float  # floating interest and notional back from repo
    repo_reinvest: float  # notional rolled into the next repo period
    floating_offset: float  # floating swap leg paid away
    fixed_interest: float  # fixed swap leg received
    net: float

    @property
    def repo_net(self) -> float:
        return self.repo_receipt - self.repo_reinvest

    @property
    def swap_net(self) -> float:
        return self.fixed_interest - self.floating_offset


@dataclass(frozen=True)
class ExecutionSchedule:
    inception_repo: float
    swap_units: np.ndarray
    entries: tuple[LedgerEntry, ...]

    @property
    def nets(self) -> np.ndarray:
        return np.array([e.net for e in self.entries])

    def render(self) -> str:
        head = f"{'date':>10} {'repo_receipt':>16} {'repo_reinvest':>16} {'floating_offset':>16} {'fixed_interest':>16} {'net':>16}"
        lines = [
            f"inception: invest {self.inception_repo:.12g} in repo; enter swaps "
            + ", ".join(f"{u:.12g}" for u in self.swap_units),
            head,
        ]
        for e in self.entries:
            lines.append(
                f"{e.date:>10.6g} {e.repo_receipt:>16.12g} {e.repo_reinvest:>16.12g} "
                f"{e.floating_offset:>16.12g} {e.fixed_interest:>16.12g} {e.net:>16.12g}"
            )
        return "\n".join(lines) + "\n"


def execution_schedule(spec: SwapUniverseSpec, q: Portfolio | ArrayLike) -> ExecutionSchedule:
    """Operational steps of the swap-repo strategy for swap holdings ``q``."""
    pos = np.asarray(q.positions if isinstance(q, Portfolio) else q, dtype=float)
    if pos.shape != (len(spec.swaps),):
        raise DimensionError(f"portfolio of length {pos.size} for {len(spec.swaps)} swaps")
    S, Xi, _ = swap_repo_matrices(spec)
    n = spec.periods
    fix = np.asarray(spec.fixings, dtype=float)
    entries = []
    for j, x in enumerate(spec.grid.dates):
        k = j + 1
        receipt = float(np.sum(pos[k <= n]) * (fix[j] + 1.0))
        reinvest = float(np.sum(pos[k < n]))
        floating = float(pos @ Xi[:, j])
        fixed = float(pos @ S[:, j])
        entries.append(LedgerEntry(float(x), receipt, reinvest, floating, fixed, receipt - reinvest - floating + fixed))
    return ExecutionSchedule(float(np.sum(pos)), pos.copy(), tuple(entries))


def swap_universe(accrual: float, swaps: Sequence[tuple[int, float]], fixings: Sequence[float]) -> SwapUniverseSpec:
    return SwapUniverseSpec(accrual, tuple(Swap(int(n), float(r)) for n, r in swaps), tuple(float(f) for f in fixings))
