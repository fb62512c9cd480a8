"""Strict CSV/JSON readers and writers for markets, liabilities and curves.

instruments.csv  ``id,price``
cashflows.csv    ``id,date,amount`` (long format, dates as year fractions)
liabilities.csv  ``date,amount``
curve JSON       ``{"knot_times": [...], "knot_values": [...], "long_end_yield": r}``
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import DateGrid, DiscountCurve, LiabilitySchedule, Market

log = logging.getLogger(__name__)

DATE_ATOL = 1e-9


class InputError(ValueError):
    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class MarketData:
    """A market together with the instrument identifiers of its rows."""

    ids: tuple[str, ...]
    market: Market


def _rows(path: str | Path, columns: Sequence[str]) -> Iterator[tuple[int, dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise InputError("empty file", path, 1)
        header = [h.strip() for h in header]
        if header != list(columns):
            unknown = sorted(set(header) - set(columns))
            missing = sorted(set(columns) - set(header))
            detail = []
            if unknown:
                detail.append(f"unknown columns {unknown}")
            if missing:
                detail.append(f"missing columns {missing}")
            if not detail:
                detail.append(f"columns must be in the order {list(columns)}")
            raise InputError("bad header: " + "; ".join(detail), path, 1)
        reader.fieldnames = header
        for row in reader:
            line = reader.line_num
            if None in row or any(v is None for v in row.values()):
                raise InputError("wrong number of fields", path, line)
            yield line, {k: v.strip() for k, v in row.items()}


def _number(text: str, what: str, path, line) -> float:
    try:
        x = float(text)
    except ValueError:
        raise InputError(f"{what} {text!r} is not a number", path, line) from None
    if not math.isfinite(x):
        raise InputError(f"{what} must be finite", path, line)
    return x


def merge_dates(dates: Iterable[float], atol: float = DATE_ATOL) -> np.ndarray:
    """Sorted distinct dates, treating values within ``atol`` as the same date."""
    out: list[float] = []
    for d in sorted(dates):
        if not out or d - out[-1] > atol:
            out.append(d)
    return np.array(out, dtype=float)


def _locate(grid: np.ndarray, t: float) -> int:
    return int(np.argmin(np.abs(grid - t)))


def read_market(instruments_csv: str | Path, cashflows_csv: str | Path, extra_dates: Iterable[float] = ()) -> MarketData:
    """Assemble ``(P, C, x)`` from the two-file long format.

    Absent (instrument, date) pairs are zero; repeated pairs are summed.
    """
    ids: list[str] = []
    prices: list[float] = []
    for line, row in _rows(instruments_csv, ("id", "price")):
        if not row["id"]:
            raise InputError("empty instrument id", instruments_csv, line)
        if row["id"] in ids:
            raise InputError(f"duplicate instrument id {row['id']!r}", instruments_csv, line)
        ids.append(row["id"])
        prices.append(_number(row["price"], "price", instruments_csv, line))
    if not ids:
        raise InputError("no instruments", instruments_csv)

    index = {k: i for i, k in enumerate(ids)}
    flows: list[tuple[int, float, float]] = []
    for line, row in _rows(cashflows_csv, ("id", "date", "amount")):
        if row["id"] not in index:
            raise InputError(f"unknown instrument id {row['id']!r}", cashflows_csv, line)
        date = _number(row["date"], "date", cashflows_csv, line)
        if date <= 0:
            raise InputError("cash-flow dates must be strictly positive", cashflows_csv, line)
        flows.append((index[row["id"]], date, _number(row["amount"], "amount", cashflows_csv, line)))

    dates = merge_dates([d for _, d, _ in flows] + list(extra_dates))
    if dates.size == 0:
        raise InputError("no cash flows", cashflows_csv)
    C = np.zeros((len(ids), dates.size))
    seen: set[tuple[int, int]] = set()
    for i, d, a in flows:
        j = _locate(dates, d)
        if (i, j) in seen:
            log.info("merging repeated cash flow of %s at date %g", ids[i], dates[j])
        seen.add((i, j))
        C[i, j] += a
    return MarketData(tuple(ids), Market(DateGrid(dates), np.array(prices), C))


def read_liability_amounts(path: str | Path) -> list[tuple[float, float]]:
    out = []
    for line, row in _rows(path, ("date", "amount")):
        date = _number(row["date"], "date", path, line)
        if date <= 0:
            raise InputError("liability dates must be strictly positive", path, line)
        out.append((date, _number(row["amount"], "amount", path, line)))
    if not out:
        raise InputError("no liability rows", path)
    return out


def read_problem(instruments_csv, cashflows_csv, liabilities_csv) -> tuple[MarketData, LiabilitySchedule]:
    """Market and liabilities on the union of their dates."""
    flows = read_liability_amounts(liabilities_csv)
    data = read_market(instruments_csv, cashflows_csv, extra_dates=[d for d, _ in flows])
    grid = data.market.grid
    Z = np.zeros(len(grid))
    for d, a in flows:
        Z[_locate(grid.dates, d)] += a
    return data, LiabilitySchedule(grid, Z)


def write_market(data: MarketData, instruments_csv: str | Path, cashflows_csv: str | Path) -> None:
    m = data.market
    with open(instruments_csv, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "price"])
        for i, p in zip(data.ids, m.prices):
            w.writerow([i, repr(float(p))])
    with open(cashflows_csv, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "date", "amount"])
        # an all-zero column is written once as an explicit zero so the grid survives
        empty_col = ~np.any(m.cashflows != 0, axis=0)
        for k, (i, row) in enumerate(zip(data.ids, m.cashflows)):
            for d, a, empty in zip(m.grid.dates, row, empty_col):
                if a != 0 or (empty and k == 0):
                    w.writerow([i, repr(float(d)), repr(float(a))])


def write_liabilities(liab: LiabilitySchedule, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "amount"])
        for d, a in zip(liab.grid.dates, liab.amounts):
            w.writerow([repr(float(d)), repr(float(a))])


def read_curve(path: str | Path) -> DiscountCurve:
    try:
        obj = json.loads(Path(path).read_text())
        return DiscountCurve.from_json(obj)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"bad curve: {exc}", path) from None


def write_curve(curve: DiscountCurve, path: str | Path) -> None:
    Path(path).write_text(json.dumps(curve.to_json(), indent=2) + "\n")
