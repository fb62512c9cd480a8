"""Command-line interface.

Exit codes: 0 success / arbitrage-free, 1 input error, 2 strict arbitrage,
3 arbitrage (or super-replication precluded by arbitrage), 4 law of one price
fails, 5 liabilities cannot be super-replicated.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from importlib import metadata
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import lp
from .arbitrage import Level, NumericalAmbiguity, check_arbitrage
from .core import TolerancePolicy
from .generate import arbitrage_free_market, perturbed_market, random_liabilities
from .instruments import SwapUniverseSpec, execution_schedule, synthetic_market
from .io import InputError, MarketData, read_curve, read_market, read_problem, write_liabilities, write_market
from .replication import (
    ArbitragePrecluded,
    InfeasibleLiability,
    UnboundedBelow,
    aggregate_buffer,
    aggregate_forward,
    hedge_quadratic,
    superreplicate,
)

log = logging.getLogger("fixedarb")

SCHEMA = 1

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_STRICT_ARBITRAGE = 2
EXIT_ARBITRAGE = 3
EXIT_LAW_OF_ONE_PRICE = 4
EXIT_INFEASIBLE = 5

LEVEL_EXIT = {
    Level.ARBITRAGE_FREE: EXIT_OK,
    Level.STRICT_ARBITRAGE: EXIT_STRICT_ARBITRAGE,
    Level.ARBITRAGE: EXIT_ARBITRAGE,
    Level.LAW_OF_ONE_PRICE_FAILS: EXIT_LAW_OF_ONE_PRICE,
}


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def round_sig(obj: Any, digits: int = 12) -> Any:
    """Round every float in a JSON-like structure to ``digits`` significant digits."""
    if isinstance(obj, (float, np.floating)):
        x = float(f"{float(obj):.{digits}g}")
        return 0.0 if x == 0 else x
    if isinstance(obj, np.ndarray):
        return round_sig(obj.tolist(), digits)
    if isinstance(obj, dict):
        return {k: round_sig(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v, digits) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def emit(payload: dict, stream=None) -> None:
    stream = stream or sys.stdout
    body = {"schema": SCHEMA, **payload}
    stream.write(json.dumps(round_sig(body), indent=2) + "\n")


def _digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Run:
    """Per-invocation state: tolerances, input digests and the manifest summary."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.tol = TolerancePolicy(feas_tol=args.tol, strict_tol=args.strict_tol)
        self.inputs: dict[str, str] = {}
        self.summary: dict[str, Any] = {}

    def register(self, role: str, path: Optional[str]) -> None:
        if path is not None:
            self.inputs[role] = _digest(path)

    def manifest(self, exit_code: int) -> dict:
        return {
            "command": self.args.command,
            "exit_code": exit_code,
            "inputs": dict(sorted(self.inputs.items())),
            "tolerance": {
                "feas_tol": self.tol.feas_tol,
                "strict_tol": self.tol.strict_tol,
                "rank_tol": self.tol.rank_tol,
            },
            "version": version(),
            "summary": round_sig(self.summary),
        }


# --- commands ----------------------------------------------------------------


def cmd_check(run: Run) -> int:
    a = run.args
    run.register("instruments", a.instruments)
    run.register("cashflows", a.cashflows)
    data = read_market(a.instruments, a.cashflows)
    verdict = check_arbitrage(data.market, run.tol)
    out = {"ids": list(data.ids), "dates": data.market.grid.dates, **verdict.to_json()}
    emit(out)
    run.summary = {"level": verdict.level.value, "non_unique": verdict.non_unique}
    return LEVEL_EXIT[verdict.level]


def _aggregated(run: Run, data: MarketData, liab, mode: str, curve_path: Optional[str]):
    market = data.market
    if mode == "buffer":
        return aggregate_buffer(market, liab), None
    if curve_path is not None:
        run.register("curve", curve_path)
        curve = read_curve(curve_path)
    else:
        verdict = check_arbitrage(market, run.tol)
        if not verdict.arbitrage_free:
            raise ArbitragePrecluded(verdict)
        curve = verdict.witness_curve
    return aggregate_forward(market, liab, curve, run.tol), curve


def cmd_superrep(run: Run) -> int:
    a = run.args
    for role in ("instruments", "cashflows", "liabilities"):
        run.register(role, getattr(a, role))
    data, liab = read_problem(a.instruments, a.cashflows, a.liabilities)
    if a.lam is not None:
        return _hedge(run, data, liab, a.lam)

    payload: dict[str, Any] = {"ids": list(data.ids), "dates": data.market.grid.dates}
    market = data.market
    try:
        if a.aggregate:
            market, curve = _aggregated(run, data, liab, a.aggregate, a.curve)
            payload["aggregation"] = a.aggregate
            payload["aggregated_cashflows"] = market.cashflows
            if curve is not None:
                payload["aggregation_curve"] = curve.to_json()
        res = superreplicate(market, liab, run.tol)
    except ArbitragePrecluded as exc:
        payload.update({"status": "ArbitragePrecluded", "verdict": exc.verdict.to_json()})
        emit(payload)
        run.summary = {"status": "ArbitragePrecluded", "level": exc.verdict.level.value}
        return EXIT_ARBITRAGE
    except InfeasibleLiability as exc:
        payload.update({"status": "Infeasible", "obstruction": exc.obstruction})
        emit(payload)
        run.summary = {"status": "Infeasible"}
        return EXIT_INFEASIBLE
    except UnboundedBelow as exc:
        payload.update({"status": "UnboundedBelow", "ray": exc.ray})
        emit(payload)
        run.summary = {"status": "UnboundedBelow"}
        return EXIT_STRICT_ARBITRAGE
    payload.update({"status": "Optimal", **res.to_json()})
    emit(payload)
    run.summary = {"status": "Optimal", "cost": res.cost}
    return EXIT_OK


def _hedge(run: Run, data: MarketData, liab, lam: float) -> int:
    q = hedge_quadratic(data.market, liab, lam)
    resid = liab.amounts - q.positions @ data.market.cashflows
    emit(
        {
            "ids": list(data.ids),
            "dates": data.market.grid.dates,
            "lambda": lam,
            "portfolio": q.positions,
            "cost": float(q.positions @ data.market.prices),
            "residual": resid,
        }
    )
    run.summary = {"status": "Hedged", "lambda": lam}
    return EXIT_OK


def cmd_hedge(run: Run) -> int:
    a = run.args
    for role in ("instruments", "cashflows", "liabilities"):
        run.register(role, getattr(a, role))
    data, liab = read_problem(a.instruments, a.cashflows, a.liabilities)
    return _hedge(run, data, liab, a.lam)


def cmd_aggregate(run: Run) -> int:
    a = run.args
    for role in ("instruments", "cashflows", "liabilities"):
        run.register(role, getattr(a, role))
    data, liab = read_problem(a.instruments, a.cashflows, a.liabilities)
    try:
        market, curve = _aggregated(run, data, liab, a.mode, a.curve)
    except ArbitragePrecluded as exc:
        emit({"status": "ArbitragePrecluded", "verdict": exc.verdict.to_json()})
        run.summary = {"status": "ArbitragePrecluded"}
        return EXIT_ARBITRAGE
    payload = {
        "ids": list(data.ids),
        "dates": market.grid.dates,
        "mode": a.mode,
        "aggregated_cashflows": market.cashflows,
    }
    if curve is not None:
        payload["aggregation_curve"] = curve.to_json()
    if a.out_dir:
        out = Path(a.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_market(MarketData(data.ids, market), out / "instruments.csv", out / "cashflows.csv")
    emit(payload)
    run.summary = {"status": "Aggregated", "mode": a.mode}
    return EXIT_OK


def _read_portfolio(path: str) -> np.ndarray:
    obj = json.loads(Path(path).read_text())
    if isinstance(obj, dict):
        obj = obj.get("portfolio")
    if not isinstance(obj, list):
        raise InputError("portfolio file must hold a JSON list or an object with a 'portfolio' list", path)
    return np.asarray(obj, dtype=float)


def cmd_synth(run: Run) -> int:
    a = run.args
    run.register("universe", a.universe)
    try:
        spec = SwapUniverseSpec.from_json(json.loads(Path(a.universe).read_text()))
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"bad swap universe: {exc}", a.universe) from None
    market = synthetic_market(spec)
    ids = tuple(f"swap{i + 1}" for i in range(market.n_instruments))
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_market(MarketData(ids, market), out / "instruments.csv", out / "cashflows.csv")
    run.summary = {"instruments": len(ids), "dates": market.n_dates}
    if a.portfolio:
        run.register("portfolio", a.portfolio)
        q = _read_portfolio(a.portfolio)
        if q.shape != (len(spec.swaps),):
            raise InputError(f"portfolio has {q.size} positions for {len(spec.swaps)} swaps", a.portfolio)
        sys.stdout.write(execution_schedule(spec, q).render())
    return EXIT_OK


def cmd_gen(run: Run) -> int:
    a = run.args
    rng = np.random.default_rng(a.seed)
    if a.kind == "free":
        market, _ = arbitrage_free_market(rng, a.instruments, a.dates)
    else:
        market = perturbed_market(rng, a.instruments, a.dates)
    ids = tuple(f"i{k + 1}" for k in range(market.n_instruments))
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_market(MarketData(ids, market), out / "instruments.csv", out / "cashflows.csv")
    write_liabilities(random_liabilities(rng, market), out / "liabilities.csv")
    run.summary = {"seed": a.seed, "kind": a.kind}
    return EXIT_OK


# --- parser ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; argparse's own status 2 would read as strict arbitrage
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _global_flags(parser: argparse.ArgumentParser, defaults: bool) -> None:
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    parser.add_argument("--tol", type=float, default=d(1e-9), help="relative feasibility tolerance")
    parser.add_argument("--strict-tol", type=float, default=d(1e-9), help="strict positivity threshold")
    parser.add_argument("--dump-lp", metavar="PATH", default=d(None), help="write every LP solved to PATH")
    parser.add_argument("--manifest", metavar="PATH", default=d(None), help="write a run manifest to PATH")
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fixedarb", description="Static arbitrage and liability replication.")
    _global_flags(parser, defaults=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, defaults=False)

    p = sub.add_parser("check", parents=[common], help="classify a market (exit code = verdict)")
    p.add_argument("instruments")
    p.add_argument("cashflows")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("superrep", parents=[common], help="least-cost super-replication of liabilities")
    p.add_argument("instruments")
    p.add_argument("cashflows")
    p.add_argument("liabilities")
    p.add_argument("--aggregate", choices=("buffer", "forward"))
    p.add_argument("--curve", help="discount-curve JSON for forward aggregation")
    p.add_argument("--lambda", dest="lam", type=float, help="quadratic hedge with this ridge penalty instead")
    p.set_defaults(func=cmd_superrep)

    p = sub.add_parser("hedge", parents=[common], help="ridge-penalized quadratic hedge")
    p.add_argument("instruments")
    p.add_argument("cashflows")
    p.add_argument("liabilities")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.set_defaults(func=cmd_hedge)

    p = sub.add_parser("aggregate", parents=[common], help="aggregate cash flows onto liability dates")
    p.add_argument("instruments")
    p.add_argument("cashflows")
    p.add_argument("liabilities")
    p.add_argument("--mode", choices=("buffer", "forward"), default="buffer")
    p.add_argument("--curve", help="discount-curve JSON (forward mode; fitted when omitted)")
    p.add_argument("--out-dir", help="also write the aggregated market as a CSV pair")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("synth", parents=[common], help="swap-repo synthetic bonds from a universe JSON")
    p.add_argument("universe")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--portfolio", help="JSON swap holdings; prints the execution ledger")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gen", parents=[common])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--kind", choices=("free", "perturbed"), default="free")
    p.add_argument("--instruments", type=int, default=4)
    p.add_argument("--dates", type=int, default=5)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_gen)
    # keep gen out of the help listing
    sub._choices_actions = [c for c in sub._choices_actions if c.dest != "gen"]
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        run = Run(args)
        with lp.recording() as problems:
            code = args.func(run)
    except (InputError, ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except NumericalAmbiguity as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    if args.dump_lp:
        Path(args.dump_lp).write_text("".join(f"### LP {k}\n{p.dump()}" for k, p in enumerate(problems)))
    if args.manifest:
        Path(args.manifest).write_text(json.dumps(run.manifest(code), sort_keys=True, indent=2) + "\n")
    return code


def entry() -> None:
    sys.exit(main())
