import json

import numpy as np
import pytest

from fixedarb.cli import main, round_sig
from fixedarb.core import DiscountCurve, Market
from fixedarb.generate import arbitrage_free_market
from fixedarb.io import InputError, MarketData, read_curve, read_market, read_problem, write_curve, write_market
from helpers import par_rates


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def market_files(tmp_path, prices, flows):
    ins = write(tmp_path, "instruments.csv", "id,price\n" + "".join(f"{k},{v}\n" for k, v in prices.items()))
    cf = write(tmp_path, "cashflows.csv", "id,date,amount\n" + "".join(f"{i},{d},{a}\n" for i, d, a in flows))
    return ins, cf


def liability_file(tmp_path, rows):
    return write(tmp_path, "liabilities.csv", "date,amount\n" + "".join(f"{d},{a}\n" for d, a in rows))


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.startswith("{") else out.out), out.err


class TestIO:
    def test_round_trip(self, tmp_path, rng):
        for k in range(10):
            m, _ = arbitrage_free_market(rng, 4, 6)
            data = MarketData(tuple(f"b{i}" for i in range(4)), m)
            d = tmp_path / str(k)
            d.mkdir()
            write_market(data, d / "i.csv", d / "c.csv")
            back = read_market(d / "i.csv", d / "c.csv")
            assert back.ids == data.ids
            np.testing.assert_array_equal(back.market.prices, m.prices)
            np.testing.assert_array_equal(back.market.cashflows, m.cashflows)
            np.testing.assert_array_equal(back.market.grid.dates, m.grid.dates)

    def test_zero_column_survives(self, tmp_path):
        data = MarketData(("a",), Market.from_arrays([1.0], [[0.0, 1.0]]))
        write_market(data, tmp_path / "i.csv", tmp_path / "c.csv")
        back = read_market(tmp_path / "i.csv", tmp_path / "c.csv")
        np.testing.assert_array_equal(back.market.cashflows, [[0.0, 1.0]])

    def test_absent_pairs_are_zero_and_repeats_sum(self, tmp_path):
        ins, cf = market_files(tmp_path, {"a": 1, "b": 2}, [("a", 1, 1), ("b", 2, 1), ("b", 2, 0.5)])
        m = read_market(ins, cf).market
        np.testing.assert_array_equal(m.cashflows, [[1, 0], [0, 1.5]])

    def test_bad_header(self, tmp_path):
        ins = write(tmp_path, "i.csv", "id,cost\na,1\n")
        cf = write(tmp_path, "c.csv", "id,date,amount\na,1,1\n")
        with pytest.raises(InputError, match=r"i.csv:1: .*unknown columns \['cost'\]"):
            read_market(ins, cf)

    def test_unknown_id_line_number(self, tmp_path):
        ins, cf = market_files(tmp_path, {"a": 1}, [("a", 1, 1), ("zz", 2, 1)])
        with pytest.raises(InputError, match=r"cashflows.csv:3: unknown instrument id 'zz'"):
            read_market(ins, cf)

    def test_bad_number(self, tmp_path):
        ins, cf = market_files(tmp_path, {"a": "one"}, [("a", 1, 1)])
        with pytest.raises(InputError, match=":2: price"):
            read_market(ins, cf)

    def test_liability_dates_merged(self, tmp_path):
        ins, cf = market_files(tmp_path, {"a": 0.9}, [("a", 1, 1)])
        lf = liability_file(tmp_path, [(0.5, 2), (1.0000000001, 1)])
        data, liab = read_problem(ins, cf, lf)
        np.testing.assert_array_equal(data.market.grid.dates, [0.5, 1.0])
        np.testing.assert_array_equal(data.market.cashflows, [[0.0, 1.0]])
        np.testing.assert_array_equal(liab.amounts, [2, 1])

    def test_curve_json(self, tmp_path):
        g = DiscountCurve(np.array([0.0, 1.0]), np.array([1.0, 0.95]), 0.02)
        write_curve(g, tmp_path / "g.json")
        back = read_curve(tmp_path / "g.json")
        assert back.long_end_yield == 0.02
        np.testing.assert_array_equal(back.knot_values, g.knot_values)
        bad = write(tmp_path, "bad.json", '{"knot_times": [0], "knot_values": [1], "extra": 1}')
        with pytest.raises(InputError):
            read_curve(bad)


def test_round_sig():
    assert round_sig(1 / 3) == 0.333333333333
    assert round_sig({"a": [np.float64(2 / 3)], "b": "x"}) == {"a": [0.666666666667], "b": "x"}
    assert round_sig(-1e-20) == -1e-20
    assert round_sig(0.1 + 0.2) == 0.3


class TestCheck:
    def test_worked_example(self, tmp_path, capsys):
        ins, cf = market_files(tmp_path, {"zcb": 1, "cpn": 0.05}, [("zcb", 1, 1), ("cpn", 1, 0.05), ("cpn", 2, 1)])
        code, out, _ = run(capsys, "check", ins, cf)
        assert code == 3
        assert out["schema"] == 1 and out["level"] == "Arbitrage"
        np.testing.assert_allclose(out["portfolio"], [-0.05, 1.0], atol=1e-12)

    def test_zero_coupon(self, tmp_path, capsys):
        ins, cf = market_files(tmp_path, {"z": 0.95}, [("z", 1, 1)])
        code, out, _ = run(capsys, "check", ins, cf)
        assert code == 0 and out["level"] == "ArbitrageFree"
        assert out["witness_curve"]["knot_values"] == [1.0, 0.95]

    def test_strict_and_lop(self, tmp_path, capsys):
        ins, cf = market_files(tmp_path, {"z": -0.1}, [("z", 1, 1)])
        assert run(capsys, "check", ins, cf)[0] == 2
        ins, cf = market_files(tmp_path, {"a": 0.9, "b": 0.8}, [("a", 1, 1), ("b", 1, 1)])
        assert run(capsys, "check", ins, cf)[0] == 4

    def test_unknown_id(self, tmp_path, capsys):
        ins, cf = market_files(tmp_path, {"a": 1}, [("a", 1, 1), ("b", 2, 1)])
        code, _, err = run(capsys, "check", ins, cf)
        assert code == 1
        assert "cashflows.csv:3" in err

    def test_missing_file_and_usage(self, tmp_path, capsys):
        assert run(capsys, "check", tmp_path / "no.csv", tmp_path / "no2.csv")[0] == 1
        with pytest.raises(SystemExit) as info:
            main(["check"])
        assert info.value.code == 1

    def test_manifest_reproducible(self, tmp_path, capsys):
        ins, cf = market_files(tmp_path, {"z": 0.95}, [("z", 1, 1)])
        texts = []
        for k in range(2):
            path = tmp_path / f"m{k}.json"
            run(capsys, "--manifest", path, "check", ins, cf)
            texts.append(path.read_bytes())
        assert texts[0] == texts[1]
        man = json.loads(texts[0])
        assert list(man) == sorted(man)
        assert man["command"] == "check" and man["exit_code"] == 0
        assert set(man["inputs"]) == {"instruments", "cashflows"}
        assert man["tolerance"]["feas_tol"] == 1e-9

    def test_global_flags_after_command(self, tmp_path, capsys):
        ins, cf = market_files(tmp_path, {"z": 0.95}, [("z", 1, 1)])
        dump = tmp_path / "lp.txt"
        code, _, _ = run(capsys, "check", ins, cf, "--dump-lp", dump, "--tol", "1e-8")
        assert code == 0
        text = dump.read_text()
        assert text.startswith("### LP 0") and "MIN" in text


class TestSuperrep:
    def test_diagonal(self, tmp_path, capsys):
        ins, cf = market_files(tmp_path, {"a": 0.95, "b": 0.9}, [("a", 1, 1), ("b", 2, 1)])
        lf = liability_file(tmp_path, [(1, 1), (2, 1)])
        code, out, _ = run(capsys, "superrep", ins, cf, lf)
        assert code == 0 and out["status"] == "Optimal"
        assert out["cost"] == 1.85
        assert out["portfolio"] == [1.0, 1.0]

    def test_infeasible(self, tmp_path, capsys):
        ins, cf = market_files(tmp_path, {"s": 0}, [("s", 1, 1), ("s", 2, -1)])
        lf = liability_file(tmp_path, [(1, 1), (2, 1)])
        code, out, _ = run(capsys, "superrep", ins, cf, lf)
        assert code == 5
        assert out["obstruction"] == [1.0, 1.0]

    def test_precluded(self, tmp_path, capsys):
        ins, cf = market_files(tmp_path, {"zcb": 1, "cpn": 0.05}, [("zcb", 1, 1), ("cpn", 1, 0.05), ("cpn", 2, 1)])
        lf = liability_file(tmp_path, [(2, 1)])
        code, out, _ = run(capsys, "superrep", ins, cf, lf)
        assert code == 3 and out["status"] == "ArbitragePrecluded"

    def test_forward_aggregation_flat(self, tmp_path, capsys):
        ins, cf = market_files(tmp_path, {"b": 1.9}, [("b", 1, 1), ("b", 2, 1)])
        lf = liability_file(tmp_path, [(1, 0), (2, 1)])
        flat = write(tmp_path, "flat.json", '{"knot_times": [0.0], "knot_values": [1.0], "long_end_yield": 0.0}')
        code, out, _ = run(capsys, "superrep", ins, cf, lf, "--aggregate", "forward", "--curve", flat)
        assert code == 0
        assert out["aggregated_cashflows"] == [[0.0, 2.0]]

    def test_hedge_mode(self, tmp_path, capsys):
        ins, cf = market_files(tmp_path, {"a": 1}, [("a", 1, 1)])
        lf = liability_file(tmp_path, [(1, 1)])
        code, out, _ = run(capsys, "superrep", ins, cf, lf, "--lambda", 1)
        assert code == 0 and out["portfolio"] == [0.5]
        code, out, _ = run(capsys, "hedge", ins, cf, lf, "--lambda", 1)
        assert out["portfolio"] == [0.5]
        assert run(capsys, "hedge", ins, cf, lf, "--lambda", 0)[0] == 1


class TestAggregate:
    def test_buffer_out_dir(self, tmp_path, capsys):
        ins, cf = market_files(tmp_path, {"b": 1.0}, [("b", 1, 1), ("b", 2, 0), ("b", 3, 2)])
        lf = liability_file(tmp_path, [(2, 3), (3, 4)])
        d = tmp_path / "agg"
        code, out, _ = run(capsys, "aggregate", ins, cf, lf, "--out-dir", d)
        assert code == 0 and out["aggregated_cashflows"] == [[0.0, 1.0, 2.0]]
        back = read_market(d / "instruments.csv", d / "cashflows.csv")
        np.testing.assert_array_equal(back.market.cashflows, [[0.0, 1.0, 2.0]])

    def test_forward_fitted(self, tmp_path, capsys):
        ins, cf = market_files(tmp_path, {"z1": 0.95, "z2": 0.9, "b": 1.85}, [("z1", 1, 1), ("z2", 2, 1), ("b", 1, 1), ("b", 2, 1)])
        lf = liability_file(tmp_path, [(2, 1)])
        code, out, _ = run(capsys, "aggregate", ins, cf, lf, "--mode", "forward")
        assert code == 0
        np.testing.assert_allclose(out["aggregated_cashflows"][2], [0.0, 0.95 / 0.9 + 1], rtol=1e-11)


class TestSynth:
    def universe(self, tmp_path, obj):
        return write(tmp_path, "u.json", json.dumps(obj))

    def test_rows(self, tmp_path, capsys):
        u = self.universe(tmp_path, {"accrual": 1, "swaps": [{"periods": 2, "rate": 0.03}], "fixings": [0.02, 0.025]})
        q = write(tmp_path, "q.json", "[1]")
        code, out, _ = run(capsys, "synth", u, "--out-dir", tmp_path, "--portfolio", q)
        assert code == 0
        assert (tmp_path / "instruments.csv").read_text() == "id,price\nswap1,1.0\n"
        rows = (tmp_path / "cashflows.csv").read_text().splitlines()[1:]
        parsed = [(r.split(",")[0], float(r.split(",")[1]), float(r.split(",")[2])) for r in rows]
        assert parsed == [("swap1", 1.0, pytest.approx(0.03)), ("swap1", 2.0, pytest.approx(1.03))]
        assert "inception: invest 1 in repo" in out

    def test_empty_swaps(self, tmp_path, capsys):
        u = self.universe(tmp_path, {"accrual": 1, "swaps": [], "fixings": [0.02]})
        assert run(capsys, "synth", u, "--out-dir", tmp_path)[0] == 1

    def test_misaligned_grid(self, tmp_path, capsys):
        u = self.universe(tmp_path, {"accrual": 1, "swaps": [{"periods": 1, "rate": 0.1}], "fixings": [0.0], "dates": [0.9]})
        assert run(capsys, "synth", u, "--out-dir", tmp_path)[0] == 1

    def test_par_round_trip(self, tmp_path, capsys):
        g = DiscountCurve(np.arange(6.0) * 0.5, np.exp(-0.04 * np.arange(6.0) * 0.5))
        periods = [1, 2, 3, 4, 5]
        swaps = [{"periods": n, "rate": float(r)} for n, r in zip(periods, par_rates(g, 0.5, periods))]
        u = self.universe(tmp_path, {"accrual": 0.5, "swaps": swaps, "fixings": [0.03] * 5})
        assert run(capsys, "synth", u, "--out-dir", tmp_path)[0] == 0
        code, out, _ = run(capsys, "check", tmp_path / "instruments.csv", tmp_path / "cashflows.csv")
        assert code == 0 and out["level"] == "ArbitrageFree"


def test_gen_deterministic(tmp_path, capsys):
    texts = []
    for k in range(2):
        d = tmp_path / str(k)
        assert run(capsys, "gen", "--seed", 7, "--kind", "perturbed", "--out-dir", d)[0] == 0
        texts.append([(d / f).read_text() for f in ("instruments.csv", "cashflows.csv", "liabilities.csv")])
    assert texts[0] == texts[1]
    d = tmp_path / "free"
    run(capsys, "gen", "--seed", 3, "--out-dir", d)
    assert run(capsys, "check", d / "instruments.csv", d / "cashflows.csv")[0] == 0


def test_exit_codes_are_a_closed_set(tmp_path, capsys, rng):
    seen = set()
    for seed in range(30):
        d = tmp_path / str(seed)
        run(capsys, "gen", "--seed", seed, "--kind", "perturbed" if seed % 2 else "free", "--out-dir", d)
        files = [d / "instruments.csv", d / "cashflows.csv"]
        seen.add(run(capsys, "check", *files)[0])
        seen.add(run(capsys, "superrep", *files, d / "liabilities.csv")[0])
    assert seen <= {0, 1, 2, 3, 4, 5}
    assert 0 in seen
