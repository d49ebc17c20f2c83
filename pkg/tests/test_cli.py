import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from fairmarket.cli import main
from fairmarket.generators import fixture
from fairmarket.instance import round_instance
from fairmarket.io import (
    FormatError,
    parse_allocation,
    parse_instance,
    parse_prices,
    rational_from_json,
    rational_to_json,
    serialize_instance,
)
from fairmarket.solver import Trace
from fairmarket.verify import audit_trace


def write(path, obj):
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


@pytest.fixture
def c6(tmp_path):
    return write(tmp_path / "c6.json", serialize_instance(fixture("c6")))


def trace_from_jsonl(text, eps):
    """Rebuild a Trace from the JSONL file (0-based) so the auditor can run on it."""
    from fairmarket.solver import Event

    events = []
    for line in text.splitlines():
        d = json.loads(line)
        data = {}
        if d["kind"] == "price_rise":
            data = {"alpha": rational_from_json(d["alpha"]), "rule": d["rule"]}
        events.append(Event(d["kind"], data, rational_from_json(d["least_spender_spending_after"])))
    return Trace(eps, (), (), events)


class TestIO:
    def test_rational(self):
        assert rational_to_json(F(-3, 4)) == {"num": "-3", "den": "4"}
        assert rational_from_json({"num": "6", "den": "8"}) == F(3, 4)
        assert rational_from_json("5/4") == F(5, 4)
        with pytest.raises(FormatError):
            rational_from_json({"num": "1", "den": "0"})
        with pytest.raises(FormatError):
            rational_from_json(1.5)

    def test_allocation(self):
        assert parse_allocation('[[1, 2], []]', 2, 2) == (frozenset({0, 1}), frozenset())
        with pytest.raises(FormatError):
            parse_allocation('[[3]]', 1, 2)
        with pytest.raises(FormatError):
            parse_allocation('[[1]]', 2, 2)

    def test_prices(self):
        assert parse_prices('{"prices": [{"num": "5", "den": "4"}, "1"]}') == (F(5, 4), F(1))

    def test_missing_keys(self):
        with pytest.raises(FormatError):
            parse_instance('{"agents": 1}')


class TestSolve:
    def test_c4(self, tmp_path, capsys):
        inp = write(tmp_path / "c4.json", serialize_instance(fixture("c4")))
        out = tmp_path / "sol.json"
        assert main(["solve", "--input", inp, "--mode", "adaptive", "--output", str(out)]) == 0
        sol = json.loads(out.read_text())
        assert sol["allocation"] == [[1], [2], [3]]
        assert sol["certificates"]["po_brute_force"] == "confirmed"
        assert sol["nsw"]["product"] == "1"
        assert list(sol)[:7] == ["epsilon", "matched_agents", "allocation", "prices", "certificates", "nsw", "events"]

    def test_bad_instance(self, tmp_path, capsys):
        inp = write(tmp_path / "bad.json", {"agents": 2, "goods": 2, "valuations": [[1, 0], [1, 0]]})
        assert main(["solve", "--input", inp]) == 2
        assert "good 2 valued by no agent" in capsys.readouterr().err

    def test_trace_audits(self, tmp_path, c6):
        t = tmp_path / "t.jsonl"
        assert main(["solve", "--input", c6, "--mode", "adaptive", "--trace", str(t), "--output", str(tmp_path / "s.json")]) == 0
        lines = t.read_text().splitlines()
        assert json.loads(lines[-1])["kind"] == "terminate"
        sol = json.loads((tmp_path / "s.json").read_text())
        eps = rational_from_json(sol["epsilon"])
        trace = trace_from_jsonl(t.read_text(), eps)
        trace.final_prices = tuple(rational_from_json(p) for p in sol["prices"])
        assert audit_trace(trace, round_instance(fixture("c6"), eps)).ok

    def test_trace_with_swaps_is_one_based(self, tmp_path):
        inp = write(tmp_path / "c5.json", serialize_instance(fixture("c5")))
        t = tmp_path / "t.jsonl"
        assert main(["solve", "--input", inp, "--mode", "fixed", "--epsilon", "1/64", "--trace", str(t), "--output", str(tmp_path / "s.json")]) == 0
        events = [json.loads(line) for line in t.read_text().splitlines()]
        swaps = [e for e in events if e["kind"] == "swap"]
        assert swaps and all(1 <= e["from"] <= 5 and 1 <= e["good"] <= 7 for e in swaps)

    def test_fixed_not_ef1_exits_1(self, tmp_path):
        inp = write(tmp_path / "c5.json", serialize_instance(fixture("c5")))
        assert main(["solve", "--input", inp, "--mode", "fixed", "--epsilon", "1/4", "--output", str(tmp_path / "s.json")]) == 1

    @pytest.mark.parametrize("eps", ["0", "1", "-1/4", "1/0", "x"])
    def test_bad_epsilon(self, c6, eps):
        with pytest.raises(SystemExit) as exc:
            main(["solve", "--input", c6, "--epsilon", eps])
        assert exc.value.code == 2

    def test_unknown_flag(self, c6):
        with pytest.raises(SystemExit) as exc:
            main(["solve", "--input", c6, "--fast"])
        assert exc.value.code == 2

    def test_missing_file(self, tmp_path):
        assert main(["solve", "--input", str(tmp_path / "none.json")]) == 2

    def test_malformed(self, tmp_path):
        assert main(["solve", "--input", write(tmp_path / "x.json", "{oops")]) == 2


class TestVerify:
    def test_ef1_fails_on_y(self, tmp_path, c6, capsys):
        y = write(tmp_path / "y.json", {"allocation": [[1, 2, 4], [3]]})
        assert main(["verify", "--input", c6, "--allocation", y, "--property", "ef1"]) == 1
        assert "agent 2 envies agent 1" in capsys.readouterr().out

    def test_po_on_x(self, tmp_path, c6):
        x = write(tmp_path / "x.json", [[1, 2], [3, 4]])
        assert main(["verify", "--input", c6, "--allocation", x, "--property", "po-brute"]) == 0

    def test_fpo_length_mismatch(self, tmp_path, c6):
        x = write(tmp_path / "x.json", [[1, 2], [3, 4]])
        p = write(tmp_path / "p.json", ["1", "1"])
        assert main(["verify", "--input", c6, "--allocation", x, "--property", "fpo-cert", "--prices", p, "--epsilon", "1/4"]) == 2

    def test_fpo_needs_prices(self, tmp_path, c6):
        x = write(tmp_path / "x.json", [[1, 2], [3, 4]])
        assert main(["verify", "--input", c6, "--allocation", x, "--property", "fpo-cert"]) == 2

    def test_fpo_from_solution(self, tmp_path, c6):
        sol = tmp_path / "s.json"
        main(["solve", "--input", c6, "--output", str(sol)])
        assert main(["verify", "--input", c6, "--allocation", str(sol), "--property", "fpo-cert", "--prices", str(sol)]) == 0

    def test_eps_ef1(self, tmp_path, c6):
        y = write(tmp_path / "y.json", [[1, 2, 4], [3]])
        args = ["verify", "--input", c6, "--allocation", y, "--property", "eps-ef1"]
        assert main(args) == 2
        assert main(args + ["--epsilon", "1/2"]) == 1

    def test_nsw_ratio(self, tmp_path, c6, capsys):
        x = write(tmp_path / "x.json", [[1, 2], [3, 4]])
        y = write(tmp_path / "y.json", [[1, 2, 4], [3]])
        assert main(["verify", "--input", c6, "--allocation", x, "--property", "nsw-ratio"]) == 0
        assert main(["verify", "--input", c6, "--allocation", y, "--property", "nsw-ratio"]) == 1
        assert "ratio 1/4" in capsys.readouterr().out

    def test_budget(self, tmp_path, c6):
        x = write(tmp_path / "x.json", [[1, 2], [3, 4]])
        assert main(["verify", "--input", c6, "--allocation", x, "--property", "po-brute", "--budget", "3"]) == 2


class TestOracleAndGen:
    def test_oracle(self, tmp_path, c6):
        out = tmp_path / "o.json"
        assert main(["oracle", "--input", c6, "--output", str(out)]) == 0
        assert json.loads(out.read_text())["nsw_product"] == "16"

    def test_fixture(self, tmp_path):
        out = tmp_path / "f.json"
        assert main(["gen", "--family", "fixture", "--fixture", "c5", "--output", str(out)]) == 0
        assert parse_instance(out.read_text()) == fixture("c5")

    def test_random_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            main(["gen", "--family", "random", "--n", "3", "--m", "5", "--vmax", "10", "--seed", "7", "--output", str(path)])
        assert a.read_bytes() == b.read_bytes()

    def test_identical(self, tmp_path):
        out = tmp_path / "i.json"
        main(["gen", "--family", "identical", "--n", "2", "--m", "4", "--vmax", "5", "--seed", "1", "--output", str(out)])
        rows = json.loads(out.read_text())["valuations"]
        assert rows[0] == rows[1]

    def test_missing_flags(self, tmp_path):
        assert main(["gen", "--family", "random", "--n", "3", "--output", str(tmp_path / "r.json")]) == 2
        assert main(["gen", "--family", "fixture", "--output", str(tmp_path / "r.json")]) == 2


class TestBench:
    def test_small(self, tmp_path):
        report = tmp_path / "r.json"
        args = ["bench", "--seeds", "50", "--n-min", "2", "--n-max", "3", "--m-min", "2", "--m-max", "5", "--vmax", "5", "--report", str(report)]
        assert main(args) == 0
        data = json.loads(report.read_text())
        assert data["summary"]["passed"] == 50
        assert all(c["nsw_ratio_ok"] for c in data["cases"] if c["nsw_opt_product"] not in (None, "0"))

    def test_zero_seeds(self, tmp_path):
        assert main(["bench", "--seeds", "0", "--report", str(tmp_path / "r.json")]) == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "f.json"
    proc = subprocess.run(
        [sys.executable, "-m", "fairmarket", "gen", "--family", "fixture", "--fixture", "c4", "--output", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and out.exists()
