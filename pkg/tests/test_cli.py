from __future__ import annotations

import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from oscint.cli import SUBCOMMANDS, main
from oscint.generators import GeneratorSum, dumps
from oscint.validation import LOCUS_STRIP, fixture_text, json_close, random_monomial_sum


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def value(entry) -> complex:
    re, im = entry["value"]
    return complex(re, im)


def test_fourier_indicator(capsys):
    code, out, _ = run(capsys, "fourier", "fixtures/indicator_pi_2pi.json")
    assert code == 0
    assert value(json.loads(out)["values"][0]) == pytest.approx(1, abs=1e-12)


def test_extend_strip(capsys):
    code, out, _ = run(capsys, "extend-strip", "fixtures/gamma_ys.json", "--strip=-2,1",
                       "--at=0.5+2j")
    d = json.loads(out)
    assert code == 0 and [t["steps"] for t in d["traces"]] == [2]
    assert math.isfinite(abs(value(d["values"][0])))


def test_mellin_removable_point(capsys):
    code, out, _ = run(capsys, "mellin", "fixtures/mellin_interval.json", "--at", "0")
    assert code == 0
    assert value(json.loads(out)["values"][0]) == pytest.approx(math.log(2), abs=1e-12)


def test_limit_samples(capsys):
    code, out, _ = run(capsys, "limit", "fixtures/x1_eiy.json", "--x", "2", "--x", "0")
    samples = json.loads(out)["samples"]
    assert code == 0
    assert [s["exists"] for s in samples] == [False, True]
    assert samples[0]["f"] == [4.0, 0.0]


def test_empty_locus_exits_4(capsys):
    code, _, _ = run(capsys, "locus", "fixtures/x1_eiy.json")
    assert code == 4


def test_precondition_exits_3(capsys):
    code, _, err = run(capsys, "fourier", "fixtures/gamma_ys.json")
    assert code == 3 and "PreconditionViolated" in err


@pytest.mark.parametrize("argv", [["nonsense"], ["fourier"], ["fourier", "no/such/file.json"],
                                  ["expand", "fixtures/si.json", "--bogus"],
                                  ["fourier-full", "fixtures/mellin_interval.json"]])
def test_usage_and_parse_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_malformed_json_exits_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "expand", str(bad))[0] == 2
    bad.write_text(json.dumps({"kind": "generator_sum"}))
    assert run(capsys, "expand", str(bad))[0] == 2


@pytest.mark.parametrize("name,golden", [("si", "si_expand_order4.json"),
                                         ("geometric_unit", "geometric_unit_expand_order4.json")])
def test_expand_matches_golden(capsys, name, golden):
    code, out, _ = run(capsys, "expand", f"fixtures/{name}.json", "--order", "4")
    assert code == 0
    assert json_close(json.loads(out), json.loads(fixture_text("golden/" + golden))) is None


def test_out_file_and_table(capsys, tmp_path):
    target = tmp_path / "r.json"
    code, out, _ = run(capsys, "expand", "fixtures/si.json", "--out", str(target))
    assert code == 0 and out == ""
    code, stdout, _ = run(capsys, "expand", "fixtures/si.json")
    assert target.read_text().strip() == stdout.strip()
    code, table, _ = run(capsys, "expand", "fixtures/si.json", "--format", "table")
    assert code == 0 and "C_0" in table


def test_output_ignores_seed(capsys, monkeypatch):
    a = run(capsys, "expand", "fixtures/si.json")[1]
    monkeypatch.setenv("OSCINT_SEED", "7")
    assert run(capsys, "expand", "fixtures/si.json")[1] == a


def test_equidistribution_commands(capsys):
    code, out, _ = run(capsys, "weyl", "fixtures/weyl_exp.json", "--T", "20")
    assert code == 0 and json.loads(out)["max_abs"] < 0.05
    code, out, _ = run(capsys, "discrepancy", "fixtures/weyl_dependent.json")
    boxes = json.loads(out)["boxes"]
    assert code == 0 and max(b["discrepancy"] for b in boxes) >= 0.1


def test_witness_commands(capsys):
    code, out, _ = run(capsys, "dovetail", "fixtures/x1_eiy.json")
    assert code == 0 and json.loads(out)["found"]
    code, out, _ = run(capsys, "lp-check", "fixtures/x1_eiy.json")
    assert code == 0 and not json.loads(out)["cauchy"]


def test_dovetail_is_seeded(capsys):
    a = run(capsys, "dovetail", "fixtures/x1_eiy.json", "--seed", "3")[1]
    assert run(capsys, "dovetail", "fixtures/x1_eiy.json", "--seed", "3")[1] == a


def test_validate_single_suite(capsys):
    code, out, _ = run(capsys, "validate", "--suite", "roundtrip")
    assert code == 0 and json.loads(out)["passed"]


def test_every_subcommand_has_help(capsys):
    for name in SUBCOMMANDS:
        with pytest.raises(SystemExit) as exc:
            main([name, "--help"])
        assert exc.value.code == 0
    capsys.readouterr()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "oscint", "fourier",
                           "fixtures/indicator_pi_2pi.json", "--format", "table"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()


@settings(max_examples=10, deadline=None,
          suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.integers(0, 2 ** 32 - 1))
def test_cli_roundtrip_and_determinism(capsys, tmp_path, seed):
    h = GeneratorSum.make(random_monomial_sum(np.random.default_rng(seed)), LOCUS_STRIP,
                          param_dim=1)
    src = tmp_path / f"h{seed}.json"
    src.write_text(dumps(h.to_json()))
    code, out1, _ = run(capsys, "split", str(src))
    code2, out2, _ = run(capsys, "split", str(src))
    assert code == code2 == 0 and out1 == out2
    again = GeneratorSum.from_json(json.loads(src.read_text()))
    assert dumps(again.to_json()) == src.read_text()
