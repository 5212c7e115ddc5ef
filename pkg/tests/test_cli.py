import csv
import io
import itertools
import json

import numpy as np
import pytest
from click.testing import CliRunner

from iforge.cli import main, parse_range


def run(*args, **kwargs):
    return CliRunner().invoke(main, list(args), catch_exceptions=False, **kwargs)


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(path)


def tensor(report, key="tensor"):
    return {tuple(e["index"]): complex(e["re"], e["im"]) for e in report[key]}


def test_parse_range():
    assert parse_range("2..4") == [2, 3, 4]
    assert parse_range("2,5") == [2, 5]
    assert parse_range("3") == [3]
    assert parse_range(None) is None


def test_simulate_hom_boson_has_zero_success(tmp_path):
    cfg = write(tmp_path, {"setup": {"device": "beamsplitter", "params": [2]}, "input": {"kind": "basis", "indices": [1, 1]}})
    res = run("simulate", "--config", cfg)
    assert res.exit_code == 0
    report = json.loads(res.output)
    assert report["success_probability"] == 0
    assert report["rank_report"] is None
    res = run("simulate", "--config", cfg, "--species", "fermion")
    assert json.loads(res.output)["success_probability"] == pytest.approx(1)


def test_simulate_fourier_w_state(tmp_path):
    cfg = write(tmp_path, {"setup": {"device": "fourier", "params": [4, 2]}, "input": {"kind": "basis", "indices": [1, 2, 2, 2]}})
    report = json.loads(run("simulate", "--config", cfg).output)
    t = tensor(report)
    single_h = [t[idx] for idx in t if sorted(idx) == [1, 2, 2, 2]]
    assert len(single_h) == 4
    mags = np.abs(single_h)
    assert np.ptp(mags) < 1e-12 and mags[0] > 0.4
    assert report["rank_report"]["bipartite_lower"] == 2
    assert report["rank_report"]["combinatorial_upper"] == 24


def test_simulate_freespace_is_symmetric(tmp_path):
    cfg = write(tmp_path, {"setup": {"device": "freespace", "params": [3, 2, 0.1]}, "input": {"kind": "basis", "indices": [1, 2, 2]}})
    t = tensor(json.loads(run("simulate", "--config", cfg).output))
    for idx in t:
        for perm in itertools.permutations(idx):
            assert abs(t[idx] - t[perm]) < 1e-12


def test_simulate_fock_input_and_inline_setup(tmp_path):
    m = [[{"re": 1.0, "im": 0.0} if i == j else {"re": 0.0, "im": 0.0} for j in range(4)] for i in range(4)]
    doc = {
        "setup": {"kind": "general", "d": 2, "N": 2, "matrix": m},
        "input": {"kind": "fock", "terms": [{"occupation": [1, 0, 0, 1], "amplitude": 0.6}, {"occupation": [0, 1, 1, 0], "amplitude": {"re": 0, "im": 0.8}}]},
    }
    t = tensor(json.loads(run("simulate", "--config", write(tmp_path, doc)).output))
    assert t[(1, 2)] == pytest.approx(0.6)
    assert t[(2, 1)] == pytest.approx(0.8j)


def test_simulate_output_is_byte_identical(tmp_path):
    cfg = write(tmp_path, {"setup": {"device": "fourier", "params": [3, 2]}, "input": {"kind": "basis", "indices": [1, 2, 1]}})
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("simulate", "--config", cfg, "--out", str(a))
    run("simulate", "--config", cfg, "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize(
    "doc",
    [
        "{not json",
        {"setup": {"device": "mirror"}},
        {"setup": {"device": "fourier", "params": [4]}, "input": {"kind": "basis", "indices": [1, 2]}},
        {"setup": {"device": "fourier", "params": [2]}, "input": {"kind": "spooky"}},
        {"setup": {"device": "fourier", "params": [2]}, "colour": "red"},
        {"input": {"kind": "basis", "indices": [1, 1]}},
    ],
)
def test_config_errors_exit_2(tmp_path, doc):
    res = run("simulate", "--config", write(tmp_path, doc))
    assert res.exit_code == 2
    assert "config error" in res.output


def test_missing_config_file_exits_2(tmp_path):
    assert run("simulate", "--config", str(tmp_path / "absent.json")).exit_code == 2


def test_json_error_has_line_number(tmp_path):
    res = run("simulate", "--config", write(tmp_path, '{\n  "setup": ,\n}'))
    assert "line 2" in res.output


def test_family_default_sweep():
    res = run("family")
    assert res.exit_code == 0
    rows = list(csv.DictReader(io.StringIO(res.output)))
    assert len(rows) == 33
    assert float(rows[0]["success_probability"]) == pytest.approx(1 / 12)
    assert float(rows[-1]["success_probability"]) == pytest.approx(1 / 4)
    assert all(float(r["fidelity"]) > 1 - 1e-9 for r in rows)


def test_family_sweep_from_config(tmp_path):
    cfg = write(tmp_path, {"sweep": {"name": "gamma", "start": 0.0, "stop": 0.39269908169872414, "steps": 2}})
    rows = list(csv.DictReader(io.StringIO(run("family", "--config", cfg).output)))
    assert float(rows[1]["success_probability"]) == pytest.approx(1 / 24)


def test_ghz_swap_command():
    report = json.loads(run("ghz-swap").output)
    assert report["fidelity_ghz3"] > 1 - 1e-9
    product = json.loads(run("ghz-swap", "--product").output)
    assert product["fidelity_ghz3"] <= 0.75
    res = run("ghz-swap", "--species", "fermion")
    assert res.exit_code == 0
    assert json.loads(res.output)["species"] == "fermion"


def test_table2_fermion_qubits():
    res = run("table2", "--species", "fermion", "--d", "2", "--N", "2..7", "--trials", "2")
    assert res.exit_code == 0
    rows = list(csv.DictReader(io.StringIO(res.output)))
    assert [int(r["rank"]) for r in rows] == [4, 8, 14, 22, 32, 44]
    assert all(r["seconds"] == "" for r in rows)


def test_table2_json_and_size_limit():
    res = run("table2", "--species", "boson", "--d", "5", "--N", "3", "--json", "--trials", "1")
    doc = json.loads(res.output)
    assert doc[0]["rank"] == 41 and len(doc[0]["singular_values"]) == 45
    assert run("table2", "--species", "boson", "--d", "3", "--N", "8").exit_code == 4


def test_table2_deterministic(tmp_path):
    a = run("table2", "--species", "boson", "--d", "2,3", "--N", "3", "--seed", "7").output
    b = run("table2", "--species", "boson", "--d", "2,3", "--N", "3", "--seed", "7").output
    assert a == b


def test_table2_bad_range():
    assert run("table2", "--d", "two").exit_code == 2


def test_verify_command(tmp_path):
    out = tmp_path / "verify.json"
    res = run("verify", "--seed", "1", "--out", str(out))
    assert res.exit_code == 0
    doc = json.loads(out.read_text())
    assert all(s["passed"] for s in doc)
    assert {s["suite"] for s in doc} >= {"oracle", "unitarity", "pauli", "reconstruction", "minor_ranks"}
