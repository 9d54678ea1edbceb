from __future__ import annotations

import json
import shutil
import subprocess

import pytest

from twcert.cli import EXIT_OK, EXIT_REJECT, EXIT_USAGE, main


@pytest.fixture
def ptree(tmp_path):
    g = tmp_path / "g.json"
    w = tmp_path / "w.json"
    assert main(["gen", "--kind", "partial-k-tree", "--n", "40", "--k", "2", "--seed", "3", "--out", str(g), "--witness-out", str(w)]) == EXIT_OK
    return g, w


def load(p):
    return json.loads(p.read_text())


def test_gen_and_decompose(ptree, tmp_path):
    g, w = ptree
    assert len(load(g)["vertices"]) == 40
    out = tmp_path / "td.json"
    assert main(["decompose", "--graph", str(g), "--k", "2", "--witness", str(w), "--out", str(out)]) == EXIT_OK
    rep = load(out)["report"]
    assert rep["ok"] and rep["width"] <= 8 and rep["coherent"]


def test_certify_verify_tw(ptree, tmp_path):
    g, w = ptree
    c = tmp_path / "c.json"
    assert main(["certify-tw", "--graph", str(g), "--k", "2", "--witness", str(w), "--out", str(c)]) == EXIT_OK
    r = tmp_path / "r.json"
    assert main(["verify", "--graph", str(g), "--certs", str(c), "--oracle", "--out", str(r)]) == EXIT_OK
    assert load(r)["global_accept"] is True


def test_wide_certificates_rejected_at_small_k(tmp_path):
    g = tmp_path / "k8.json"
    main(["gen", "--kind", "clique", "--n", "8", "--out", str(g)])
    c = tmp_path / "c.json"
    assert main(["certify-tw", "--graph", str(g), "--k", "7", "--out", str(c)]) == EXIT_OK
    r = tmp_path / "r.json"
    assert main(["verify", "--graph", str(g), "--certs", str(c), "--k", "1", "--out", str(r)]) == EXIT_REJECT
    assert "C1" in load(r)["causes"]


def test_certify_mso(tmp_path):
    g = tmp_path / "k4.json"
    main(["gen", "--kind", "clique", "--n", "4", "--out", str(g)])
    c = tmp_path / "c.json"
    assert main(["certify-mso", "--graph", str(g), "--k", "3", "--property", "non-3-colorability", "--out", str(c)]) == EXIT_OK
    assert main(["verify", "--graph", str(g), "--certs", str(c), "--out", str(tmp_path / "r.json")]) == EXIT_OK


def test_certify_opt_default_optimum(ptree, tmp_path):
    g, w = ptree
    c = tmp_path / "c.json"
    assert main(["certify-opt", "--graph", str(g), "--k", "2", "--property", "independent-set", "--witness", str(w), "--out", str(c)]) == EXIT_OK
    doc = load(c)
    assert doc["solution"]
    assert main(["verify", "--graph", str(g), "--certs", str(c), "--oracle", "--out", str(tmp_path / "r.json")]) == EXIT_OK
    # a smaller solution supplied at verification time is rejected
    sol = tmp_path / "x.json"
    sol.write_text(json.dumps(doc["solution"][:-1]))
    assert main(["verify", "--graph", str(g), "--certs", str(c), "--solution", str(sol), "--out", str(tmp_path / "r2.json")]) == EXIT_REJECT


def test_fuzz_command(ptree, tmp_path):
    g, _ = ptree
    out = tmp_path / "f.json"
    assert main(["fuzz", "--graph", str(g), "--k", "2", "--trials", "50", "--seed", "1", "--out", str(out)]) == EXIT_OK
    doc = load(out)
    assert doc["failed_escapes"] == 0 and "mutations" not in doc


def test_size_bench(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["size-bench", "--n", "32,64", "--k", "1", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert len(lines) == 3 and lines[0].startswith("family,n,")
    assert "exponent" in json.loads(capsys.readouterr().err)


def test_oracle_check(tmp_path):
    out = tmp_path / "o.json"
    assert main(["oracle-check", "--protocol", "tw", "--max-n", "4", "--out", str(out)]) == EXIT_OK
    assert load(out)["ok"]


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["certify-tw"])
    assert exc.value.code == EXIT_USAGE
    assert main(["certify-tw", "--graph", str(tmp_path / "missing.json"), "--k", "1"]) == EXIT_USAGE
    g = tmp_path / "g.json"
    main(["gen", "--kind", "path", "--n", "5", "--out", str(g)])
    assert main(["certify-mso", "--graph", str(g), "--k", "1"]) == EXIT_USAGE
    assert main(["certify-mso", "--graph", str(g), "--k", "1", "--property", "independent-set"]) == EXIT_USAGE


def test_tw_exceeded_exit(tmp_path, capsys):
    g = tmp_path / "k7.json"
    main(["gen", "--kind", "clique", "--n", "7", "--out", str(g)])
    assert main(["certify-tw", "--graph", str(g), "--k", "1"]) == EXIT_REJECT
    assert "TW_EXCEEDED" in capsys.readouterr().err


def test_tampered_certificate_rejected(ptree, tmp_path):
    g, w = ptree
    c = tmp_path / "c.json"
    main(["certify-tw", "--graph", str(g), "--k", "2", "--witness", str(w), "--out", str(c)])
    doc = load(c)
    key = next(iter(doc["certificates"]))
    doc["certificates"][key] = ""
    c.write_text(json.dumps(doc))
    assert main(["verify", "--graph", str(g), "--certs", str(c), "--out", str(tmp_path / "r.json")]) == EXIT_REJECT


@pytest.mark.skipif(shutil.which("twcert") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["twcert", "gen", "--kind", "path", "--n", "3"], capture_output=True, text=True)
    assert res.returncode == 0
    assert len(json.loads(res.stdout)["vertices"]) == 3
