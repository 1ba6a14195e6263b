import json
import subprocess
import sys


from conftest import cycle
from rigidgraph.cli import EXIT_FAILED, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_USAGE, main
from rigidgraph.gadgets import build_berkeley, build_ordinal_case
from rigidgraph.hf import build_universe


def run(*argv):
    return main([str(a) for a in argv])


def test_gadget_ray(tmp_path):
    out = tmp_path / "ray.json"
    assert run("gadget", "ray", "--n", 6, "--out", out) == EXIT_OK
    doc = json.loads(out.read_text())
    assert len(doc["vertices"]) == 6 and doc["meta"]["kind"] == "ray"


def test_gadget_matches_library_byte_for_byte(tmp_path):
    out = tmp_path / "oc.json"
    assert run("gadget", "ordinal-case", "--level", 2, "--arity", 2, "--out", out) == EXIT_OK
    assert out.read_text() == build_ordinal_case(build_universe(2), arity_bound=2).to_json()


def test_gadget_berkeley_auto_chain(tmp_path):
    out = tmp_path / "bk.json"
    assert run("gadget", "berkeley", "--level", 1, "--chain", "auto", "--out", out) == EXIT_OK
    meta = json.loads(out.read_text())["meta"]
    assert meta["chain_len"] == meta["non_chain"] + 1
    assert out.read_text() == build_berkeley(build_universe(1)).to_json()
    assert run("gadget", "berkeley", "--level", 1, "--chain", 3, "--out", out) == EXIT_USAGE


def test_certify_exit_codes(tmp_path):
    ray = tmp_path / "ray.json"
    run("gadget", "ray", "--n", 6, "--out", ray)
    assert run("certify", ray, "--expect", "strongly-rigid") == EXIT_OK
    c3 = tmp_path / "c3.json"
    c3.write_text(cycle(3).to_json())
    cert = tmp_path / "cert.json"
    assert run("certify", c3, "--expect", "strongly-rigid", "--out", cert) == EXIT_FAILED
    assert json.loads(cert.read_text())["witness"] in [[1, 2, 0], [2, 0, 1]]
    oc = tmp_path / "oc.json"
    run("gadget", "ordinal-case", "--level", 2, "--out", oc)
    assert run("certify", oc, "--max-nodes", 2, "--out", cert) == EXIT_INCONCLUSIVE
    assert run("certify", tmp_path / "missing.json") == EXIT_USAGE
    (tmp_path / "bad.json").write_text("{not json")
    assert run("certify", tmp_path / "bad.json") == EXIT_USAGE


def test_blowup_subcommand(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("gadget", "blowup", "--class-size", "{}=2", "--out", a) == EXIT_OK
    assert run("certify", a, "--expect", "strongly-rigid") == EXIT_OK
    assert run("gadget", "blowup", "--class-size", "{}=2", "--drop-prefix-arrows", "--out", b) == EXIT_OK
    assert run("certify", b, "--expect", "not-strongly-rigid") == EXIT_OK


def test_search_subcommand(tmp_path, capsys):
    c3 = tmp_path / "c3.json"
    c3.write_text(cycle(3).to_json())
    assert run("search", c3) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["maps"] == [[0, 1, 2], [1, 2, 0], [2, 0, 1]] and doc["status"] == "complete"
    assert run("search", c3, "--mode", "count", "--nontrivial") == EXIT_OK
    assert json.loads(capsys.readouterr().out)["count"] == 2


def test_sat(capsys):
    assert run("sat", "--level", 2, "--formula", "forall y . !(y in x)", "--assign", "x={}") == EXIT_OK
    assert capsys.readouterr().out == "true\n"
    formula = "forall y . forall z . ((y in x & z in y) -> z in x)"
    assert run("sat", "--level", 3, "--formula", formula, "--each", "x") == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert [line.split()[1] for line in lines] == ["true", "true", "false", "true"]
    assert run("sat", "--formula", "forall y . (y in") == EXIT_USAGE
    assert run("sat", "--formula", "x in x", "--assign", "x={{{}}}") == EXIT_USAGE


def test_oracle_diff(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("oracle-diff", "--count", 20, "--max-n", 6, "--seed", 1, "--out", a) == EXIT_OK
    assert run("oracle-diff", "--count", 20, "--max-n", 6, "--seed", 1, "--out", b) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["mismatches"] == 0
    assert run("oracle-diff", "--max-n", 9) == EXIT_USAGE


def test_export_dot(tmp_path, capsys):
    ray = tmp_path / "ray.json"
    run("gadget", "ray", "--n", 4, "--out", ray)
    capsys.readouterr()
    assert run("export-dot", ray) == EXIT_OK
    assert capsys.readouterr().out.startswith('digraph "ray"')


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 4}))
    out = tmp_path / "r.json"
    assert run("--config", cfg, "gadget", "ray", "--out", out) == EXIT_OK
    assert len(json.loads(out.read_text())["vertices"]) == 4
    assert run("--config", cfg, "gadget", "ray", "--n", 5, "--out", out) == EXIT_OK
    assert len(json.loads(out.read_text())["vertices"]) == 5
    cfg.write_text("[1]")
    assert run("--config", cfg, "gadget", "ray") == EXIT_USAGE


def test_outputs_are_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        g, c = tmp_path / f"g{i}.json", tmp_path / f"c{i}.json"
        run("gadget", "ordinal-case", "--level", 1, "--out", g)
        run("certify", g, "--out", c)
        outs.append((g.read_bytes(), c.read_bytes()))
    assert outs[0] == outs[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rigidgraph", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ["gadget", "certify", "search", "sat", "export-dot", "oracle-diff"]:
        assert sub in proc.stdout
