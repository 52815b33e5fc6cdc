import json
import subprocess
import sys

import pytest

from novikov_conley import fixtures
from novikov_conley.cli import EXAMPLES, main


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data, indent=2))
    return str(p)


def run_json(capsys, argv):
    code = main(argv + ["--format", "json"])
    out = capsys.readouterr().out
    return code, json.loads(out) if out else None


@pytest.mark.parametrize("name", sorted(EXAMPLES))
def test_every_example_exits_zero(name, capsys):
    code, report = run_json(capsys, ["example", name])
    assert code == 0
    assert report["schema"] == 1 and report["ok"]
    assert report["provenance"]["seed"] == 0


def test_example_results(capsys):
    _, rep = run_json(capsys, ["example", "circle-novikov"])
    assert rep["result"]["novikov"]["b"] == [0, 0]
    assert rep["result"]["novikov"]["agree"] is True
    _, rep = run_json(capsys, ["example", "ex32-flow"])
    assert rep["result"]["classification"]["verdict"] == "NotGradientLike"
    _, rep = run_json(capsys, ["example", "sphere-morse-smale"])
    assert rep["result"]["alpha_morse_smale"]["lhs"] == [2, 1, 1]


def test_json_reports_are_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        assert main(["example", "torus-novikov", "--seed", "9", "--format", "json", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_homology_command(tmp_path, capsys):
    path = write(tmp_path, "torus.json", fixtures.torus().to_json())
    code, rep = run_json(capsys, ["homology", path, "--coeffs", "Q"])
    assert code == 0 and rep["result"]["homology"]["ranks"] == [1, 2, 1]
    bad = write(tmp_path, "bad.json", fixtures.bad_torus().to_json())
    code, rep = run_json(capsys, ["homology", bad])
    assert code == 1
    assert any(i["cell"] == "F00" for i in rep["result"]["validation"]["issues"])


def test_novikov_command_requires_seed(tmp_path, capsys):
    X = write(tmp_path, "c.json", fixtures.circle().to_json())
    a = write(tmp_path, "a.json", fixtures.circle_class().to_json())
    with pytest.raises(SystemExit):
        main(["novikov", X, a])
    code, rep = run_json(capsys, ["novikov", X, a, "--seed", "5", "--trials", "4"])
    assert code == 0
    assert rep["result"]["novikov"]["b"] == [0, 0]
    assert len(rep["result"]["novikov"]["evaluation_points"]) == 4


def test_classify_and_carries_commands(tmp_path, capsys):
    path = write(tmp_path, "ex32.json", fixtures.ex32_flow().to_json())
    code, rep = run_json(capsys, ["classify-flow", path])
    assert code == 0
    assert rep["result"]["classification"]["cycle"]["weight"] == ["2"]
    code, rep = run_json(capsys, ["carries", path, "--rho", "2/3"])
    assert code == 0 and rep["result"]["carry"]["verdict"]
    code, rep = run_json(capsys, ["carries", path, "--rho", "1"])
    assert code == 1


def test_classify_without_carrying_is_a_verification_failure(tmp_path, capsys):
    flow = {"nodes": [{"id": "a"}, {"id": "b"}],
            "edges": [{"from": "a", "to": "b", "w": ["1"]}, {"from": "b", "to": "a", "w": ["-1"]}]}
    path = write(tmp_path, "f.json", flow)
    assert main(["classify-flow", path]) == 1
    assert "carry" in capsys.readouterr().err
    code, rep = run_json(capsys, ["classify-flow", path, "--no-require-carry"])
    assert code == 0 and rep["result"]["classification"]["caveat"]


def test_glue_verify_command(tmp_path, capsys):
    path = write(tmp_path, "g.json", fixtures.torus_gluing().to_json())
    code, rep = run_json(capsys, ["glue-verify", path, "--at", "3,5", "--prime", "5"])
    assert code == 0
    assert rep["result"]["crosscheck"][0]["gluing_ranks"] == [0, 0, 0]
    assert rep["result"]["zero_evaluation"]["coefficients"] == "Z5"


def test_glue_verify_reports_flipped_cylinder(tmp_path, capsys):
    from novikov_conley.gluing import flip_cylinder
    path = write(tmp_path, "g.json", flip_cylinder(fixtures.torus_gluing(), 1, "u10").to_json())
    code, rep = run_json(capsys, ["glue-verify", path])
    assert code == 1
    failures = rep["result"]["stages"][0]["identities"]["failures"]
    assert {"identity": 1, "cell": "u10"}.items() <= failures[0].items()


def test_verify_inequalities_command(tmp_path, capsys):
    morse = write(tmp_path, "m.json", {"sets": [{"kind": "fixed", "index": 0}, {"kind": "periodic", "index": 1},
                                                {"kind": "fixed", "index": 2}]})
    code, rep = run_json(capsys, ["verify-inequalities", morse, "--b", "1,0,1", "--seed", "0"])
    assert code == 0 and rep["result"]["Q"] == [1]
    sphere = write(tmp_path, "s.json", fixtures.sphere().to_json())
    code, rep = run_json(capsys, ["verify-inequalities", morse, "--complex", sphere, "--seed", "3", "--prime", "7"])
    assert code == 0
    assert rep["result"]["inequality"]["provenance"]["attempts"][0]["p"] == 7
    code, _ = run_json(capsys, ["verify-inequalities", morse, "--b", "1,1", "--seed", "0"])
    assert code == 1


def test_mapping_torus_command(tmp_path, capsys):
    X = write(tmp_path, "two.json", fixtures.two_points().to_json())
    f = write(tmp_path, "swap.json", {"a": "b", "b": "a"})
    code, rep = run_json(capsys, ["mapping-torus", X, "--map", f, "--seed", "1"])
    assert code == 0
    assert rep["result"]["vanishing"]["novikov"]["b"] == [0, 0]
    bad = write(tmp_path, "bad.json", {"a": "a", "b": "a"})
    assert main(["mapping-torus", X, "--map", bad, "--seed", "1"]) == 2


def test_parse_errors_have_locations(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text('{"cells": [\n  {"id": "v", "dim": 0},\n  oops\n]}')
    assert main(["homology", str(p)]) == 2
    err = capsys.readouterr().err
    assert "broken.json:3:3" in err
    missing = write(tmp_path, "m.json", {"cells": [{"id": "v"}]})
    assert main(["homology", missing]) == 2
    assert "cells[0]" in capsys.readouterr().err


def test_bad_prime_rejected(capsys):
    assert main(["example", "torus-gluing", "--prime", "4"]) == 2


def test_text_output_and_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "novikov_conley", "example", "ex31-flow"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("example: PASS")
    assert "GradientLike" in proc.stdout
