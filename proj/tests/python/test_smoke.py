import json
import math
import os
import subprocess
from pathlib import Path

import jsonschema
import pytest

import sbmsel

SOURCE = Path(os.environ.get("SBMSEL_SOURCE_DIR", Path(__file__).resolve().parents[2]))
CLI = os.environ.get("SBMSEL_CLI", str(SOURCE / "build" / "sbmsel"))


def schema(name):
    return json.loads((SOURCE / "schemas" / f"{name}.schema.json").read_text())


def run(*args, check=True):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if check:
        assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="module")
def planted(tmp_path_factory):
    path = tmp_path_factory.mktemp("graphs") / "pp.txt"
    run("synth", "--model", "pp", "--B", 3, "--nr", 20, "--c", 0.9, "--avg-k", 8, "--seed", 4, "-o", path)
    return path


def test_module_roundtrip():
    g = sbmsel.Graph.from_edge_list("0 1\n1 2 2\n2 2\n")
    assert g.node_count == 3
    assert g.edge_count == 4
    assert g.multiplicity(1, 2) == 2
    assert sbmsel.Graph.from_edge_list(g.to_edge_list()) == g
    with pytest.raises(sbmsel.ParseError):
        sbmsel.Graph.from_edge_list("0 x\n")


def test_description_length_and_terms():
    g = sbmsel.Graph(2, [(0, 1, 1)])
    # One edge in one group of two: each term is a small closed form.
    terms = sbmsel.description_length_terms(g, [0, 0])
    assert terms["graph_likelihood"] == pytest.approx(1.0)
    assert terms["edge_prior"] == pytest.approx(0.0)
    assert terms["partition_prior"] == pytest.approx(1.0)
    assert terms["total"] == pytest.approx(sbmsel.description_length(g, [0, 0]))
    with pytest.raises(ValueError):
        sbmsel.description_length(g, [0, 0, 0])


def test_inference_recovers_planted_partition():
    g, truth = sbmsel.planted_partition(groups=3, group_size=20, assortativity=1.0, mean_degree=8, seed=3)
    result = sbmsel.infer(g, restarts=2, sweeps=100, seed=5)
    assert result["groups"] == 3
    assert result["description_length"] <= sbmsel.description_length(g, truth) + 1e-9
    assert sbmsel.infer(g, restarts=2, sweeps=100, seed=5) == result


def test_prediction_and_auc():
    g = sbmsel.two_cliques(6, 0.0, seed=1)
    labels = [0] * 6 + [1] * 6
    inside, across = sbmsel.score_pairs(g, [(0, 0), (0, 7)], labels)
    assert inside > across
    sample = sbmsel.sample_posterior(g, n_samples=20, sweep_interval=2, burn_in=50, seed=2)
    assert len(sample["partitions"]) == 20
    averaged = sbmsel.score_pairs_averaged(g, [(0, 0), (0, 7)], sample["partitions"])
    assert averaged[0] > averaged[1]
    assert sbmsel.auc([2.0, 3.0], [1.0, 3.0]) == pytest.approx(0.625)


def test_closed_forms():
    assert sbmsel.auc_theory_inferred(10, 0.8) == pytest.approx(0.725)
    assert sbmsel.auc_theory_true_model(10, 0.8) == pytest.approx(0.85)
    assert sbmsel.detectability_threshold(10, 20.0) == pytest.approx(0.1 + 0.9 / math.sqrt(20.0))


def test_removal_experiment_binding():
    g, _ = sbmsel.planted_partition(groups=3, group_size=20, assortativity=0.8, mean_degree=8, seed=1)
    out = sbmsel.removal_experiment(g, replicates=2, restarts=1, sweeps=20, seed=9, jobs=1)
    assert len(out["records"]) == 4
    digests = {r["replicate"]: set() for r in out["records"]}
    for r in out["records"]:
        digests[r["replicate"]].add(r["removal_digest"])
    assert all(len(d) == 1 for d in digests.values())
    assert out["pairs"][0]["quadrant"] in {"consistent", "inconsistent", "inconclusive"}


def test_cli_infer_schema_and_determinism(planted, tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    run("infer", "-i", planted, "--seed", 3, "--restarts", 2, "--sweeps", 50, "-o", a)
    run("infer", "-i", planted, "--seed", 3, "--restarts", 2, "--sweeps", 50, "-o", b)
    doc = json.loads(a.read_text())
    jsonschema.validate(doc, schema("infer"))
    assert a.read_bytes() == b.read_bytes()
    g = sbmsel.Graph.read(str(planted))
    assert doc["description_length_bits"] == pytest.approx(sbmsel.description_length(g, doc["partition"]))


def test_cli_experiment_reports(planted, tmp_path):
    report = tmp_path / "r.json"
    csv1 = tmp_path / "r1.csv"
    csv2 = tmp_path / "r2.csv"
    common = ["experiment", "--protocol", "removal", "-i", planted, "--replicates", 3, "--restarts", 1,
              "--sweeps", 20, "--seed", 5, "--no-timing"]
    run(*common, "--csv", csv1, "--report", report)
    run(*common, "--csv", csv2, "-j", 2)
    jsonschema.validate(json.loads(report.read_text()), schema("removal"))
    assert csv1.read_bytes() == csv2.read_bytes()

    sweep = tmp_path / "s.json"
    run("sweep-b", "-i", planted, "--min-B", 1, "--max-B", 4, "--replicates", 2, "--seed", 2,
        "--csv", tmp_path / "s.csv", "--report", sweep)
    jsonschema.validate(json.loads(sweep.read_text()), schema("sweep-b"))

    theory = run("auc-theory", "--B", 10, "--c", 0.8, "--json").stdout
    jsonschema.validate(json.loads(theory), schema("auc-theory"))


def test_cli_errors(tmp_path):
    assert run("infer", "-i", tmp_path / "missing.txt", check=False).returncode == 1
    assert run("synth", "--model", "pp", check=False).returncode == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n1 q\n")
    proc = run("infer", "-i", bad, check=False)
    assert proc.returncode == 1
    assert "line 2" in proc.stderr
