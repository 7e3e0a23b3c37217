import json

import pytest

from haldane_wire.cli import EXIT_CONFIG, EXIT_OK, EXIT_RESOURCE, EXIT_SOLVER, main

AKLT = {"n_sites": 6, "beta": -1 / 3, "boundary": "right_qubit"}


def run(tmp_path, command, doc, *extra, name="out"):
    cfg = tmp_path / f"{name}.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / name
    return main([command, "--config", str(cfg), "--out", str(out), *extra]), out


def test_ground_two_site_energy(tmp_path):
    code, out = run(tmp_path, "ground", {"chain": {"n_sites": 2, "beta": 0.0, "boundary": "none"},
                                         "engine": {"kind": "oracle"}})
    assert code == EXIT_OK
    report = json.loads((out / "ground.json").read_text())["report"]
    assert report["energy"] == pytest.approx(-2.0, abs=1e-10)
    assert (out / "run.log").exists()


def test_identity_program_has_unit_fidelity(tmp_path):
    doc = {"chain": AKLT, "engine": {"kind": "oracle"}, "program": [],
           "wire": {"mode": "tomography"}}
    code, out = run(tmp_path, "wire", doc)
    assert code == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())["summary"]
    assert summary["unitary_fidelity"] == pytest.approx(1.0, abs=1e-9)
    assert summary["steps"] == 0
    assert (out / "trace.csv").read_text().count("\n") == 1


@pytest.mark.parametrize("doc", [
    {"chain": AKLT, "bogus": 1},
    {"chain": {"n_sites": 1, "beta": 0.0}},
    {"chain": {"n_sites": 4, "beta": 0.0, "boundary": "sideways"}},
    {"chain": AKLT, "ground": {"cut": 40}},
])
def test_invalid_ground_configs_exit_2_without_outputs(tmp_path, doc):
    code, out = run(tmp_path, "ground", doc)
    assert code == EXIT_CONFIG
    assert not out.exists()


def test_missing_and_unreadable_configs(tmp_path):
    code, _ = run(tmp_path, "wire", {"chain": AKLT})
    assert code == EXIT_CONFIG
    assert main(["ground", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["ground", "--config", str(bad)]) == EXIT_CONFIG


def test_empty_beta_list_rejected(tmp_path):
    code, out = run(tmp_path, "scan", {"scan": {"betas": []}})
    assert code == EXIT_CONFIG
    assert not out.exists()


@pytest.mark.parametrize("weights", [[[0.5, 0.5, 0.5, -0.5]], [[0.3, 0.3, 0.3, 0.3]]])
def test_bad_mixture_weights_rejected(tmp_path, weights):
    code, out = run(tmp_path, "mixed", {"mixed": {"weights": weights}})
    assert code == EXIT_CONFIG
    assert not out.exists()


def test_bad_seed_and_jobs(tmp_path):
    code, _ = run(tmp_path, "ground", {"chain": AKLT}, "--seed", "-1")
    assert code == EXIT_CONFIG
    code, _ = run(tmp_path, "ground", {"chain": AKLT}, "--jobs", "0")
    assert code == EXIT_CONFIG


def test_twochain_needs_right_qubit(tmp_path):
    code, _ = run(tmp_path, "twochain", {"chain": dict(AKLT, boundary="left_qubit")})
    assert code == EXIT_CONFIG


def test_wire_needs_right_qubit(tmp_path):
    doc = {"chain": dict(AKLT, boundary="none"), "engine": {"kind": "oracle"}, "program": []}
    code, out = run(tmp_path, "wire", doc)
    assert code == EXIT_CONFIG
    assert not out.exists()


def test_leaky_fast_ramp_is_a_solver_failure(tmp_path):
    doc = {"chain": {"n_sites": 5, "beta": 0.0, "boundary": "right_qubit"},
           "engine": {"kind": "oracle", "decoupling": "adiabatic",
                      "ramp": {"total_time": 0.5, "steps": 4}},
           "program": [{"axis": "z", "angle": 0.3}], "wire": {"outcomes": ["+"]}}
    code, out = run(tmp_path, "wire", doc)
    assert code == EXIT_SOLVER
    assert "solver failure" in (out / "run.log").read_text()
    assert not (out / "summary.json").exists()


def test_exhausted_chain_exits_4(tmp_path):
    rot = [{"axis": "z", "angle": 0.4}, {"axis": "x", "angle": 0.3}] * 4
    doc = {"chain": dict(AKLT, n_sites=4), "engine": {"kind": "oracle"}, "program": rot,
           "wire": {"logical": [[1, 0], [0, 0]]}}
    code, out = run(tmp_path, "wire", doc)
    assert code == EXIT_RESOURCE
    assert "resource exhausted" in (out / "run.log").read_text()


def test_seeded_runs_are_byte_identical(tmp_path):
    doc = {"chain": AKLT, "engine": {"kind": "oracle"},
           "program": [{"axis": "z", "angle": 0.7}], "wire": {"logical": [[0.6, 0], [0, 0.8]]}}
    _, a = run(tmp_path, "wire", doc, "--seed", "11", name="a")
    _, b = run(tmp_path, "wire", doc, "--seed", "11", name="b")
    for name in ("trace.csv", "trace.json", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_mps_ground_cache_hit_reproduces_report(tmp_path):
    doc = {"chain": AKLT, "engine": {"kind": "mps", "chi_max": 8}}
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "g"
    assert main(["ground", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    first = (out / "ground.json").read_bytes()
    assert main(["ground", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    assert (out / "ground.json").read_bytes() == first
    log = (out / "run.log").read_text()
    assert "cache miss" in log and "cache hit" in log
    energy = json.loads(first)["report"]["energy"]
    assert energy == pytest.approx(-2 * 5 / 3 - 4 / 3, abs=1e-8)


def test_scan_writes_table_and_plot_script(tmp_path):
    doc = {"scan": {"betas": [-1 / 3, 1.5], "n_sites": 6, "plot_script": True},
           "engine": {"kind": "oracle"}}
    code, out = run(tmp_path, "scan", doc)
    assert code == EXIT_OK
    rows = json.loads((out / "scan.json").read_text())
    assert [r["beta"] for r in rows] == pytest.approx([-1 / 3, 1.5])
    assert rows[0]["failure"] is False and rows[1]["failure"] is True
    assert "matplotlib" in (out / "plot_scan.py").read_text()


def test_mixed_and_twochain_reports(tmp_path):
    code, out = run(tmp_path, "mixed", {"mixed": {"n_sites": 8, "weights": [[0.25] * 4],
                                                  "shots": 50}}, name="m")
    assert code == EXIT_OK
    report = json.loads((out / "mixed.json").read_text())["report"]
    assert report["mixtures"][0]["distance_to_baseline"] < 1e-8
    assert sum(report["mixtures"][0]["readout_counts"].values()) == 50
    code, out = run(tmp_path, "twochain", {"chain": dict(AKLT, n_sites=4),
                                           "twochain": {"outcomes": ["x", "y"]}}, name="t")
    assert code == EXIT_OK
    report = json.loads((out / "twochain.json").read_text())["report"]
    assert report["gate"] == "CZ"
    assert report["gate_fidelity"] == pytest.approx(1.0, abs=1e-9)
