import json
import shutil
from pathlib import Path

import pytest

from scamap import cli, flow
from scamap.flow import load_config

from conftest import AOI_CELLS, DATA


def run(*argv):
    return cli.main([str(a) for a in argv])


def write_config(tmp_path, name="half_adder", **changes):
    doc = json.loads(DATA.joinpath("configs", f"{name}.json").read_text())
    for key, val in changes.items():
        if isinstance(val, dict):
            doc[key].update(val)
        else:
            doc[key] = val
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(doc))
    return path


def files(out):
    return {p.name: p.read_bytes() for p in sorted(Path(out).iterdir()) if p.is_file()}


@pytest.fixture(scope="module")
def ps_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ps")
    assert run("synth", "--config", "present_sbox", "--out", out) == 0
    return out


def test_synth_half_adder(tmp_path, capsys):
    assert run("synth", "--config", "half_adder", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "equivalence_posyn.json").read_text())
    assert rep["overall"] is True
    for name in ("mapped_posyn.net", "mapped_conventional.net", "solution_posyn.json", "synth.json",
                 "config.json", "source.net", "library.json", "annotations.json"):
        assert (tmp_path / name).exists()
    assert "equivalent True" in capsys.readouterr().out


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        run("frobnicate")
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run("synth")  # --config missing
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run("synth", "--config", "half_adder", "--mode", "greedy")
    assert exc.value.code == 1


def test_impossible_library(tmp_path, capsys):
    assert run("synth", "--config", "impossible", "--out", tmp_path) == 2
    assert "library" in capsys.readouterr().err


def test_missing_config(tmp_path):
    assert run("synth", "--config", tmp_path / "nope.json") == 2


def test_invalid_weights(tmp_path):
    cfg = write_config(tmp_path, weights={"alpha": 0, "beta": 0, "gamma": 0})
    assert run("synth", "--config", cfg, "--out", tmp_path / "o") == 2


def test_infeasible_mapping(tmp_path):
    lib = {"name": "aoi", "node_label": "test", "cells": [
        dict({"ds": 1, "cap": 1.0, "area": 1.0, "sequential": False, "output": "Z"}, **c) for c in AOI_CELLS]}
    lib["cells"].append({"name": "DFF_X1", "inputs": ["D"], "output": "Q", "function": "D", "ds": 1, "cap": 1.0,
                         "area": 4.0, "sequential": True})
    (tmp_path / "aoi.json").write_text(json.dumps(lib))
    cfg = write_config(tmp_path, library="aoi.json", sa={"max_cells": 2})
    assert run("synth", "--config", cfg, "--out", tmp_path / "o") == 4


def test_equivalence_failure(tmp_path, monkeypatch):
    real = flow.emit_netlist

    def broken(design, solution):
        return real(design, solution).replace("AND2_X1", "OR2_X1")

    monkeypatch.setattr(flow, "emit_netlist", broken)
    assert run("synth", "--config", "half_adder", "--out", tmp_path) == 3
    assert json.loads((tmp_path / "equivalence_conventional.json").read_text())["overall"] is False


def test_present_round_modes(tmp_path):
    costs = {}
    for mode in ("replicated", "exclusive"):
        out = tmp_path / mode
        assert run("synth", "--config", "present_round", "--mode", mode, "--out", out) == 0
        s = json.loads((out / "synth.json").read_text())
        assert s["equivalent"] == {"conventional": True, "posyn": True}
        costs[mode] = s["total_cost"]
    assert costs["exclusive"] >= costs["replicated"]


def test_attack_and_rerun_deterministic(ps_run, tmp_path):
    assert run("attack", "--out", ps_run, "--attempts", 3, "--traces", 500) == 0
    first = files(ps_run)
    copy = tmp_path / "copy"
    shutil.copytree(ps_run, copy)
    # the run directory is self-contained: the same reports come out of the copy
    assert run("attack", "--out", copy, "--attempts", 3, "--traces", 500) == 0
    again = files(copy)
    for name in ("attack_posyn.json", "attack_conventional.json", "traces_posyn.psyn", "traces_conventional.psyn"):
        assert again[name] == first[name]


def test_attack_zero_attempts(ps_run):
    assert run("attack", "--out", ps_run, "--attempts", 0) == 2


def test_attack_missing_artifacts(tmp_path):
    assert run("attack", "--out", tmp_path) == 2


def test_attack_noiseless_rates(tmp_path):
    cfg = load_config("present_sbox")
    res = flow.synthesize(cfg.load_design(), cfg.load_library(), cfg.load_annotations(), cfg.weights, cfg.sa)
    quiet = cfg.with_overrides()
    from dataclasses import replace

    quiet.model = replace(quiet.model, noise_sigma=0.0)
    r = flow.attack_protocol(res.mapped["conventional"], res.lib, quiet, attempts=10, num_traces=1000)
    assert r["cpa_success_rate"] == 1.0
    assert len(r["per_attempt"]) == 10


@pytest.mark.xfail(reason="single-bit DPA meets ghost keys on this fixture's toggle leakage; see notes")
def test_attack_noiseless_dpa_is_one():
    cfg = load_config("present_sbox")
    res = flow.synthesize(cfg.load_design(), cfg.load_library(), cfg.load_annotations(), cfg.weights, cfg.sa)
    from dataclasses import replace

    quiet = cfg.with_overrides()
    quiet.model = replace(quiet.model, noise_sigma=0.0)
    r = flow.attack_protocol(res.mapped["conventional"], res.lib, quiet, attempts=50, num_traces=1000)
    assert r["dpa_success_rate"] == 1.0


def test_tvla_and_mi(ps_run, capsys):
    assert run("tvla", "--out", ps_run, "--design", "conventional", "--traces", 500) == 0
    t = json.loads((ps_run / "tvla_conventional.json").read_text())
    assert t["max_abs_t"] > 4.5
    assert (ps_run / "tvla_conventional_t.csv").read_text().startswith("sample,t\n")
    assert run("mi", "--out", ps_run) == 0
    mi = json.loads((ps_run / "mi.json").read_text())
    assert set(mi) == {"conventional", "posyn", "posyn_lower"}
    assert 0 <= mi["posyn"]["mi_bits"] <= 4


def test_report(ps_run, capsys):
    assert run("report", "--out", ps_run) == 0
    rep = json.loads((ps_run / "report.json").read_text())
    assert "conventional" in (ps_run / "report.txt").read_text()
    assert rep


def test_gridsearch_singleton(tmp_path):
    cfg = write_config(tmp_path, "present_sbox", gridsearch={"grid": [2.0], "attempts": 2},
                       output_dir=str(tmp_path / "g"))
    assert run("gridsearch", "--config", cfg) == 0
    res = json.loads((tmp_path / "g" / "gridsearch.json").read_text())
    assert res["best"] == {"alpha": 2.0, "beta": 2.0, "gamma": 2.0}
    assert len(res["sweep"]) == 1


def test_gridsearch_skips_zero(tmp_path, capsys):
    cfg = load_config("half_adder").with_overrides(out=tmp_path)
    with pytest.warns(UserWarning, match="skipping"):
        res = flow.gridsearch(cfg, grid=[0, 1], attempts=2)
    assert res["skipped"] == [[0, 0, 0]]
    assert len(res["sweep"]) == 7
    rates = [(r["cpa_success_rate"], r["netlist_change_percent"]) for r in res["sweep"]]
    assert rates == sorted(rates)


def test_gridsearch_empty_grid():
    with pytest.raises(flow.ConfigError):
        flow.gridsearch(load_config("half_adder"), grid=[])


def test_synth_seed_determinism(tmp_path):
    for k in ("a", "b"):
        assert run("synth", "--config", "present_sbox", "--seed", 7, "--out", tmp_path / k) == 0
    assert files(tmp_path / "a") == files(tmp_path / "b")


def test_config_round_trip(tmp_path):
    cfg = load_config("present_sbox")
    doc = cfg.to_dict(relocate=False)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    again = load_config(path)
    assert again.to_dict(relocate=False) == doc


def test_bad_target(tmp_path):
    cfg = write_config(tmp_path, "present_sbox", target={"width": 3})
    assert run("synth", "--config", cfg, "--out", tmp_path / "o") == 2
    cfg = write_config(tmp_path, "present_sbox", target={"sbox": "des"})
    assert run("synth", "--config", cfg, "--out", tmp_path / "o") == 2
