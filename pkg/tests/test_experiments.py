import json
import subprocess
import sys

import pytest

from loopsoup.cli import main
from loopsoup.experiments import (ConfigError, ExperimentConfig, appendix_bounds,
                                  config_from_mapping, parse_config_text, parse_delta,
                                  run_experiment)


def test_parse_delta():
    assert parse_delta("1/64") == 1 / 64
    assert parse_delta("0.125") == 0.125
    with pytest.raises(ConfigError):
        parse_delta("abc")
    with pytest.raises(ConfigError):
        parse_delta("-1/4")


def test_config_text_with_units():
    text = """
    # greedy sweep
    experiment = greedy
    delta = 1/64 [length]
    eps = 0.2 [length]
    replicas = 10 [count]
    """
    m = parse_config_text(text)
    cfg = config_from_mapping(m).resolved()
    assert cfg.deltas == ("1/64",) and cfg.eps == 0.2 and cfg.replicas == 10


def test_config_text_errors():
    with pytest.raises(ConfigError, match="measured in"):
        parse_config_text("eps = 0.2 [count]")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("eps = 0.2\neps = 0.3")
    with pytest.raises(ConfigError):
        parse_config_text("just words")


def test_unknown_param_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig("oracle", params={"bogus": 1}).resolved()


def test_missing_delta_exit_code(capsys):
    assert main(["greedy", "--eps", "0.2"]) == 2
    assert "usage" in capsys.readouterr().err


def test_bad_usage_exit_codes(capsys):
    assert main(["no-such-experiment"]) == 2
    assert main(["oracle", "--no-such-flag"]) == 2
    assert main([]) == 2
    assert main(["greedy", "--delta", "1/64", "--check", "both"]) == 2


def test_oracle_cli(capsys, tmp_path):
    assert main(["oracle", "--graph", "g_ab.txt", "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "total mass 0.287682" in out
    assert "a,b,a,b" in out
    assert (tmp_path / "o.jsonl").exists() and (tmp_path / "o.csv").exists()
    timing = json.loads((tmp_path / "o.timing.json").read_text())
    assert timing["wall_clock_seconds"] >= 0


def test_oracle_from_graph_file(tmp_path, capsys):
    from loopsoup import graph_ab
    p = tmp_path / "ab.txt"
    graph_ab()[0].save(p)
    assert main(["oracle", "--graph", str(p), "--quiet"]) == 0


def test_statistical_failure_exit_code():
    # an impossible tolerance forces a failing verdict
    assert main(["wilson", "--replicas", "200", "--set", "tv_tol=0", "--quiet"]) == 1


def test_jsonl_byte_reproducible(tmp_path):
    args = ["greedy", "--delta", "1/16", "--eps", "0.5", "--replicas", "5", "--seed", "3",
            "--quiet"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    assert main(args[:-2] + ["4", "--quiet", "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "a.jsonl").read_bytes() != (tmp_path / "c.jsonl").read_bytes()


def test_workers_do_not_change_results():
    base = dict(experiment="sample-soup", replicas=400, seed=5)
    a = run_experiment(ExperimentConfig(**base))
    b = run_experiment(ExperimentConfig(workers=2, **base))
    assert a.to_jsonl() == b.to_jsonl()


def test_config_file_cli(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("experiment = sample-soup\nreplicas = 300 [count]\nseed = 2\n")
    assert main(["--config", str(cfg), "--quiet"]) == 0
    assert main(["--config", str(tmp_path / "missing.cfg")]) == 2


def test_appendix_bound_values():
    import math
    b = appendix_bounds(math.pi, 0.5, 1.5, 64)
    assert b["bls"] >= 1 and b["rwls"] >= 1
    b = appendix_bounds(math.pi, 0.5, 0.95, 64)
    assert b["bls"] == pytest.approx(0.465, abs=1e-3)
    b = appendix_bounds(math.pi, 0.5, 0.2, 64)
    assert b["rwls"] == pytest.approx(0.106, abs=1e-3)


def test_schramm_all_vertices_is_zero():
    rec = run_experiment(ExperimentConfig("schramm", deltas=("1/8",), eps=0.25, replicas=10,
                                          params={"js": "1,2"}))
    assert rec.rows[-1]["p"] == 0


def test_boundary_vacuous_eta():
    rec = run_experiment(ExperimentConfig("boundary", deltas=("1/16",), eps=0.3, replicas=100,
                                          params={"etas": "2,0.1"}))
    vac = [v for k, v in rec.verdicts.items() if k.startswith("vacuous_eta")]
    assert vac and all(vac)


def test_compare_large_threshold_trivial():
    rec = run_experiment(ExperimentConfig("compare", deltas=("1/8", "1/16", "1/32"), eps=2.0,
                                          replicas=30, params={"dm_pairs": 0}))
    assert all(r.get("mean", 0) == 0 for r in rec.rows)
    assert rec.passed


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "loopsoup", "oracle", "--quiet"],
                       capture_output=True, text=True)
    assert r.returncode == 0
