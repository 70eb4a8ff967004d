"""End-to-end CLI: subcommands, output formats, config files, exit codes."""
import csv
import io
import json

import pytest

from snc80211.cli import main
from snc80211.config import ENV_CONFIG, ConfigError, load_run_config


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    monkeypatch.delenv(ENV_CONFIG, raising=False)


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_fixed_point_table(capsys):
    assert main(["fixed-point"]) == 0
    lines = capsys.readouterr().out.splitlines()
    header = lines[0].split()
    row = dict(zip(header, lines[1].split()))
    assert row["L"] == "39"
    assert float(row["tau"]) == pytest.approx(0.0376096, abs=1e-6)
    assert float(row["eta"]) == pytest.approx(0.2917908, abs=1e-6)


def test_fixed_point_json(capsys):
    assert main(["fixed-point", "--format", "json"]) == 0
    payload = _json_out(capsys)
    row = payload["rows"][0]
    assert row["n"] == 10
    assert row["L"] == 39
    assert row["tau"] == pytest.approx(0.037609599546, abs=1e-9)


def test_fixed_point_csv(capsys):
    assert main(["fixed-point", "--format", "csv"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0][:3] == ["n", "payload", "L"]
    data = dict(zip(rows[0], rows[1]))
    assert float(data["p_s_cond"]) == pytest.approx(0.083647, abs=1e-5)


def test_fixed_point_more_nodes_collide_more(capsys):
    assert main(["fixed-point", "--n", "20", "--format", "json"]) == 0
    row20 = _json_out(capsys)["rows"][0]
    assert row20["n"] == 20
    assert row20["eta"] > 0.2917908
    assert row20["tau"] < 0.0376096


def test_characterize_single_theta(capsys):
    assert main(["characterize", "--thetas", "0.1", "--format", "json"]) == 0
    row = _json_out(capsys)["rows"][0]
    assert row["theta"] == 0.1
    assert row["sigma"] == pytest.approx(0.0755745, abs=1e-5)
    assert row["rho"] == pytest.approx(0.9244255, abs=1e-5)


def test_characterize_empty_grid(capsys):
    assert main(["characterize", "--thetas", ","]) == 2
    assert "empty theta grid" in capsys.readouterr().err


def test_characterize_negative_theta(capsys):
    assert main(["characterize", "--thetas", "-0.5"]) == 2
    assert "error" in capsys.readouterr().err


def test_bounds_single_point(capsys):
    assert main(["bounds", "--rate", "0.04", "--p-list", "0.05",
                 "--variants", "bound2", "--format", "json"]) == 0
    rows = _json_out(capsys)["rows"]
    assert rows == [{"p": 0.05, "bound2": 19}]


def test_bounds_rejects_unknown_variant(capsys):
    assert main(["bounds", "--rate", "0.04", "--variants", "bogus"]) == 2


def test_bounds_rejects_bad_p(capsys):
    assert main(["bounds", "--rate", "0.04", "--p-list", "2.0"]) == 2


def test_bounds_unstable_rate_is_infeasible(capsys, recwarn):
    assert main(["bounds", "--rate", "0.09", "--p-list", "0.05"]) == 3
    assert "infeasible" in capsys.readouterr().err


def test_stability_verdicts(capsys):
    assert main(["stability", "--rate", "0.04", "--format", "json"]) == 0
    row = _json_out(capsys)["rows"][0]
    assert row["verdict"] == "stable-bound-derivable"
    assert row["threshold"] == pytest.approx(0.079295209692, abs=1e-9)
    assert row["threshold_mbps"] == pytest.approx(0.2082008, abs=1e-6)
    assert main(["stability", "--rate", "0.081", "--format", "json"]) == 0
    assert _json_out(capsys)["rows"][0]["verdict"] == "not-derivable"


def test_simulate_rows_and_summary(capsys):
    assert main(["simulate", "--rate", "0.05", "--duration", "2",
                 "--replications", "5", "--sample-time", "1",
                 "--seed", "3", "--format", "json"]) == 0
    payload = _json_out(capsys)
    assert len(payload["rows"]) == 5
    assert payload["rows"][0] == {"replication": 0, "time": 1.0,
                                  "backlog": payload["rows"][0]["backlog"]}
    summary = payload["summary"]
    assert set(summary) == {"mean_backlog", "drops", "tagged_attempt_rate",
                            "tagged_collision_fraction", "throughput_per_node"}
    assert len(summary["throughput_per_node"]) == 10


def test_simulate_saturated_flag(capsys):
    assert main(["simulate", "--saturated", "--duration", "1",
                 "--replications", "2", "--seed", "1",
                 "--format", "json"]) == 0
    summary = _json_out(capsys)["summary"]
    assert summary["tagged_attempt_rate"] > 0.02
    assert summary["tagged_collision_fraction"] > 0.1


def test_simulate_seed_changes_outcome(capsys):
    argv = ["simulate", "--rate", "0.09", "--duration", "5",
            "--replications", "6", "--sample-time", "5", "--format", "json"]
    assert main(argv + ["--seed", "1"]) == 0
    first = _json_out(capsys)["rows"]
    assert main(argv + ["--seed", "2"]) == 0
    second = _json_out(capsys)["rows"]
    assert first != second
    assert main(argv + ["--seed", "1"]) == 0
    assert _json_out(capsys)["rows"] == first


def test_out_flag_writes_file(tmp_path, capsys):
    out = tmp_path / "fp.json"
    assert main(["fixed-point", "--format", "json", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["rows"][0]["L"] == 39


def test_repeat_runs_are_byte_identical(tmp_path):
    argv = ["simulate", "--rate", "0.06", "--duration", "2",
            "--replications", "5", "--sample-time", "2", "--seed", "11",
            "--format", "json"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_compare_empirical_stays_below_bounds(capsys):
    assert main(["compare", "--rate", "0.04", "--p-list", "0.5,0.05",
                 "--duration", "5", "--replications", "20",
                 "--sample-time", "5", "--seed", "7",
                 "--format", "json"]) == 0
    rows = _json_out(capsys)["rows"]
    assert [r["p"] for r in rows] == [0.5, 0.05]
    for r in rows:
        for v in ("bound1", "bound2", "bound3", "bound4"):
            assert r["empirical"] <= r[v]


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_config_mac_section(tmp_path, capsys):
    cfgfile = _write(tmp_path, "n20.ini", "[mac]\nn_nodes = 20\n")
    cfg = load_run_config(cfgfile)
    assert cfg.params.n_nodes == 20
    assert main(["fixed-point", "--config", cfgfile, "--format", "json"]) == 0
    assert _json_out(capsys)["rows"][0]["n"] == 20


def test_config_from_environment(tmp_path, capsys, monkeypatch):
    cfgfile = _write(tmp_path, "n20.ini", "[mac]\nn_nodes = 20\n")
    monkeypatch.setenv(ENV_CONFIG, cfgfile)
    assert main(["fixed-point", "--format", "json"]) == 0
    assert _json_out(capsys)["rows"][0]["n"] == 20


def test_config_flag_beats_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(ENV_CONFIG,
                       _write(tmp_path, "env.ini", "[mac]\nn_nodes = 20\n"))
    explicit = _write(tmp_path, "flag.ini", "[mac]\nn_nodes = 5\n")
    assert main(["fixed-point", "--config", explicit, "--format", "json"]) == 0
    assert _json_out(capsys)["rows"][0]["n"] == 5


def test_config_traffic_and_sim_sections(tmp_path, capsys):
    cfgfile = _write(tmp_path, "sim.ini",
                     "[traffic]\nmode = poisson\nrate = 0.05\n"
                     "[sim]\nduration = 2\nreplications = 3\n"
                     "sample_time = 1\nseed = 5\n")
    assert main(["simulate", "--config", cfgfile, "--format", "json"]) == 0
    payload = _json_out(capsys)
    assert len(payload["rows"]) == 3
    assert payload["rows"][0]["time"] == 1.0


def test_config_grid_section(tmp_path, capsys):
    cfgfile = _write(tmp_path, "grid.ini",
                     "[grid]\ntheta_points = 5\ntheta_min = 0.1\n"
                     "theta_max = 1.0\nr_points = 10\n")
    assert main(["characterize", "--config", cfgfile, "--format", "json"]) == 0
    rows = _json_out(capsys)["rows"]
    assert len(rows) == 5
    assert rows[0]["theta"] == pytest.approx(0.1)
    assert rows[-1]["theta"] == pytest.approx(1.0)


@pytest.mark.parametrize("body", [
    "[radio]\nfoo = 1\n",                 # unknown section
    "[mac]\nwindow = 3\n",                # unknown key
    "[mac]\ncw_min = many\n",             # unparsable value
    "[mac]\ncw_min = 24\n",               # violates the power-of-two ladder
    "[traffic]\nmode = bursty\n",         # unknown traffic mode
])
def test_config_rejected(tmp_path, capsys, body):
    cfgfile = _write(tmp_path, "bad.ini", body)
    with pytest.raises(ConfigError):
        load_run_config(cfgfile)
    assert main(["fixed-point", "--config", cfgfile]) == 2
    assert "config error" in capsys.readouterr().err


def test_config_missing_file(tmp_path, capsys):
    assert main(["fixed-point", "--config", str(tmp_path / "nope.ini")]) == 2


def test_degenerate_fixed_point_exits_nonconvergent(tmp_path, capsys):
    # cw_min=1 pins every backoff at zero; the solver cannot bracket a root
    cfgfile = _write(tmp_path, "degen.ini",
                     "[mac]\ncw_min = 1\ncw_max = 1\nn_nodes = 3\n")
    assert main(["fixed-point", "--config", cfgfile]) == 4
    assert "did not converge" in capsys.readouterr().err
