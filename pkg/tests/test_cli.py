"""Tests for the genea CLI."""

import json
import re

from typer.testing import CliRunner

from genea import __version__
from genea.cli.main import app

runner = CliRunner()

_ANSI_RE = re.compile(r"\x1b\[[0-9;]*m")


def _strip_ansi(text: str) -> str:
    return _ANSI_RE.sub("", text)


def test_version():
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_help():
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    assert "Exact genealogies" in result.output


def test_sample_help(monkeypatch):
    monkeypatch.setenv("COLUMNS", "200")
    result = runner.invoke(app, ["sample", "--help"])
    assert result.exit_code == 0
    output = _strip_ansi(result.output)
    for option in ("--sampler", "--seed", "--format", "--output", "--config"):
        assert option in output


def test_sample_newick_is_reproducible(tmp_path):
    paths = [tmp_path / "a.nwk", tmp_path / "b.nwk"]
    for path in paths:
        result = runner.invoke(
            app, ["sample", "--seed", "5", "--n", "6", "--output", str(path)]
        )
        assert result.exit_code == 0
    first = paths[0].read_text()
    assert first.endswith(";\n")
    assert first.count("L") == 6
    assert first == paths[1].read_text()


def test_sample_default_output(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = runner.invoke(app, ["sample", "--seed", "1", "--format", "csv"])
    assert result.exit_code == 0
    lines = (tmp_path / "genea-sample.csv").read_text().splitlines()
    assert lines[0] == "u,zeta"
    assert len(lines) == 11


def test_sample_every_sampler(tmp_path):
    for sampler in ("static", "dynamic-v", "dynamic-h", "full"):
        path = tmp_path / f"{sampler}.json"
        result = runner.invoke(
            app,
            ["sample", "-s", sampler, "--seed", "3", "--eps", "0.05", "-f", "json"]
            + ["-o", str(path)],
        )
        assert result.exit_code == 0, result.output
        assert "atoms" in json.loads(path.read_text())


def test_conditional_needs_h(tmp_path):
    result = runner.invoke(
        app,
        ["sample", "-s", "conditional", "--seed", "1", "-o", str(tmp_path / "c.nwk")],
    )
    assert result.exit_code == 2
    assert not (tmp_path / "c.nwk").exists()


def test_conditional_tree_height(tmp_path):
    path = tmp_path / "c.json"
    result = runner.invoke(
        app,
        ["sample", "-s", "conditional", "--h", "1.0", "--seed", "4", "--n", "8"]
        + ["-f", "json", "-o", str(path)],
    )
    assert result.exit_code == 0
    data = json.loads(path.read_text())
    assert len(data["atoms"]) == 8
    assert max(atom["zeta"] for atom in data["atoms"]) <= 1.0


def test_z0_rejected_for_dynamic_samplers(tmp_path):
    result = runner.invoke(
        app,
        ["sample", "-s", "dynamic-v", "--z0", "1.0", "--seed", "1"]
        + ["-o", str(tmp_path / "d.nwk")],
    )
    assert result.exit_code == 2


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("GENEA_SEED", "12")
    from_env = tmp_path / "env.nwk"
    assert runner.invoke(app, ["sample", "-o", str(from_env)]).exit_code == 0
    monkeypatch.delenv("GENEA_SEED")
    from_flag = tmp_path / "flag.nwk"
    result = runner.invoke(app, ["sample", "--seed", "12", "-o", str(from_flag)])
    assert result.exit_code == 0
    assert from_env.read_text() == from_flag.read_text()


def test_sample_without_seed(tmp_path, monkeypatch):
    monkeypatch.delenv("GENEA_SEED", raising=False)
    result = runner.invoke(app, ["sample", "-o", str(tmp_path / "x.nwk")])
    assert result.exit_code == 2


def test_sample_zero_theta_fails(tmp_path):
    result = runner.invoke(
        app, ["sample", "--theta", "0", "--seed", "1", "-o", str(tmp_path / "x.nwk")]
    )
    assert result.exit_code == 1
    assert not (tmp_path / "x.nwk").exists()


def test_sample_from_config_file(tmp_path):
    config = tmp_path / "genea.toml"
    output = tmp_path / "cfg.nwk"
    config.write_text(f'seed = 5\nn = 6\noutput = "{output.as_posix()}"\n')
    result = runner.invoke(app, ["sample", "--config", str(config)])
    assert result.exit_code == 0
    flagged = tmp_path / "flags.nwk"
    runner.invoke(app, ["sample", "--seed", "5", "--n", "6", "-o", str(flagged)])
    assert output.read_text() == flagged.read_text()


def test_bad_config_file(tmp_path):
    config = tmp_path / "genea.toml"
    config.write_text("seed = 5\nwidth = 3\n")
    result = runner.invoke(app, ["sample", "--config", str(config)])
    assert result.exit_code == 2


def test_validate_metric_oracle(tmp_path):
    path = tmp_path / "metric.json"
    result = runner.invoke(
        app,
        ["validate", "--suite", "metric-oracle", "--seed", "1", "--reps", "2"]
        + ["-o", str(path)],
    )
    assert result.exit_code == 0
    report = json.loads(path.read_text())
    assert report["passed"] is True
    assert report["seed"] == 1
    assert (tmp_path / "metric.md").exists()


def test_validate_needs_seed(tmp_path):
    result = runner.invoke(
        app, ["validate", "--suite", "eex", "-o", str(tmp_path / "e.json")]
    )
    assert result.exit_code == 2


def test_validate_unknown_suite():
    result = runner.invoke(app, ["validate", "--suite", "nope", "--seed", "1"])
    assert result.exit_code == 2


def test_validate_report_independent_of_threads(tmp_path):
    codes = []
    for threads in ("1", "4"):
        result = runner.invoke(
            app,
            ["validate", "--suite", "stationary", "--seed", "3", "--reps", "300"]
            + ["--threads", threads, "-o", str(tmp_path / f"s{threads}.json")],
        )
        codes.append(result.exit_code)
    assert codes[0] == codes[1]
    assert (tmp_path / "s1.json").read_bytes() == (tmp_path / "s4.json").read_bytes()


def test_length_scaling(tmp_path):
    for threads in ("1", "2"):
        result = runner.invoke(
            app,
            ["length-scaling", "--n-grid", "10", "--n-grid", "20", "--reps", "5"]
            + ["--seed", "2", "--threads", threads]
            + ["-o", str(tmp_path / f"lengths{threads}.csv")],
        )
        assert result.exit_code == 0
    rows = (tmp_path / "lengths1.csv").read_text().splitlines()
    assert rows[0] == "replicate,z0,n_or_eps,raw,compensator,compensated"
    assert len(rows) == 11
    coupled = (tmp_path / "lengths1-coupled.csv").read_text().splitlines()
    assert [line.split(",")[0] for line in coupled[1:]] == ["10", "20"]
    assert (tmp_path / "lengths1.csv").read_text() == (
        tmp_path / "lengths2.csv"
    ).read_text()


def test_export_matches_sample(tmp_path):
    saved = tmp_path / "p.json"
    sampled = tmp_path / "p.nwk"
    for fmt, path in (("json", saved), ("newick", sampled)):
        result = runner.invoke(
            app, ["sample", "--seed", "8", "-f", fmt, "-o", str(path)]
        )
        assert result.exit_code == 0

    exported = tmp_path / "e.nwk"
    result = runner.invoke(app, ["export", str(saved), "-o", str(exported)])
    assert result.exit_code == 0
    assert exported.read_text() == sampled.read_text()

    result = runner.invoke(app, ["export", str(saved), "--format", "json"])
    assert result.exit_code == 0
    assert result.stdout == saved.read_text()


def test_export_malformed_source(tmp_path):
    source = tmp_path / "bad.json"
    source.write_text('{"beta": 1}')
    result = runner.invoke(app, ["export", str(source)])
    assert result.exit_code == 1


def test_bad_log_level():
    result = runner.invoke(app, ["--log-level", "loud", "sample", "--seed", "1"])
    assert result.exit_code == 2
