"""End-to-end harness runs: configs, manifests, summaries, CLI exit codes."""

import csv
import json
from pathlib import Path

import pytest

from percwalk import cli, walk
from percwalk.errors import ParameterError, TruncationError
from percwalk.experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    run_experiment,
    speed_summary,
)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("runs")


@pytest.fixture(scope="module")
def speed_run(workdir):
    cfg = ExperimentConfig("speed", p=0.9, beta=1.2, window=48, n_steps=30_000,
                           trials=3, seed_env=11, seed_walk=22,
                           out_dir=str(workdir / "speed1"))
    return cfg, run_experiment(cfg)


def test_validation_reports_every_bad_field():
    with pytest.raises(ParameterError) as ei:
        ExperimentConfig("nope", p=0.3, beta=0.5, trials=0)
    msg = str(ei.value)
    for frag in ("experiment=", "p=0.3", "beta=0.5", "trials=0"):
        assert frag in msg


def test_config_text_round_trip(workdir):
    cfg = ExperimentConfig("speed", p=0.9, beta=1.2, censor_margin=None, horizon=12,
                           out_dir=str(workdir / "rt"))
    assert ExperimentConfig.from_text(cfg.to_text()) == cfg
    # overrides win over file values
    cfg2 = ExperimentConfig.from_text(cfg.to_text(), trials=3, experiment="regen")
    assert cfg2.trials == 3 and cfg2.experiment == "regen" and cfg2.p == 0.9
    # comments and blank lines are tolerated
    text = "# speed run\n\n" + cfg.to_text()
    assert ExperimentConfig.from_text(text) == cfg


def test_config_text_rejects_garbage():
    with pytest.raises(ParameterError):
        ExperimentConfig.from_text("p=0.9\n")  # experiment missing
    with pytest.raises(ParameterError):
        ExperimentConfig.from_text("experiment=speed\nwat=1\n")
    with pytest.raises(ParameterError):
        ExperimentConfig.from_text("experiment=speed\ntrials=lots\n")


def test_experiment_names_frozen():
    assert EXPERIMENTS == ("speed", "traps", "regen", "deadend", "renorm",
                           "figures", "bounds")


def test_speed_outputs_and_summary(speed_run, workdir):
    cfg, manifest = speed_run
    assert set(manifest.outputs) == {"results.csv", "summary.json"}
    assert len(manifest.trial_seeds) == 3
    summ = json.loads((workdir / "speed1" / "summary.json").read_text())
    assert summ["empirical_mean"] > 0.02
    assert summ["pooled_regen_speed"] > 0.02
    assert summ["relative_gap"] < 0.2


def test_speed_reruns_digest_match(speed_run, workdir):
    cfg, manifest = speed_run
    again = ExperimentConfig.from_text(cfg.to_text(), out_dir=str(workdir / "speed2"))
    m2 = run_experiment(again)
    assert manifest.outputs == m2.outputs


def test_speed_summary_recomputes_from_csv(speed_run, workdir):
    cfg, _ = speed_run
    with open(workdir / "speed1" / "results.csv") as fh:
        head, *data = list(csv.reader(fh))
    rows = [
        tuple(float(v) if i in (7, 12, 13) else int(v) for i, v in enumerate(r))
        for r in data
    ]
    want = json.loads((workdir / "speed1" / "summary.json").read_text())
    assert speed_summary(cfg, rows) == want


def test_manifest_lists_digests_and_config(speed_run, workdir):
    _, manifest = speed_run
    stored = json.loads((workdir / "speed1" / "manifest.json").read_text())
    assert stored["config"]["experiment"] == "speed"
    assert stored["config"]["p"] == 0.9
    assert set(stored["outputs"]) == set(manifest.outputs)
    for digest in stored["outputs"].values():
        assert len(digest) == 64
    assert stored["version"]
    assert len(stored["trial_seeds"]) == 3


def test_regen_experiment(workdir):
    cfg = ExperimentConfig("regen", p=0.9, beta=1.2, window=48, n_steps=30_000,
                           trials=3, seed_env=11, seed_walk=22,
                           out_dir=str(workdir / "regen"))
    run_experiment(cfg)
    summ = json.loads((workdir / "regen" / "summary.json").read_text())
    assert summ["n_increments"] >= 30
    assert abs(summ["lag1_dx"]["z"]) < 4.0
    # pooled speed must recompute from the increment table
    with open(workdir / "regen" / "results.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    per_trial = {}
    for trial, _, dn, dx in rows:
        per_trial.setdefault(int(trial), []).append((int(dn), int(dx)))
    pooled = walk.pooled_regeneration_speed(
        [([q[0] for q in v], [q[1] for q in v]) for v in per_trial.values()]
    )
    assert abs(pooled.value - summ["pooled_speed"]) < 1e-12


def test_traps_experiment(workdir):
    cfg = ExperimentConfig("traps", p=0.9, window=64, trials=30, seed_env=5,
                           out_dir=str(workdir / "traps"))
    run_experiment(cfg)
    summ = json.loads((workdir / "traps" / "summary.json").read_text())
    assert summ["fact34"]["n_violations"] == 0
    assert summ["n_valid"] > 0
    with open(workdir / "traps" / "results.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["statistic", "n", "count", "estimate", "ci_low", "ci_high"]
    assert len(rows) - 1 == 16  # L and W tails, n = 1..8


def test_deadend_experiment_exact_crosscheck(workdir):
    cfg = ExperimentConfig("deadend", p=0.6, beta=2.0, n_steps=120_000, depth_max=2,
                           seed_env=7, out_dir=str(workdir / "deadend"))
    run_experiment(cfg)
    summ = json.loads((workdir / "deadend" / "summary.json").read_text())
    assert summ["beta_u"]["status"] == "skipped"  # needs depth_max >= 5
    assert all(abs(z) < 4.0 for z in summ["exact"]["z_scores"])
    with open(workdir / "deadend" / "results.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["depth", "n_shapes_or_samples", "gamma_d", "stderr"]
    assert len(rows) == 4
    assert (workdir / "deadend" / "exact.csv").exists()


def test_renorm_experiment(workdir):
    cfg = ExperimentConfig("renorm", p=0.85, window=48, block_n=16, trials=2,
                           seed_env=3, out_dir=str(workdir / "renorm"))
    run_experiment(cfg)
    summ = json.loads((workdir / "renorm" / "summary.json").read_text())
    assert summ["all_boundaries_ok"]
    assert summ["frac_p_good"] > 0.5
    assert summ["n_boundary_checked"] > 0


def test_figures_experiment(workdir):
    cfg = ExperimentConfig("figures", p=0.65, beta=2.5, window=48, n_steps=60_000,
                           seed_env=9, seed_walk=10, out_dir=str(workdir / "figures"))
    manifest = run_experiment(cfg)
    assert set(manifest.outputs) == {"results.csv", "trajectory.csv", "summary.json",
                                     "figures/path.svg", "figures/traps.svg"}
    summ = json.loads((workdir / "figures" / "summary.json").read_text())
    assert summ["n_regen"] >= 1
    svg = (workdir / "figures" / "figures" / "path.svg").read_text()
    assert svg.count('class="regen"') == summ["n_regen"]
    tsvg = (workdir / "figures" / "figures" / "traps.svg").read_text()
    assert tsvg.count('<g class="trap">') == summ["n_traps_drawn"]


def test_bounds_experiment(workdir):
    cfg = ExperimentConfig("bounds", trials=5, seed_env=13, seed_walk=14,
                           out_dir=str(workdir / "bounds"))
    run_experiment(cfg)
    summ = json.loads((workdir / "bounds" / "summary.json").read_text())
    assert summ["all_pass"]
    assert all(s["n"] == 5 for s in summ["suites"].values())


def test_cli_flags_and_config_file(workdir):
    rc = cli.main(["bounds", "--trials", "2", "--seed-env", "13", "--seed-walk", "14",
                   "--out", str(workdir / "cli-bounds")])
    assert rc == 0
    assert (workdir / "cli-bounds" / "manifest.json").exists()

    base_cfg = ExperimentConfig("speed", p=0.9, beta=1.2, window=48, n_steps=30_000,
                                trials=3, seed_env=11, seed_walk=22,
                                out_dir=str(workdir / "unused"))
    cfg_file = workdir / "speed.cfg"
    cfg_file.write_text(base_cfg.to_text())
    rc = cli.main(["speed", "--config", str(cfg_file), "--trials", "2",
                   "--out", str(workdir / "cli-speed")])
    assert rc == 0
    man = json.loads((workdir / "cli-speed" / "manifest.json").read_text())
    assert man["config"]["trials"] == 2   # flag beats file
    assert man["config"]["p"] == 0.9      # file beats default


def test_cli_validation_exit_code(workdir):
    assert cli.main(["speed", "--p", "1.5", "--out", str(workdir / "cli-bad")]) == 2
    assert cli.main(["traps", "--horizon", "2", "--out", str(workdir / "cli-bad2")]) == 2
    assert cli.main(["speed", "--config", str(workdir / "missing.cfg"),
                     "--out", str(workdir / "cli-bad3")]) == 2


def test_cli_runtime_exit_code(workdir, monkeypatch):
    def boom(config):
        raise TruncationError("window too small for the requested scan")

    monkeypatch.setattr(cli, "run_experiment", boom)
    rc = cli.main(["bounds", "--trials", "1", "--out", str(workdir / "cli-rt")])
    assert rc == 3
