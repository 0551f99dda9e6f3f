"""Experiment harness: config parsing, seed derivation, sweep execution,
CSV output and the command line interface."""

import csv
import math

import pytest

from convfpp import (
    Caps,
    ConfigurationError,
    EXPERIMENTS,
    ModelParams,
    RandomField,
    SweepSpec,
    Topology,
    Verdict,
    derive_cell_seed,
    derive_trial_key,
    parse_caps,
    read_config,
    run_sweep,
    run_trial,
    sweep_from_config,
)
from convfpp.harness import Experiment, Param, expand_cells, sweep_columns
from convfpp import cli


class TestConfigFiles:
    def test_parse_and_accumulate(self, tmp_path):
        f = tmp_path / "sweep.cfg"
        f.write_text(
            "# survival scan\n"
            "experiment = extinction\n"
            "d = 2\n"
            "lam = 0.5\n"
            "lam = 1.5\n"
            "\n"
            "rho = 1.0\n")
        cfg = read_config(str(f))
        assert cfg["lam"] == ["0.5", "1.5"]
        assert cfg["d"] == ["2"]

    def test_malformed_line_raises(self, tmp_path):
        f = tmp_path / "bad.cfg"
        f.write_text("experiment extinction\n")
        with pytest.raises(ConfigurationError):
            read_config(str(f))

    def test_parse_caps(self):
        caps = parse_caps("max_sites=1000,horizon=50")
        assert caps.max_sites == 1000
        assert caps.horizon == 50.0
        assert caps.max_events == Caps().max_events
        assert parse_caps(None) == Caps()
        with pytest.raises(ConfigurationError):
            parse_caps("max_sites")
        with pytest.raises(ConfigurationError):
            parse_caps("nonsense=3")


class TestSeedDerivation:
    def test_cells_get_distinct_seeds(self):
        seeds = {derive_cell_seed(0, i) for i in range(10000)}
        assert len(seeds) == 10000

    def test_trial_keys_collision_free(self):
        keys = set()
        for cell in range(100):
            for trial in range(1000):
                keys.add(derive_trial_key(12345, cell, trial))
        assert len(keys) == 100 * 1000

    def test_master_seed_changes_everything(self):
        assert derive_cell_seed(1, 0) != derive_cell_seed(2, 0)
        assert derive_trial_key(1, 0, 0) != derive_trial_key(2, 0, 0)


class TestSpecAndGrid:
    def test_unknown_experiment_rejected(self):
        with pytest.raises(ConfigurationError):
            SweepSpec(experiment="nope", grid={})

    def test_trials_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            SweepSpec(experiment="extinction", grid={}, trials=0)

    def test_grid_expansion_order(self):
        spec = SweepSpec(
            experiment="extinction",
            grid={"d": ["2"], "lam": ["0.5", "1.5"], "rho": ["0.1", "1.0"],
                  "target": ["5"]})
        cells = expand_cells(spec)
        assert len(cells) == 4
        assert [(c["lam"], c["rho"]) for c in cells] == \
            [(0.5, 0.1), (0.5, 1.0), (1.5, 0.1), (1.5, 1.0)]
        assert all(c["d"] == 2 for c in cells)

    def test_missing_required_param_rejected(self):
        spec = SweepSpec(experiment="extinction",
                         grid={"d": ["2"], "lam": ["1.0"], "rho": ["0.1"]})
        with pytest.raises(ConfigurationError):
            expand_cells(spec)

    def test_invalid_choice_rejected(self):
        spec = SweepSpec(
            experiment="extinction",
            grid={"d": ["2"], "lam": ["1.0"], "rho": ["0.1"],
                  "target": ["5"], "topology": ["ring"]})
        with pytest.raises(ConfigurationError):
            expand_cells(spec)

    def test_config_to_spec_with_overrides(self, tmp_path):
        f = tmp_path / "s.cfg"
        f.write_text("experiment = extinction\nd = 2\nlam = 1.0\n"
                     "rho = 0.5\ntarget = 6\ntrials = 7\nseed = 3\n")
        spec = sweep_from_config(read_config(str(f)), trials=9)
        assert spec.trials == 9  # override wins
        assert spec.master_seed == 3
        assert spec.grid["lam"] == ["1.0"]

    def test_experiment_is_required(self):
        with pytest.raises(ConfigurationError):
            sweep_from_config({})


class TestSweepExecution:
    GRID = {"d": ["2"], "lam": ["1.5", "6.0"], "rho": ["1.0"], "target": ["8"]}

    def test_rows_in_cell_order_and_deterministic(self):
        spec = SweepSpec(experiment="extinction", grid=dict(self.GRID),
                         trials=8, master_seed=5)
        a = run_sweep(spec)
        b = run_sweep(spec)
        assert [r["cell"] for r in a.rows] == [0, 1]
        drop = lambda row: {k: v for k, v in row.items() if k != "wall_time_s"}
        assert [drop(r) for r in a.rows] == [drop(r) for r in b.rows]
        assert a.ok

    def test_cell_matches_direct_computation(self):
        spec = SweepSpec(experiment="extinction", grid=dict(self.GRID),
                         trials=8, master_seed=5)
        row = run_sweep(spec).rows[0]
        params = ModelParams(d=2, lam=1.5, rho=1.0, topology=Topology.LATTICE)
        seed = derive_cell_seed(5, 0)
        extinct = sum(
            run_trial(params, RandomField(params, seed, i), 8).verdict
            is Verdict.EXTINCT
            for i in range(8))
        assert row["seed"] == seed
        assert row["extinct"] == extinct

    def test_workers_do_not_change_results(self):
        spec1 = SweepSpec(experiment="extinction", grid=dict(self.GRID),
                          trials=8, master_seed=5, workers=1)
        spec2 = SweepSpec(experiment="extinction", grid=dict(self.GRID),
                          trials=8, master_seed=5, workers=2)
        r1 = run_sweep(spec1)
        r2 = run_sweep(spec2)
        drop = lambda row: {k: v for k, v in row.items() if k != "wall_time_s"}
        assert [drop(r) for r in r1.rows] == [drop(r) for r in r2.rows]

    def test_csv_and_schema_files(self, tmp_path):
        out = tmp_path / "scan.csv"
        spec = SweepSpec(experiment="extinction", grid=dict(self.GRID),
                         trials=5, master_seed=1, out=str(out))
        run_sweep(spec)
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert rows[0]["experiment"] == "extinction"
        assert set(rows[0]) == set(sweep_columns("extinction"))
        # fractions survive a text round trip at full precision
        total = (float(rows[0]["extinct_fraction"])
                 + float(rows[0]["survived_fraction"])
                 + float(rows[0]["capped_fraction"]))
        assert total == 1.0
        schema = (tmp_path / "scan.csv.schema").read_text()
        for col in sweep_columns("extinction"):
            assert col in schema

    def test_empty_grid_rejected(self):
        spec = SweepSpec(experiment="extinction", grid={})
        with pytest.raises(ConfigurationError):
            run_sweep(spec)


@pytest.fixture
def failing_experiment():
    """Temporary experiment whose runner fails on x == 2."""

    def runner(cell, trials, seed, caps):
        if cell["x"] == 2:
            raise RuntimeError("boom")
        return {"y": cell["x"] * 10}

    exp = Experiment("brittle", params=(Param("x", int, required=True),),
                     columns=("y",), runner=runner)
    EXPERIMENTS[exp.name] = exp
    yield exp
    del EXPERIMENTS[exp.name]


class TestFailureHandling:
    def test_failed_cell_marked_and_sweep_continues(self, failing_experiment):
        spec = SweepSpec(experiment="brittle",
                         grid={"x": ["1", "2", "3"]}, trials=1)
        res = run_sweep(spec)
        assert res.failed_cells == [1]
        assert [r["status"] for r in res.rows] == ["ok", "failed", "ok"]
        assert res.rows[0]["y"] == 10
        assert res.rows[2]["y"] == 30
        assert not res.ok


class TestCli:
    def test_experiment_subcommand_ok(self, capsys):
        rc = cli.main(["extinction", "--d", "2", "--lam", "1.5",
                       "--rho", "1.0", "--target", "8", "--trials", "5"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "extinct=" in out

    def test_grid_via_repeated_flags(self, capsys):
        rc = cli.main(["extinction", "--d", "2", "--lam", "1.5", "--lam", "6.0",
                       "--rho", "1.0", "--target", "8", "--trials", "4"])
        out = capsys.readouterr().out.strip().splitlines()
        assert rc == 0
        assert len(out) == 2

    def test_validation_error_exit_code(self, capsys):
        rc = cli.main(["dstar", "--k", "5", "--lam", "0.5", "--d", "3",
                       "--trials", "2"])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_unknown_flag_exit_code(self):
        assert cli.main(["extinction", "--frobnicate", "1"]) == 2

    def test_partial_failure_exit_code(self, failing_experiment, capsys):
        rc = cli.main(["brittle", "--x", "1", "--x", "2", "--trials", "1"])
        assert rc == 3
        assert "failed cells" in capsys.readouterr().err

    def test_sweep_from_file(self, tmp_path, capsys):
        f = tmp_path / "s.cfg"
        out = tmp_path / "o.csv"
        f.write_text("experiment = extinction\nd = 2\nlam = 1.5\n"
                     "rho = 1.0\ntarget = 8\ntrials = 4\n")
        rc = cli.main(["sweep", str(f), "--out", str(out)])
        assert rc == 0
        with open(out) as fh:
            assert len(list(csv.DictReader(fh))) == 1

    def test_missing_config_file(self, capsys):
        assert cli.main(["sweep", "/nonexistent/path.cfg"]) == 2

    def test_simulate_prints_trace_and_verdict(self, capsys):
        rc = cli.main(["simulate", "--d", "2", "--lam", "1.5", "--rho", "1.0",
                       "--target", "6", "--max-print", "5"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "verdict=" in out
        assert "arrive1" in out

    def test_bounds_closed_forms_in_csv(self, capsys):
        rc = cli.main(["bounds", "--mu", "100", "--epsilon", "0.1",
                       "--trials", "1000"])
        out = capsys.readouterr().out
        assert rc == 0
        lower = float(out.split("lower_tail_bound=")[1].split()[0])
        assert lower == pytest.approx(math.exp(-0.5))
