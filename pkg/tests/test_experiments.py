"""Experiment harness and CLI surface: configs, CSV contracts, runners,
determinism, and exit codes."""

import json
from pathlib import Path

import pytest

from opgeom.cli import main as cli_main
from opgeom.errors import DomainError
from opgeom.experiments import (ExperimentConfig, read_report, run_experiment)


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig(experiment="geom")
        assert cfg.n_list == (4, 8, 16, 32)
        assert cfg.eps == 1e-8
        cfg_z = ExperimentConfig(experiment="geom", family="mkz-symmetric")
        assert cfg_z.n_list == (4, 8, 16)
        assert cfg_z.eps == 1e-6

    def test_validation(self):
        with pytest.raises(DomainError):
            ExperimentConfig(experiment="nope")
        with pytest.raises(DomainError):
            ExperimentConfig(experiment="geom", n_list=(8, 4))
        with pytest.raises(DomainError):
            ExperimentConfig(experiment="geom", grid_size=16)
        with pytest.raises(DomainError):
            ExperimentConfig(experiment="geom", eps=-1.0)
        with pytest.raises(DomainError):
            ExperimentConfig(experiment="geom", jobs=0)

    def test_spec_carries_eps_only_for_series_families(self):
        cfg = ExperimentConfig(experiment="geom", family="mkz-symmetric",
                               eps=1e-7)
        assert cfg.spec(4).truncation_eps == 1e-7
        cfg_b = ExperimentConfig(experiment="geom", family="bernstein")
        assert cfg_b.spec(4).truncation_eps is None


class TestReports:
    def test_csv_round_trip_exact(self, tmp_path):
        cfg = ExperimentConfig(experiment="geom", family="bernstein",
                               n_list=(4, 8), function="e1", grid_size=65,
                               output=str(tmp_path / "r.csv"))
        rep = run_experiment(cfg)
        back = read_report(tmp_path / "r.csv", "geom")
        assert back == [tuple(r) for r in rep.rows]
        meta = json.loads((tmp_path / "r.csv.meta.json").read_text())
        assert meta["config"]["function"] == "e1"
        assert "wall_time_s" in meta
        assert len(meta["tail_bounds"]) == 2

    def test_csv_headers(self, tmp_path):
        pairs = [
            ("iterates", "n,k,error_psi,envelope"),
            ("geom", "n,error_psi,terms_used,tail_bound"),
            ("voronovskaya", "n,error_psi,aux_error"),
            ("inverse-voronovskaya", "n,error_psi,aux_error"),
            ("conditions", "n,sup_m4_over_m2,eta,cond55"),
        ]
        for exp, header in pairs:
            cfg = ExperimentConfig(
                experiment=exp, family="bernstein", n_list=(4,),
                function="e2", grid_size=65,
                output=str(tmp_path / f"{exp}.csv"))
            run_experiment(cfg)
            first = (tmp_path / f"{exp}.csv").read_text().splitlines()[0]
            assert first == header, exp

    def test_determinism(self, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (out1, out2):
            run_experiment(ExperimentConfig(
                experiment="voronovskaya", family="bernstein", n_list=(4, 8),
                function="sin_pi", grid_size=129, output=str(out)))
        assert out1.read_text() == out2.read_text()

    def test_jobs_reproducible(self, tmp_path):
        rows = {}
        for jobs in (1, 2):
            cfg = ExperimentConfig(experiment="geom", family="bernstein",
                                   n_list=(4, 8, 16), function="e1",
                                   grid_size=129, jobs=jobs)
            rows[jobs] = run_experiment(cfg).rows
        assert rows[1] == rows[2]


class TestRunners:
    def test_iterates_affine_input_is_fixed(self):
        rep = run_experiment(ExperimentConfig(
            experiment="iterates", family="bernstein", n_list=(4,),
            function="e1", grid_size=65))
        assert all(r[2] <= 1e-13 for r in rep.rows)

    def test_iterates_envelope_and_ratio(self):
        rep = run_experiment(ExperimentConfig(
            experiment="iterates", family="bernstein", n_list=(4,),
            function="e2", grid_size=65))
        errs = [r[2] for r in rep.rows]
        for (n, k, err, env) in rep.rows:
            assert err <= env * (1 + 1e-9)
        ratios = [b / a for a, b in zip(errs[1:-1], errs[2:])]
        assert all(r == pytest.approx(0.75, abs=1e-6) for r in ratios)

    def test_geom_identity_case(self):
        rep = run_experiment(ExperimentConfig(
            experiment="geom", family="bernstein", n_list=(4, 8),
            function="e0", grid_size=129))
        for (n, err, terms, tail) in rep.rows:
            assert err <= 1e-6 * n

    def test_voronovskaya_rejects_no_second_derivative(self):
        with pytest.raises(DomainError):
            run_experiment(ExperimentConfig(
                experiment="voronovskaya", family="bernstein", n_list=(4,),
                function="osc", grid_size=65))

    def test_voronovskaya_linear_input_zero(self):
        rep = run_experiment(ExperimentConfig(
            experiment="voronovskaya", family="bernstein", n_list=(4, 8),
            function="e1", grid_size=65))
        assert all(r[1] <= 1e-12 for r in rep.rows)

    def test_voronovskaya_durrmeyer_exact_quadratic(self):
        rep = run_experiment(ExperimentConfig(
            experiment="voronovskaya", family="durrmeyer", rho=1.0,
            n_list=(4, 8), function="e2", grid_size=65))
        assert all(r[1] <= 1e-9 for r in rep.rows)

    def test_conditions_runner(self):
        rep = run_experiment(ExperimentConfig(
            experiment="conditions", family="bernstein", n_list=(4, 8),
            grid_size=129))
        assert rep.rows[0][1] <= 0.75 / 4 - 0.5 / 16 + 1e-12
        assert rep.rows[1][1] < rep.rows[0][1]

    def test_invariants_all_pass(self):
        rep = run_experiment(ExperimentConfig(
            experiment="invariants", grid_size=257))
        assert rep.failures == []
        names = [r[0] for r in rep.rows]
        assert len(names) == len(set(names))


class TestCli:
    def test_subcommand_writes_files(self, tmp_path, capsys):
        out = tmp_path / "geom.csv"
        code = cli_main(["geom", "--family", "bernstein", "--function", "e1",
                         "--n-list", "4,8", "--grid-size", "65",
                         "-o", str(out)])
        assert code == 0
        assert out.exists() and Path(str(out) + ".meta.json").exists()
        assert "wrote" in capsys.readouterr().out

    def test_stdout_mode(self, capsys):
        code = cli_main(["voronovskaya", "--family", "bernstein",
                         "--function", "e3", "--n-list", "4",
                         "--grid-size", "65"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "n,error_psi,aux_error"
        assert lines[1].startswith("4,")

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "family": "bernstein", "function": "e3", "n_list": [4, 8, 16],
            "grid_size": 65}))
        code = cli_main(["voronovskaya", "--config", str(cfg),
                         "--n-list", "4"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2  # header + the single overridden n

    def test_bad_input_exit_code(self, capsys):
        assert cli_main(["geom", "--function", "nope", "--grid-size", "65",
                         "--n-list", "4"]) == 2
        assert "error" in capsys.readouterr().err

    def test_invariants_exit_status(self, tmp_path, capsys):
        code = cli_main(["invariants", "--grid-size", "257",
                         "-o", str(tmp_path / "inv.csv")])
        assert code == 0
        rows = read_report(tmp_path / "inv.csv", "invariants")
        assert all(row[3] for row in rows)

    def test_durrmeyer_default_rho(self, capsys):
        code = cli_main(["voronovskaya", "--family", "durrmeyer",
                         "--function", "e2", "--n-list", "4",
                         "--grid-size", "65"])
        assert code == 0
