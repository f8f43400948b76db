import argparse
import json

import pytest

from src.cli import main, parse_n_values
from src.constants import EXIT_DOMAIN, EXIT_OK, EXIT_PARSE, RESIDUAL_CSV_COLUMNS
from src.utils.file_ops import load_table


@pytest.fixture
def q34_path(fixtures_dir):
    return str(fixtures_dir / "q34.json")


class TestBlockLengths:
    def test_range_is_inclusive(self):
        assert parse_n_values("16..20") == [16, 17, 18, 19, 20]

    def test_range_covers_every_evaluation_point(self):
        values = parse_n_values("16..16384")
        assert 1000 in values
        assert values[0] == 16 and values[-1] == 16384

    def test_arithmetic_step(self):
        assert parse_n_values("10..40:10") == [10, 20, 30, 40]

    def test_geometric_step(self):
        assert parse_n_values("16..128:*2") == [16, 32, 64, 128]

    def test_list_is_sorted_and_unique(self):
        assert parse_n_values("3,1,3") == [1, 3]

    @pytest.mark.parametrize("text", ["0..4", "8..4", "a,b", "-2", "1..8:0", "1..8:*1", "1..8:x"])
    def test_rejects(self, text):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_n_values(text)


class TestQuantities:
    def test_dh_fixture(self, fixtures_dir, capsys):
        code = main(
            ["dh", "--rho", str(fixtures_dir / "q34_n2.json"), "--sigma", str(fixtures_dir / "mix_n2.json"), "--eps", "0.1"]
        )
        assert code == EXIT_OK
        assert capsys.readouterr().out.strip() == "0.5145732"

    def test_entropy(self, q34_path, capsys):
        assert main(["entropy", "--quantity", "von_neumann", "--rho", q34_path]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "0.8112781"

    def test_dist_writes_table(self, q34_path, fixtures_dir, tmp_path):
        out = tmp_path / "dist.json"
        assert main(["dist", "--rho", q34_path, "--sigma", q34_path, "--output", str(out)]) == EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["rows"][0]["fidelity"] == pytest.approx(1.0, abs=1e-9)

    def test_smooth_bounds_precondition(self, q34_path, capsys):
        code = main(["smooth-bounds", "--kind", "dmin", "--rho", q34_path, "--sigma", q34_path, "--eps", "0.2", "--k", "1"])
        assert code == EXIT_DOMAIN
        assert "precondition violated: k > 1" in capsys.readouterr().err


class TestExitCodes:
    def test_malformed_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("[1, 2")
        assert main(["entropy", "--quantity", "von_neumann", "--rho", str(bad)]) == EXIT_PARSE

    def test_missing_file(self, tmp_path):
        assert main(["entropy", "--quantity", "von_neumann", "--rho", str(tmp_path / "none.json")]) == EXIT_PARSE

    def test_eps_outside_job_range(self, fixtures_dir, capsys):
        rho = str(fixtures_dir / "q34.json")
        assert main(["dh", "--rho", rho, "--sigma", rho, "--eps", "1.5"]) == EXIT_DOMAIN
        assert "precondition violated: eps in [0, 1]" in capsys.readouterr().err

    def test_eps_one_violates_precondition(self, q34_path, capsys):
        assert main(["dh", "--rho", q34_path, "--sigma", q34_path, "--eps", "1"]) == EXIT_DOMAIN
        assert "precondition violated" in capsys.readouterr().err

    def test_stochastic_job_needs_seed(self, capsys):
        assert main(["verify", "--suite", "variance-bound", "--trials", "1"]) == EXIT_DOMAIN
        assert "precondition violated: seed given for stochastic job" in capsys.readouterr().err

    def test_negative_seed(self, capsys):
        assert main(["verify", "--suite", "variance-bound", "--seed", "-1"]) == EXIT_DOMAIN
        assert "precondition violated: seed >= 0" in capsys.readouterr().err

    def test_unknown_suite(self):
        assert main(["verify", "--suite", "no-such-suite", "--seed", "1"]) == EXIT_DOMAIN

    def test_argparse_errors_exit_two(self):
        with pytest.raises(SystemExit) as err:
            main(["expand", "--task", "source_low"])
        assert err.value.code == EXIT_PARSE


class TestTables:
    def test_expand_csv(self, q34_path, tmp_path):
        out = tmp_path / "expand.csv"
        code = main(["expand", "--task", "source_low", "--state", q34_path, "--n", "1000", "--output", str(out)])
        assert code == EXIT_OK
        frame = load_table(out)
        assert frame["predicted"].iloc[0] == pytest.approx(0.9485399, abs=1e-7)

    def test_expand_example_hits_evaluation_point(self, q34_path, tmp_path):
        out = tmp_path / "expand.csv"
        args = ["expand", "--task", "source_low", "--state", q34_path, "--alpha", "0.3333", "--n", "16..16384"]
        assert main(args + ["--output", str(out)]) == EXIT_OK
        frame = load_table(out)
        assert len(frame) == 16384 - 16 + 1
        row = frame[frame["n"] == 1000]
        # alpha 0.3333 moves a_1000 by about 2e-5 from 0.1
        assert row["predicted"].iloc[0] == pytest.approx(0.9485399, abs=1e-4)

    def test_deterministic_table_has_no_seed_line(self, q34_path, capsys):
        assert main(["expand", "--task", "source_high", "--state", q34_path, "--n", "16..64:*2"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "n,a_n,eps_n,predicted"
        assert len(lines) == 4

    def test_seed_line_when_seeded(self, q34_path, capsys):
        assert main(["expand", "--task", "source_high", "--state", q34_path, "--n", "16", "--seed", "3"]) == EXIT_OK
        assert capsys.readouterr().out.splitlines()[0] == "# seed: 3"

    def test_deterministic_json_has_no_seed(self, q34_path, tmp_path):
        out = tmp_path / "dist.json"
        assert main(["dist", "--rho", q34_path, "--sigma", q34_path, "--output", str(out)]) == EXIT_OK
        assert "seed" not in json.loads(out.read_text())

    def test_residual_csv(self, tmp_path):
        out = tmp_path / "residual.csv"
        args = ["residual", "--task", "dh_low", "--p", "0.75,0.25", "--q", "0.5,0.5", "--n", "16..64:*2"]
        assert main(args + ["--output", str(out)]) == EXIT_OK
        assert list(load_table(out).columns) == RESIDUAL_CSV_COLUMNS

    def test_verify_report(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = main(["verify", "--suite", "variance-bound", "--trials", "2", "--seed", "0", "--output", str(out)])
        assert code == EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["seed"] == 0
        assert payload["rows"][0]["name"] == "variance-bound"
        assert "PASS variance-bound" in capsys.readouterr().out

    def test_strong_converse_demo(self, tmp_path):
        out = tmp_path / "converse.csv"
        args = ["protocol", "--demo", "strong-converse", "--seed", "0", "--trials", "3", "--n", "1", "--output", str(out)]
        assert main(args) == EXIT_OK
        frame = load_table(out)
        assert len(frame) == 3
        assert frame["passed"].all()


class TestVerifyLabels:
    def test_label_selects_its_suite(self, tmp_path, capsys):
        out = tmp_path / "report.csv"
        assert main(["verify", "--suite", "lemma3", "--trials", "10", "--seed", "7", "--output", str(out)]) == EXIT_OK
        frame = load_table(out)
        assert frame["name"].tolist() == ["tight-triangle"]
        assert frame["labels"].tolist() == ["lemma3"]
        assert "PASS tight-triangle [lemma3]" in capsys.readouterr().out

    @pytest.mark.slow
    def test_full_tight_triangle_sweep(self, tmp_path):
        out = tmp_path / "report.csv"
        args = ["verify", "--suite", "lemma3", "--trials", "10000", "--seed", "7", "--output", str(out)]
        assert main(args) == EXIT_OK
        assert load_table(out)["passed"].all()


class TestChannel:
    def test_simulation_converse(self, fixtures_dir, tmp_path, capsys):
        out = tmp_path / "channel.json"
        channel = str(fixtures_dir / "depolarizing_half.json")
        args = ["channel", "--channel", channel, "--seed", "0", "--starts", "2", "--eps", "0.5"]
        assert main(args + ["--simulation-converse", "--output", str(out)]) == EXIT_OK
        row = json.loads(out.read_text())["rows"][0]
        # at most half the max-information of a qubit pair
        assert row["simulation_converse"] <= 1.0 + 1e-9
        assert "simulation cost >=" in capsys.readouterr().out

    def test_simulation_converse_needs_eps(self, fixtures_dir, capsys):
        channel = str(fixtures_dir / "depolarizing_half.json")
        args = ["channel", "--channel", channel, "--seed", "0", "--starts", "2", "--simulation-converse"]
        assert main(args) == EXIT_DOMAIN
        assert "precondition violated: --eps given" in capsys.readouterr().err
