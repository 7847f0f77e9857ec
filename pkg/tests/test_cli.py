"""Command-line interface: subcommands, exit codes, outputs."""

import numpy as np
import pytest

from invheat.cli import bundled_example_text, main

GOOD = bundled_example_text()
BAD_A1 = "phi = (1-x)*sin(2*pi*x)\nF = 0*x*t\nE = t + 0.1591549431\nT = 0.25\n"
NO_EXACT = "phi = (1-x)*sin(2*pi*x)\nF = 0*x*t\nE = exp(-t)/(2*pi)\nT = 0.25\n"


@pytest.fixture
def good_file(tmp_path):
    f = tmp_path / "good.prob"
    f.write_text(GOOD)
    return str(f)


class TestValidate:
    def test_bundled_passes(self, capsys):
        assert main(["validate"]) == 0
        out = capsys.readouterr().out
        assert "all clauses pass" in out

    def test_failing_energy_exits_one(self, tmp_path, capsys):
        f = tmp_path / "bad.prob"
        f.write_text(BAD_A1)
        assert main(["validate", str(f)]) == 1
        assert "A1" in capsys.readouterr().out

    def test_missing_file_exits_two(self):
        assert main(["validate", "/nonexistent/file.prob"]) == 2

    def test_parse_error_exits_two(self, tmp_path):
        f = tmp_path / "broken.prob"
        f.write_text("phi = sin(\nF = 0*x*t\nE = 1 - t\nT = 1\n")
        assert main(["validate", str(f)]) == 2


class TestSolve:
    def test_fdm_small_grid(self, tmp_path, good_file, capsys):
        out = tmp_path / "out"
        code = main(
            ["solve", "--method", "fdm", "--M", "40", "--N", "40", "--out", str(out), good_file]
        )
        assert code == 0
        assert (out / "a_fdm.csv").is_file()
        assert (out / "u_fdm.csv").is_file()
        assert (out / "a_fdm.png").is_file()
        assert (out / "a_error_table_fdm.csv").is_file()
        header = (out / "a_error_table_fdm.csv").read_text().splitlines()[0]
        assert header == "Label,Exact,Approximate,Error,Relative Error"

    def test_spectral(self, tmp_path, good_file):
        out = tmp_path / "out"
        code = main(
            ["solve", "--method", "spectral", "--K", "16", "--M", "50", "--out", str(out), good_file]
        )
        assert code == 0
        assert (out / "a_spectral.csv").is_file()
        assert (out / "diagnostics_spectral.csv").is_file()
        assert (out / "u_spectral.png").is_file()

    def test_grid_too_coarse_exits_two(self, tmp_path, good_file):
        assert main(["solve", "--method", "fdm", "--M", "2", "--out", str(tmp_path), good_file]) == 2

    def test_infeasible_assumptions_exit_one(self, tmp_path):
        f = tmp_path / "bad.prob"
        f.write_text(BAD_A1)
        code = main(["solve", "--method", "fdm", "--M", "40", "--N", "40",
                     "--out", str(tmp_path / "o"), str(f)])
        assert code == 1

    def test_deterministic_outputs(self, tmp_path, good_file):
        outs = []
        for name in ("one", "two"):
            out = tmp_path / name
            assert main(
                ["solve", "--method", "fdm", "--M", "40", "--N", "40", "--out", str(out), good_file]
            ) == 0
            outs.append((out / "a_fdm.csv").read_bytes())
        assert outs[0] == outs[1]


class TestReproduce:
    def test_fdm_half_passes(self, tmp_path, capsys):
        code = main(["reproduce", "--method", "fdm", "--out", str(tmp_path / "rep")])
        assert code == 0
        out = capsys.readouterr().out
        assert "reproduction PASS" in out
        assert (tmp_path / "rep" / "table1_fdm_a.csv").is_file()
        assert (tmp_path / "rep" / "table2_fdm_u.csv").is_file()

    def test_corrupted_problem_exits_two(self, tmp_path):
        f = tmp_path / "corrupt.prob"
        f.write_text("phi = (1-x)*sin(\nT = 0.25\n")
        assert main(["reproduce", str(f), "--out", str(tmp_path / "o")]) == 2

    def test_problem_without_exact_exits_two(self, tmp_path):
        f = tmp_path / "noexact.prob"
        f.write_text(NO_EXACT)
        assert main(["reproduce", str(f), "--out", str(tmp_path / "o")]) == 2


class TestConvergence:
    def test_forward_study(self, tmp_path, capsys):
        code = main(["convergence", "--method", "fdm-forward", "--M", "100",
                     "--out", str(tmp_path / "c")])
        assert code == 0
        assert (tmp_path / "c" / "convergence_fdm-forward.csv").is_file()
        assert (tmp_path / "c" / "convergence_fdm-forward.png").is_file()

    def test_without_exact_exits_two(self, tmp_path, capsys):
        f = tmp_path / "noexact.prob"
        f.write_text(NO_EXACT)
        code = main(["convergence", str(f), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "exact solution required" in capsys.readouterr().err


class TestStability:
    def test_single_delta(self, tmp_path, capsys):
        code = main(["stability", "--deltas", "1e-4", "--K", "16", "--out", str(tmp_path / "s")])
        assert code == 0
        assert "verdict: pass" in capsys.readouterr().out
        assert (tmp_path / "s" / "stability.csv").is_file()
