import json

import pytest
from click.testing import CliRunner

from twsolve.cli import main

SMOKE_PLUS = ('system "mkdv_single"\nfunctions u(x,t)\n'
              'eq: u_t + 6*u^2*u_x + u_xxx = 0\n')
SMOKE_MINUS = SMOKE_PLUS.replace("+ 6*u^2*u_x", "- 6*u^2*u_x")
UNBALANCEABLE = 'system "s"\nfunctions u(x,t)\neq: u_t = u\n'


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def mkdv_file(tmp_path, mkdv_source):
    p = tmp_path / "mkdv.pde"
    p.write_text(mkdv_source)
    return str(p)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestSolve:
    def test_mkdv_json(self, runner, mkdv_file):
        result = runner.invoke(main, ["solve", mkdv_file, "--format", "json"])
        assert result.exit_code == 0, result.output
        doc = json.loads(result.output)
        assert doc["balance"] == {"m": 1, "n": 2}
        assert len(doc["families"]) >= 16
        distinct_assignments = {tuple(sorted(f["assignment"].items()))
                                for f in doc["families"]}
        assert len(distinct_assignments) >= 4
        assert doc["search"]["complete"] is True
        assert all(f["verified_symbolic"] for f in doc["families"])

    def test_parse_error_exit_2(self, runner, tmp_path):
        path = write(tmp_path, "broken.pde", 'system "s"\nfunctions u(x,t\n')
        result = runner.invoke(main, ["solve", path])
        assert result.exit_code == 2
        assert "error" in result.stderr

    def test_missing_file_exit_2(self, runner):
        result = runner.invoke(main, ["solve", "/nonexistent.pde"])
        assert result.exit_code == 2

    def test_balance_failure_exit_3(self, runner, tmp_path):
        path = write(tmp_path, "u.pde", UNBALANCEABLE)
        result = runner.invoke(main, ["solve", path])
        assert result.exit_code == 3

    def test_no_nondegenerate_branch_exit_4(self, runner, tmp_path):
        path = write(tmp_path, "plus.pde", SMOKE_PLUS)
        result = runner.invoke(main, ["solve", path])
        assert result.exit_code == 4

    def test_verification_failure_exit_5(self, runner, tmp_path):
        path = write(tmp_path, "minus.pde", SMOKE_MINUS)
        result = runner.invoke(main, ["solve", path, "--kinds", "tanh",
                                      "--tol", "1e-30"])
        assert result.exit_code == 5

    def test_limits_exhausted_exit_6(self, runner, mkdv_file):
        result = runner.invoke(main, ["solve", mkdv_file, "--max-depth", "0"])
        assert result.exit_code == 6

    def test_degrees_override(self, runner, tmp_path):
        path = write(tmp_path, "minus.pde", SMOKE_MINUS)
        result = runner.invoke(main, ["solve", path, "--degrees", "1",
                                      "--kinds", "tanh", "--format", "json"])
        assert result.exit_code == 0
        doc = json.loads(result.output)
        assert doc["balance"] == {"m": 1, "n": None}

    def test_kind_filter(self, runner, tmp_path):
        path = write(tmp_path, "minus.pde", SMOKE_MINUS)
        result = runner.invoke(main, ["solve", path, "--kinds", "tanh,coth",
                                      "--format", "json"])
        doc = json.loads(result.output)
        kinds = {f["branch_kind"] for f in doc["families"]}
        assert kinds <= {"tanh", "coth"}

    def test_output_file(self, runner, tmp_path, mkdv_file):
        out = tmp_path / "report.json"
        result = runner.invoke(main, ["solve", mkdv_file, "--format", "json",
                                      "--output", str(out)])
        assert result.exit_code == 0
        assert json.loads(out.read_text())["system"] == "coupled_mkdv"

    def test_determinism_byte_identical(self, runner, tmp_path):
        path = write(tmp_path, "minus.pde", SMOKE_MINUS)
        args = ["solve", path, "--format", "json", "--seed", "7"]
        a = runner.invoke(main, args)
        b = runner.invoke(main, args)
        assert a.exit_code == b.exit_code == 0
        assert a.output == b.output


class TestReduce:
    def test_text(self, runner, mkdv_file):
        result = runner.invoke(main, ["reduce", mkdv_file])
        assert result.exit_code == 0
        assert "[scale -2]" in result.output
        assert "u'''" in result.output

    def test_json(self, runner, mkdv_file):
        result = runner.invoke(main, ["reduce", mkdv_file, "--format", "json"])
        doc = json.loads(result.output)
        assert doc["scales"] == ["-2", "1"]
        assert len(doc["equations"]) == 2

    def test_latex(self, runner, mkdv_file):
        result = runner.invoke(main, ["reduce", mkdv_file, "--format", "latex"])
        assert "= 0" in result.output


class TestBalance:
    def test_mkdv(self, runner, mkdv_file):
        result = runner.invoke(main, ["balance", mkdv_file])
        assert result.exit_code == 0
        assert result.output.strip() == "m = 1, n = 2"

    def test_failure_exit_3(self, runner, tmp_path):
        path = write(tmp_path, "u.pde", UNBALANCEABLE)
        result = runner.invoke(main, ["balance", path])
        assert result.exit_code == 3


class TestCatalog:
    def test_default_builtin(self, runner):
        result = runner.invoke(main, ["catalog"])
        assert result.exit_code == 0
        assert "passed as printed: 9/16" in result.output
        assert "all entries accounted for: True" in result.output

    def test_explicit_input(self, runner, mkdv_file):
        result = runner.invoke(main, ["catalog", mkdv_file])
        assert result.exit_code == 0
        assert result.output.count("corrected") == 7

    def test_wrong_system_rejected(self, runner, tmp_path):
        path = write(tmp_path, "other.pde", SMOKE_MINUS)
        result = runner.invoke(main, ["catalog", path])
        assert result.exit_code == 2

    def test_json(self, runner):
        result = runner.invoke(main, ["catalog", "--format", "json"])
        doc = json.loads(result.output)
        assert doc["passed_as_printed"] == 9
        assert doc["all_accounted"] is True
        assert len(doc["rows"]) == 16
