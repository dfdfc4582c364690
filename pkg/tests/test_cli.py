import pathlib

import pytest
from click.testing import CliRunner

from igamaxwell.cli import main

TINY_CUBE = """\
name = "tiny-cube"
[geometry]
kind = "cube"
[[subdomain]]
id = 0
degree = 2
elements = 2
[solver]
n_modes = 10
method = "dense"
[comparison]
count = 5
tol_rel = 5e-2
"""

TINY_MORTAR = """\
name = "tiny-mortar"
[geometry]
kind = "cube_two_patches"
[[subdomain]]
id = 0
degree = 3
regularity = 2
elements = 2
[[subdomain]]
id = 1
degree = 2
regularity = 0
elements = 3
[coupling]
method = "mortar"
q = 2
[solver]
n_modes = 12
method = "dense"
[comparison]
count = 5
tol_rel = 5e-2
"""


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def tiny_cube(tmp_path):
    path = tmp_path / "tiny-cube.toml"
    path.write_text(TINY_CUBE)
    return path


@pytest.fixture
def tiny_mortar(tmp_path):
    path = tmp_path / "tiny-mortar.toml"
    path.write_text(TINY_MORTAR)
    return path


class TestSpectrum:
    def test_runs_and_writes_csv(self, runner, tiny_cube, tmp_path):
        out = tmp_path / "out.csv"
        result = runner.invoke(main, ["spectrum", str(tiny_cube), "--output", str(out)])
        assert result.exit_code == 0, result.output
        assert "kernel modes" in result.output
        lines = out.read_text().splitlines()
        assert lines[1] == "index,eigenvalue,oracle,rel_err,status"
        assert len(lines) > 2

    def test_frequency_scale(self, runner, tiny_cube):
        result = runner.invoke(
            main, ["spectrum", str(tiny_cube), "--frequency-scale", "1.0"]
        )
        assert result.exit_code == 0, result.output
        assert "GHz" in result.output

    def test_invalid_scenario_fails(self, runner, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text(TINY_CUBE + "\n[extra]\nfoo = 1\n")
        result = runner.invoke(main, ["spectrum", str(bad)])
        assert result.exit_code != 0
        assert "extra" in result.output

    def test_missing_file_fails(self, runner):
        result = runner.invoke(main, ["spectrum", "no-such-file.toml"])
        assert result.exit_code != 0


class TestInfsup:
    def test_sweep_csv(self, runner, tiny_mortar, tmp_path):
        out = tmp_path / "infsup.csv"
        result = runner.invoke(
            main,
            [
                "infsup",
                str(tiny_mortar),
                "--sweep",
                "1,2",
                "--levels",
                "0",
                "--output",
                str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[1] == "level,ndof_q1,beta_q1,ndof_q2,beta_q2"
        assert lines[2].startswith("0,")

    def test_rejects_glue(self, runner, tmp_path):
        glue = tmp_path / "glue.toml"
        glue.write_text(
            TINY_MORTAR.replace('method = "mortar"\nq = 2', 'method = "glue"').replace(
                'degree = 3\nregularity = 2\nelements = 2',
                'degree = 2\nregularity = 0\nelements = 3',
            )
        )
        result = runner.invoke(main, ["infsup", str(glue), "--sweep", "1"])
        assert result.exit_code != 0

    def test_bad_sweep_list(self, runner, tiny_mortar):
        result = runner.invoke(main, ["infsup", str(tiny_mortar), "--sweep", "a,b"])
        assert result.exit_code != 0


class TestSweep:
    def test_order_output(self, runner, tiny_cube, tmp_path):
        out = tmp_path / "order.csv"
        result = runner.invoke(
            main,
            [
                "sweep",
                str(tiny_cube),
                "--levels",
                "0,1",
                "--mode-index",
                "1",
                "--output",
                str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "estimated order" in result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "level,h,ndof,rel_err"
        assert len(lines) == 3

    def test_bad_mode_index(self, runner, tiny_cube):
        result = runner.invoke(main, ["sweep", str(tiny_cube), "--mode-index", "0"])
        assert result.exit_code != 0


class TestExportMatrices:
    def test_writes_matrixmarket(self, runner, tiny_mortar, tmp_path):
        outdir = tmp_path / "mats"
        result = runner.invoke(
            main, ["export-matrices", str(tiny_mortar), "--outdir", str(outdir)]
        )
        assert result.exit_code == 0, result.output
        names = {p.name for p in outdir.iterdir()}
        assert {"stiffness.mtx", "mass.mtx", "constraint.mtx"} <= names
        import scipy.io

        A = scipy.io.mmread(outdir / "stiffness.mtx")
        B = scipy.io.mmread(outdir / "constraint.mtx")
        assert A.shape[0] == A.shape[1] == B.shape[1]

    def test_single_domain_has_no_constraint(self, runner, tiny_cube, tmp_path):
        outdir = tmp_path / "mats"
        result = runner.invoke(
            main, ["export-matrices", str(tiny_cube), "--outdir", str(outdir)]
        )
        assert result.exit_code == 0, result.output
        names = {p.name for p in outdir.iterdir()}
        assert "constraint.mtx" not in names
