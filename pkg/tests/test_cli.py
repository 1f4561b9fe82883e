import json
import subprocess
import sys

import pytest

RUN = [sys.executable, "-m", "carpet_energy.cli"]


def run_cli(*args, check=True):
    proc = subprocess.run(
        RUN + list(args), capture_output=True, text=True
    )
    if check and proc.returncode != 0:
        raise AssertionError(f"cli failed ({proc.returncode}): {proc.stderr}")
    return proc


class TestBasics:
    def test_graph_stats(self):
        out = run_cli("graph", "--level", "1")
        doc = json.loads(out.stdout)
        assert doc["vertices"] == 8
        assert doc["edges"] == 12
        assert doc["corner_edges"] == 4
        assert doc["connected"] is True

    def test_capacity_closed_form(self):
        out = run_cli("capacity", "--p", "3", "--level", "1", "--faces", "LR")
        doc = json.loads(out.stdout)
        assert doc["value"] == pytest.approx(1.0, rel=1e-8)

    def test_rho_includes_level1_value(self):
        out = run_cli("rho", "--p", "2", "--max-level", "2")
        doc = json.loads(out.stdout)
        assert doc["face_caps"][0] == pytest.approx(2.0, rel=1e-8)
        assert doc["rho"] > 0
        assert doc["d_w"] == pytest.approx(
            __import__("math").log(8 * doc["rho"]) / __import__("math").log(3)
        )

    def test_modulus_certificate_fields(self):
        out = run_cli("modulus", "--p", "2", "--level", "1", "--faces", "LR")
        doc = json.loads(out.stdout)
        assert set(doc) >= {"value", "gap", "n_active_paths"}
        assert doc["gap"] <= 1e-6

    def test_provenance_fields_everywhere(self):
        for cmd in (
            ["graph", "--level", "1"],
            ["capacity", "--level", "1"],
            ["seminorm", "--level", "2", "--rho", "1.25"],
            ["ks", "--level", "2", "--rho", "1.25", "--lam", "1"],
            ["emeasure", "--level", "2", "--rho", "1.25"],
        ):
            doc = json.loads(run_cli(*cmd).stdout)
            prov = doc["provenance"]
            assert set(prov) == {"p", "level", "rho", "seed", "tool_version"}

    def test_csv_format(self, tmp_path):
        out_file = tmp_path / "series.csv"
        run_cli(
            "rho", "--p", "2", "--max-level", "2",
            "--format", "csv", "--out", str(out_file),
        )
        lines = out_file.read_text().strip().splitlines()
        assert lines[0] == "n,face_cap,ratio"
        assert lines[1].startswith("1,")
        # 17 significant digits round-trip
        value = float(lines[1].split(",")[1])
        assert value == pytest.approx(2.0, rel=1e-8)

    def test_harmonic_save_values(self, tmp_path):
        path = tmp_path / "potential.txt"
        out = run_cli(
            "harmonic", "--p", "2", "--level", "1", "--save-values", str(path)
        )
        doc = json.loads(out.stdout)
        assert doc["converged"] is True
        from carpet_energy.graph import load_function

        f = load_function(str(path))
        assert f.level == 1

    def test_selftest_passes(self):
        out = run_cli("selftest")
        assert "all passed" in out.stdout


class TestExitCodes:
    def test_usage_error_is_2(self):
        proc = run_cli("capacity", "--faces", "XX", check=False)
        assert proc.returncode == 2

    def test_unknown_command_is_2(self):
        proc = run_cli("frobnicate", check=False)
        assert proc.returncode == 2

    def test_p_out_of_range_is_2(self):
        proc = run_cli("capacity", "--p", "1.01", "--level", "1", check=False)
        assert proc.returncode == 2
        proc = run_cli("capacity", "--p", "99", "--level", "1", check=False)
        assert proc.returncode == 2

    def test_level_cap_env_override(self):
        proc = subprocess.run(
            RUN + ["graph", "--level", "8"], capture_output=True, text=True
        )
        assert proc.returncode == 2
        # raising the cap makes the request legal (build level 2 to stay fast)
        proc = subprocess.run(
            RUN + ["graph", "--level", "2"],
            capture_output=True,
            text=True,
            env={"CARPET_ENERGY_MAX_LEVEL": "2", "PATH": "/usr/bin:/bin"},
        )
        assert proc.returncode == 0


class TestDeterminism:
    def test_byte_identical_across_runs_and_threads(self):
        a = run_cli("rho", "--p", "2", "--max-level", "2", "--threads", "1")
        b = run_cli("rho", "--p", "2", "--max-level", "2", "--threads", "4")
        c = run_cli("rho", "--p", "2", "--max-level", "2", "--threads", "1")
        assert a.stdout == b.stdout == c.stdout

    def test_seeded_reproducibility(self):
        a = run_cli("harnack", "--level", "2", "--radius", "3", "--seed", "5",
                    "--trials", "3")
        b = run_cli("harnack", "--level", "2", "--radius", "3", "--seed", "5",
                    "--trials", "3")
        assert a.stdout == b.stdout
        c = run_cli("harnack", "--level", "2", "--radius", "3", "--seed", "6",
                    "--trials", "3")
        assert a.stdout != c.stdout
