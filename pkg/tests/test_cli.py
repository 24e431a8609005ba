from __future__ import annotations

import csv
import json
import subprocess
import sys
import textwrap

import pytest

from hallmhd.cli import EXIT_BLOWUP, EXIT_CHECK, EXIT_OK, EXIT_USAGE, main


def write_config(path, body: str):
    path.write_text(textwrap.dedent(body))
    return path


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


SMALL = """
    grid: {n: 16}
    time: {dt: 1.0e-2, T: 0.1, save_every: 5}
    initial: {family: single_mode, amplitude: 1.0e-3}
"""


@pytest.fixture
def small_run(tmp_path):
    cfg = write_config(tmp_path / "small.yaml", SMALL)
    out = tmp_path / "small"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    return out


class TestSimulate:
    def test_zero_data_gives_zero_csv(self, tmp_path):
        cfg = write_config(tmp_path / "z.yaml", """
            grid: {n: 8}
            time: {dt: 0.1, T: 0.5}
            initial: {family: zero}
        """)
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "z")]) == EXIT_OK
        rows = read_csv(tmp_path / "z" / "diagnostics.csv")
        assert len(rows) == 6
        for row in rows:
            assert all(float(v) == 0.0 for k, v in row.items() if k != "t")

    def test_outputs_and_manifest(self, small_run):
        rows = read_csv(small_run / "diagnostics.csv")
        assert len(rows) == 11
        assert max(float(r["energy_defect_rel"]) for r in rows) <= 1e-4
        manifest = json.loads((small_run / "manifest.json").read_text())
        assert manifest["status"] == "ok" and manifest["version"]
        assert manifest["config"]["grid"]["n"] == 16
        assert manifest["config_text"].strip().startswith("grid")
        assert manifest["outputs"]["checkpoints"] == [
            "checkpoints/step_0000000", "checkpoints/step_0000005", "checkpoints/step_0000010"
        ]
        assert manifest["wall_time_s"] >= 0

    def test_manifest_reproduces_run(self, small_run, tmp_path):
        manifest = json.loads((small_run / "manifest.json").read_text())
        cfg = tmp_path / "again.yaml"
        cfg.write_text(manifest["config_text"])
        out = tmp_path / "again"
        assert main(["simulate", "--config", str(cfg), "--out", str(out),
                     "--seed", str(manifest["seed"])]) == EXIT_OK
        a = read_csv(small_run / "diagnostics.csv")
        b = read_csv(out / "diagnostics.csv")
        assert [r["energy"] for r in a] == [r["energy"] for r in b]

    def test_strict_determinism(self, tmp_path):
        cfg = write_config(tmp_path / "r.yaml", """
            grid: {n: 16}
            time: {dt: 1.0e-2, T: 0.05}
            initial: {family: random_bandlimited, amplitude: 0.5, band: 4}
            seed: 11
        """)
        outs = [tmp_path / "a", tmp_path / "b"]
        for out in outs:
            assert main(["simulate", "--config", str(cfg), "--out", str(out),
                         "--strict-deterministic"]) == EXIT_OK
        a, b = ((o / "diagnostics.csv").read_bytes() for o in outs)
        assert a == b

    def test_seed_override(self, tmp_path):
        cfg = write_config(tmp_path / "r.yaml", """
            grid: {n: 8}
            time: {dt: 0.1, T: 0.1}
            initial: {family: random_bandlimited, amplitude: 0.5, band: 2}
        """)
        for seed, name in ((1, "a"), (2, "b")):
            assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name),
                         "--seed", str(seed)]) == EXIT_OK
        assert json.loads((tmp_path / "b" / "manifest.json").read_text())["seed"] == 2
        ea = read_csv(tmp_path / "a" / "diagnostics.csv")[0]["energy"]
        eb = read_csv(tmp_path / "b" / "diagnostics.csv")[0]["energy"]
        assert ea == eb  # rms is fixed by the amplitude
        assert (tmp_path / "a" / "diagnostics.csv").read_bytes() != \
            (tmp_path / "b" / "diagnostics.csv").read_bytes()

    def test_blowup_exit_code(self, tmp_path):
        cfg = write_config(tmp_path / "b.yaml", """
            grid: {n: 16}
            time: {dt: 0.5, T: 50}
            params: {mu: 1.0e-3, nu: 1.0e-3, h: 1}
            initial: {family: random_bandlimited, amplitude: 1.0e4, band: 7}
        """)
        out = tmp_path / "b"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_BLOWUP
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["status"].startswith("blowup") and manifest["blowup"]
        assert (out / "diagnostics.csv").is_file()
        assert manifest["outputs"]["checkpoints"]

    def test_picard_non_convergence_exit_code(self, tmp_path):
        cfg = write_config(tmp_path / "p.yaml", """
            grid: {n: 8}
            time: {dt: 1.0e-2, T: 0.1}
            solver: {scheme: picard, tol: 1.0e-15, max_iter: 2}
            initial: {family: single_mode, amplitude: 0.1}
        """)
        out = tmp_path / "p"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_CHECK
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["status"].startswith("non-contraction:")
        assert manifest["picard"]["converged"] is False

    def test_snapshot_initial_data(self, small_run, tmp_path):
        cfg = write_config(tmp_path / "s.yaml", f"""
            grid: {{n: 16}}
            time: {{dt: 1.0e-2, T: 0.05}}
            initial: {{snapshot: {small_run / "checkpoints" / "step_0000010"}}}
        """)
        out = tmp_path / "s"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        first = read_csv(out / "diagnostics.csv")[0]
        last = read_csv(small_run / "diagnostics.csv")[-1]
        assert float(first["energy"]) == pytest.approx(float(last["energy"]), rel=1e-14)
        assert float(first["t"]) == 0.0


class TestUsageErrors:
    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["simulate", "--config", str(tmp_path / "none.yaml"),
                     "--out", str(tmp_path)]) == EXIT_USAGE
        assert "none.yaml" in capsys.readouterr().err

    def test_no_config(self):
        assert main(["simulate", "--out", "x"]) == EXIT_USAGE

    def test_no_output_directory(self, tmp_path):
        cfg = write_config(tmp_path / "a.yaml", "grid: {n: 8}\n")
        assert main(["simulate", "--config", str(cfg)]) == EXIT_USAGE

    def test_invalid_config_has_line(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "bad.yaml", "grid:\n  n: 8\n  size: 3\n")
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_USAGE
        assert "bad.yaml:3: unknown key 'grid.size'" in capsys.readouterr().err

    def test_no_command(self):
        assert main([]) == EXIT_USAGE

    def test_unknown_flag(self):
        assert main(["verify", "--bogus"]) == EXIT_USAGE

    def test_version(self, capsys):
        assert main(["--version"]) == EXIT_OK
        assert "hallmhd" in capsys.readouterr().out


class TestVerify:
    def test_identities(self, capsys):
        assert main(["verify", "--suite", "identities"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out

    def test_unknown_suite(self):
        assert main(["verify", "--suite", "nonsense"]) == EXIT_USAGE

    def test_missing_suite(self):
        assert main(["verify"]) == EXIT_USAGE


class TestAnalyze:
    def test_outputs(self, small_run, tmp_path):
        out = tmp_path / "analysis"
        assert main(["analyze", str(small_run), "--out", str(out)]) == EXIT_OK
        summary = json.loads((out / "analysis.json").read_text())
        assert set(summary["blowup_integrals"]) == {"I1", "I2", "I3"}
        assert summary["max_energy_defect_rel"] <= 1e-4
        rows = read_csv(out / "blowup.csv")
        assert [float(r["t"]) for r in rows] == pytest.approx([0.0, 0.05, 0.1])
        assert float(rows[0]["I1"]) == 0.0
        norms = read_csv(out / "norms.csv")
        assert {r["quantity"] for r in norms} >= {"initial_u", "final_J"}

    def test_not_a_run(self, tmp_path):
        assert main(["analyze", str(tmp_path)]) == EXIT_USAGE


class TestCompare:
    def test_identical_runs(self, small_run, tmp_path):
        out = tmp_path / "cmp.csv"
        assert main(["compare", str(small_run), str(small_run), "--mode", "schemes",
                     "--out", str(out)]) == EXIT_OK
        rows = read_csv(out)
        assert len(rows) == 3
        assert all(float(r[k]) == 0.0 for r in rows for k in r if k != "t")

    def test_stdout(self, small_run, capsys):
        assert main(["compare", str(small_run), str(small_run), "--mode", "galerkin"]) == EXIT_OK
        assert capsys.readouterr().out.startswith("t,dist_u,dist_B,dist_J,dist,rel_dist")

    def test_rescaling(self, tmp_path):
        # n=32 so that the dilated spectrum stays inside the dealiased band
        a = write_config(tmp_path / "a.yaml", """
            grid: {n: 32}
            time: {dt: 4.0e-3, T: 0.04, save_every: 5}
            params: {mu: 1, nu: 1, h: 2}
            initial: {family: single_mode, amplitude: 0.1}
        """)
        b = write_config(tmp_path / "b.yaml", """
            grid: {n: 32}
            time: {dt: 1.0e-3, T: 0.01, save_every: 5}
            initial: {family: single_mode, amplitude: 0.1, rescale: {m: 1, mu: 1}}
        """)
        for cfg, name in ((a, "A"), (b, "B")):
            assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
        out = tmp_path / "cmp.csv"
        assert main(["compare", str(tmp_path / "A"), str(tmp_path / "B"), "--mode", "rescaling",
                     "--out", str(out)]) == EXIT_OK
        rows = read_csv(out)
        assert [float(r["t"]) for r in rows] == pytest.approx([0.0, 0.02, 0.04])
        assert max(float(r["rel_dist"]) for r in rows) <= 1e-10

    def test_rescaling_rejects_unit_h(self, small_run, capsys):
        assert main(["compare", str(small_run), str(small_run), "--mode", "rescaling"]) \
            == EXIT_USAGE
        assert "h = 2**m" in capsys.readouterr().err

    def test_incompatible_grids(self, small_run, tmp_path):
        cfg = write_config(tmp_path / "c.yaml", SMALL.replace("n: 16", "n: 8"))
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "c")]) == 0
        assert main(["compare", str(small_run), str(tmp_path / "c"), "--mode", "schemes"]) \
            == EXIT_USAGE


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hallmhd", "verify", "--suite", "nonsense"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
    assert "unknown suite" in proc.stderr
