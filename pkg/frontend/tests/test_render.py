"""Rendering tests, including the acceptance criterion for the figure
produced from the reference-scenario CSV."""

import hashlib
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from trajplots import PlotSpec, SchemaMismatchError, load_trajectory, render

REPO_ROOT = Path(__file__).resolve().parents[2]
SCENARIO = REPO_ROOT / "scenarios" / "consensus6.json"


def write_csv(path, t, sigma, x_cols, xhat_cols):
    names = (["t", "sigma", "tau"]
             + [f"x[{i}]" for i in range(x_cols.shape[1])]
             + [f"xhat[{i}]" for i in range(xhat_cols.shape[1])])
    rows = np.column_stack([t, sigma, np.zeros_like(t), x_cols, xhat_cols])
    lines = [",".join(names)]
    lines += [",".join(repr(float(v)) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture()
def sample_csv(tmp_path):
    t = np.linspace(0.0, 5.0, 51)
    sigma = np.where(t < 2.0, 0.2, np.where(t < 4.0, 0.9, 0.4))  # 2 jumps
    x = np.column_stack([np.exp(-t), np.cos(t) * np.exp(-t)])
    xhat = 0.5 * x
    path = tmp_path / "sample_7.csv"
    write_csv(path, t, sigma, x, xhat)
    return path


class TestLoad:
    def test_parses_columns(self, sample_csv):
        traj = load_trajectory(sample_csv)
        assert traj.x_names == ("x[0]", "x[1]", "xhat[0]", "xhat[1]")
        assert traj.sigma_jump_count == 2
        assert len(traj.t) == 51

    def test_rejects_foreign_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,sigma,tau,x[0]\n0,0,0,1\n")
        with pytest.raises(SchemaMismatchError) as exc:
            load_trajectory(path)
        assert exc.value.column == "time"

    def test_rejects_unknown_state_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,sigma,tau,velocity\n0,0,0,1\n")
        with pytest.raises(SchemaMismatchError) as exc:
            load_trajectory(path)
        assert exc.value.column == "velocity"

    def test_rejects_empty_rows(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("t,sigma,tau,x[0]\n")
        with pytest.raises(SchemaMismatchError):
            load_trajectory(path)

    def test_rejects_ragged_row(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("t,sigma,tau,x[0]\n0,0,0\n")
        with pytest.raises(SchemaMismatchError):
            load_trajectory(path)


class TestRender:
    def test_two_panel_png(self, sample_csv, tmp_path):
        out = tmp_path / "fig.png"
        result = render(PlotSpec(csv_path=str(sample_csv), out_path=str(out)))
        assert out.exists()
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        assert result.panels == ("states", "sigma")
        assert result.sigma_jump_count == 2

    def test_single_panel_variants(self, sample_csv, tmp_path):
        for panels in ("states", "sigma"):
            out = tmp_path / f"{panels}.png"
            result = render(PlotSpec(csv_path=str(sample_csv),
                                     out_path=str(out), panels=panels))
            assert result.panels == (panels,)
            assert out.exists()

    def test_input_untouched(self, sample_csv, tmp_path):
        before = hashlib.sha256(sample_csv.read_bytes()).hexdigest()
        render(PlotSpec(csv_path=str(sample_csv),
                        out_path=str(tmp_path / "fig.png")))
        after = hashlib.sha256(sample_csv.read_bytes()).hexdigest()
        assert before == after

    def test_rejects_bad_panel_choice(self, sample_csv, tmp_path):
        with pytest.raises(ValueError):
            PlotSpec(csv_path=str(sample_csv),
                     out_path=str(tmp_path / "f.png"), panels="everything")


class TestCliScript:
    def test_render_entry_point(self, sample_csv, tmp_path):
        out = tmp_path / "cli.png"
        proc = subprocess.run(
            [sys.executable, "-m", "trajplots.render", "--csv",
             str(sample_csv), "--out", str(out), "--panels", "both"],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert "2 switching jumps" in proc.stdout
        assert out.exists()

    def test_schema_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        proc = subprocess.run(
            [sys.executable, "-m", "trajplots.render", "--csv", str(bad),
             "--out", str(tmp_path / "x.png")],
            capture_output=True, text=True)
        assert proc.returncode == 2
        assert "'a'" in proc.stdout


def test_a9_reference_scenario_figure(tmp_path):
    """Acceptance: headless two-panel figure from a reference-scenario run,
    with the staircase jump count matching the switching record."""
    assert SCENARIO.exists(), "reference scenario file missing"
    out_dir = tmp_path / "run"
    proc = subprocess.run(
        [sys.executable, "-m", "lpvnet.cli", "simulate", "--config",
         str(SCENARIO), "--out", str(out_dir), "--seed", "1"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    csv_path = out_dir / "consensus6_1.csv"
    assert csv_path.exists()
    before = hashlib.sha256(csv_path.read_bytes()).hexdigest()

    fig_path = tmp_path / "consensus6_1.png"
    result = render(PlotSpec(csv_path=str(csv_path), out_path=str(fig_path)))

    # independent count of switching discontinuities from the record
    sigma = np.loadtxt(csv_path, delimiter=",", skiprows=1, usecols=1)
    expected_jumps = int(np.count_nonzero(np.diff(sigma) != 0.0))

    ok = (fig_path.exists()
          and fig_path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
          and result.panels == ("states", "sigma")
          and result.sigma_jump_count == expected_jumps
          and expected_jumps > 0
          and hashlib.sha256(csv_path.read_bytes()).hexdigest() == before)
    print(f"\n[acceptance] A9 figure rendering: {'PASS' if ok else 'FAIL'}")
    assert fig_path.exists()
    assert result.panels == ("states", "sigma")
    assert result.sigma_jump_count == expected_jumps > 0
    assert hashlib.sha256(csv_path.read_bytes()).hexdigest() == before
