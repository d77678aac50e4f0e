import csv
import subprocess
import sys
from pathlib import Path

import pytest

from plotviz import (InputError, discover_schemes, load_cdf_csv,
                     main, render_all_sensors, render_by_coverage)

RENDER = Path(__file__).resolve().parents[1] / "render.py"


@pytest.fixture(scope="session")
def sim_outputs(tmp_path_factory):
    """A small real run of the simulator CLI: the only coupling is its CSVs."""
    from d2dsim.cli import main as sim_main
    from d2dsim.config import default_config, save_config

    base = tmp_path_factory.mktemp("sim")
    cfg = default_config()
    cfg.scenario.n_sensors = 600
    cfg.scenario.horizon_days = 40
    conf = base / "sim.conf"
    save_config(cfg, conf)
    out = base / "out"
    assert sim_main(["--config", str(conf), "--out", str(out)]) == 0
    return out


def _csv_points(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [(float(r["x_days"]), float(r["cum_fraction"])) for r in rows]


def test_both_figures_rendered_nonzero(sim_outputs, tmp_path):
    a = tmp_path / "a.png"
    b = tmp_path / "b.pdf"
    code = main(["--in", str(sim_outputs), "--out-a", str(a),
                 "--out-b", str(b)])
    assert code == 0
    assert a.stat().st_size > 0
    assert b.stat().st_size > 0


def test_render_script_entrypoint(sim_outputs, tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    proc = subprocess.run(
        [sys.executable, str(RENDER), "--in", str(sim_outputs),
         "--out-a", str(a), "--out-b", str(b)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert a.exists() and b.exists()


def test_figure_a_curve_count(sim_outputs):
    fig = render_all_sensors(sim_outputs)
    assert len(fig.axes[0].get_lines()) == 3 + 1      # 3 schemes + marker


def test_single_scheme_input_one_curve(sim_outputs, tmp_path):
    solo = tmp_path / "solo"
    solo.mkdir()
    for subset in ("all", "in", "out"):
        src = sim_outputs / f"cdf_r12_{subset}.csv"
        (solo / src.name).write_bytes(src.read_bytes())
    fig = render_all_sensors(solo)
    lines = fig.axes[0].get_lines()
    assert len(lines) == 1 + 1                        # 1 scheme + marker
    assert fig.axes[0].get_legend().get_texts()[0].get_text() == "R12"


def test_plotted_points_match_csv_exactly(sim_outputs):
    """Every point on every curve of figure (a) is bit-identical to its CSV
    source value."""
    fig = render_all_sensors(sim_outputs)
    curves = {ln.get_label(): ln for ln in fig.axes[0].get_lines()
              if not ln.get_label().startswith("_")}
    labels = {"R12": "r12", "R13": "r13", "ContextAware": "context"}
    assert set(curves) == set(labels)
    for label, token in labels.items():
        pts = _csv_points(sim_outputs / f"cdf_{token}_all.csv")
        xs = list(curves[label].get_xdata())
        ys = list(curves[label].get_ydata())
        assert xs == [x for x, _ in pts]
        assert ys == [c for _, c in pts]


def test_figure_b_has_coverage_split_curves(sim_outputs):
    fig = render_by_coverage(sim_outputs)
    labels = [ln.get_label() for ln in fig.axes[0].get_lines()
              if not ln.get_label().startswith("_")]
    assert len(labels) == 6                           # 3 schemes x {in, out}
    assert "R12 (in coverage)" in labels
    assert "ContextAware (out of coverage)" in labels


def test_r12_curve_starts_at_outage_fraction(sim_outputs):
    """The R12 curve passes through (0 days, the day-1 outage fraction):
    sensors unserved from day 1 are exactly the zero-served mass, and the
    summary file written alongside confirms the value."""
    pts = _csv_points(sim_outputs / "cdf_r12_all.csv")
    assert pts[0][0] == 0.0
    outage = None
    for line in (sim_outputs / "summary.txt").read_text().splitlines():
        if line.startswith("outage_fraction_r12 = "):
            outage = float(line.split("=")[1])
    assert outage is not None
    assert pts[0][1] == pytest.approx(outage)
    fig = render_all_sensors(sim_outputs)
    r12 = next(ln for ln in fig.axes[0].get_lines()
               if ln.get_label() == "R12")
    assert r12.get_xdata()[0] == 0.0
    assert r12.get_ydata()[0] == pytest.approx(outage)


def test_missing_directory_nonzero_exit(tmp_path, capsys):
    code = main(["--in", str(tmp_path / "nope"), "--out-a",
                 str(tmp_path / "a.png"), "--out-b", str(tmp_path / "b.png")])
    assert code == 1
    assert "nope" in capsys.readouterr().err


def test_missing_subset_file_names_path(sim_outputs, tmp_path, capsys):
    broken = tmp_path / "broken"
    broken.mkdir()
    src = sim_outputs / "cdf_r13_all.csv"
    (broken / src.name).write_bytes(src.read_bytes())   # no in/out files
    code = main(["--in", str(broken), "--out-a", str(tmp_path / "a.png"),
                 "--out-b", str(tmp_path / "b.png")])
    assert code == 1
    assert "cdf_r13_in.csv" in capsys.readouterr().err


def test_malformed_csv_rejected(tmp_path):
    bad = tmp_path / "cdf_r12_all.csv"
    bad.write_text("scheme,subset,x_days,cum_fraction\nR12,all,zero,0.1\n")
    with pytest.raises(InputError, match="malformed"):
        load_cdf_csv(bad)
    bad.write_text("wrong,header\n")
    with pytest.raises(InputError, match="bad header"):
        load_cdf_csv(bad)
    bad.write_text("scheme,subset,x_days,cum_fraction\n")
    with pytest.raises(InputError, match="no data rows"):
        load_cdf_csv(bad)


def test_discover_schemes(sim_outputs, tmp_path):
    assert discover_schemes(sim_outputs) == ["context", "r12", "r13"]
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(InputError, match="no cdf_"):
        discover_schemes(empty)
