"""Rendering smoke, determinism, and input validation for every figure kind."""

from pathlib import Path

import pytest

from condplots import FIGURE_KINDS, PlotDataError, PlotJob, render
from condplots.cli import main

DATA = Path(__file__).parent / "data"

JOBS = {
    "evolution": ("fields.csv",),
    "evolution-2d": ("fields_2d.csv",),
    "mass": ("mass.csv",),
    "convergence": ("iters.csv",),
    "stationary": ("fields_stationary.csv",),
    "turnpike": ("distances.csv",),
    "survival": ("survival.csv", "survival_mass.csv"),
}


def _job(name, out):
    kind = name.split("-")[0]
    return PlotJob(kind, tuple(DATA / f for f in JOBS[name]), out)


@pytest.mark.parametrize("name", sorted(JOBS))
def test_renders_png(name, tmp_path):
    out = render(_job(name, tmp_path / f"{name}.png"))
    data = out.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(data) > 5000


@pytest.mark.parametrize("name", sorted(JOBS))
def test_rendering_is_byte_stable(name, tmp_path):
    a = render(_job(name, tmp_path / "a.png")).read_bytes()
    b = render(_job(name, tmp_path / "b.png")).read_bytes()
    assert a == b


def test_all_kinds_covered():
    assert {n.split("-")[0] for n in JOBS} == set(FIGURE_KINDS)


def test_missing_column_named(tmp_path):
    bad = tmp_path / "mass.csv"
    lines = (DATA / "mass.csv").read_text().splitlines()
    bad.write_text("\n".join(["t,total"] + lines[1:]))
    with pytest.raises(PlotDataError, match="missing column\\(s\\) mass"):
        render(PlotJob("mass", (bad,), tmp_path / "x.png"))


def test_empty_table_reported(tmp_path):
    bad = tmp_path / "mass.csv"
    bad.write_text("t,mass\n")
    with pytest.raises(PlotDataError, match="no data rows"):
        render(PlotJob("mass", (bad,), tmp_path / "x.png"))


def test_missing_file_reported(tmp_path):
    with pytest.raises(PlotDataError, match="no such file"):
        render(PlotJob("mass", (tmp_path / "nope.csv",), tmp_path / "x.png"))


def test_wrong_input_count(tmp_path):
    with pytest.raises(PlotDataError, match="takes 2 CSV input"):
        render(PlotJob("survival", (DATA / "survival.csv",), tmp_path / "x.png"))


def test_unknown_kind(tmp_path):
    with pytest.raises(PlotDataError, match="unknown figure kind"):
        render(PlotJob("sparkline", (DATA / "mass.csv",), tmp_path / "x.png"))


def test_non_numeric_rows(tmp_path):
    bad = tmp_path / "mass.csv"
    bad.write_text("t,mass\n0.0,one\n")
    with pytest.raises(PlotDataError, match="non-numeric"):
        render(PlotJob("mass", (bad,), tmp_path / "x.png"))


def test_cli_roundtrip(tmp_path, capsys):
    out = tmp_path / "figs" / "mass.png"
    rc = main(["mass", str(DATA / "mass.csv"), "--out", str(out)])
    assert rc == 0
    assert out.is_file()
    assert f"wrote {out}" in capsys.readouterr().out


def test_cli_reports_data_errors(tmp_path, capsys):
    rc = main(["mass", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "x.png")])
    assert rc == 2
    assert "no such file" in capsys.readouterr().err


def test_cli_rejects_unknown_kind(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        main(["sparkline", str(DATA / "mass.csv"), "--out", str(tmp_path / "x.png")])
    assert excinfo.value.code == 2
