"""Rendering checklist: every figure kind, from golden harness CSV files."""

import math
from pathlib import Path

import pytest

from plots.cli import main
from plots.figures import SCHEMAS, FigureSpec, SchemaError, build_figure, render

DATA = Path(__file__).parent / "data"

FIXTURES = {
    "freq-bars": ("freq.csv",),
    "share-trajectory": ("trace.csv",),
    "share-bars": ("trace.csv",),
    "gamma-curves": ("gamma.csv",),
    "minpop-curves": ("minpop_m2.csv", "minpop_m3.csv"),
}


def _spec(kind, out):
    return FigureSpec(kind, tuple(str(DATA / f) for f in FIXTURES[kind]),
                      str(out))


@pytest.mark.parametrize("kind", sorted(FIXTURES))
def test_every_kind_renders_its_golden_fixture(kind, tmp_path):
    out = tmp_path / f"{kind}.png"
    render(_spec(kind, out))
    payload = out.read_bytes()
    assert payload[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(payload) > 2000


@pytest.mark.parametrize("kind", sorted(FIXTURES))
def test_rerendering_is_byte_stable(kind, tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render(_spec(kind, a))
    render(_spec(kind, b))
    assert a.read_bytes() == b.read_bytes()


def test_share_bars_mark_the_even_split_level(tmp_path):
    fig = build_figure(_spec("share-bars", tmp_path / "x.png"))
    levels = [line.get_ydata() for line in fig.axes[0].lines]
    # the trace fixture holds 4 optima, so the reference sits at 1/4
    assert any(len(set(y)) == 1 and math.isclose(list(y)[0], 0.25)
               for y in levels)


def test_share_trajectory_draws_one_series_per_optimum(tmp_path):
    fig = build_figure(_spec("share-trajectory", tmp_path / "x.png"))
    # 4 optimum series plus the reference line
    assert len(fig.axes[0].lines) == 4 + 1


def test_gamma_curves_split_panels_by_algorithm(tmp_path):
    fig = build_figure(_spec("gamma-curves", tmp_path / "x.png"))
    assert len(fig.axes) == 2
    for ax in fig.axes:
        assert len(ax.containers) == 2  # one errorbar group per checkpoint


def test_minpop_overlay_passes_through_the_first_crowding_point(tmp_path):
    fig = build_figure(_spec("minpop-curves", tmp_path / "x.png"))
    ax = fig.axes[0]
    overlays = {line.get_label(): line for line in ax.lines
                if line.get_label().startswith("drift model")}
    curves = {line.get_label(): line for line in ax.lines
              if line.get_label().startswith("rts ")}
    assert overlays and curves
    for t_label, overlay in overlays.items():
        t = t_label.split("t=")[1]
        curve = curves[f"rts t={t}"]
        assert overlay.get_xdata()[0] == curve.get_xdata()[0]
        assert overlay.get_ydata()[0] == pytest.approx(curve.get_ydata()[0])


@pytest.mark.parametrize("kind", sorted(FIXTURES))
def test_headers_alone_render_empty_axes(kind, tmp_path):
    src = tmp_path / "empty.csv"
    src.write_text(",".join(SCHEMAS[kind]) + "\n")
    out = tmp_path / "empty.png"
    assert main([kind, "--in", str(src), "--out", str(out)]) == 0
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_mismatched_schema_names_the_columns(tmp_path, capsys):
    out = tmp_path / "x.png"
    code = main(["freq-bars", "--in", str(DATA / "gamma.csv"),
                 "--out", str(out)])
    assert code == 2
    message = capsys.readouterr().err
    assert "block,schema,ideal,experimental,stderr" in message
    assert "algo,pop,checkpoint" in message
    assert not out.exists()


def test_second_input_appends_rows(tmp_path):
    single = build_figure(FigureSpec(
        "minpop-curves", (str(DATA / "minpop_m2.csv"),), str(tmp_path / "a")))
    merged = build_figure(_spec("minpop-curves", tmp_path / "b"))
    # the second file adds the 8-optima points, extending every curve
    assert all(len(line.get_xdata()) >= 2 for line in merged.axes[0].lines)
    assert len(merged.axes[0].lines) >= len(single.axes[0].lines)


def test_unknown_kind_is_rejected():
    with pytest.raises(ValueError):
        FigureSpec("violin", ("x.csv",), "x.png")
    with pytest.raises(SystemExit):
        main(["violin", "--in", "x.csv", "--out", "x.png"])
