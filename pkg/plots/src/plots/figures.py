"""Figure builders for the harness CSV schemas.

Every figure kind maps one documented CSV schema to one static image.  The
data is plotted as-is: means and standard errors are whatever the harness
wrote, nothing is recomputed here beyond presentation-level grouping.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from matplotlib.figure import Figure

SCHEMAS: Dict[str, Tuple[str, ...]] = {
    "freq-bars": ("block", "schema", "ideal", "experimental", "stderr"),
    "share-trajectory": ("run", "generation", "optimum_id", "share"),
    "share-bars": ("run", "generation", "optimum_id", "share"),
    "gamma-curves": ("algo", "pop", "checkpoint", "gamma", "stderr", "runs"),
    "minpop-curves": ("algo", "n_opt", "t", "n_min", "runs"),
}

KINDS = tuple(sorted(SCHEMAS))

_TYPES = {"run": int, "generation": int, "optimum_id": int, "share": float,
          "block": int, "schema": str, "ideal": float, "experimental": float,
          "stderr": float, "algo": str, "pop": int, "checkpoint": int,
          "gamma": float, "runs": int, "n_opt": int, "t": int, "n_min": int}


class SchemaError(ValueError):
    """Input CSV columns do not match what the figure kind consumes."""

    def __init__(self, kind: str, path: str, found: Sequence[str]):
        self.expected = SCHEMAS[kind]
        self.found = tuple(found)
        super().__init__(
            f"{path}: {kind} expects columns {','.join(self.expected)}, "
            f"got {','.join(self.found) if self.found else '(empty file)'}")


@dataclass(frozen=True)
class FigureSpec:
    """One figure: a kind, its input CSV file(s), and the image path."""

    kind: str
    inputs: Tuple[str, ...]
    output: str

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("need at least one input CSV")


def _load(kind: str, path: str) -> List[dict]:
    columns = SCHEMAS[kind]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != columns:
            raise SchemaError(kind, path, header or ())
        return [{c: _TYPES[c](v) for c, v in zip(columns, row)}
                for row in reader if row]


def _load_all(spec: FigureSpec) -> List[dict]:
    rows: List[dict] = []
    for path in spec.inputs:
        rows.extend(_load(spec.kind, path))
    return rows


def _drift_shape(n_opt: int, t: int) -> float:
    # proportional population size keeping n_opt niches for t generations
    # when every generation independently risks losing each one
    gamma = (n_opt - 1) / n_opt
    per_gen = 1.0 - gamma ** (1.0 / t)
    return math.log(per_gen / n_opt) / math.log((n_opt - 1) / n_opt)


def _freq_bars(rows: List[dict], fig: Figure) -> None:
    ax = fig.subplots()
    xs = range(len(rows))
    ax.bar([x - 0.21 for x in xs], [r["ideal"] for r in rows], width=0.42,
           label="ideal", color="#bbbbbb")
    ax.bar([x + 0.21 for x in xs], [r["experimental"] for r in rows],
           width=0.42, yerr=[r["stderr"] for r in rows], capsize=2,
           label="experimental", color="#336699")
    for i in range(1, len(rows)):
        if rows[i]["block"] != rows[i - 1]["block"]:
            ax.axvline(i - 0.5, color="#888888", linewidth=0.6)
    if rows:
        if len(rows) <= 48:
            ax.set_xticks(list(xs), [r["schema"] for r in rows],
                          rotation=90, fontsize=7)
        else:
            starts = [i for i in xs if i == 0
                      or rows[i]["block"] != rows[i - 1]["block"]]
            ax.set_xticks(starts, [f"block {rows[i]['block']}" for i in starts])
        ax.legend()
    ax.set_xlabel("schema, grouped by block")
    ax.set_ylabel("sampling frequency")
    ax.set_title("schema sampling frequencies")


def _share_series(rows: List[dict]) -> Dict[Tuple[int, int], List[Tuple[int, float]]]:
    series: Dict[Tuple[int, int], List[Tuple[int, float]]] = defaultdict(list)
    for r in rows:
        series[(r["run"], r["optimum_id"])].append((r["generation"], r["share"]))
    return series


def _share_trajectory(rows: List[dict], fig: Figure) -> None:
    ax = fig.subplots()
    series = _share_series(rows)
    for key in sorted(series):
        pts = sorted(series[key])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], linewidth=0.8)
    if rows:
        n_opt = len({r["optimum_id"] for r in rows})
        ax.axhline(1 / n_opt, color="black", linestyle="--", linewidth=1.0,
                   label=f"1/{n_opt}")
        ax.legend()
    ax.set_xlabel("generation")
    ax.set_ylabel("population share")
    ax.set_title("optimum share trajectories")


def _share_bars(rows: List[dict], fig: Figure) -> None:
    ax = fig.subplots()
    if rows:
        final = max(r["generation"] for r in rows)
        per_optimum: Dict[int, List[float]] = defaultdict(list)
        for r in rows:
            if r["generation"] == final:
                per_optimum[r["optimum_id"]].append(r["share"])
        optima = sorted(per_optimum)
        ax.bar(optima, [sum(per_optimum[o]) / len(per_optimum[o])
                        for o in optima], color="#336699")
        ax.axhline(1 / len(optima), color="black", linestyle="--",
                   linewidth=1.0, label=f"1/{len(optima)}")
        ax.legend()
        ax.set_title(f"optimum shares at generation {final}")
    else:
        ax.set_title("optimum shares")
    ax.set_xlabel("optimum")
    ax.set_ylabel("population share")


def _gamma_curves(rows: List[dict], fig: Figure) -> None:
    algos = sorted({r["algo"] for r in rows}) or [""]
    axes = fig.subplots(1, len(algos), squeeze=False)[0]
    for ax, algo in zip(axes, algos):
        mine = [r for r in rows if r["algo"] == algo]
        for cp in sorted({r["checkpoint"] for r in mine}):
            pts = sorted((r["pop"], r["gamma"], r["stderr"])
                         for r in mine if r["checkpoint"] == cp)
            ax.errorbar([p[0] for p in pts], [p[1] for p in pts],
                        yerr=[p[2] for p in pts], marker="o", capsize=3,
                        label=f"t={cp}")
        ax.set_ylim(-0.02, 1.05)
        ax.set_xlabel("population size")
        ax.set_title(algo or "retention")
        if mine:
            ax.legend()
    axes[0].set_ylabel("retention probability")


def _minpop_curves(rows: List[dict], fig: Figure) -> None:
    ax = fig.subplots()
    for algo, t in sorted({(r["algo"], r["t"]) for r in rows}):
        pts = sorted((r["n_opt"], r["n_min"]) for r in rows
                     if r["algo"] == algo and r["t"] == t and r["n_min"] >= 0)
        if pts:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                    label=f"{algo} t={t}")
    for t in sorted({r["t"] for r in rows if r["algo"] == "rts"}):
        pts = sorted((r["n_opt"], r["n_min"]) for r in rows
                     if r["algo"] == "rts" and r["t"] == t and r["n_min"] >= 0)
        if not pts or pts[0][0] < 2:
            continue
        anchor_n, anchor_y = pts[0]
        scale = anchor_y / _drift_shape(anchor_n, t)
        xs = list(range(anchor_n, max(p[0] for p in pts) + 1))
        ax.plot(xs, [scale * _drift_shape(x, t) for x in xs], color="#888888",
                linestyle="--", linewidth=1.0, label=f"drift model t={t}")
    ax.set_yscale("log")
    ax.set_xlabel("number of optima")
    ax.set_ylabel("minimum population size")
    ax.set_title("population sizing")
    if rows:
        ax.legend()


_BUILDERS = {"freq-bars": _freq_bars, "share-trajectory": _share_trajectory,
             "share-bars": _share_bars, "gamma-curves": _gamma_curves,
             "minpop-curves": _minpop_curves}


def build_figure(spec: FigureSpec) -> Figure:
    """The assembled figure, without writing it anywhere."""
    rows = _load_all(spec)
    fig = Figure(figsize=(9, 4.5) if spec.kind == "gamma-curves" else (8, 4.5))
    _BUILDERS[spec.kind](rows, fig)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> None:
    """Write the figure as a PNG; identical inputs give identical bytes."""
    fig = build_figure(spec)
    fig.savefig(spec.output, format="png", dpi=110,
                metadata={"Software": None})
