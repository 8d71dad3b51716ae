"""Figure rendering for sweep CSVs.

The input is the delimited output of the solver's sweep command; this module
deliberately knows nothing about the solver itself, only about the column
names.  Five figure kinds are supported:

``error_band``
    Min-max relative-error band with the mean as a line, one band per
    (strategy, Richardson step) series, against frequency.
``cond_sweep``
    Infinity-norm condition number per coupling strategy against frequency.
``cond_vs_eta``
    Condition number against the imaginary coupling constant, one curve per
    frequency; meant for sweeps over ``constant:<v>`` strategies.
``error_overlay``
    Mean relative error per (strategy, Richardson step) series against
    frequency, for before/after correction comparisons.
``residual``
    Mean residual magnitudes of the plain equation and of the coupled
    combination against frequency.

Rendering is a pure function of the CSV bytes: the Agg backend is forced,
series are drawn in sorted order, and the PNG writer's software tag is
stripped, so repeated renders of the same input are byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from importlib import resources

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["KINDS", "PlotSpec", "render"]

KINDS = ("error_band", "cond_sweep", "cond_vs_eta", "error_overlay", "residual")

_REQUIRED_COLUMNS = {
    "error_band": (
        "f_hz",
        "strategy",
        "richardson_w",
        "err_sphere_mean",
        "err_sphere_min",
        "err_sphere_max",
    ),
    "cond_sweep": ("f_hz", "strategy", "cond_inf"),
    "cond_vs_eta": ("f_hz", "strategy", "eta_im", "cond_inf"),
    "error_overlay": ("f_hz", "strategy", "richardson_w", "err_sphere_mean"),
    "residual": (
        "f_hz",
        "strategy",
        "richardson_w",
        "eps_bie_mean",
        "eps_combined_mean",
    ),
}


@dataclass(frozen=True)
class PlotSpec:
    """One figure: kind, input CSV paths, output image path, y scale."""

    kind: str
    inputs: tuple
    output: str
    logy: bool = True

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        if not self.inputs:
            raise ValueError("no input CSV given")


def _style() -> dict:
    text = resources.files("bemplot").joinpath("styles.json").read_text()
    return json.loads(text)


def _load_rows(spec: PlotSpec):
    required = _REQUIRED_COLUMNS[spec.kind]
    rows = []
    for path in spec.inputs:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = sorted(set(required) - set(header))
            if missing:
                raise ValueError(
                    f"CSV {path} is missing columns: {', '.join(missing)}"
                )
            file_rows = list(reader)
        if not file_rows:
            raise ValueError(f"no data rows in {path}")
        rows.extend(file_rows)
    return rows


def _series_label(strategy: str, w: str) -> str:
    return strategy if not w else f"{strategy}, w={w}"


def _color(style: dict, strategy: str) -> str:
    base = strategy.partition(":")[0]
    return style["colors"].get(base, style["colors"]["fallback"])


def _grouped(rows, key_fields, x_field, y_fields):
    """Sorted per-series columns: {key: (xs, [ys per y_field])}."""
    series = {}
    for row in rows:
        key = tuple(row[f] for f in key_fields)
        series.setdefault(key, []).append(
            (float(row[x_field]), [float(row[f]) for f in y_fields])
        )
    out = {}
    for key, points in series.items():
        points.sort(key=lambda p: p[0])
        xs = [p[0] for p in points]
        ys = [[p[1][i] for p in points] for i in range(len(y_fields))]
        out[key] = (xs, ys)
    return out


def _draw_error_band(ax, rows, style):
    series = _grouped(
        rows,
        ("strategy", "richardson_w"),
        "f_hz",
        ("err_sphere_mean", "err_sphere_min", "err_sphere_max"),
    )
    for (strategy, w) in sorted(series):
        xs, (mean, lo, hi) = series[(strategy, w)]
        color = _color(style, strategy)
        ax.fill_between(xs, lo, hi, color=color, alpha=style["band_alpha"], lw=0)
        ax.plot(
            xs,
            mean,
            color=color,
            ls="--" if w else "-",
            label=_series_label(strategy, w),
        )
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("relative error")


def _draw_cond_sweep(ax, rows, style):
    # Richardson variants repeat the condition number; keep one per (f, strategy).
    seen = set()
    unique = []
    for row in rows:
        key = (row["f_hz"], row["strategy"])
        if key not in seen:
            seen.add(key)
            unique.append(row)
    series = _grouped(unique, ("strategy",), "f_hz", ("cond_inf",))
    for (strategy,) in sorted(series):
        xs, (cond,) = series[(strategy,)]
        ax.plot(xs, cond, color=_color(style, strategy), label=strategy)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("condition number (inf norm)")


def _draw_cond_vs_eta(ax, rows, style):
    series = _grouped(rows, ("f_hz",), "eta_im", ("cond_inf",))
    for idx, (f_hz,) in enumerate(sorted(series, key=lambda k: float(k[0]))):
        xs, (cond,) = series[(f_hz,)]
        color = list(style["colors"].values())[idx % len(style["colors"])]
        ax.plot(xs, cond, marker="o", ms=3, color=color, label=f"{f_hz} Hz")
    ax.set_xlabel("Im(eta)")
    ax.set_ylabel("condition number (inf norm)")


def _draw_error_overlay(ax, rows, style):
    series = _grouped(
        rows, ("strategy", "richardson_w"), "f_hz", ("err_sphere_mean",)
    )
    for (strategy, w) in sorted(series):
        xs, (mean,) = series[(strategy, w)]
        ax.plot(
            xs,
            mean,
            color=_color(style, strategy),
            ls="--" if w else "-",
            marker="o",
            ms=3,
            label=_series_label(strategy, w),
        )
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("mean relative error")


def _draw_residual(ax, rows, style):
    series = _grouped(
        rows,
        ("strategy", "richardson_w"),
        "f_hz",
        ("eps_bie_mean", "eps_combined_mean"),
    )
    for (strategy, w) in sorted(series):
        xs, (bie, combined) = series[(strategy, w)]
        color = _color(style, strategy)
        label = _series_label(strategy, w)
        ax.plot(xs, bie, color=color, ls="-", label=f"{label}: plain residual")
        ax.plot(
            xs, combined, color=color, ls="--", label=f"{label}: combined residual"
        )
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("mean residual magnitude")


_DRAWERS = {
    "error_band": _draw_error_band,
    "cond_sweep": _draw_cond_sweep,
    "cond_vs_eta": _draw_cond_vs_eta,
    "error_overlay": _draw_error_overlay,
    "residual": _draw_residual,
}


def render(spec: PlotSpec) -> str:
    """Render one figure and return the output path."""
    spec.validate()
    rows = _load_rows(spec)
    style = _style()
    fig, ax = plt.subplots(figsize=tuple(style["figsize"]), dpi=style["dpi"])
    try:
        _DRAWERS[spec.kind](ax, rows, style)
        if spec.logy:
            ax.set_yscale("log")
        ax.grid(True, which="both", alpha=style["grid_alpha"])
        ax.legend(loc="best", fontsize="small")
        fig.tight_layout()
        # A null software tag keeps the PNG bytes independent of the
        # matplotlib version string.
        fig.savefig(spec.output, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    return spec.output
