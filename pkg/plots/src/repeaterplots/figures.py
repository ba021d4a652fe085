"""Renders the four figure kinds from repeatersim sweep CSVs.

All figures read the self-describing sweep tables (comment-prefixed
units line, one row per axis value x protocol x variant) and group
series by (protocol, k, growth limit, patch mode).  Rendering is a pure
function of the CSV contents.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = ["FigureSpec", "RenderResult", "render", "load_sweep", "KINDS"]

_BASE_COLUMNS = [
    "axis_value",
    "protocol",
    "k",
    "growth_limit",
    "patch_mode",
    "secret_key_rate_hz",
]

KINDS = {
    "skr-vs-distance": _BASE_COLUMNS,
    "rate-and-skf-vs-distance": _BASE_COLUMNS + ["raw_rate_hz", "secret_key_fraction"],
    "ratio-vs-dephasing": _BASE_COLUMNS + ["se_secret_key_rate_hz"],
    "skr-vs-merge-probability": _BASE_COLUMNS,
}

_X_LABELS = {
    "skr-vs-distance": "total distance (km)",
    "rate-and-skf-vs-distance": "total distance (km)",
    "ratio-vs-dephasing": "dephasing time (s)",
    "skr-vs-merge-probability": "merge success probability",
}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: input CSV, figure kind, output image, axis scales."""

    csv_path: str | Path
    kind: str
    out_path: str | Path
    log_x: bool | None = None  # kind default when None
    log_y: bool | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; know {sorted(KINDS)}")


@dataclass
class RenderResult:
    """What was drawn, for checking against the CSV contents."""

    out_path: Path
    series: list[str] = field(default_factory=list)
    points: int = 0
    x_range: tuple[float, float] = (0.0, 0.0)


def load_sweep(csv_path, required_columns) -> pd.DataFrame:
    frame = pd.read_csv(csv_path, comment="#")
    missing = [c for c in required_columns if c not in frame.columns]
    if missing:
        raise ValueError(f"{csv_path}: missing required columns {missing}")
    if frame.empty:
        raise ValueError(f"{csv_path}: no data rows to plot")
    for column in ("growth_limit", "patch_mode"):
        frame[column] = frame[column].fillna("")
    return frame


def _series_label(key) -> str:
    protocol, k, g_l, mode = key
    label = f"{protocol} k={k}"
    if protocol == "MB":
        if g_l != "":
            label += f" g_l={g_l:g}" if isinstance(g_l, float) else f" g_l={g_l}"
        if mode != "":
            label += f" {mode}"
    return label


def _grouped(frame: pd.DataFrame):
    keys = ["protocol", "k", "growth_limit", "patch_mode"]
    for key, group in frame.groupby(keys, dropna=False, sort=True):
        yield key, group.sort_values("axis_value")


def _new_axes(spec: FigureSpec, n_rows: int = 1):
    figure = Figure(figsize=(6.4, 4.2 * n_rows))
    FigureCanvasAgg(figure)
    return figure, figure.subplots(n_rows, 1)


def _finish(figure, spec: FigureSpec, result: RenderResult) -> RenderResult:
    figure.tight_layout()
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(out, dpi=150)
    result.out_path = out
    return result


def _scales(spec: FigureSpec, default_log_x: bool, default_log_y: bool):
    log_x = default_log_x if spec.log_x is None else spec.log_x
    log_y = default_log_y if spec.log_y is None else spec.log_y
    return log_x, log_y


def _plot_simple(spec: FigureSpec, frame: pd.DataFrame, y_column: str,
                 y_label: str, default_log_y: bool) -> RenderResult:
    figure, axes = _new_axes(spec)
    log_x, log_y = _scales(spec, default_log_x=False, default_log_y=default_log_y)
    result = RenderResult(Path(spec.out_path))
    for key, group in _grouped(frame):
        axes.plot(group["axis_value"], group[y_column], marker="o",
                  label=_series_label(key))
        result.series.append(_series_label(key))
        result.points += len(group)
    axes.set_xlabel(_X_LABELS[spec.kind])
    axes.set_ylabel(y_label)
    if log_x:
        axes.set_xscale("log")
    if log_y:
        axes.set_yscale("log")
    axes.legend(fontsize=8)
    axes.grid(True, alpha=0.3)
    result.x_range = (float(frame["axis_value"].min()), float(frame["axis_value"].max()))
    return _finish(figure, spec, result)


def _render_skr_vs_distance(spec, frame):
    return _plot_simple(spec, frame, "secret_key_rate_hz", "secret key rate (Hz)", True)


def _render_skr_vs_merge_probability(spec, frame):
    return _plot_simple(spec, frame, "secret_key_rate_hz", "secret key rate (Hz)", True)


def _render_rate_and_skf(spec, frame):
    figure, (ax_rate, ax_skf) = _new_axes(spec, n_rows=2)
    log_x, log_y = _scales(spec, default_log_x=False, default_log_y=True)
    result = RenderResult(Path(spec.out_path))
    for key, group in _grouped(frame):
        label = _series_label(key)
        ax_rate.plot(group["axis_value"], group["raw_rate_hz"], marker="o", label=label)
        ax_skf.plot(group["axis_value"], group["secret_key_fraction"], marker="o",
                    label=label)
        result.series.append(label)
        result.points += len(group)
    ax_rate.set_ylabel("raw rate (Hz)")
    if log_y:
        ax_rate.set_yscale("log")
    ax_skf.set_ylabel("secret key fraction")
    ax_skf.set_xlabel(_X_LABELS[spec.kind])
    for axes in (ax_rate, ax_skf):
        if log_x:
            axes.set_xscale("log")
        axes.grid(True, alpha=0.3)
        axes.legend(fontsize=8)
    result.x_range = (float(frame["axis_value"].min()), float(frame["axis_value"].max()))
    return _finish(figure, spec, result)


def _render_ratio_vs_dephasing(spec, frame):
    baseline = frame[frame["protocol"] == "SB"]
    merging = frame[frame["protocol"] == "MB"]
    if baseline.empty or merging.empty:
        raise ValueError("ratio figure needs both MB and SB rows")
    figure, axes = _new_axes(spec)
    log_x, log_y = _scales(spec, default_log_x=True, default_log_y=False)
    result = RenderResult(Path(spec.out_path))
    sb_rate = baseline.set_index(["axis_value", "k"])["secret_key_rate_hz"]
    xs_seen = []
    for key, group in _grouped(merging):
        xs, ratios = [], []
        for _, row in group.iterrows():
            denominator = sb_rate.get((row["axis_value"], row["k"]))
            if denominator is None or denominator == 0 or row["secret_key_rate_hz"] == 0:
                warnings.warn(
                    f"skipping T={row['axis_value']}, k={row['k']}: "
                    "ratio undefined where a protocol has zero key rate"
                )
                continue
            xs.append(row["axis_value"])
            ratios.append(row["secret_key_rate_hz"] / denominator)
        if not xs:
            continue
        axes.plot(xs, ratios, marker="o", label=_series_label(key))
        result.series.append(_series_label(key))
        result.points += len(xs)
        xs_seen.extend(xs)
    if not result.series:
        raise ValueError("no ratio points: every row had a zero key rate")
    axes.axhline(1.0, color="gray", linewidth=0.8, linestyle="--")
    axes.set_xlabel(_X_LABELS[spec.kind])
    axes.set_ylabel("secret key rate ratio MB / SB")
    if log_x:
        axes.set_xscale("log")
    if log_y:
        axes.set_yscale("log")
    axes.legend(fontsize=8)
    axes.grid(True, alpha=0.3)
    result.x_range = (min(xs_seen), max(xs_seen))
    return _finish(figure, spec, result)


_RENDERERS = {
    "skr-vs-distance": _render_skr_vs_distance,
    "rate-and-skf-vs-distance": _render_rate_and_skf,
    "ratio-vs-dephasing": _render_ratio_vs_dephasing,
    "skr-vs-merge-probability": _render_skr_vs_merge_probability,
}


def render(spec: FigureSpec) -> RenderResult:
    """Draw one figure; raises before writing anything on bad input."""
    frame = load_sweep(spec.csv_path, KINDS[spec.kind])
    return _RENDERERS[spec.kind](spec, frame)
