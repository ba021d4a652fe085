"""Run orchestration: seeded sample batches, parameter sweeps, CSV export.

Samples are partitioned into fixed-size chunks whose moment sums are
merged in index order, so results are identical for any worker count;
sample ``i`` always draws from the stream ``(seed, i)``.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from . import backend
from ._mc import PROTOCOL_MB, PROTOCOL_SB
from .config import PATCH_MIN_LIMITED, PATCH_MIN_UNLIMITED, ProtocolConfig
from .errors import ConfigError
from .keyrate_stats import RunStatistics, SampleMoments, statistics_from_moments
from .protocol_mb import SampleOutcome, record_to_outcome
from .traces import trace_to_json

__all__ = [
    "CHUNK_SIZE",
    "CSV_COLUMNS",
    "simulate",
    "SweepSpec",
    "apply_axis",
    "run_sweep",
    "sweep_rows",
    "write_csv",
    "result_row",
    "emit_trace_json",
]

CHUNK_SIZE = 8192

AXES = ("total_distance", "dephasing_time", "merge_probability")

CSV_COLUMNS = [
    "axis",
    "axis_value",
    "protocol",
    "k",
    "segments",
    "total_km",
    "segment_km",
    "p",
    "p_gen",
    "dephasing_time_s",
    "growth_limit",
    "patch_mode",
    "samples",
    "seed",
    "mean_rounds",
    "se_rounds",
    "e_x",
    "se_e_x",
    "e_z",
    "se_e_z",
    "raw_rate_hz",
    "secret_key_fraction",
    "secret_key_rate_hz",
    "se_secret_key_rate_hz",
    "max_gap",
    "mean_restarts",
]

UNITS_COMMENT = (
    "# units: distances in km, times in s, rates in Hz; "
    "QBERs and the secret key fraction are dimensionless"
)

_PROTOCOL_CODES = {"MB": PROTOCOL_MB, "SB": PROTOCOL_SB}


def _moment_args(protocol_code: int, cfg: ProtocolConfig, start: int, count: int):
    return (
        protocol_code,
        cfg.segments,
        cfg.resolved_p_gen,
        cfg.p,
        cfg.growth_limit,
        cfg.patch_min_segments,
        cfg.max_rounds,
        cfg.dephasing_time,
        cfg.round_seconds,
        cfg.seed,
        start,
        count,
    )


def _chunk_moments(args) -> SampleMoments:
    return backend.sample_moments(*args)


def simulate(protocol: str, cfg: ProtocolConfig, workers: int = 1) -> RunStatistics:
    """Run ``cfg.samples`` seeded samples of one protocol and aggregate."""
    code = _PROTOCOL_CODES.get(protocol)
    if code is None:
        raise ConfigError(f"protocol must be MB or SB, got {protocol!r}")
    chunks = [
        _moment_args(code, cfg, start, min(CHUNK_SIZE, cfg.samples - start))
        for start in range(0, cfg.samples, CHUNK_SIZE)
    ]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_moments, chunks))
    else:
        parts = [_chunk_moments(args) for args in chunks]
    moments = parts[0]
    for part in parts[1:]:
        moments = moments.merge(part)
    return statistics_from_moments(moments, cfg.resolved_segment_km)


@dataclass(frozen=True)
class SweepSpec:
    """One experiment axis swept over explicit values.

    MB is run once per (g_l, patch_mode) variant; SB ignores both, so it
    contributes a single series per axis value.
    """

    axis: str
    values: tuple[float, ...]
    fixed: ProtocolConfig
    protocols: tuple[str, ...] = ("MB", "SB")
    variants: tuple[tuple[int, str], ...] = ((1, "limited"),)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            raise ConfigError("sweep needs at least one axis value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("axis values must be strictly increasing")
        for protocol in self.protocols:
            if protocol not in _PROTOCOL_CODES:
                raise ConfigError(f"unknown protocol {protocol!r}")
        for _, mode in self.variants:
            if mode not in ("limited", "unlimited"):
                raise ConfigError(f"unknown patch mode {mode!r}")


def apply_axis(cfg: ProtocolConfig, axis: str, value: float) -> ProtocolConfig:
    if axis == "total_distance":
        return cfg.with_updates(total_km=value, segment_km=None)
    if axis == "dephasing_time":
        return cfg.with_updates(dephasing_time=value)
    if axis == "merge_probability":
        return cfg.with_updates(p=value)
    raise ConfigError(f"unknown axis {axis!r}")


def result_row(
    protocol: str,
    cfg: ProtocolConfig,
    stats: RunStatistics,
    axis: str = "",
    axis_value: float | str = "",
) -> dict:
    """A self-describing CSV row: full resolved parameter set plus results."""
    is_mb = protocol == "MB"
    return {
        "axis": axis,
        "axis_value": axis_value,
        "protocol": protocol,
        "k": cfg.k,
        "segments": cfg.segments,
        "total_km": cfg.resolved_total_km,
        "segment_km": cfg.resolved_segment_km,
        "p": cfg.p,
        "p_gen": cfg.resolved_p_gen,
        "dephasing_time_s": cfg.dephasing_time,
        "growth_limit": cfg.growth_limit if is_mb else "",
        "patch_mode": cfg.patch_mode if is_mb else "",
        "samples": stats.samples,
        "seed": cfg.seed,
        "mean_rounds": stats.mean_rounds,
        "se_rounds": stats.se_rounds,
        "e_x": stats.e_x,
        "se_e_x": stats.se_e_x,
        "e_z": stats.e_z,
        "se_e_z": stats.se_e_z,
        "raw_rate_hz": stats.raw_rate_hz,
        "secret_key_fraction": stats.secret_key_fraction,
        "secret_key_rate_hz": stats.secret_key_rate_hz,
        "se_secret_key_rate_hz": stats.se_secret_key_rate_hz,
        "max_gap": stats.max_gap,
        "mean_restarts": stats.mean_restarts,
    }


def sweep_rows(spec: SweepSpec, workers: int = 1) -> list[dict]:
    rows = []
    for value in spec.values:
        base = apply_axis(spec.fixed, spec.axis, value)
        for protocol in spec.protocols:
            if protocol == "MB":
                for g_l, mode in spec.variants:
                    patch_min = (
                        PATCH_MIN_LIMITED if mode == "limited" else PATCH_MIN_UNLIMITED
                    )
                    cfg = base.with_updates(
                        growth_limit=g_l, patch_min_segments=patch_min
                    )
                    stats = simulate(protocol, cfg, workers)
                    rows.append(result_row(protocol, cfg, stats, spec.axis, value))
            else:
                stats = simulate(protocol, base, workers)
                rows.append(result_row(protocol, base, stats, spec.axis, value))
    return rows


def write_csv(rows: list[dict], path_or_file) -> None:
    """Write rows with the units header comment; deterministic bytes."""

    def _write(stream) -> None:
        stream.write(UNITS_COMMENT + "\n")
        writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _fmt(row[key]) for key in CSV_COLUMNS})

    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "w", newline="") as stream:
            _write(stream)
    else:
        _write(path_or_file)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_sweep(spec: SweepSpec, csv_path, workers: int = 1) -> list[dict]:
    rows = sweep_rows(spec, workers)
    write_csv(rows, csv_path)
    return rows


def csv_text(rows: list[dict]) -> str:
    buffer = io.StringIO()
    write_csv(rows, buffer)
    return buffer.getvalue()


def emit_trace_json(protocol: str, cfg: ProtocolConfig, sample_index: int = 0) -> str:
    """The JSON trace (with storage rounds) of one seeded sample."""
    code = _PROTOCOL_CODES.get(protocol)
    if code is None:
        raise ConfigError(f"protocol must be MB or SB, got {protocol!r}")
    record = backend.run_record(
        code,
        cfg.segments,
        cfg.resolved_p_gen,
        cfg.p,
        cfg.growth_limit,
        cfg.patch_min_segments,
        cfg.max_rounds,
        backend.sample_generator(cfg.seed, sample_index),
    )
    outcome: SampleOutcome = record_to_outcome(record)
    return trace_to_json(outcome.trace, outcome.ledger)


def statistics_dict(stats: RunStatistics) -> dict:
    return asdict(stats)
