"""Command line interface: run, sweep, validate, emit-trace.

Configuration comes from an optional JSON file (keys matching
:class:`~repeatersim.config.ProtocolConfig` plus ``protocol``) with
command line flags taking precedence.  See the README for the schema.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__, backend, runner, validation
from .config import (
    PATCH_MIN_LIMITED,
    PATCH_MIN_UNLIMITED,
    ProtocolConfig,
)
from .errors import ConfigError, RepeaterSimError

CONFIG_FIELDS = (
    "k",
    "total_km",
    "segment_km",
    "dephasing_time",
    "p",
    "p_gen",
    "attenuation_km",
    "growth_limit",
    "patch_min_segments",
    "samples",
    "seed",
    "max_rounds",
)


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--protocol", choices=("MB", "SB"), help="protocol to sample")
    parser.add_argument("--k", type=int, help="doubling levels; 2**k segments")
    parser.add_argument("--total-km", type=float, help="end-to-end distance L_T")
    parser.add_argument("--segment-km", type=float, help="segment length L0")
    parser.add_argument("--dephasing-time", type=float, help="memory dephasing time T in s")
    parser.add_argument("--p", type=float, help="merge/swap success probability")
    parser.add_argument("--p-gen", type=float, help="elementary generation probability")
    parser.add_argument("--attenuation-km", type=float, help="attenuation length L_att")
    parser.add_argument("--growth-limit", type=int, help="gap growth limit g_l")
    parser.add_argument(
        "--patch-mode",
        choices=("limited", "unlimited"),
        help="limited patches scopes above 4 segments, unlimited above 3",
    )
    parser.add_argument("--samples", type=int, help="Monte Carlo sample count")
    parser.add_argument("--seed", type=int, help="base RNG seed")
    parser.add_argument("--max-rounds", type=int, help="abort threshold per sample")
    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="worker processes (default: REPEATERSIM_WORKERS or 1)",
    )


def _load_config(args, defaults: dict | None = None) -> tuple[ProtocolConfig, str]:
    values: dict = dict(defaults or {})
    protocol = "MB"
    if args.config:
        with open(args.config) as fh:
            document = json.load(fh)
        unknown = set(document) - set(CONFIG_FIELDS) - {"protocol", "patch_mode"}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        protocol = document.pop("protocol", protocol)
        if "patch_mode" in document:
            mode = document.pop("patch_mode")
            document["patch_min_segments"] = (
                PATCH_MIN_LIMITED if mode == "limited" else PATCH_MIN_UNLIMITED
            )
        values.update(document)
    for field in CONFIG_FIELDS:
        override = getattr(args, field, None)
        if override is not None:
            values[field] = override
    if getattr(args, "patch_mode", None) is not None:
        values["patch_min_segments"] = (
            PATCH_MIN_LIMITED if args.patch_mode == "limited" else PATCH_MIN_UNLIMITED
        )
    if args.protocol is not None:
        protocol = args.protocol
    # a flag overriding one distance drops a stale file value of the other
    if values.get("total_km") is not None and values.get("segment_km") is not None:
        total_from_flag = getattr(args, "total_km", None) is not None
        segment_from_flag = getattr(args, "segment_km", None) is not None
        if total_from_flag and not segment_from_flag:
            values["segment_km"] = None
        elif segment_from_flag and not total_from_flag:
            values["total_km"] = None
    missing = [f for f in ("k", "dephasing_time", "p") if f not in values]
    if missing:
        raise ConfigError(f"missing required config fields: {missing}")
    try:
        cfg = ProtocolConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg, protocol


def _workers(args) -> int:
    if args.workers is not None:
        return max(1, args.workers)
    return max(1, int(os.environ.get("REPEATERSIM_WORKERS", "1")))


def _cmd_run(args) -> int:
    cfg, protocol = _load_config(args)
    stats = runner.simulate(protocol, cfg, _workers(args))
    row = runner.result_row(protocol, cfg, stats)
    if args.csv:
        runner.write_csv([row], args.csv)
    summary = {
        "protocol": protocol,
        "backend": backend.backend_name(),
        "config": {
            "k": cfg.k,
            "segments": cfg.segments,
            "total_km": cfg.resolved_total_km,
            "segment_km": cfg.resolved_segment_km,
            "dephasing_time": cfg.dephasing_time,
            "p": cfg.p,
            "p_gen": cfg.resolved_p_gen,
            "growth_limit": cfg.growth_limit,
            "patch_mode": cfg.patch_mode,
            "samples": cfg.samples,
            "seed": cfg.seed,
        },
        "statistics": runner.statistics_dict(stats),
    }
    text = json.dumps(summary, indent=2)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_sweep(args) -> int:
    values = tuple(float(v) for v in args.values.split(","))
    # the swept axis needs no base value; seed it with the first point
    axis_defaults = {
        "total_distance": {"total_km": values[0]},
        "dephasing_time": {"dephasing_time": values[0]},
        "merge_probability": {"p": values[0]},
    }[args.axis]
    cfg, _ = _load_config(args, defaults=axis_defaults)
    protocols = tuple(args.protocols.split(","))
    variants = []
    for item in args.variant or ["{}:{}".format(cfg.growth_limit, cfg.patch_mode)]:
        g_l, _, mode = item.partition(":")
        variants.append((int(g_l), mode or "limited"))
    spec = runner.SweepSpec(
        axis=args.axis,
        values=values,
        fixed=cfg,
        protocols=protocols,
        variants=tuple(variants),
    )
    rows = runner.run_sweep(spec, args.csv, _workers(args))
    print(f"wrote {len(rows)} rows to {args.csv}")
    return 0


def _cmd_validate(args) -> int:
    report = validation.run_validation(
        samples=args.samples, traces=args.traces, seed=args.seed
    )
    for line in report.lines():
        print(line)
    return 0 if report.passed else 1


def _cmd_emit_trace(args) -> int:
    cfg, protocol = _load_config(args)
    text = runner.emit_trace_json(protocol, cfg, args.sample_index)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote trace to {args.out}")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repeatersim",
        description="Monte Carlo simulator for merging-based and swapping-based "
        "quantum repeater chains",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one configuration")
    _add_config_arguments(p_run)
    p_run.add_argument("--csv", help="append-free CSV output path (one row)")
    p_run.add_argument("--json", help="JSON summary output path")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one axis, write a CSV table")
    _add_config_arguments(p_sweep)
    p_sweep.add_argument(
        "--axis",
        required=True,
        choices=runner.AXES,
        help="swept parameter",
    )
    p_sweep.add_argument("--values", required=True, help="comma-separated axis values")
    p_sweep.add_argument(
        "--protocols", default="MB,SB", help="comma-separated protocol list"
    )
    p_sweep.add_argument(
        "--variant",
        action="append",
        help="MB variant as g_l:patch_mode (repeatable), e.g. 1:limited",
    )
    p_sweep.add_argument("--csv", required=True, help="CSV output path")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser(
        "validate", help="noise engine vs dense oracle, samplers vs Markov chains"
    )
    p_val.add_argument("--samples", type=int, default=200_000)
    p_val.add_argument("--traces", type=int, default=200)
    p_val.add_argument("--seed", type=int, default=2024)
    p_val.set_defaults(func=_cmd_validate)

    p_emit = sub.add_parser("emit-trace", help="dump one sample's JSON trace")
    _add_config_arguments(p_emit)
    p_emit.add_argument("--sample-index", type=int, default=0)
    p_emit.add_argument("--out", help="output path (default: stdout)")
    p_emit.set_defaults(func=_cmd_emit_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RepeaterSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
