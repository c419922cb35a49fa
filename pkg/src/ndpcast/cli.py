"""Command line: ``ndpcast validate | synth | run``.

Exit codes: 0 success, 1 validation failure (data or config), 2 runtime
failure including TD divergence.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from pathlib import Path

from .config import KEYS, SYNTH_SEED_OFFSET, ConfigError, RunConfig, build_config, load_config
from .experiment import (
    ExperimentError,
    environment_fingerprint,
    run_experiment,
    write_manifest,
    write_outputs,
)
from .forecast_eval import format_summary
from .panel_data import (
    PanelDataError,
    PanelDataset,
    build_transitions,
    parse_panel_csv,
    regularize,
    write_panel_csv,
)
from .synthetic import GENERATOR_VERSION, SyntheticSpec, generate_synthetic_panel
from .td_learning import DivergenceError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("ndpcast")


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def cmd_validate(path: str | Path, target: str = "GDP", out=None) -> int:
    out = out or sys.stdout
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        _err(f"cannot read {path}: {exc}")
        return EXIT_INVALID
    try:
        data = parse_panel_csv(raw, target=target)
        reg = regularize(data)
    except PanelDataError as exc:
        _err(str(exc))
        return EXIT_INVALID
    gaps = {c: s.gaps() for c, s in reg.series.items()}
    n_gaps = sum(len(g) for g in gaps.values())
    print(f"countries: {len(reg.countries)} ({', '.join(reg.countries)})", file=out)
    print(f"target: {reg.target_name}", file=out)
    print(f"indicators: {len(reg.indicators)} ({', '.join(reg.indicators)})", file=out)
    for c, s in reg.series.items():
        print(f"  {c}: {s.quarters[0]}..{s.quarters[-1]}, {len(s)} quarters, {len(gaps[c])} gap(s)", file=out)
    for d in reg.dropped:
        print(f"warning: {d.country} {d.quarter} dropped, missing {', '.join(d.missing)}", file=out)
    for c, pairs in gaps.items():
        for a, b in pairs:
            print(f"warning: gap in {c} between {a} and {b}", file=out)
    print(f"transitions: {len(build_transitions(reg))}", file=out)
    print(f"gap warnings: {n_gaps}", file=out)
    print(f"dropped quarters: {len(reg.dropped)}", file=out)
    return EXIT_OK


def synth_spec_from(cfg: RunConfig) -> SyntheticSpec:
    return SyntheticSpec(
        countries=cfg["synth_countries"],
        quarters=cfg["synth_quarters"],
        seed=cfg["seed"] + SYNTH_SEED_OFFSET,
        indicators=cfg["synth_indicators"],
        structure=cfg["synth_structure"],
        noise=cfg["synth_noise"],
        start=cfg["synth_start"],
        target=cfg["target"],
    )


def _load_data(cfg: RunConfig) -> tuple[PanelDataset, str]:
    if cfg.data_path is None:
        spec = synth_spec_from(cfg)
        return generate_synthetic_panel(spec), f"synthetic generator v{GENERATOR_VERSION} {spec}"
    raw = cfg.data_path.read_bytes()
    return parse_panel_csv(raw, target=cfg["target"]), f"sha256:{hashlib.sha256(raw).hexdigest()}"


def cmd_run(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    try:
        data, source = _load_data(cfg)
        dataset = regularize(data)
    except (PanelDataError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INVALID
    if cfg["test_country"] not in dataset.series:
        _err(f"test country {cfg['test_country']!r} not in dataset")
        return EXIT_INVALID

    manifest = {
        "data": str(cfg.data_path) if cfg.data_path else "synthetic",
        "data_fingerprint": source,
        "regularization": "per country and indicator over the full series, test period included",
        "seed.init": str(cfg["seed"]),
        "seed.shuffle": str(cfg["seed"] + 1),
        "seed.synthetic": str(cfg["seed"] + SYNTH_SEED_OFFSET),
        **{f"version.{k}": v for k, v in environment_fingerprint().items()},
        **cfg.echo(),
    }
    outdir = cfg.output_dir
    write_manifest(outdir, manifest)
    try:
        result = run_experiment(dataset, cfg["test_country"], cfg.train_configs(), cfg["ols_cutoff"])
        write_outputs(result, outdir)
    except DivergenceError as exc:
        _err(str(exc))
        return EXIT_RUNTIME
    except (ExperimentError, ValueError) as exc:
        _err(str(exc))
        return EXIT_RUNTIME
    print(
        f"{cfg['test_country']} test window {result.test_quarters[0]}..{result.test_quarters[-1]} "
        f"({len(result.test_quarters)} quarters), {result.n_transitions} training transitions",
        file=out,
    )
    print(format_summary(result.reports), file=out)
    print(f"outputs written to {outdir}", file=out)
    return EXIT_OK


def cmd_synth(cfg: RunConfig, path: str | Path, out=None) -> int:
    out = out or sys.stdout
    spec = synth_spec_from(cfg)
    write_panel_csv(generate_synthetic_panel(spec), path)
    print(f"wrote {spec.countries} countries x {spec.quarters} quarters to {path}", file=out)
    return EXIT_OK


def _add_key_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("config keys (each overrides the config file)")
    for k in KEYS:
        g.add_argument(
            f"--{k.name.replace('_', '-')}",
            dest=f"key_{k.name}",
            metavar="VALUE",
            help=f"{k.help} [default: {k.default}]",
        )


def _overrides(ns: argparse.Namespace) -> dict[str, str]:
    return {
        k.name: getattr(ns, f"key_{k.name}")
        for k in KEYS
        if getattr(ns, f"key_{k.name}", None) is not None
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ndpcast",
        description="TD(0) cost-to-go forecasting on panel data, with an OLS benchmark.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a panel CSV and report coverage and gaps")
    v.add_argument("data", help="panel CSV (country,quarter,indicator,value)")
    v.add_argument("--target", default="GDP", help="target indicator name [default: GDP]")

    s = sub.add_parser("synth", help="write a synthetic panel CSV")
    s.add_argument("output", help="CSV path to write")
    s.add_argument("--config", help="config file supplying synth_* keys and seed")
    _add_key_flags(s)

    r = sub.add_parser("run", help="train, evaluate and write the report directory")
    r.add_argument("--config", help="config file (flat 'key = value' lines)")
    _add_key_flags(r)
    return parser


def _resolve_config(ns) -> RunConfig:
    overrides = _overrides(ns)
    if ns.config:
        return load_config(ns.config, overrides)
    return build_config({}, overrides, Path.cwd())


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if ns.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if ns.command == "validate":
        return cmd_validate(ns.data, ns.target)
    try:
        cfg = _resolve_config(ns)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_INVALID
    if ns.command == "synth":
        return cmd_synth(cfg, ns.output)
    return cmd_run(cfg)


if __name__ == "__main__":
    sys.exit(main())
