"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored; unknown keys and malformed
values are errors that name the line. Relative paths resolve against the
config file's directory.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .forecast_eval import ForecastRule
from .panel_data import PanelDataError, Quarter
from .td_learning import ARCHITECTURES, TrainConfig


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("auto", "none", "") else float(text)


def _architectures(text: str) -> tuple[str, ...]:
    items = tuple(a.strip() for a in text.split(",") if a.strip())
    for a in items:
        if a not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {a!r}")
    return items


def _quarter(text: str) -> Quarter:
    try:
        return Quarter.parse(text)
    except PanelDataError as exc:
        raise ValueError(str(exc)) from None


@dataclass(frozen=True)
class Key:
    name: str
    parse: Callable[[str], Any]
    default: str
    help: str


KEYS: tuple[Key, ...] = (
    Key("data", str, "synthetic",
        "panel CSV path, or 'synthetic' to generate a panel from the synth_* keys"),
    Key("target", str, "GDP", "target indicator name"),
    Key("test_country", str, "PT", "country held out for testing"),
    Key("ols_cutoff", _quarter, "2014Q4", "last quarter (inclusive) of OLS training; later quarters are the test window"),
    Key("output_dir", str, "results", "directory for the run's artifacts"),
    Key("architectures", _architectures, "network,linear", "comma-separated TD models to train, in report order"),
    Key("alpha", float, "0.9", "discount factor, strictly between 0 and 1"),
    Key("gamma0", float, "0.1", "initial step size"),
    Key("decay_tau", _optional_float, "auto", "step-size decay scale in updates; auto = 10 x transition count"),
    Key("epochs", int, "100", "sweeps over the training transitions"),
    Key("shuffle", _bool, "true", "shuffle transitions each epoch"),
    Key("seed", int, "0", "master seed (init = seed, shuffle = seed+1, synthetic data = seed+100)"),
    Key("activation", str, "relu", "network activation: relu or logistic"),
    Key("hidden_width", int, "16", "network hidden nodes"),
    Key("network_features", str, "tensor_degree2", "network feature map: raw, raw_with_bias, tensor_degree2"),
    Key("linear_features", str, "raw_with_bias", "linear feature map: raw, raw_with_bias, tensor_degree2"),
    Key("strict_listing_order", _bool, "false", "scale the hidden update by the already-updated output weights"),
    Key("forecast_rule", str, "direct_score", "score-to-level rule: direct_score or incremental_root"),
    Key("sign_heuristic", str, "previous_change", "incremental_root sign: previous_change or always_positive"),
    Key("log_every", int, "10", "keep every n-th update in the training log"),
    Key("synth_countries", int, "27", "synthetic panel: number of countries"),
    Key("synth_quarters", int, "96", "synthetic panel: quarters per country"),
    Key("synth_indicators", int, "6", "synthetic panel: state indicators"),
    Key("synth_structure", str, "nonlinear", "synthetic panel: linear or nonlinear target"),
    Key("synth_noise", float, "0.01", "synthetic panel: target noise scale"),
    Key("synth_start", _quarter, "2000Q1", "synthetic panel: first quarter"),
)  # fmt: skip
KEY_INDEX = {k.name: k for k in KEYS}
SYNTH_SEED_OFFSET = 100


@dataclass(frozen=True)
class RunConfig:
    values: dict[str, Any]
    raw: dict[str, str]
    base_dir: Path

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def data_path(self) -> Path | None:
        if self["data"] == "synthetic":
            return None
        return (self.base_dir / self["data"]).resolve()

    @property
    def output_dir(self) -> Path:
        return (self.base_dir / self["output_dir"]).resolve()

    def train_configs(self) -> list[tuple[TrainConfig, ForecastRule]]:
        rule = ForecastRule(self["forecast_rule"], self["sign_heuristic"])
        out = []
        for arch in self["architectures"]:
            out.append((
                TrainConfig(
                    architecture=arch,
                    alpha=self["alpha"],
                    gamma0=self["gamma0"],
                    decay_tau=self["decay_tau"],
                    epochs=self["epochs"],
                    shuffle=self["shuffle"],
                    seed=self["seed"],
                    activation=self["activation"],
                    feature_kind=self["network_features" if arch == "network" else "linear_features"],
                    hidden_width=self["hidden_width"],
                    strict_listing_order=self["strict_listing_order"],
                    log_every=self["log_every"],
                ),
                rule,
            ))
        return out

    def echo(self) -> dict[str, str]:
        return {f"config.{k.name}": self.raw[k.name] for k in KEYS}


def parse_config_text(text: str) -> dict[str, tuple[int, str]]:
    """Raw ``{key: (line, value)}`` pairs from a config document."""
    out: dict[str, tuple[int, str]] = {}
    for n, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {n}: expected 'key = value', got {line.strip()!r}")
        if key not in KEY_INDEX:
            raise ConfigError(f"line {n}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {n}: key {key!r} repeated (first on line {out[key][0]})")
        out[key] = (n, value.strip())
    return out


def build_config(
    entries: dict[str, tuple[int, str]],
    overrides: dict[str, str] | None = None,
    base_dir: str | Path = ".",
) -> RunConfig:
    raw = {k.name: k.default for k in KEYS}
    where = {k.name: "default" for k in KEYS}
    for key, (line, value) in entries.items():
        raw[key] = value
        where[key] = f"line {line}"
    for key, value in (overrides or {}).items():
        if key not in KEY_INDEX:
            raise ConfigError(f"unknown key {key!r}")
        raw[key] = value
        where[key] = "command line"
    values: dict[str, Any] = {}
    for k in KEYS:
        try:
            values[k.name] = k.parse(raw[k.name])
        except ValueError as exc:
            raise ConfigError(f"{where[k.name]}: invalid value for {k.name!r}: {exc}") from None
    cfg = RunConfig(values, raw, Path(base_dir))
    _validate(cfg, where)
    return cfg


def _validate(cfg: RunConfig, where: dict[str, str]) -> None:
    def fail(key: str, msg: str):
        raise ConfigError(f"{where[key]}: {key}: {msg}")

    if not 0.0 < cfg["alpha"] < 1.0:
        fail("alpha", "alpha must lie in (0,1)")
    if not cfg["architectures"]:
        fail("architectures", "at least one architecture is required")
    if len(set(cfg["architectures"])) != len(cfg["architectures"]):
        fail("architectures", "architectures must not repeat")
    try:
        cfg.train_configs()
    except ValueError as exc:
        raise ConfigError(f"invalid training configuration: {exc}") from None
    if cfg.data_path is not None and not cfg.data_path.is_file():
        fail("data", f"file not found: {cfg.data_path}")


def load_config(path: str | Path, overrides: dict[str, str] | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return build_config(parse_config_text(text), overrides, path.parent)


def render_config(cfg: RunConfig) -> str:
    return "".join(f"{k.name} = {cfg.raw[k.name]}\n" for k in KEYS)
