"""Panel CSV ingestion, per-country min-max regularization and transition extraction.

The input format is a long table with header ``country,quarter,indicator,value``.
One indicator is designated the target (GDP by default); all remaining
indicators form the raw state vector, ordered alphabetically.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, NamedTuple

import numpy as np

logger = logging.getLogger(__name__)

HEADER = ("country", "quarter", "indicator", "value")
_QUARTER_RE = re.compile(r"^(\d{4})Q(\d+)$")


class PanelDataError(ValueError):
    """Invalid panel input."""


class DuplicateKeyError(PanelDataError):
    pass


class DegenerateSeriesError(PanelDataError):
    """A (country, indicator) series has max == min and cannot be regularized."""

    def __init__(self, country: str, indicator: str, value: float):
        self.country = country
        self.indicator = indicator
        super().__init__(
            f"degenerate series for country {country!r}, indicator {indicator!r}: "
            f"constant value {value!r} (max == min)"
        )


class Quarter(NamedTuple):
    year: int
    q: int

    @classmethod
    def parse(cls, label: str) -> "Quarter":
        m = _QUARTER_RE.match(label.strip())
        if m is None:
            raise PanelDataError(f"unknown quarter format {label!r} (expected YYYYQn)")
        q = int(m.group(2))
        if not 1 <= q <= 4:
            raise PanelDataError(f"quarter index out of range in {label!r}")
        return cls(int(m.group(1)), q)

    @classmethod
    def from_ordinal(cls, n: int) -> "Quarter":
        return cls(n // 4, n % 4 + 1)

    @property
    def ordinal(self) -> int:
        return self.year * 4 + self.q - 1

    def shift(self, k: int) -> "Quarter":
        return Quarter.from_ordinal(self.ordinal + k)

    def __str__(self) -> str:
        return f"{self.year}Q{self.q}"


@dataclass(frozen=True)
class RegularizationParams:
    min: float
    max: float

    @property
    def range(self) -> float:
        return self.max - self.min

    def apply(self, values):
        return (np.asarray(values, dtype=float) - self.min) / (self.max - self.min)


@dataclass(frozen=True)
class DroppedQuarter:
    country: str
    quarter: Quarter
    missing: tuple[str, ...]


@dataclass(frozen=True)
class CountrySeries:
    """Complete quarters of one country, sorted chronologically.

    ``states`` has one row per quarter and one column per state indicator;
    ``target`` holds the target indicator for the same quarters.
    """

    country: str
    quarters: tuple[Quarter, ...]
    states: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        self.states.setflags(write=False)
        self.target.setflags(write=False)

    def __len__(self) -> int:
        return len(self.quarters)

    def index_of(self, quarter: Quarter) -> int:
        return self.quarters.index(quarter)

    def gaps(self) -> list[tuple[Quarter, Quarter]]:
        """Pairs of consecutive stored quarters that are not adjacent in time."""
        return [
            (a, b)
            for a, b in zip(self.quarters, self.quarters[1:])
            if b.ordinal - a.ordinal != 1
        ]


@dataclass(frozen=True)
class PanelDataset:
    target_name: str
    indicators: tuple[str, ...]
    series: dict[str, CountrySeries]
    regularization: dict[tuple[str, str], RegularizationParams] | None = None
    dropped: tuple[DroppedQuarter, ...] = field(default=())

    @property
    def countries(self) -> tuple[str, ...]:
        return tuple(self.series)

    @property
    def is_regularized(self) -> bool:
        return self.regularization is not None

    def __getitem__(self, country: str) -> CountrySeries:
        try:
            return self.series[country]
        except KeyError:
            raise KeyError(f"country {country!r} not in dataset") from None

    def n_observations(self) -> int:
        return sum(len(s) for s in self.series.values()) * (len(self.indicators) + 1)


@dataclass(frozen=True)
class Transition:
    """One adjacent-quarter move i -> j of a single country.

    ``u`` is the change of regularized target between the two quarters and
    ``g = u**2`` the quadratic adjustment cost.
    """

    x_i: np.ndarray
    x_j: np.ndarray
    u: float
    g: float
    country: str
    quarter_i: Quarter


def parse_quarter(label: str) -> Quarter:
    return Quarter.parse(label)


def _read_rows(raw: bytes | str | BinaryIO) -> Iterable[tuple[int, list[str]]]:
    if isinstance(raw, (bytes, bytearray)):
        text = bytes(raw).decode("utf-8-sig")
    elif isinstance(raw, str):
        text = raw
    else:
        text = raw.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text))
    for row in reader:
        yield reader.line_num, row


def parse_panel_csv(raw: bytes | str | BinaryIO, target: str = "GDP") -> PanelDataset:
    """Parse a long-format panel CSV into a validated, unregularized dataset.

    Quarters missing one or more indicators are dropped for that country and
    recorded in ``dataset.dropped``.
    """
    cells: dict[tuple[str, Quarter, str], float] = {}
    seen_header = False
    for line, row in _read_rows(raw):
        if not row or all(not c.strip() for c in row):
            continue
        if not seen_header:
            if tuple(c.strip() for c in row) != HEADER:
                raise PanelDataError(
                    f"line {line}: expected header {','.join(HEADER)!r}, got {','.join(row)!r}"
                )
            seen_header = True
            continue
        if len(row) != 4:
            raise PanelDataError(f"line {line}: malformed row, expected 4 fields, got {len(row)}")
        country, qlabel, indicator, value = (c.strip() for c in row)
        if not country or not indicator:
            raise PanelDataError(f"line {line}: empty country or indicator")
        try:
            quarter = Quarter.parse(qlabel)
        except PanelDataError as exc:
            raise PanelDataError(f"line {line}: {exc}") from None
        try:
            x = float(value)
        except ValueError:
            raise PanelDataError(f"line {line}: malformed value {value!r}") from None
        if not math.isfinite(x):
            raise PanelDataError(f"line {line}: non-finite value {value!r}")
        key = (country, quarter, indicator)
        if key in cells:
            raise DuplicateKeyError(
                f"line {line}: duplicate key ({country},{quarter},{indicator})"
            )
        cells[key] = x
    if not seen_header:
        raise PanelDataError("empty input: missing header")
    if not cells:
        raise PanelDataError("no observations")
    return _assemble(cells, target)


def read_panel_csv(path: str | Path, target: str = "GDP") -> PanelDataset:
    with open(path, "rb") as fh:
        return parse_panel_csv(fh.read(), target=target)


def _assemble(cells: dict[tuple[str, Quarter, str], float], target: str) -> PanelDataset:
    by_country: dict[str, set[str]] = {}
    quarters: dict[str, set[Quarter]] = {}
    for country, quarter, indicator in cells:
        by_country.setdefault(country, set()).add(indicator)
        quarters.setdefault(country, set()).add(quarter)

    all_indicators = set().union(*by_country.values())
    if target not in all_indicators:
        raise PanelDataError(f"target indicator {target!r} not present in data")
    for country, inds in sorted(by_country.items()):
        if inds != all_indicators:
            missing = sorted(all_indicators - inds)
            raise PanelDataError(
                f"country {country!r} lacks indicator(s) {', '.join(missing)} entirely"
            )
    indicators = tuple(sorted(all_indicators - {target}))
    if not indicators:
        raise PanelDataError("no state indicators besides the target")
    columns = indicators + (target,)

    series: dict[str, CountrySeries] = {}
    dropped: list[DroppedQuarter] = []
    for country in sorted(by_country):
        kept: list[Quarter] = []
        rows: list[list[float]] = []
        for quarter in sorted(quarters[country]):
            missing = tuple(c for c in columns if (country, quarter, c) not in cells)
            if missing:
                dropped.append(DroppedQuarter(country, quarter, missing))
                continue
            kept.append(quarter)
            rows.append([cells[(country, quarter, c)] for c in columns])
        if not kept:
            raise PanelDataError(f"country {country!r} has no complete quarter")
        mat = np.array(rows, dtype=float)
        series[country] = CountrySeries(country, tuple(kept), mat[:, :-1].copy(), mat[:, -1].copy())
    return PanelDataset(target, indicators, series, None, tuple(dropped))


def regularize(dataset: PanelDataset) -> PanelDataset:
    """Min-max scale every (country, indicator) series to [0, 1].

    Statistics come from the full stored series of each country, including
    any later test period.
    """
    if dataset.is_regularized:
        raise PanelDataError("dataset is already regularized")
    table: dict[tuple[str, str], RegularizationParams] = {}
    out: dict[str, CountrySeries] = {}
    names = dataset.indicators + (dataset.target_name,)
    for country, s in dataset.series.items():
        mat = np.column_stack([s.states, s.target])
        scaled = np.empty_like(mat)
        for k, name in enumerate(names):
            col = mat[:, k]
            lo, hi = float(col.min()), float(col.max())
            if not hi > lo:
                raise DegenerateSeriesError(country, name, lo)
            params = RegularizationParams(lo, hi)
            table[(country, name)] = params
            v = params.apply(col)
            # exact endpoints regardless of rounding in the division
            v[col == lo] = 0.0
            v[col == hi] = 1.0
            scaled[:, k] = np.clip(v, 0.0, 1.0)
        out[country] = CountrySeries(country, s.quarters, scaled[:, :-1].copy(), scaled[:, -1].copy())
    return PanelDataset(dataset.target_name, dataset.indicators, out, table, dataset.dropped)


def inverse_regularize(value, params: RegularizationParams):
    """Map a regularized value back to native units; values outside [0, 1] extrapolate."""
    return value * (params.max - params.min) + params.min


def build_transitions(
    dataset: PanelDataset,
    countries: Iterable[str] | None = None,
    exclude: Iterable[str] = (),
) -> list[Transition]:
    """Adjacent-quarter transitions for the selected countries.

    No transition spans a gap. Countries with fewer than two quarters are
    skipped with a logged warning.
    """
    if not dataset.is_regularized:
        raise PanelDataError("build_transitions requires a regularized dataset")
    selected = dataset.countries if countries is None else tuple(countries)
    excluded = set(exclude)
    out: list[Transition] = []
    for country in selected:
        if country in excluded:
            continue
        s = dataset[country]
        if len(s) < 2:
            logger.warning("country %s has %d quarter(s); skipped", country, len(s))
            continue
        for t in range(len(s) - 1):
            if s.quarters[t + 1].ordinal - s.quarters[t].ordinal != 1:
                continue
            u = float(s.target[t + 1] - s.target[t])
            out.append(Transition(s.states[t], s.states[t + 1], u, u * u, country, s.quarters[t]))
    return out


def regularization_rows(dataset: PanelDataset) -> list[tuple[str, str, float, float]]:
    if dataset.regularization is None:
        raise PanelDataError("dataset is not regularized")
    return [(c, i, p.min, p.max) for (c, i), p in sorted(dataset.regularization.items())]


def write_regularization_csv(dataset: PanelDataset, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["country", "indicator", "min", "max"])
        for c, i, lo, hi in regularization_rows(dataset):
            w.writerow([c, i, repr(lo), repr(hi)])


def panel_csv_text(dataset: PanelDataset) -> str:
    """Serialize a dataset back to the long CSV format (values in full precision)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    names = dataset.indicators + (dataset.target_name,)
    for country, s in dataset.series.items():
        for t, quarter in enumerate(s.quarters):
            row = list(s.states[t]) + [s.target[t]]
            for name, v in zip(names, row):
                w.writerow([country, str(quarter), name, repr(float(v))])
    return buf.getvalue()


def write_panel_csv(dataset: PanelDataset, path: str | Path) -> None:
    Path(path).write_text(panel_csv_text(dataset))
