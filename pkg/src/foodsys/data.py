"""Monthly commodity dataset: CSV schema, loading, validation.

CSV schema (exact header, UTF-8, comma-separated, empty cell = missing):

    month,breeding_herd,production_kg,imports_kg,exports_kg,price_p_per_kg

``month`` is ISO "YYYY-MM"; months must be unique and contiguous over the
file span. Values stay in their native units (head, kg/month, pence/kg);
no automatic unit conversion is attempted, only plausibility warnings.
New supplies are derived as production + imports - exports for months
where all three are present.
"""

from __future__ import annotations

import csv
import importlib.resources
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DomainError
from .model import DimensionalParams

__all__ = [
    "CSV_HEADER",
    "UK_CALIBRATION",
    "UK_CALIBRATION_C0",
    "Dataset",
    "ValidationFinding",
    "ValidationReport",
    "load_csv",
    "save_csv",
    "validate",
    "load_bundled_uk_pork",
    "june_december_indices",
]

CSV_HEADER = ("month", "breeding_herd", "production_kg", "imports_kg",
              "exports_kg", "price_p_per_kg")

# Calibration behind the bundled UK pork snapshot: monthly rates, kg and
# pence/kg deadweight; b is the 2015-2020 average cost of production and g
# the average slaughter weight times a 75% dressing yield. The herd level
# matches the mid-2015 breeding-female count.
UK_CALIBRATION = DimensionalParams(
    a=0.0086, b=138.3, e=0.0002, f=2.2712, g=82.4, w=0.2392, s=0.6703,
    k=0.3602, h=219478906.0, m=0.0937, q=132.0101, r=0.1514,
)
UK_CALIBRATION_C0 = 408000.0

SERIES_NAMES = ("herd", "new_supplies", "price", "production", "imports", "exports")

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")

# Plausibility ranges (warnings only): all-pig price in pence/kg deadweight
# and breeding herd in head.
PRICE_RANGE = (50.0, 300.0)
HERD_RANGE = (1e5, 1e6)


@dataclass(frozen=True)
class Dataset:
    """Partially observed monthly series, NaN marking missing cells.

    ``anchor`` is the "YYYY-MM" of month index 0; indices run 0..T-1
    contiguously. Series units: herd [head], new_supplies/production/
    imports/exports [kg/month], price [pence/kg].
    """

    anchor: str
    herd: np.ndarray
    new_supplies: np.ndarray
    price: np.ndarray
    production: np.ndarray
    imports: np.ndarray
    exports: np.ndarray

    def __post_init__(self):
        if not _MONTH_RE.match(self.anchor):
            raise DomainError(f"anchor must be 'YYYY-MM', got {self.anchor!r}")
        n = None
        for name in SERIES_NAMES:
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, arr)
            if arr.ndim != 1:
                raise DomainError(f"series {name} must be one-dimensional")
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise DomainError("all series must have equal length")
        if n == 0:
            raise DomainError("dataset must span at least one month")

    @property
    def n_months(self) -> int:
        return int(self.herd.size)

    @property
    def months(self) -> np.ndarray:
        return np.arange(self.n_months)

    def series(self, name: str) -> np.ndarray:
        if name not in SERIES_NAMES:
            raise DomainError(f"unknown series {name!r}")
        return getattr(self, name)

    def data_matrix(self) -> np.ndarray:
        """(6, T) array in the canonical series order, NaN = missing."""
        return np.vstack([getattr(self, name) for name in SERIES_NAMES])

    def t_obs(self) -> np.ndarray:
        return self.months.astype(np.float64)

    def n_observed(self) -> dict[str, int]:
        return {name: int(np.sum(~np.isnan(getattr(self, name))))
                for name in SERIES_NAMES}

    def total_observed(self) -> int:
        return sum(self.n_observed().values())

    def month_label(self, index: int) -> str:
        year, month = map(int, self.anchor.split("-"))
        total = (month - 1) + index
        return f"{year + total // 12:04d}-{total % 12 + 1:02d}"


def june_december_indices(anchor: str, n_months: int) -> np.ndarray:
    """Month indices falling in June or December (the herd survey months)."""
    match = _MONTH_RE.match(anchor)
    if not match:
        raise DomainError(f"anchor must be 'YYYY-MM', got {anchor!r}")
    start = int(match.group(2))
    months = (start - 1 + np.arange(n_months)) % 12 + 1
    return np.flatnonzero((months == 6) | (months == 12))


def _parse_cell(text: str, row: int, column: str) -> float:
    text = text.strip()
    if text == "":
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"non-numeric cell {text!r}", row=row, column=column) from None
    if not math.isfinite(value):
        raise DataError(f"non-finite cell {text!r}", row=row, column=column)
    if value < 0:
        raise DataError(f"negative value {value!r}", row=row, column=column)
    return value


def _month_ordinal(label: str, row: int) -> int:
    match = _MONTH_RE.match(label.strip())
    if not match:
        raise DataError(f"malformed month {label!r} (expected YYYY-MM)",
                        row=row, column="month")
    year, month = int(match.group(1)), int(match.group(2))
    if not 1 <= month <= 12:
        raise DataError(f"malformed month {label!r} (month {month} out of range)",
                        row=row, column="month")
    return year * 12 + (month - 1)


def load_csv(path) -> Dataset:
    """Load and derive a :class:`Dataset` from the documented CSV schema.

    Any malformed month, non-numeric cell, duplicate month or negative
    value raises :class:`DataError` naming the offending row and column.
    Rows may appear in any order; the span must be contiguous.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty file: missing header", row=1) from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise DataError(
                f"header {header!r} does not match schema {','.join(CSV_HEADER)}", row=1
            )
        records: dict[int, tuple[int, list[float]]] = {}
        for row_no, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(CSV_HEADER):
                raise DataError(
                    f"expected {len(CSV_HEADER)} cells, got {len(row)}", row=row_no
                )
            ordinal = _month_ordinal(row[0], row_no)
            if ordinal in records:
                raise DataError(f"duplicate month {row[0].strip()!r}",
                                row=row_no, column="month")
            values = [_parse_cell(row[i], row_no, CSV_HEADER[i]) for i in range(1, 6)]
            records[ordinal] = (row_no, values)

    if not records:
        raise DataError("no data rows", row=2)
    ordinals = sorted(records)
    first, last = ordinals[0], ordinals[-1]
    if last - first + 1 != len(ordinals):
        missing = sorted(set(range(first, last + 1)) - set(ordinals))[0]
        raise DataError(
            f"months not contiguous: {missing // 12:04d}-{missing % 12 + 1:02d} absent",
            column="month",
        )

    n = len(ordinals)
    herd = np.full(n, np.nan)
    production = np.full(n, np.nan)
    imports = np.full(n, np.nan)
    exports = np.full(n, np.nan)
    price = np.full(n, np.nan)
    for idx, ordinal in enumerate(ordinals):
        _, values = records[ordinal]
        herd[idx], production[idx], imports[idx], exports[idx], price[idx] = values

    # Derived only where production, imports and exports are all present.
    new_supplies = production + imports - exports
    anchor = f"{first // 12:04d}-{first % 12 + 1:02d}"
    return Dataset(anchor, herd, new_supplies, price, production, imports, exports)


def save_csv(data: Dataset, path) -> None:
    """Write the raw series back out; lossless round-trip with
    :func:`load_csv` including the missingness pattern."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for i in range(data.n_months):
            cells = [data.month_label(i)]
            for name in ("herd", "production", "imports", "exports", "price"):
                value = getattr(data, name)[i]
                cells.append("" if math.isnan(value) else repr(float(value)))
            writer.writerow(cells)


@dataclass(frozen=True)
class ValidationFinding:
    level: str  # "info" | "warning" | "fatal"
    series: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[ValidationFinding, ...]
    series_stats: dict = field(default_factory=dict)

    @property
    def fatal(self) -> bool:
        return any(f.level == "fatal" for f in self.findings)

    def to_dict(self) -> dict:
        return {
            "fatal": self.fatal,
            "findings": [
                {"level": f.level, "series": f.series, "message": f.message}
                for f in self.findings
            ],
            "series": self.series_stats,
        }


def validate(data: Dataset) -> ValidationReport:
    """Reporting-only checks: observation counts, gap patterns, ranges and
    the positivity required by the lognormal observation model."""
    findings: list[ValidationFinding] = []
    stats: dict[str, dict] = {}
    for name in SERIES_NAMES:
        series = getattr(data, name)
        observed = ~np.isnan(series)
        count = int(observed.sum())
        entry: dict = {"observed": count, "missing": int(data.n_months - count)}
        if count:
            present = series[observed]
            entry["min"] = float(present.min())
            entry["max"] = float(present.max())
            if np.any(present <= 0):
                findings.append(ValidationFinding(
                    "fatal", name,
                    "non-positive values violate the lognormal positivity requirement",
                ))
            gaps = np.diff(np.flatnonzero(observed))
            if np.any(gaps > 1):
                findings.append(ValidationFinding(
                    "info", name,
                    f"sparse series: observed every {int(np.max(gaps))} months at widest gap",
                ))
        stats[name] = entry

    if data.total_observed() == 0:
        findings.append(ValidationFinding("fatal", "*", "no observed series"))

    def _range_check(name: str, low: float, high: float):
        series = getattr(data, name)
        present = series[~np.isnan(series)]
        if present.size and (np.any(present < low) or np.any(present > high)):
            findings.append(ValidationFinding(
                "warning", name,
                f"values outside plausible range [{low:g}, {high:g}]; check units",
            ))

    _range_check("price", *PRICE_RANGE)
    _range_check("herd", *HERD_RANGE)
    return ValidationReport(tuple(findings), stats)


def load_bundled_uk_pork() -> Dataset:
    """The bundled UK pork monthly snapshot (2015-01 .. 2019-12).

    A model-consistent reconstruction calibrated to the public UK pork
    statistics (herd surveys each June/December, monthly production, trade
    and all-pig price); see data/README note in the repository root.
    """
    resource = importlib.resources.files("foodsys") / "_data" / "uk_pork_monthly.csv"
    with importlib.resources.as_file(resource) as path:
        return load_csv(path)
