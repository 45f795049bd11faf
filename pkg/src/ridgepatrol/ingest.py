"""Incident CSV loading, Part I filtering and seeded subsampling."""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, MalformedHeaderError, MissingFileError, ParameterError, SchemaError
from .geo import GeoPoint, GeoPointSet

DEFAULT_SCHEMA = {"type": "Primary Type", "lat": "Latitude", "lon": "Longitude", "date": "Date"}
DEFAULT_SAMPLE_SIZE = 5000

PART1_CATEGORIES = (
    "aggravated assault",
    "forcible rape",
    "criminal homicide",
    "robbery",
    "arson",
    "burglary",
    "larceny-theft",
    "motor vehicle theft",
)

_YEAR = re.compile(r"(?<!\d)(\d{4})(?!\d)")


@dataclass(frozen=True)
class IncidentRecord:
    primary_type: str
    location: GeoPoint

    def __post_init__(self):
        if not self.primary_type:
            raise DomainError("primary_type", self.primary_type)


@dataclass
class FilterReport:
    rows_read: int = 0
    rows_dropped_missing: int = 0
    rows_after_type_filter: int = 0
    per_type_counts: dict[str, int] = field(default_factory=dict)
    rows_outside_year: int = 0
    rows_dropped_unmapped: int = 0

    @property
    def rows_retained(self) -> int:
        """Rows in scope (year) with all retained fields present."""
        return self.rows_read - self.rows_outside_year - self.rows_dropped_missing

    def check(self):
        assert self.rows_after_type_filter <= self.rows_read - self.rows_dropped_missing
        assert sum(self.per_type_counts.values()) == self.rows_after_type_filter


def load_label_map(path: str | Path | None = None) -> dict[str, str]:
    """Parse a ``LABEL = category`` mapping file (defaults to the shipped one)."""
    if path is None:
        text = resources.files("ridgepatrol").joinpath("data/part1_labels.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    mapping = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"label map line {lineno}: expected 'LABEL = category'")
        key, value = (s.strip() for s in line.split("=", 1))
        mapping[key.upper()] = value
    return mapping


def _parse_coord(text: str | None) -> float | None:
    if text is None:
        return None
    text = text.strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        return None


def load_csv(path, schema: dict[str, str] | None = None, year: int | None = None):
    """Read incidents, dropping rows where type, latitude or longitude is unusable.

    ``year`` keeps only rows whose date column mentions that year; it is
    ignored when the file has no date column.  Returns ``(records, report)``.
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"no such file: {path}")
    records: list[IncidentRecord] = []
    report = FilterReport()
    counts: Counter[str] = Counter()
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedHeaderError(f"{path} is empty (no header row)") from None
        header = [h.strip() for h in header]
        if not any(header) or len(set(header)) != len(header):
            raise MalformedHeaderError(f"{path}: blank or duplicate column names in header")
        cols = {}
        for key in ("type", "lat", "lon"):
            if schema[key] not in header:
                raise SchemaError(f"{path}: column {schema[key]!r} not in header")
            cols[key] = header.index(schema[key])
        date_col = header.index(schema["date"]) if year is not None and schema.get("date") in header else None

        for row in reader:
            if not row:
                continue
            report.rows_read += 1
            if date_col is not None:
                m = _YEAR.search(row[date_col]) if date_col < len(row) else None
                if m is None or int(m.group(1)) != year:
                    report.rows_outside_year += 1
                    continue
            get = lambda k: row[cols[k]] if cols[k] < len(row) else None  # noqa: E731
            label = (get("type") or "").strip()
            lat, lon = _parse_coord(get("lat")), _parse_coord(get("lon"))
            try:
                if not label or lat is None or lon is None:
                    raise DomainError("row", row)
                rec = IncidentRecord(label, GeoPoint(lat, lon))
            except DomainError:
                report.rows_dropped_missing += 1
                continue
            records.append(rec)
            counts[label] += 1
    report.rows_after_type_filter = len(records)
    report.per_type_counts = dict(sorted(counts.items()))
    return records, report


def filter_part1(records: Sequence[IncidentRecord], mapping: dict[str, str] | None = None,
                 report: FilterReport | None = None):
    """Keep records whose label maps to a Part I category.

    Labels already equal to a canonical category are accepted, so the
    filter is idempotent.  The returned report's ``per_type_counts`` is keyed
    by category; unmapped rows are counted in ``rows_dropped_unmapped``.
    """
    mapping = load_label_map() if mapping is None else {k.upper(): v for k, v in mapping.items()}
    for cat in PART1_CATEGORIES:
        mapping.setdefault(cat.upper(), cat)
    kept = []
    counts: Counter[str] = Counter()
    for rec in records:
        cat = mapping.get(rec.primary_type.strip().upper())
        if cat is None:
            continue
        kept.append(rec)
        counts[cat] += 1
    out = FilterReport(
        rows_read=report.rows_read if report else len(records),
        rows_dropped_missing=report.rows_dropped_missing if report else 0,
        rows_outside_year=report.rows_outside_year if report else 0,
        rows_after_type_filter=len(kept),
        per_type_counts=dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))),
        rows_dropped_unmapped=len(records) - len(kept),
    )
    return kept, out


def to_point_set(records: Iterable[IncidentRecord]) -> GeoPointSet:
    return GeoPointSet.from_degrees([(r.location.lat, r.location.lon) for r in records])


def subsample(records, n: int = DEFAULT_SAMPLE_SIZE, seed: int = 0) -> GeoPointSet:
    """``n`` records drawn uniformly without replacement; coordinates only."""
    points = records if isinstance(records, GeoPointSet) else to_point_set(records)
    if not 1 <= n <= len(points):
        raise ParameterError(f"sample size must be in [1, {len(points)}], got {n!r}")
    idx = np.random.default_rng(seed).choice(len(points), size=n, replace=False)
    return points[idx]
