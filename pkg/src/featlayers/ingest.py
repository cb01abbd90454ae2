"""Schema parsing and typed dataset loading.

Schema config grammar (line oriented, ``#`` starts a comment):

    id <column>                  # optional external-id column, reporting only

    feature <name>               # starts a feature block
    type <ftype>                 # numeric | nominal | date | time | location
    threshold <real> [unit]      # omitted for nominal features
    columns <col>[,<col2>]       # CSV column(s); location takes two

Threshold units, normalized at parse time:

    numeric   bare value (no unit word)
    date      days (default)
    time      slots (default) or hours (1 hour = 2 slots)
    location  miles (default) or km; the unit also fixes the sphere
              radius used by the haversine metric

When ``columns`` is omitted it defaults to the feature name, except for
location features which default to ``latitude,longitude``.  A location
value may also be packed into a single declared column as "lat,long".

Datasets are RFC-4180 CSV with a header row, UTF-8.  Empty cells load
as missing, as do unparseable numeric or location cells.  A malformed
date or time cell rejects the whole row; rejects are counted in the
load report.  Missing values never produce an edge for that feature.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
from dataclasses import dataclass, field

from .distance import EARTH_RADIUS_KM, EARTH_RADIUS_MILES

FEATURE_TYPES = ("numeric", "nominal", "date", "time", "location")


class ConfigError(ValueError):
    """Schema or expression configuration problem (CLI exit code 2)."""


class DataError(ValueError):
    """Dataset does not match its schema (CLI exit code 3)."""


@dataclass(frozen=True)
class FeatureSpec:
    """One declared feature: its type, similarity threshold and columns."""

    name: str
    ftype: str
    threshold: float | None = None
    columns: tuple[str, ...] = ()
    #: sphere radius for the location metric, in the threshold's unit
    radius: float = EARTH_RADIUS_MILES
    #: unit word as written in the config; thresholds are already
    #: normalized, so this is provenance and excluded from equality
    unit: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.ftype not in FEATURE_TYPES:
            raise ConfigError(f"feature {self.name!r}: unknown type {self.ftype!r}")
        if self.ftype == "nominal":
            if self.threshold is not None:
                raise ConfigError(
                    f"feature {self.name!r}: nominal features take no threshold"
                )
        elif self.threshold is not None and self.threshold < 0:
            raise ConfigError(
                f"feature {self.name!r}: threshold must be >= 0, got {self.threshold}"
            )
        if not self.columns:
            default = (
                ("latitude", "longitude")
                if self.ftype == "location"
                else (self.name,)
            )
            object.__setattr__(self, "columns", default)
        if self.ftype == "location" and len(self.columns) not in (1, 2):
            raise ConfigError(
                f"feature {self.name!r}: location takes one or two columns"
            )


@dataclass(frozen=True)
class SchemaConfig:
    """A parsed schema file: feature specs plus the optional id column."""

    features: tuple[FeatureSpec, ...]
    id_column: str | None = None


@dataclass
class InstanceTable:
    """Typed event instances; instance ids are dense row positions 0..N-1."""

    schema: list[FeatureSpec]
    columns: dict[str, list]
    external_ids: list[str] | None = None
    rejected: list[tuple[int, str]] = field(default_factory=list)

    @property
    def n_instances(self) -> int:
        if not self.schema:
            return 0
        return len(self.columns[self.schema[0].name])

    def column(self, name: str) -> list:
        return self.columns[name]

    def row(self, i: int) -> tuple:
        return tuple(self.columns[s.name][i] for s in self.schema)

    def feature(self, name: str) -> FeatureSpec:
        for s in self.schema:
            if s.name == name:
                return s
        raise KeyError(name)


# -- schema config ---------------------------------------------------------

# multiplicative factor to the type's base unit (slots, days, miles-or-km)
_UNIT_FACTORS = {
    "date": {"days": 1.0, "day": 1.0},
    "time": {"slots": 1.0, "slot": 1.0, "hours": 2.0, "hour": 2.0},
    "location": {"miles": 1.0, "mile": 1.0, "mi": 1.0, "km": 1.0},
}


def _finish_block(block: dict) -> FeatureSpec:
    name = block["name"]
    if "ftype" not in block:
        raise ConfigError(f"line {block['line']}: feature {name!r} has no type")
    ftype = block["ftype"]
    threshold = block.get("threshold")
    unit = block.get("unit")
    radius = EARTH_RADIUS_MILES
    if unit is not None:
        where = f"line {block['threshold_line']}: feature {name!r}"
        factors = _UNIT_FACTORS.get(ftype)
        if factors is None:
            raise ConfigError(f"{where}: type {ftype!r} takes a bare threshold")
        factor = factors.get(unit)
        if factor is None:
            raise ConfigError(f"{where}: unknown unit {unit!r}")
        threshold = threshold * factor
    if ftype == "location" and unit == "km":
        radius = EARTH_RADIUS_KM
    return FeatureSpec(
        name=name,
        ftype=ftype,
        threshold=threshold,
        columns=tuple(block.get("columns", ())),
        radius=radius,
        unit=unit,
    )


def parse_schema_config(config_text: str) -> SchemaConfig:
    """Parse schema config text into feature specs and the id column."""
    blocks: list[dict] = []
    seen: set[str] = set()
    current: dict | None = None
    id_column: str | None = None

    for lineno, raw in enumerate(config_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        key = parts[0].lower()
        rest = parts[1].strip() if len(parts) > 1 else ""
        if key == "id":
            if not rest:
                raise ConfigError(f"line {lineno}: id needs a column name")
            id_column = rest
            continue
        if key == "feature":
            if not rest:
                raise ConfigError(f"line {lineno}: feature needs a name")
            if rest in seen:
                raise ConfigError(f"line {lineno}: duplicate feature {rest!r}")
            seen.add(rest)
            current = {"name": rest, "line": lineno}
            blocks.append(current)
            continue
        if current is None:
            raise ConfigError(f"line {lineno}: {key!r} before any feature block")
        name = current["name"]
        if key == "type":
            if rest not in FEATURE_TYPES:
                raise ConfigError(
                    f"line {lineno}: feature {name!r}: unknown type {rest!r}"
                )
            current["ftype"] = rest
        elif key == "threshold":
            words = rest.split()
            if not words:
                raise ConfigError(f"line {lineno}: feature {name!r}: empty threshold")
            try:
                value = float(words[0])
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: feature {name!r}: bad threshold {words[0]!r}"
                ) from None
            if value < 0:
                raise ConfigError(
                    f"line {lineno}: feature {name!r}: negative threshold {value}"
                )
            current["threshold"] = value
            current["unit"] = words[1].lower() if len(words) > 1 else None
            current["threshold_line"] = lineno
        elif key == "columns":
            cols = tuple(c.strip() for c in rest.split(",") if c.strip())
            if not cols:
                raise ConfigError(f"line {lineno}: feature {name!r}: empty columns")
            current["columns"] = cols
        else:
            raise ConfigError(f"line {lineno}: unknown directive {key!r}")

    features = tuple(_finish_block(b) for b in blocks)
    if not features:
        raise ConfigError("schema declares no features")
    return SchemaConfig(features=features, id_column=id_column)


def parse_schema(config_text: str) -> list[FeatureSpec]:
    """Parse schema config text into FeatureSpecs, in declaration order."""
    return list(parse_schema_config(config_text).features)


# -- dataset loading --------------------------------------------------------

def _parse_date(text: str) -> _dt.date:
    return _dt.date.fromisoformat(text.strip())


def _parse_time(text: str) -> tuple[int, int]:
    # HH:MM with an optional :SS tail; seconds are discarded
    parts = text.strip().split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"bad time {text!r}")
    hh, mm = int(parts[0]), int(parts[1])
    if not (0 <= hh <= 23 and 0 <= mm <= 59):
        raise ValueError(f"bad time {text!r}")
    return (hh, mm)


def _parse_cell(spec: FeatureSpec, cells: list[str]):
    """Parse one feature value from its cell(s); None means missing.

    Raises ValueError only for a malformed date/time, which rejects
    the whole row.  Other unparseable cells degrade to missing.
    """
    if spec.ftype == "location":
        if len(cells) == 2:
            lat_s, lon_s = cells
        else:
            pieces = cells[0].split(",")
            if len(pieces) != 2:
                return None
            lat_s, lon_s = pieces
        if not lat_s.strip() or not lon_s.strip():
            return None
        try:
            return (float(lat_s), float(lon_s))
        except ValueError:
            return None
    text = cells[0]
    if not text.strip():
        return None
    if spec.ftype == "numeric":
        try:
            return float(text)
        except ValueError:
            return None
    if spec.ftype == "nominal":
        return text
    if spec.ftype == "date":
        return _parse_date(text)  # ValueError propagates: row rejected
    if spec.ftype == "time":
        return _parse_time(text)  # ValueError propagates: row rejected
    raise TypeError(spec.ftype)


def load_dataset(
    csv_text: str, schema: list[FeatureSpec], id_column: str | None = None
) -> InstanceTable:
    """Load CSV text into an InstanceTable.

    Row order defines instance ids.  Rows whose date/time cells are
    malformed beyond recovery are rejected and recorded on the table.
    """
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        header = []
    index = {name: i for i, name in enumerate(header)}

    for spec in schema:
        for col in spec.columns:
            if col not in index:
                raise DataError(
                    f"feature {spec.name!r}: column {col!r} missing from header"
                )
    if id_column is not None and id_column not in index:
        raise DataError(f"id column {id_column!r} missing from header")

    columns: dict[str, list] = {spec.name: [] for spec in schema}
    external_ids: list[str] | None = [] if id_column is not None else None
    rejected: list[tuple[int, str]] = []

    for rowno, row in enumerate(reader, start=2):  # header is line 1
        if not row or all(not c.strip() for c in row):
            continue
        parsed = {}
        bad = None
        for spec in schema:
            cells = [row[index[c]] if index[c] < len(row) else "" for c in spec.columns]
            try:
                parsed[spec.name] = _parse_cell(spec, cells)
            except ValueError as exc:
                bad = f"{spec.name}: {exc}"
                break
        if bad is not None:
            rejected.append((rowno, bad))
            continue
        for spec in schema:
            columns[spec.name].append(parsed[spec.name])
        if external_ids is not None:
            pos = index[id_column]
            external_ids.append(row[pos] if pos < len(row) else "")

    return InstanceTable(
        schema=list(schema),
        columns=columns,
        external_ids=external_ids,
        rejected=rejected,
    )


@dataclass
class LoadReport:
    rows: int
    accepted: int
    rejected: int
    missing: dict[str, int]

    def lines(self) -> list[str]:
        out = [
            f"rows {self.rows}",
            f"accepted {self.accepted}",
            f"rejected {self.rejected}",
        ]
        out += [f"missing[{name}] {n}" for name, n in self.missing.items()]
        return out


def validate_instances(table: InstanceTable) -> LoadReport:
    """Summarize a loaded table: row counts and per-feature missing cells."""
    accepted = table.n_instances
    missing = {
        spec.name: sum(1 for v in table.columns[spec.name] if v is None)
        for spec in table.schema
    }
    return LoadReport(
        rows=accepted + len(table.rejected),
        accepted=accepted,
        rejected=len(table.rejected),
        missing=missing,
    )


# -- canonical serialization ------------------------------------------------

def _format_value(spec: FeatureSpec, value) -> list[str]:
    width = 2 if spec.ftype == "location" and len(spec.columns) == 2 else 1
    if value is None:
        return [""] * width
    if spec.ftype == "numeric":
        return [repr(value)]
    if spec.ftype == "nominal":
        return [value]
    if spec.ftype == "date":
        return [value.isoformat()]
    if spec.ftype == "time":
        return [f"{value[0]:02d}:{value[1]:02d}"]
    if spec.ftype == "location":
        if width == 2:
            return [repr(value[0]), repr(value[1])]
        return [f"{value[0]!r},{value[1]!r}"]
    raise TypeError(spec.ftype)


def table_to_csv(table: InstanceTable, id_column: str | None = None) -> str:
    """Serialize a table back to canonical CSV (round-trips exactly)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header: list[str] = []
    if id_column is not None:
        header.append(id_column)
    for spec in table.schema:
        header.extend(spec.columns)
    writer.writerow(header)
    for i in range(table.n_instances):
        row: list[str] = []
        if id_column is not None:
            row.append(table.external_ids[i] if table.external_ids else str(i))
        for spec in table.schema:
            row.extend(_format_value(spec, table.columns[spec.name][i]))
        writer.writerow(row)
    return buf.getvalue()


def schema_to_config(schema: list[FeatureSpec], id_column: str | None = None) -> str:
    """Render FeatureSpecs back to schema config text."""
    lines: list[str] = []
    if id_column is not None:
        lines.append(f"id {id_column}")
        lines.append("")
    for spec in schema:
        lines.append(f"feature {spec.name}")
        lines.append(f"type {spec.ftype}")
        if spec.threshold is not None:
            # thresholds were normalized to base units at parse time,
            # except the location unit which fixes the sphere radius
            if spec.ftype == "location" and spec.unit == "km":
                lines.append(f"threshold {spec.threshold:g} km")
            else:
                lines.append(f"threshold {spec.threshold:g}")
        lines.append("columns " + ",".join(spec.columns))
        lines.append("")
    return "\n".join(lines)
