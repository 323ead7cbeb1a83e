"""Dataset handling: storage environments, CSV parsing, and splits.

Datasets are byte blobs that parse as CSV with a header row. They live in
one of two environments behind a single interface:

* ``local`` — named files under the store root.
* ``cas`` — a content-addressed store with immutable, hash-named objects
  (the offline stand-in for a remote content-addressed file network). A
  ``cas://`` link embeds the SHA-256 of the bytes, so every retrieval is
  integrity-checked and any single-bit corruption is detected on load.

Column kinds are inferred once at parse time: a column is numeric iff every
non-empty cell parses as a finite decimal number, categorical otherwise.
Blank cells in numeric columns survive parsing (they become missing values)
but are rejected with an explicit error the moment numeric data is actually
consumed, e.g. when a training matrix is built; silent imputation is never
performed.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DatastoreError(Exception):
    """Base class for dataset handling failures."""


class DuplicateDatasetError(DatastoreError):
    """ds_name is already registered."""


class DatasetParseError(DatastoreError):
    """Bytes do not parse as rectangular CSV with a header."""


class EmptyDatasetError(DatastoreError):
    """CSV has a header but zero data rows."""


class MissingObjectError(DatastoreError):
    """Link does not resolve to stored bytes."""


class IntegrityError(DatastoreError):
    """Retrieved bytes do not hash to the content address in the link."""


class UnknownAttributeError(DatastoreError):
    """Named column does not exist in the frame."""


class SplitRangeError(DatastoreError):
    """sub_split_value is outside the range of distinct attribute values."""


class MissingValueError(DatastoreError):
    """A numeric cell is blank where a number is required."""


def _parse_number(cell: str) -> float | None:
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


@dataclass
class TableFrame:
    """A parsed, rectangular table. Numeric cells hold float or None (blank)."""

    columns: list[str]
    kinds: dict[str, str]  # column -> "numeric" | "categorical"
    rows: list[tuple]

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        if name not in self.kinds:
            raise UnknownAttributeError(f"no column named {name!r}")
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def numeric_columns(self) -> list[str]:
        return [c for c in self.columns if self.kinds[c] == "numeric"]

    def numeric_matrix(self, names: list[str]) -> np.ndarray:
        """Rows x columns float matrix; blank numeric cells are an error."""
        indices = []
        for name in names:
            if self.kinds.get(name) != "numeric":
                raise UnknownAttributeError(f"column {name!r} is not numeric")
            indices.append(self.columns.index(name))
        out = np.empty((len(self.rows), len(indices)), dtype=np.float64)
        for r, row in enumerate(self.rows):
            for c, idx in enumerate(indices):
                cell = row[idx]
                if cell is None:
                    raise MissingValueError(
                        f"row {r} has a blank cell in numeric column {names[c]!r}"
                    )
                out[r, c] = cell
        return out

    def take(self, row_indices: list[int]) -> "TableFrame":
        return TableFrame(
            columns=list(self.columns),
            kinds=dict(self.kinds),
            rows=[self.rows[i] for i in row_indices],
        )


def parse_csv(raw: bytes) -> TableFrame:
    """Parse header-first CSV (comma separated, \\n or \\r\\n) into a frame."""
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DatasetParseError(f"dataset bytes are not UTF-8: {exc}") from exc
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        table = [row for row in reader if row]
    except csv.Error as exc:
        raise DatasetParseError(f"CSV parse failure: {exc}") from exc
    if not table:
        raise DatasetParseError("no header row")
    header = [cell.strip() for cell in table[0]]
    if any(not name for name in header) or len(set(header)) != len(header):
        raise DatasetParseError("header must have unique, non-empty column names")
    data = table[1:]
    if not data:
        raise EmptyDatasetError("dataset has a header but no data rows")
    width = len(header)
    for i, row in enumerate(data):
        if len(row) != width:
            raise DatasetParseError(f"row {i} has {len(row)} cells, expected {width}")

    kinds: dict[str, str] = {}
    for c, name in enumerate(header):
        cells = [row[c] for row in data]
        non_empty = [cell for cell in cells if cell != ""]
        numeric = bool(non_empty) and all(_parse_number(cell) is not None for cell in non_empty)
        kinds[name] = "numeric" if numeric else "categorical"

    rows: list[tuple] = []
    for row in data:
        parsed = []
        for c, name in enumerate(header):
            cell = row[c]
            if kinds[name] == "numeric":
                parsed.append(None if cell == "" else _parse_number(cell))
            else:
                parsed.append(cell)
        rows.append(tuple(parsed))
    return TableFrame(columns=header, kinds=kinds, rows=rows)


def distinct_values(frame: TableFrame, attrib: str) -> list:
    """Distinct values of a column, sorted: lexicographically for
    categorical columns, numerically for numeric ones (None first)."""
    values = set(frame.column(attrib))
    if frame.kinds[attrib] == "numeric":
        has_none = None in values
        ordered: list = sorted(v for v in values if v is not None)
        return ([None] + ordered) if has_none else ordered
    return sorted(values)


def split_by_attribute(frame: TableFrame, attrib: str, value_index: int) -> TableFrame:
    """Rows whose ``attrib`` equals the ``value_index``-th sorted distinct
    value, original order preserved."""
    ordered = distinct_values(frame, attrib)
    if not 0 <= value_index < len(ordered):
        raise SplitRangeError(
            f"sub_split_value {value_index} out of range: {attrib!r} has "
            f"{len(ordered)} distinct values"
        )
    wanted = ordered[value_index]
    col = frame.column(attrib)
    keep = [i for i, v in enumerate(col) if v == wanted or (v is None and wanted is None)]
    return frame.take(keep)


def train_validation_split(frame: TableFrame, fraction: float = 0.8) -> tuple[TableFrame, TableFrame]:
    """Time-ordered prefix/suffix split: first ceil(fraction * n) rows train,
    the rest validate. No shuffling; these are time series."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    n = frame.row_count
    if n < 2:
        raise DatastoreError(f"need at least 2 rows to split, have {n}")
    cut = math.ceil(fraction * n)
    return frame.take(list(range(cut))), frame.take(list(range(cut, n)))


# ----------------------------------------------------------------------
# Storage environments
# ----------------------------------------------------------------------

ENVIRONMENTS = ("local", "cas")


class ObjectStore:
    """Byte storage across both environments under one root directory."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        (self.root / "local").mkdir(parents=True, exist_ok=True)
        (self.root / "cas").mkdir(parents=True, exist_ok=True)

    def put(self, data: bytes, environment: str, name: str = "") -> str:
        if environment == "cas":
            digest = hashlib.sha256(data).hexdigest()
            (self.root / "cas" / digest).write_bytes(data)
            return f"cas://{digest}"
        if environment == "local":
            if not name:
                raise DatastoreError("local environment needs an object name")
            path = self.root / "local" / name
            if not path.resolve().is_relative_to((self.root / "local").resolve()):
                raise DatastoreError(f"local name {name!r} escapes the store root")
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
            return f"local://{name}"
        raise DatastoreError(f"unknown environment {environment!r}, expected one of {ENVIRONMENTS}")

    def get(self, link: str) -> bytes:
        """Fetch bytes by link; cas:// retrievals verify the content hash."""
        if link.startswith("cas://"):
            digest = link[len("cas://"):]
            path = self.root / "cas" / digest
            if not path.is_file():
                raise MissingObjectError(f"no object stored at {link}")
            data = path.read_bytes()
            actual = hashlib.sha256(data).hexdigest()
            if actual != digest:
                raise IntegrityError(f"{link}: stored bytes hash to {actual}")
            return data
        if link.startswith("local://"):
            name = link[len("local://"):]
            path = self.root / "local" / name
            if not path.resolve().is_relative_to((self.root / "local").resolve()):
                raise DatastoreError(f"link {link!r} escapes the store root")
            if not path.is_file():
                raise MissingObjectError(f"no object stored at {link}")
            return path.read_bytes()
        raise DatastoreError(f"unrecognized link {link!r}")


# ----------------------------------------------------------------------
# Dataset registry
# ----------------------------------------------------------------------


@dataclass
class DatasetMeta:
    """Registry record linking a dataset name to its stored artifact."""

    ds_name: str
    ds_link: str
    ds_size: int
    uploader: str
    schema: list[tuple[str, str]]
    row_count: int
    time_attrib: str | None = None
    sub_split_attrib: str | None = None

    def to_json(self) -> str:
        obj = {
            "ds_name": self.ds_name,
            "ds_link": self.ds_link,
            "ds_size": self.ds_size,
            "uploader": self.uploader,
            "schema": [list(pair) for pair in self.schema],
            "row_count": self.row_count,
        }
        if self.time_attrib is not None:
            obj["time_attrib"] = self.time_attrib
        if self.sub_split_attrib is not None:
            obj["sub_split_attrib"] = self.sub_split_attrib
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "DatasetMeta":
        obj = json.loads(line)
        return cls(
            ds_name=obj["ds_name"],
            ds_link=obj["ds_link"],
            ds_size=int(obj["ds_size"]),
            uploader=obj["uploader"],
            schema=[tuple(pair) for pair in obj["schema"]],
            row_count=int(obj["row_count"]),
            time_attrib=obj.get("time_attrib"),
            sub_split_attrib=obj.get("sub_split_attrib"),
        )


class DatasetStore:
    """The dataset handler: save/load across environments plus the name
    registry, persisted one JSON object per line."""

    def __init__(self, root: str | Path, registry_path: str | Path | None = None) -> None:
        self.store = ObjectStore(root)
        self._lock = threading.RLock()
        self._registry: dict[str, DatasetMeta] = {}
        self._registry_path = Path(registry_path) if registry_path else None
        if self._registry_path and self._registry_path.is_file():
            for line in self._registry_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    meta = DatasetMeta.from_json(line)
                    self._registry[meta.ds_name] = meta

    def save_dataset(
        self,
        raw: bytes,
        ds_name: str,
        environment: str = "cas",
        uploader: str = "",
        time_attrib: str | None = None,
        sub_split_attrib: str | None = None,
    ) -> DatasetMeta:
        """Validate, store, and register a dataset. ds_size is the exact
        stored byte length (it feeds the dataset reward equation)."""
        with self._lock:
            if ds_name in self._registry:
                raise DuplicateDatasetError(f"dataset {ds_name!r} already registered")
            frame = parse_csv(raw)
            if time_attrib is not None and time_attrib not in frame.kinds:
                raise UnknownAttributeError(f"time_attrib {time_attrib!r} not in dataset")
            if sub_split_attrib is not None and sub_split_attrib not in frame.kinds:
                raise UnknownAttributeError(f"sub_split_attrib {sub_split_attrib!r} not in dataset")
            link = self.store.put(raw, environment, name=f"{ds_name}.csv")
            meta = DatasetMeta(
                ds_name=ds_name,
                ds_link=link,
                ds_size=len(raw),
                uploader=uploader,
                schema=[(c, frame.kinds[c]) for c in frame.columns],
                row_count=frame.row_count,
                time_attrib=time_attrib,
                sub_split_attrib=sub_split_attrib,
            )
            self._registry[ds_name] = meta
            if self._registry_path:
                with open(self._registry_path, "a", encoding="utf-8") as fh:
                    fh.write(meta.to_json() + "\n")
            return meta

    def load_dataset(self, ds_link: str) -> TableFrame:
        return parse_csv(self.store.get(ds_link))

    def fetch(self, ds_link: str) -> bytes:
        return self.store.get(ds_link)

    def get_meta(self, ds_name: str) -> DatasetMeta | None:
        with self._lock:
            return self._registry.get(ds_name)

    def list_datasets(self) -> list[DatasetMeta]:
        with self._lock:
            return list(self._registry.values())
