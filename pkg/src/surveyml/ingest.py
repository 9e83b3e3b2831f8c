"""Survey data ingestion: CSV, SAS Transport (XPT v5), and table merging.

Tables are stored columnar. Numeric cells live in float64 arrays with NaN
marking missing values; the original token or SAS missing letter for each
missing cell is retained in a per-column ``missing_codes`` map. Character
columns are passed through as object arrays and excluded from numeric
analytics.

The XPT reader/writer implements the SAS Transport version 5 layout:
80-byte records, a library header, one member with 140-byte NAMESTR
variable descriptors, and observation records holding 8-byte IBM
hexadecimal floats. Version 8/9 transport files are rejected.
"""

from __future__ import annotations

import csv
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IngestError

__all__ = [
    "Column",
    "Missing",
    "RawTable",
    "ibm_to_ieee",
    "ieee_to_ibm",
    "merge_tables",
    "normalize_missing",
    "read_csv",
    "read_xpt",
    "write_csv",
    "write_xpt",
]

_LIB_MAGIC = b"HEADER RECORD*******LIBRARY HEADER RECORD!!!!!!!"
_LIB_V8_MAGIC = b"HEADER RECORD*******LIBV8   HEADER RECORD!!!!!!!"
_MEMBER_MAGIC = b"HEADER RECORD*******MEMBER  HEADER RECORD!!!!!!!"
_MEMBER_V8_MAGIC = b"HEADER RECORD*******MEMBV8  HEADER RECORD!!!!!!!"
_DSCRPTR_MAGIC = b"HEADER RECORD*******DSCRPTR HEADER RECORD!!!!!!!"
_NAMESTR_MAGIC = b"HEADER RECORD*******NAMESTR HEADER RECORD!!!!!!!"
_OBS_MAGIC = b"HEADER RECORD*******OBS     HEADER RECORD!!!!!!!"

# Fixed creation stamp so identical tables serialize to identical bytes.
_DEFAULT_STAMP = "01JAN80:00:00:00"

_MISSING_LETTERS = frozenset(range(0x41, 0x5B)) | {0x2E, 0x5F}


@dataclass(frozen=True)
class Missing:
    """A missing cell; ``code`` is the raw token or SAS missing letter."""

    code: str | None = None


@dataclass
class Column:
    """One named column: float64 values (NaN = missing) or object strings."""

    name: str
    values: np.ndarray
    missing_codes: dict[int, str | None] = field(default_factory=dict)
    kind: str = "numeric"  # "numeric" | "char"

    def cell(self, i: int):
        """Cell view: a float for present numerics, else ``Missing``."""
        if self.kind == "char":
            return self.values[i]
        v = self.values[i]
        if math.isnan(v):
            return Missing(self.missing_codes.get(i))
        return float(v)

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class RawTable:
    """An ingested table: equal-length, uniquely named columns."""

    name: str
    columns: list[Column]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise IngestError(f"duplicate column names in table {self.name!r}")
        lengths = {len(c) for c in self.columns}
        if len(lengths) > 1:
            raise IngestError(f"columns of unequal length in table {self.name!r}")

    @property
    def row_count(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise IngestError(f"no column {name!r} in table {self.name!r}")

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)


# ---------------------------------------------------------------------------
# IBM hexadecimal float codec

def ibm_to_ieee(raw: bytes) -> float:
    """Decode an 8-byte IBM hexadecimal float to a Python float.

    Layout: sign bit, 7-bit excess-64 base-16 exponent, 56-bit fraction;
    value = (-1)^sign * 0.fraction_16 * 16^(exponent-64). Total function:
    the IBM range is a strict subset of float64, so no overflow can occur
    (a defensive clamp to +-inf is kept regardless).
    """
    if len(raw) != 8:
        raise IngestError(f"IBM float field must be 8 bytes, got {len(raw)}")
    u = int.from_bytes(raw, "big")
    fraction = u & ((1 << 56) - 1)
    if fraction == 0:
        return 0.0
    exponent = (u >> 56) & 0x7F
    value = math.ldexp(fraction, 4 * (exponent - 64) - 56)
    if math.isinf(value):  # unreachable for 8-byte input; kept as a guard
        value = math.inf
    return -value if u >> 63 else value


def ieee_to_ibm(value: float, overflow_counter: list | None = None) -> bytes:
    """Encode a float as a normalized 8-byte IBM hexadecimal float.

    NaN encodes as the '.' missing sentinel. Magnitudes beyond the IBM
    range (about 7.2e75) clamp to the extreme representable value and
    append to ``overflow_counter`` when one is supplied; underflow goes
    to zero the same way. Values whose base-2 exponent fits (all finite
    float64 within range) encode exactly, so read/write round-trips are
    bit-preserving.
    """
    if math.isnan(value):
        return b"\x2e" + b"\x00" * 7
    if value == 0.0:
        return b"\x00" * 8
    sign = 0x80 if value < 0 or (value == 0 and math.copysign(1, value) < 0) else 0
    mag = abs(value)
    if math.isinf(mag):
        if overflow_counter is not None:
            overflow_counter.append(value)
        return bytes([sign | 0x7F]) + b"\xff" * 7
    m, e = math.frexp(mag)  # mag = m * 2**e, m in [0.5, 1)
    exp16 = -(-e // 4)  # ceil(e / 4)
    ibm_exp = exp16 + 64
    if ibm_exp > 0x7F:
        if overflow_counter is not None:
            overflow_counter.append(value)
        return bytes([sign | 0x7F]) + b"\xff" * 7
    if ibm_exp < 0:
        if overflow_counter is not None:
            overflow_counter.append(value)
        return b"\x00" * 8
    fraction = int(math.ldexp(m, 56 + e - 4 * exp16))  # exact: shift <= 56
    return ((sign | ibm_exp) << 56 | fraction).to_bytes(8, "big")


def _decode_field(raw: bytes) -> tuple[float, str | None]:
    """Decode one observation field; returns (value, missing_code)."""
    first = raw[0]
    if first in _MISSING_LETTERS and not any(raw[1:]):
        if first == 0x2E:
            return math.nan, None
        return math.nan, chr(first)
    return ibm_to_ieee(raw), "__present__"


# ---------------------------------------------------------------------------
# CSV

def read_csv(path, schema: dict[str, str] | None = None,
             missing_values=None) -> RawTable:
    """Read an RFC-4180 CSV file with a header row into a RawTable.

    Numeric parsing is attempted for every column unless ``schema`` maps
    the column name to "char". Blank fields become missing with no code;
    unparsable tokens become missing with the raw token as the code.
    ``missing_values`` optionally maps numeric codes to missing, see
    ``normalize_missing``.
    """
    path = Path(path)
    schema = schema or {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise IngestError(f"{path}: empty file, header row required") from None
            raw_rows = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise IngestError(
                        f"{path}: ragged row at line {lineno}: "
                        f"{len(row)} fields, expected {len(header)}"
                    )
                raw_rows.append(row)
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc

    columns = []
    for j, name in enumerate(header):
        tokens = [r[j] for r in raw_rows]
        if schema.get(name) == "char":
            columns.append(Column(name, np.array(tokens, dtype=object), {}, "char"))
            continue
        values = np.empty(len(tokens))
        codes: dict[int, str | None] = {}
        for i, tok in enumerate(tokens):
            tok = tok.strip()
            if not tok:
                values[i] = math.nan
                codes[i] = None
                continue
            try:
                values[i] = float(tok)
            except ValueError:
                values[i] = math.nan
                codes[i] = tok
        columns.append(Column(name, values, codes))
    table = RawTable(path.stem, columns)
    if missing_values:
        table = normalize_missing(table, missing_values)
    return table


def write_csv(table: RawTable, path) -> None:
    """Write a table to CSV; floats use shortest round-trip formatting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.column_names)
        for i in range(table.row_count):
            row = []
            for col in table.columns:
                if col.kind == "char":
                    row.append(col.values[i])
                else:
                    v = col.values[i]
                    if math.isnan(v):
                        row.append("")
                    else:
                        row.append(repr(float(v)))
            writer.writerow(row)


def normalize_missing(table: RawTable, codes) -> RawTable:
    """Recode configured numeric values to missing, keeping them as codes.

    ``codes`` is either a set of numeric codes applied to every numeric
    column or a mapping of column name to a set of codes. Nothing is
    recoded by default anywhere in the package; refusal/don't-know codes
    must be named explicitly.
    """
    per_column = codes if isinstance(codes, dict) else {c.name: codes for c in table.columns}
    out = []
    for col in table.columns:
        wanted = per_column.get(col.name)
        if col.kind == "char" or not wanted:
            out.append(col)
            continue
        values = col.values.copy()
        missing = dict(col.missing_codes)
        hit = np.isin(values, list(wanted))
        for i in np.flatnonzero(hit):
            missing[int(i)] = repr(float(values[i]))
            values[i] = math.nan
        out.append(Column(col.name, values, missing, col.kind))
    return RawTable(table.name, out)


# ---------------------------------------------------------------------------
# SAS Transport v5

def _pad80(text: str) -> bytes:
    return text.encode("ascii").ljust(80)


def read_xpt(path, missing_values=None) -> RawTable:
    """Read the first member of a SAS Transport v5 file.

    Numeric fields (2-8 bytes, zero-extended to 8) are decoded from IBM
    hexadecimal floats; the SAS missing sentinels '.', '._' and '.A'-'.Z'
    map to missing cells carrying the letter as their code. Character
    variables pass through with trailing blanks stripped.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    if len(data) < 80 * 8:
        raise IngestError(f"{path}: too short for a transport file")
    if len(data) % 80:
        raise IngestError(f"{path}: truncated record, size not a multiple of 80")
    if data[:48] == _LIB_V8_MAGIC:
        raise IngestError(f"{path}: version 8/9 transport files are not supported")
    if data[:48] != _LIB_MAGIC:
        raise IngestError(f"{path}: bad magic, not a SAS transport file")

    pos = 240  # library header + two real header records
    if data[pos:pos + 48] == _MEMBER_V8_MAGIC:
        raise IngestError(f"{path}: version 8/9 transport files are not supported")
    if data[pos:pos + 48] != _MEMBER_MAGIC:
        raise IngestError(f"{path}: member header record missing")
    try:
        namestr_len = int(data[pos + 74:pos + 78])
    except ValueError:
        namestr_len = 140
    pos += 80
    if data[pos:pos + 48] != _DSCRPTR_MAGIC:
        raise IngestError(f"{path}: descriptor header record missing")
    pos += 80
    dsname = data[pos + 8:pos + 16].decode("ascii", "replace").strip()
    pos += 160  # two member descriptor records
    if data[pos:pos + 48] != _NAMESTR_MAGIC:
        raise IngestError(f"{path}: NAMESTR header record missing")
    try:
        nvars = int(data[pos + 48:pos + 58])
    except ValueError as exc:
        raise IngestError(f"{path}: unreadable variable count") from exc
    pos += 80

    namestr_bytes = nvars * namestr_len
    if pos + namestr_bytes > len(data):
        raise IngestError(f"{path}: truncated record in NAMESTR section")
    variables = []
    for k in range(nvars):
        ns = data[pos + k * namestr_len:pos + (k + 1) * namestr_len]
        ntype, _, length, varnum = struct.unpack(">hhhh", ns[:8])
        name = ns[8:16].decode("ascii", "replace").strip()
        npos = struct.unpack(">i", ns[84:88])[0]
        variables.append((varnum, name, ntype, length, npos))
    variables.sort(key=lambda v: v[4])
    pos += namestr_bytes
    if pos % 80:
        pos += 80 - pos % 80

    if data[pos:pos + 48] != _OBS_MAGIC:
        raise IngestError(f"{path}: observation header record missing")
    pos += 80

    obs = data[pos:]
    boundary = obs.find(_MEMBER_MAGIC)
    if boundary != -1 and boundary % 80 == 0:
        warnings.warn(f"{path}: multiple members, reading the first only")
        obs = obs[:boundary]
    row_len = sum(v[3] for v in variables)
    if row_len == 0:
        raise IngestError(f"{path}: zero-length observation record")
    nrows = len(obs) // row_len
    while nrows > 0 and not obs[(nrows - 1) * row_len:nrows * row_len].strip(b" "):
        nrows -= 1  # trailing blank padding

    columns = []
    for _, name, ntype, length, npos in variables:
        if ntype == 2:
            vals = np.array(
                [obs[r * row_len + npos:r * row_len + npos + length]
                 .decode("ascii", "replace").rstrip() for r in range(nrows)],
                dtype=object,
            )
            columns.append(Column(name, vals, {}, "char"))
            continue
        values = np.empty(nrows)
        codes: dict[int, str | None] = {}
        pad = b"\x00" * (8 - length)
        for r in range(nrows):
            raw = obs[r * row_len + npos:r * row_len + npos + length] + pad
            v, code = _decode_field(raw)
            values[r] = v
            if code != "__present__":
                codes[r] = code
        columns.append(Column(name, values, codes))
    table = RawTable(dsname or path.stem, columns)
    if missing_values:
        table = normalize_missing(table, missing_values)
    return table


def write_xpt(table: RawTable, path, stamp: str = _DEFAULT_STAMP) -> None:
    """Write a single-member SAS Transport v5 file.

    Numerics are stored as 8-byte IBM floats; missing cells are written
    back as their SAS sentinel so read/write round-trips preserve bytes.
    Variable names longer than 8 characters are rejected (v5 limit).
    """
    for col in table.columns:
        if len(col.name) > 8:
            raise IngestError(f"column {col.name!r} exceeds the 8-character v5 limit")
    dsname = (table.name or "DATA")[:8].upper()
    version, osname = "9.4", "Linux"
    out = bytearray()
    out += _pad80(_LIB_MAGIC.decode() + "0" * 30)
    out += _pad80(f"{'SAS':<8}{'SAS':<8}{'SASLIB':<8}{version:<8}{osname:<8}"
                  + " " * 24 + stamp)
    out += _pad80(stamp)
    out += _pad80(_MEMBER_MAGIC.decode() + "0" * 16 + "0160" + "0000000140")
    out += _pad80(_DSCRPTR_MAGIC.decode() + "0" * 30)
    out += _pad80(f"{'SAS':<8}{dsname:<8}{'SASDATA':<8}{version:<8}{osname:<8}"
                  + " " * 24 + stamp)
    out += _pad80(stamp + " " * 16 + " " * 40 + " " * 8)
    out += _pad80(_NAMESTR_MAGIC.decode() + f"{len(table.columns):010d}" + "0" * 20)

    offset = 0
    char_lengths = {}
    for col in table.columns:
        if col.kind == "char":
            width = max([len(s) for s in col.values] + [1])
            char_lengths[col.name] = width
    names = bytearray()
    for varnum, col in enumerate(table.columns, start=1):
        if col.kind == "char":
            ntype, length = 2, char_lengths[col.name]
        else:
            ntype, length = 1, 8
        ns = bytearray(140)
        struct.pack_into(">hhhh", ns, 0, ntype, 0, length, varnum)
        ns[8:16] = col.name[:8].ljust(8).encode("ascii")
        ns[16:56] = b" " * 40   # label
        ns[56:64] = b" " * 8    # format name
        ns[70:72] = b"  "
        ns[72:80] = b" " * 8    # informat name
        struct.pack_into(">i", ns, 84, offset)
        names += ns
        offset += length
    if len(names) % 80:
        names += b" " * (80 - len(names) % 80)
    out += names
    out += _pad80(_OBS_MAGIC.decode() + "0" * 30)

    row_len = offset
    body = bytearray()
    for i in range(table.row_count):
        for col in table.columns:
            if col.kind == "char":
                body += str(col.values[i]).ljust(char_lengths[col.name]).encode("ascii")
                continue
            v = col.values[i]
            if math.isnan(v):
                code = col.missing_codes.get(i)
                first = 0x2E if code is None else ord(code)
                body += bytes([first]) + b"\x00" * 7
            else:
                body += ieee_to_ibm(float(v))
    if len(body) % 80:
        body += b" " * (80 - len(body) % 80)
    out += body
    Path(path).write_bytes(bytes(out))


# ---------------------------------------------------------------------------
# Merge

def merge_tables(left: RawTable, right: RawTable, key: str) -> RawTable:
    """Inner join on a key column unique in each table.

    Overlapping non-key column names raise a collision error. Output rows
    are sorted by key so the join is symmetric up to column order.
    """
    for table in (left, right):
        if key not in table:
            raise IngestError(f"key column {key!r} missing from table {table.name!r}")
    overlap = (set(left.column_names) & set(right.column_names)) - {key}
    if overlap:
        raise IngestError(f"name collision on non-key columns: {sorted(overlap)}")

    def key_map(table: RawTable) -> dict[float, int]:
        col = table.column(key)
        if col.kind == "char":
            keys = list(col.values)
        else:
            keys = [None if math.isnan(v) else float(v) for v in col.values]
        seen: dict = {}
        for i, k in enumerate(keys):
            if k is None:
                continue
            if k in seen:
                raise IngestError(f"duplicate key {k!r} in table {table.name!r}")
            seen[k] = i
        return seen

    lmap, rmap = key_map(left), key_map(right)
    shared = sorted(set(lmap) & set(rmap))
    lrows = np.array([lmap[k] for k in shared], dtype=np.intp)
    rrows = np.array([rmap[k] for k in shared], dtype=np.intp)

    def take(col: Column, rows: np.ndarray) -> Column:
        values = col.values[rows]
        codes = {}
        for new_i, old_i in enumerate(rows):
            if int(old_i) in col.missing_codes:
                codes[new_i] = col.missing_codes[int(old_i)]
        return Column(col.name, values, codes, col.kind)

    columns = [take(c, lrows) for c in left.columns]
    columns += [take(c, rrows) for c in right.columns if c.name != key]
    return RawTable(f"{left.name}_{right.name}", columns)
