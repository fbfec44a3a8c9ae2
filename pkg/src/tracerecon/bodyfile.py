"""Bodyfile metadata ingestion.

Parses the pipe-delimited body format produced by The Sleuth Kit 3.x
(``fls -m`` / ``ils -m`` style) into :class:`~tracerecon.model.ObjectRecord`
values, and serializes records back out for round trips and simulator
exports.

Field layout, bit-exact::

    MD5|name|inode|mode_as_string|UID|GID|size|atime|mtime|ctime|crtime

Records are newline-terminated, ``|`` is forbidden inside fields, and the
four time fields are decimal epoch seconds where 0 means "absent".  Lines
beginning with ``#`` and blank lines are ignored.

NTFS-oriented kind mapping: ``atime`` is Accessed, ``mtime`` is Modified,
``crtime`` is Created and ``ctime`` is carried as MetaChanged.
"""

from __future__ import annotations

import io
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

from .model import ObjectRecord

log = logging.getLogger(__name__)

FIELD_COUNT = 11

_DELETED_SUFFIX = re.compile(r"\s*\(deleted(?:-realloc)?\)$")


class IngestError(Exception):
    """Raised when a metadata source cannot be read at all."""


@dataclass(frozen=True)
class ParseDiagnostic:
    """A non-fatal problem found while parsing; the run continues."""

    line_no: int  # 1-based
    message: str

    def __str__(self) -> str:
        return f"line {self.line_no}: {self.message}"


@dataclass(frozen=True)
class BodyfileLine:
    """One well-formed bodyfile line, fields still raw."""

    md5: str
    name: str
    inode: str
    mode: str
    uid: int
    gid: int
    size: int
    atime: int
    mtime: int
    ctime: int
    crtime: int

    @classmethod
    def from_line(cls, line: str) -> "BodyfileLine":
        """Split and type one line; raises ValueError with a reason on bad input."""
        fields = line.split("|")
        if len(fields) != FIELD_COUNT:
            raise ValueError(f"expected {FIELD_COUNT} fields, found {len(fields)}")
        md5, name, inode, mode = fields[0], fields[1], fields[2], fields[3]
        try:
            uid, gid, size = (int(fields[i]) for i in (4, 5, 6))
        except ValueError:
            raise ValueError("UID/GID/size fields must be integers") from None
        times = []
        for label, raw in zip(("atime", "mtime", "ctime", "crtime"), fields[7:11]):
            try:
                value = int(raw)
            except ValueError:
                raise ValueError(f"{label} is not an integer: {raw!r}") from None
            if value < 0:
                raise ValueError(f"{label} is negative: {value}")
            times.append(value)
        return cls(md5, name, inode, mode, uid, gid, size, *times)

    def to_record(self) -> ObjectRecord:
        """Build an ObjectRecord; raises ValueError when no time survives."""
        name = self.name.replace("\\", "/")
        deleted = bool(_DELETED_SUFFIX.search(name))
        if deleted:
            name = _DELETED_SUFFIX.sub("", name)
        return ObjectRecord(
            path=name,
            accessed=self.atime or None,
            modified=self.mtime or None,
            metachanged=self.ctime or None,
            created=self.crtime or None,
            deleted=deleted,
        )


def parse_bodyfile(
    source: str | IO[str],
) -> tuple[list[ObjectRecord], list[ParseDiagnostic]]:
    """Parse bodyfile text into records plus diagnostics for malformed lines.

    Record order equals input order; nothing is merged or deduplicated, so
    duplicated paths (a live and a deleted entry for the same name) stay as
    distinct records.  Malformed lines and lines whose four times are all
    zero are reported as diagnostics and skipped; they never abort the run.
    """
    stream = io.StringIO(source) if isinstance(source, str) else source
    records: list[ObjectRecord] = []
    diagnostics: list[ParseDiagnostic] = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            body_line = BodyfileLine.from_line(line)
        except ValueError as exc:
            diagnostics.append(ParseDiagnostic(line_no, str(exc)))
            continue
        try:
            records.append(body_line.to_record())
        except ValueError:
            diagnostics.append(
                ParseDiagnostic(line_no, f"no usable timestamps: {body_line.name!r}")
            )
    return records, diagnostics


def load_metadata(source: str | Path, format: str = "bodyfile") -> list[ObjectRecord]:
    """Load object records from a file path or ``-`` for stdin.

    Diagnostics are emitted on the module logger; an unreadable source is
    fatal and raises :class:`IngestError` naming the path.
    """
    if format != "bodyfile":
        raise IngestError(f"unsupported metadata format: {format!r}")
    try:
        if str(source) == "-":
            import sys

            text = sys.stdin.read()
        else:
            text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read metadata from {source}: {exc}") from exc
    records, diagnostics = parse_bodyfile(text)
    for diag in diagnostics:
        log.warning("%s: %s", source, diag)
    return records


def format_record(record: ObjectRecord) -> str:
    """Serialize one record back to a bodyfile line.

    Only the fields an ObjectRecord carries round-trip; MD5/inode/mode/UID/
    GID/size are emitted as placeholders.
    """
    name = record.path + (" (deleted)" if record.deleted else "")
    if "|" in name:
        raise ValueError(f"path contains the field separator: {record.path!r}")
    times = (
        record.accessed or 0,
        record.modified or 0,
        record.metachanged or 0,
        record.created or 0,
    )
    return "0|{}|0|-|0|0|0|{}|{}|{}|{}".format(name, *times)


def write_bodyfile(records: Iterable[ObjectRecord], stream: IO[str]) -> None:
    """Write records as newline-terminated bodyfile lines, input order kept."""
    for record in records:
        stream.write(format_record(record) + "\n")
