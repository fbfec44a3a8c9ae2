"""Shared domain types and time arithmetic for action-instance reconstruction.

A file-system object is observed post-mortem as a path plus up to four
timestamps.  Every timestamp value is causally tied to some past action
instance that wrote it within a bounded delay, so an observed value can be
mapped back to the interval of time in which the causing instance must have
occurred.  The types here are plain immutable values; every operation is a
pure function.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

# Timestamps are integer seconds since the Unix epoch, UTC.  The metadata
# formats we ingest carry no sub-second precision, so neither do we.
Timestamp = int

EPOCH_FLOOR: Timestamp = 0


class TimestampKind(Enum):
    """Which of a file-system object's timestamps a value refers to."""

    ACCESSED = "accessed"
    MODIFIED = "modified"
    CREATED = "created"
    METACHANGED = "metachanged"


class InstanceRank(Enum):
    """Whether an approximation is the most recent known instance of its action."""

    MOST_RECENT = "MostRecent"
    PAST = "Past"


class ConfidenceNote(Enum):
    """Qualifier attached to an approximation.

    DEFINITE: backed by traces that only the named action updates.
    SHARED_AMBIGUOUS: derived from a trace multiple actions can update,
    attributed by eliminating the other candidates.
    PARALLEL_INSTANCE_DIAGNOSTIC: always-updated traces of one action
    disagree by more than its threshold, which indicates overlapping
    concurrent instances (for example an object held locked by a
    still-running earlier instance).
    """

    DEFINITE = "definite"
    SHARED_AMBIGUOUS = "shared-ambiguous"
    PARALLEL_INSTANCE_DIAGNOSTIC = "parallel-instance-diagnostic"


@dataclass(frozen=True)
class ObjectRecord:
    """One file-system object and its surviving timestamps.

    Paths use forward-slash separators (normalization happens at ingest);
    absent timestamps are ``None``.  At least one timestamp must be present:
    an object with no surviving times carries no reconstructable evidence.
    """

    path: str
    accessed: Timestamp | None = None
    modified: Timestamp | None = None
    metachanged: Timestamp | None = None
    created: Timestamp | None = None
    deleted: bool = False

    def __post_init__(self) -> None:
        if not self.path:
            raise ValueError("ObjectRecord requires a non-empty path")
        present = [t for t in self._time_fields() if t is not None]
        if not present:
            raise ValueError(f"ObjectRecord {self.path!r} has no timestamps")
        if any(t < EPOCH_FLOOR for t in present):
            raise ValueError(f"ObjectRecord {self.path!r} has a negative timestamp")

    def _time_fields(self) -> tuple[Timestamp | None, ...]:
        return (self.accessed, self.modified, self.metachanged, self.created)

    def timestamp(self, kind: TimestampKind) -> Timestamp | None:
        """Return the value of the given timestamp kind, or None if absent."""
        return {
            TimestampKind.ACCESSED: self.accessed,
            TimestampKind.MODIFIED: self.modified,
            TimestampKind.METACHANGED: self.metachanged,
            TimestampKind.CREATED: self.created,
        }[kind]

    @property
    def timestamps(self) -> dict[TimestampKind, Timestamp]:
        """Mapping of the timestamp kinds actually present on this record."""
        out: dict[TimestampKind, Timestamp] = {}
        for kind in TimestampKind:
            value = self.timestamp(kind)
            if value is not None:
                out[kind] = value
        return out


@dataclass(frozen=True)
class TraceState:
    """A resolved (object path, timestamp kind, value) observation."""

    object_path: str
    kind: TimestampKind
    value: Timestamp


def trace_sort_key(state: TraceState) -> tuple[Timestamp, str, str]:
    """Total ordering for trace states: by value, then path, then kind.

    The secondary keys make matching output independent of input order even
    when several objects carry the same timestamp value.
    """
    return (state.value, state.object_path, state.kind.value)


@dataclass(frozen=True)
class TimeInterval:
    """A closed interval of time; a None bound means unbounded on that side."""

    start: Timestamp | None
    end: Timestamp | None

    def __post_init__(self) -> None:
        if self.start is not None and self.end is not None and self.start > self.end:
            raise ValueError(f"interval start {self.start} exceeds end {self.end}")

    def contains(self, value: Timestamp) -> bool:
        if self.start is not None and value < self.start:
            return False
        if self.end is not None and value > self.end:
            return False
        return True

    @property
    def width(self) -> int | None:
        """Interval width in seconds, or None if either bound is unbounded."""
        if self.start is None or self.end is None:
            return None
        return self.end - self.start


@dataclass(frozen=True)
class ActionInstanceApproximation:
    """An action plus the interval in which one instance of it must have run."""

    action_name: str
    interval: TimeInterval
    evidence: tuple[TraceState, ...]
    rank: InstanceRank
    note: ConfidenceNote

    def __post_init__(self) -> None:
        if not self.evidence:
            raise ValueError("an approximation requires at least one evidence trace")

    @property
    def detected(self) -> Timestamp:
        """Anchor time of the instance: the oldest evidence value.

        The instance occurred at or shortly before this time, never after it.
        """
        return min(state.value for state in self.evidence)


def instance_interval(value: Timestamp, threshold: int) -> TimeInterval:
    """Interval in which the instance causing an observed timestamp occurred.

    A trace update lands between zero and ``threshold`` seconds after its
    causing instance, so an observed value ``v`` places the instance inside
    ``[v - threshold, v]``.  The start is clamped at the epoch floor; values
    before 1970 are meaningless in this domain.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    return TimeInterval(max(EPOCH_FLOOR, value - threshold), value)
