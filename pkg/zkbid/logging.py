"""Event log with a fixed line format, parsed back by `parse_line` (and by `tools/timeline.py`).

A line looks like `[wallet, step=3, time=1718000000123456] begin: zkp generation`.
"""
from contextlib import contextmanager
import re
import sys
import time
from typing import Generator, NamedTuple, Optional, TextIO

_sink: TextIO = sys.stderr


def set_sink(f: TextIO) -> None:
    """Redirects event log lines to `f` (stderr by default)."""
    global _sink
    _sink = f


def log(actor: str, step: int, msg: str, *, timestamp: Optional[float] = None) -> None:
    """Writes a log entry.  `timestamp` is in seconds; simulated components pass simulated time."""
    timestamp = time.time() if timestamp is None else timestamp
    time_micro = int(timestamp * 1e6)
    print(f"[{actor}, step={step}, time={time_micro}] {msg}", file=_sink)
    _sink.flush()


def log_begin(actor: str, step: int, event: str, *, timestamp: Optional[float] = None) -> None:
    """Logs the start of an event."""
    return log(actor, step, "begin: " + event, timestamp=timestamp)


def log_end(actor: str, step: int, event: str, *, timestamp: Optional[float] = None) -> None:
    """Logs the end of an event."""
    return log(actor, step, "end: " + event, timestamp=timestamp)


@contextmanager
def log_duration(actor: str, step: int, event: str) -> Generator[None, None, None]:
    """Brackets the body of the `with` statement with a "begin" line and an "end" line."""
    log_begin(actor, step, event)
    try:
        yield
    finally:
        log_end(actor, step, event)


@contextmanager
def log_at_end(actor: str, step: int, event: str) -> Generator[None, None, None]:
    """Writes only the "end" line, once the body of the `with` statement is done."""
    try:
        yield
    finally:
        log_end(actor, step, event)


LOG_FORMAT = re.compile(r"\[(?P<actor>[^,\]]+), step=(?P<step>\d+), time=(?P<time>\d+)\]\s+(?P<msg>.+)$")
MESSAGE_FORMAT = re.compile(r"(?P<prefix>begin|end):\s+(?P<event>.+)$")


class LogEntry(NamedTuple):
    actor: str
    step: int
    time_micro: int
    msg: str

    @property
    def phase(self) -> Optional[str]:
        """The "begin" or "end" prefix of lines written by `log_begin` and `log_end`; None otherwise."""
        match = MESSAGE_FORMAT.match(self.msg)
        return None if match is None else match.group("prefix")

    @property
    def event(self) -> str:
        match = MESSAGE_FORMAT.match(self.msg)
        return self.msg if match is None else match.group("event")


def parse_line(line: str) -> Optional[LogEntry]:
    """Parses one event log line; returns None for any other line."""
    match = LOG_FORMAT.search(line.strip())
    if match is None:
        return None
    return LogEntry(match.group("actor"), int(match.group("step")), int(match.group("time")),
                    match.group("msg").strip())
