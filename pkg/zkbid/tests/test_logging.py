import io
import sys
from typing import Iterator

import pytest

from zkbid import logging as event_log


@pytest.fixture()
def sink() -> Iterator[io.StringIO]:
    buf = io.StringIO()
    event_log.set_sink(buf)
    try:
        yield buf
    finally:
        event_log.set_sink(sys.stderr)


class TestEventLog(object):
    def test_line_format(self, sink: io.StringIO):
        event_log.log_begin("node3", 7, "produce", timestamp=1.5)
        assert sink.getvalue() == "[node3, step=7, time=1500000] begin: produce\n"

    def test_round_trip(self, sink: io.StringIO):
        with event_log.log_duration("wallet", 5, "ring signing"):
            pass
        with event_log.log_at_end("wallet", 6, "done"):
            pass
        event_log.log("bench", 0, "plain message", timestamp=2.0)
        entries = [event_log.parse_line(line) for line in sink.getvalue().splitlines()]
        assert [(e.actor, e.step, e.phase, e.event) for e in entries] == [
            ("wallet", 5, "begin", "ring signing"), ("wallet", 5, "end", "ring signing"), ("wallet", 6, "end", "done"),
            ("bench", 0, None, "plain message")]
        assert entries[-1].time_micro == 2000000

    @pytest.mark.parametrize("line", ["", "INFO zkbid.cli: something", "[wallet, step=x, time=1] begin: a",
                                      "[wallet, time=1] end: a"])
    def test_other_lines(self, line: str):
        assert event_log.parse_line(line) is None

    def test_prefixed_line(self):
        entry = event_log.parse_line("2024/01/01 12:00:00 [node0, step=2, time=42]   end: produce  \n")
        assert entry == event_log.LogEntry("node0", 2, 42, "end: produce")


class TestTimeline(object):
    LINES = [
        "[wallet, step=1, time=1000000] begin: zkp generation",
        "[node0, step=4, time=1200000] begin: produce",
        "[wallet, step=1, time=3500000] end: zkp generation",
        "[node0, step=4, time=1300000] end: produce",
        "[wallet, step=2, time=4000000] end: ring signing",
        "[wallet, step=3, time=5000000] begin: submit",
        "not an event line",
    ]

    def test_spans(self):
        from tools.timeline import collect_spans

        spans = collect_spans(self.LINES)
        assert [(s.actor, s.event, s.step) for s in spans] == [("wallet", "zkp generation", 1), ("node0", "produce", 4)]
        assert spans[0].seconds == pytest.approx(2.5)
        assert spans[1].seconds == pytest.approx(0.1)

    def test_actor_filter(self):
        from tools.timeline import collect_spans

        assert [s.actor for s in collect_spans(self.LINES, actor="node0")] == ["node0"]
