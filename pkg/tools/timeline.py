#!/usr/bin/env python3
"""
Summarizes zkbid event logs: the standard error of `zkbid -v ...` runs, or of `zkbid timings` and `zkbid bench`.

Example usage:
    python -m tools.timeline --summary timings.log
    python -m tools.timeline --events --actor wallet enroll.log register.log

`--gantt` draws the events per actor and needs the `plotly` package.
"""
import argparse
from collections import defaultdict
import csv
from datetime import datetime
import fileinput
import logging
import sys
from typing import DefaultDict, Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from zkbid.logging import parse_line

PERCENTILES = (50, 5, 95)


class Span(NamedTuple):
    """An event between its "begin" line and its "end" line."""
    actor: str
    event: str
    step: int
    start: datetime
    finish: datetime

    @property
    def seconds(self) -> float:
        return (self.finish - self.start).total_seconds()


def collect_spans(lines: Iterable[str], actor: Optional[str] = None) -> List[Span]:
    """Pairs each "begin" line with the following "end" line that has the same actor, event and step.

    :param actor: if given, lines of other actors are skipped.
    """
    spans: List[Span] = []
    open_spans: Dict[Tuple[str, str, int], datetime] = {}
    for line in lines:
        entry = parse_line(line)
        if entry is None or entry.phase is None or (actor is not None and entry.actor != actor):
            continue
        key = (entry.actor, entry.event, entry.step)
        at = datetime.fromtimestamp(entry.time_micro / 1e6)
        if entry.phase == "begin":
            if key in open_spans:
                logging.warning("begin without end: %s", line.strip())
            open_spans[key] = at
            continue
        start = open_spans.pop(key, None)
        if start is None:
            logging.warning("end without begin: %s", line.strip())
        else:
            spans.append(Span(entry.actor, entry.event, entry.step, start, at))
    for actor_name, event, step in open_spans:
        logging.warning("unfinished: %s step %d of %s", event, step, actor_name)
    return spans


def write_summary(spans: Iterable[Span]) -> None:
    """Writes, as CSV on standard output, one row per (actor, event) with its count and duration percentiles."""
    by_event: DefaultDict[Tuple[str, str], List[float]] = defaultdict(list)
    for span in spans:
        by_event[(span.actor, span.event)].append(span.seconds)

    writer = csv.writer(sys.stdout)
    writer.writerow(("actor", "event", "count", "mean_s") + tuple(f"p{p}_s" for p in PERCENTILES))
    for (actor, event), seconds in sorted(by_event.items()):
        writer.writerow((actor, event, len(seconds), np.mean(seconds), *np.percentile(seconds, PERCENTILES)))


def write_spans(spans: Iterable[Span]) -> None:
    """Writes, as CSV on standard output, every span in order of completion."""
    writer = csv.writer(sys.stdout)
    writer.writerow(("actor", "event", "step", "start", "finish", "seconds"))
    for span in sorted(spans, key=lambda s: (s.finish, s.start)):
        writer.writerow((span.actor, span.event, span.step, span.start.timestamp(), span.finish.timestamp(),
                         span.seconds))


def plot_gantt(spans: List[Span]) -> None:
    import plotly
    import plotly.figure_factory as ff

    rows = [dict(Task=s.actor, Start=str(s.start), Finish=str(s.finish), Resource=s.event)
            for s in sorted(spans, key=lambda s: (s.actor, s.start))]
    fig = ff.create_gantt(rows, index_col="Resource", group_tasks=True, show_colorbar=True)
    plotly.offline.plot(fig)


def main() -> None:
    parser = argparse.ArgumentParser(description="Summarizes zkbid event logs.")
    parser.add_argument("logs", nargs="+", help="event log files; '-' reads standard input")
    parser.add_argument("--actor", help="only keep events of this actor (e.g., wallet, node0, timings)")
    parser.add_argument("--summary", action="store_true", help="write count and duration percentiles per event")
    parser.add_argument("--events", action="store_true", help="write every event")
    parser.add_argument("--gantt", action="store_true", help="plot events per actor")
    args = parser.parse_args()

    spans = collect_spans(fileinput.input(files=args.logs), args.actor)
    if args.summary:
        write_summary(spans)
    if args.events:
        write_spans(spans)
    if args.gantt:
        plot_gantt(spans)


if __name__ == '__main__':
    main()
