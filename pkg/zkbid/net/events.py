"""Simulation events and the event queue."""
from enum import IntEnum
import heapq
from typing import Any, List, NamedTuple, Optional

from ..consts import NodeIndex, SimTime


class EventKind(IntEnum):
    """Event kinds; at equal times, events are processed in this order."""
    TX_ARRIVAL = 0
    GOSSIP = 1
    BLOCK_DELIVERY = 2
    BLOCK_TICK = 3

    def __str__(self):
        """Returns a short name (e.g., "gossip"), used in traces."""
        return self.name.lower()


class Event(NamedTuple):
    time: SimTime
    kind: EventKind
    seq: int
    node: NodeIndex
    payload: Any  # A Transaction, a Block, or None for ticks.


class EventQueue(object):
    """A min-heap ordered by (time, kind, seq); seq is the insertion counter."""

    def __init__(self) -> None:
        self._heap: List[Event] = []
        self._seq = 0

    def push(self, time: SimTime, kind: EventKind, node: NodeIndex, payload: Any = None) -> None:
        heapq.heappush(self._heap, Event(time, kind, self._seq, node, payload))
        self._seq += 1

    def pop(self) -> Event:
        return heapq.heappop(self._heap)

    def peek(self) -> Optional[Event]:
        return self._heap[0] if self._heap else None

    def pending(self, *kinds: EventKind) -> int:
        """Counts queued events of the given kinds (all kinds if none given)."""
        if not kinds:
            return len(self._heap)
        return sum(1 for e in self._heap if e.kind in kinds)

    def __len__(self) -> int:
        return len(self._heap)
