"""In-process pub/sub message bus.

Topics are created on first publish (or explicitly); messages carry a gap-free
per-topic sequence plus a global sequence for merged-stream replay. History is
retained in memory, so subscribers can join or reconnect from any sequence
number and receive every message in order. The contract is network
transparent: nothing here assumes callers share the process beyond the Python
API itself.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Optional


class UnknownTopicError(KeyError):
    pass


@dataclass(frozen=True)
class BusMessage:
    topic: str
    payload: dict
    sequence: int   # per-topic, starts at 0, gap-free
    global_seq: int
    timestamp: float  # simulated seconds, supplied by the publisher

    def to_json(self) -> dict:
        return {
            "topic": self.topic,
            "payload": self.payload,
            "sequence": self.sequence,
            "global": self.global_seq,
            "timestamp": self.timestamp,
        }


class MessageBus:
    def __init__(self, auto_create: bool = True):
        self._topics: dict[str, list[BusMessage]] = {}
        self._log: list[BusMessage] = []
        self._lock = threading.Condition()
        self.auto_create = auto_create

    def create_topic(self, topic: str):
        with self._lock:
            self._topics.setdefault(topic, [])

    def topics(self) -> list[str]:
        with self._lock:
            return sorted(self._topics)

    def publish(self, topic: str, payload: dict, timestamp: float = 0.0) -> BusMessage:
        with self._lock:
            queue = self._topics.setdefault(topic, [])
            msg = BusMessage(topic, payload, len(queue), len(self._log), timestamp)
            queue.append(msg)
            self._log.append(msg)
            self._lock.notify_all()
            return msg

    def messages(self, topic: str, from_sequence: int = 0) -> list[BusMessage]:
        """Retained messages of one topic with sequence >= from_sequence."""
        with self._lock:
            if topic not in self._topics:
                if self.auto_create:
                    return []
                raise UnknownTopicError(topic)
            return list(self._topics[topic][from_sequence:])

    def stream(self, from_global: int = 0, topics: Optional[set] = None) -> list[BusMessage]:
        """Merged-stream view: every retained message with global sequence >=
        from_global, optionally filtered by topic, in publish order."""
        with self._lock:
            out = self._log[from_global:]
        if topics is not None:
            out = [m for m in out if m.topic in topics]
        return out

    def global_count(self) -> int:
        with self._lock:
            return len(self._log)

    def wait_for(self, global_seq: int, timeout: float = 0.1) -> bool:
        """Block until the log reaches global_seq messages (or timeout)."""
        with self._lock:
            if len(self._log) > global_seq:
                return True
            self._lock.wait(timeout)
            return len(self._log) > global_seq
