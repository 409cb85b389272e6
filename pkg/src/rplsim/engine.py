"""Deterministic discrete-event core and UDGM radio.

Time is integer microseconds. Events are ordered by ``(at, seq)`` where
``seq`` is a global insertion counter, so equal-time events pop FIFO.

Each node owns one radio and one CPU:

* the radio sends queued frames one after another; a frame is on air for
  ``size_bits / data_rate`` and reaches its receivers when it ends;
* the CPU takes received frames from a bounded inbound queue and spends
  ``processing_delay`` on each before the protocol handler sees it; the
  handler may hold the CPU for more (an accepted DAO costs
  ``dao_processing`` extra for the route update before the DAO-ACK and
  the forwarded copy go out).

Queues are where a DAO flood hurts: relays spend radio and CPU time on
the flood, and data frames wait behind it or are tail-dropped.

With ``interference`` on, a reception is lost if another transmitter
within interference range of the receiver (or the receiver itself) is on
air during any part of the frame.
"""
from __future__ import annotations

import heapq
import itertools
import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

from .messages import DataPacket
from .metrics import RunMetrics
from .topology import Topology

BROADCAST = -1
US_PER_S = 1_000_000


def seconds(s: float) -> int:
    return round(s * US_PER_S)


class SimulationError(RuntimeError):
    """Internal consistency violation; the run is aborted."""


@dataclass(frozen=True)
class Frame:
    src: int
    dst: int
    payload: Any
    size_bits: int

    def __post_init__(self):
        if self.size_bits <= 0:
            raise ValueError("frame size must be positive")

    @property
    def kind(self) -> str:
        return self.payload.kind

    @property
    def is_data(self) -> bool:
        return isinstance(self.payload, DataPacket)


@dataclass(order=True)
class SimEvent:
    at: int
    seq: int
    kind: str = field(compare=False)
    fn: Callable = field(compare=False, repr=False)
    args: tuple = field(compare=False, repr=False, default=())


@dataclass
class RadioParams:
    data_rate_bps: int = 250_000
    rx_success: float = 1.0
    interference: bool = False


@dataclass
class NodeParams:
    processing_delay_us: int = 2000
    dao_processing_us: int = 30_000
    queue_capacity: int = 8
    outbound_capacity: int = 8


class Trace:
    """Newline-delimited event records (kept in memory until dumped)."""

    def __init__(self):
        self.records: list[dict] = []

    def add(self, t: int, node: int, event: str, msg: str | None = None, **extra) -> None:
        rec = {"t": t, "node": node, "event": event, "msg": msg}
        rec.update(extra)
        self.records.append(rec)

    def lines(self):
        for rec in self.records:
            yield json.dumps(rec, sort_keys=True, separators=(",", ":"))

    def dump(self, fp) -> None:
        for line in self.lines():
            fp.write(line + "\n")


@dataclass
class _Port:
    inbound: deque = field(default_factory=deque)
    outbound: deque = field(default_factory=deque)
    cpu_busy: bool = False
    radio_busy: bool = False
    on_air: Frame | None = None
    hold: tuple | None = None


class Simulator:
    def __init__(self, topology: Topology, seed: int, radio: RadioParams | None = None,
                 node_params: NodeParams | None = None, trace: Trace | None = None):
        self.topology = topology
        self.seed = seed
        self.radio = radio or RadioParams()
        self.params = node_params or NodeParams()
        self.trace = trace
        self.metrics = RunMetrics()
        self.now = 0
        self.nodes: dict[int, Any] = {}
        self.observers: list[Callable[["Simulator", SimEvent], None]] = []
        self._heap: list[SimEvent] = []
        self._seq = itertools.count()
        self._rngs: dict[tuple, random.Random] = {}
        self._ports = {n: _Port() for n in topology.node_ids}
        self._adj = topology.adjacency
        self._bcast = {n: sorted(v) for n, v in self._adj.items()}
        self._interferers = topology.interferers
        self._recent: deque = deque()  # (src, start, end) of recent transmissions
        self._max_air = 0
        self._us_per_bit = US_PER_S / self.radio.data_rate_bps
        self._started = False
        self._handling: int | None = None

    # -- randomness -------------------------------------------------------

    def rng(self, purpose: str, node: int | None = None) -> random.Random:
        """Independent stream per (purpose, node), derived from the run seed.

        Separate streams keep e.g. a node's trickle draws identical whether or
        not an attacker is present, which makes scenario comparisons paired.
        """
        key = (purpose, node)
        r = self._rngs.get(key)
        if r is None:
            r = self._rngs[key] = random.Random(f"{self.seed}:{purpose}:{node}")
        return r

    # -- event queue ------------------------------------------------------

    def schedule(self, at: int, kind: str, fn: Callable, *args) -> SimEvent:
        if at < self.now:
            raise SimulationError(f"event {kind!r} scheduled at {at} < now {self.now}")
        ev = SimEvent(int(at), next(self._seq), kind, fn, args)
        heapq.heappush(self._heap, ev)
        return ev

    def after(self, delay_us: int, kind: str, fn: Callable, *args) -> SimEvent:
        return self.schedule(self.now + delay_us, kind, fn, *args)

    def pop(self) -> SimEvent:
        ev = heapq.heappop(self._heap)
        self.now = ev.at
        return ev

    def add_node(self, node) -> None:
        self.nodes[node.node_id] = node

    def run_until(self, t_end: int) -> RunMetrics:
        if not self._started:
            self._started = True
            for nid in sorted(self.nodes):
                self.nodes[nid].start()
        heap = self._heap
        observers = self.observers
        while heap and heap[0].at <= t_end:
            ev = heapq.heappop(heap)
            if ev.at < self.now:
                raise SimulationError("clock moved backwards")
            self.now = ev.at
            ev.fn(*ev.args)
            for obs in observers:
                obs(self, ev)
        self.now = max(self.now, t_end)
        self.metrics.duration_s = t_end / US_PER_S
        for nid, node in sorted(self.nodes.items()):
            node.finalize(self.metrics)
        return self.metrics

    # -- radio ------------------------------------------------------------

    def airtime(self, size_bits: int) -> int:
        return max(1, round(size_bits * self._us_per_bit))

    def receivers(self, frame: Frame) -> list[int]:
        if frame.dst == BROADCAST:
            return self._bcast[frame.src]
        return [frame.dst]

    def transmit(self, frame: Frame) -> None:
        """Queue ``frame`` on its sender's radio."""
        m = self.metrics
        src = frame.src
        if frame.dst != BROADCAST and frame.dst not in self._adj[src]:
            m.count_drop("link_failure")
            self._trace_drop(src, frame, "link_failure")
            self._lose(frame, "link_failure")
            return
        port = self._ports[src]
        if len(port.outbound) >= self.params.outbound_capacity:
            m.count_drop("outbound_full", len(self.receivers(frame)))
            self._trace_drop(src, frame, "outbound_full")
            self._lose(frame, "outbound_full")
            return
        port.outbound.append(frame)
        if not port.radio_busy:
            self._start_tx(src)

    def _start_tx(self, node: int) -> None:
        port = self._ports[node]
        frame = port.outbound.popleft()
        air = self.airtime(frame.size_bits)
        port.radio_busy = True
        port.on_air = frame
        start = self.now
        end = start + air
        self._max_air = max(self._max_air, air)
        self._recent.append((node, start, end))
        m = self.metrics
        m.tx_by_node[node] = m.tx_by_node.get(node, 0) + 1
        kind = frame.kind
        if kind == "DATA":
            m.data_tx += 1
        else:
            m.control_tx[kind] += 1
            tag = getattr(frame.payload, "tag", None)
            if tag is not None and tag.malicious:
                m.malicious_dao_tx += 1
        if self.trace is not None:
            extra = {}
            tag = getattr(frame.payload, "tag", None)
            if tag is not None:
                extra = {"origin": tag.origin, "num": tag.number, "mal": tag.malicious}
            self.trace.add(start, node, "tx", kind, dst=frame.dst, **extra)
        self.schedule(end, "PacketDelivery", self._end_tx, node, frame, start)

    def _end_tx(self, node: int, frame: Frame, start: int) -> None:
        port = self._ports[node]
        port.radio_busy = False
        port.on_air = None
        for rx in self.receivers(frame):
            self._arrive(rx, frame, start)
        if port.outbound:
            self._start_tx(node)

    def _collided(self, rx: int, src: int, start: int, end: int) -> bool:
        horizon = end - self._max_air
        recent = self._recent
        while recent and recent[0][2] <= horizon:
            recent.popleft()
        near = self._interferers[rx]
        for other, s, e in recent:
            if other == src or s >= end or e <= start:
                continue
            if other == rx or other in near:
                return True
        return False

    def _arrive(self, rx: int, frame: Frame, start: int) -> None:
        m = self.metrics
        radio = self.radio
        if radio.interference and self._collided(rx, frame.src, start, self.now):
            return self._drop_copy(rx, frame, "collision")
        if radio.rx_success < 1.0 and self.rng("loss", rx).random() >= radio.rx_success:
            return self._drop_copy(rx, frame, "loss")
        port = self._ports[rx]
        if len(port.inbound) >= self.params.queue_capacity:
            return self._drop_copy(rx, frame, "queue_full")
        port.inbound.append(frame)
        if not port.cpu_busy:
            self._start_cpu(rx)

    def _trace_drop(self, node: int, frame: Frame, reason: str) -> None:
        if self.trace is not None:
            extra = {"to": frame.payload.dst} if frame.is_data else {}
            self.trace.add(self.now, node, "drop", frame.kind, reason=reason, src=frame.src, **extra)

    def _drop_copy(self, rx: int, frame: Frame, reason: str) -> None:
        self.metrics.count_drop(reason)
        self._trace_drop(rx, frame, reason)
        self._lose(frame, reason)

    def _lose(self, frame: Frame, reason: str) -> None:
        if frame.is_data:
            if frame.payload.dst == self.topology.root:
                self.metrics.count_data_drop(reason)
            else:
                self.metrics.down_dropped += 1

    def _start_cpu(self, node: int) -> None:
        self._ports[node].cpu_busy = True
        self.after(self.params.processing_delay_us, "Process", self._end_cpu, node)

    def hold_cpu(self, node: int, duration_us: int, then: Callable) -> None:
        """Keep ``node``'s CPU busy for ``duration_us`` more, then call
        ``then()``. Outside a receive handler (a direct protocol call) the
        continuation is simply scheduled."""
        if self._handling == node:
            self._ports[node].hold = (duration_us, then)
        else:
            self.after(duration_us, "Process", then)

    def _end_cpu(self, node: int) -> None:
        port = self._ports[node]
        frame = port.inbound.popleft()
        self._handling = node
        try:
            self.nodes[node].receive(frame)
        finally:
            self._handling = None
        if port.hold is not None:
            duration, then = port.hold
            port.hold = None
            self.after(duration, "Process", self._held_done, node, then)
        else:
            self._next_cpu(node)

    def _held_done(self, node: int, then: Callable) -> None:
        then()
        self._next_cpu(node)

    def _next_cpu(self, node: int) -> None:
        port = self._ports[node]
        if port.inbound:
            self._start_cpu(node)
        else:
            port.cpu_busy = False

    # -- introspection ----------------------------------------------------

    def data_in_flight(self) -> int:
        """Upward data packets sitting in a queue or on air right now."""
        n = 0
        for port in self._ports.values():
            for frame in itertools.chain(port.inbound, port.outbound):
                n += self._is_upward_data(frame)
            if port.on_air is not None:
                n += self._is_upward_data(port.on_air)
        return n

    def _is_upward_data(self, frame: Frame) -> bool:
        return frame.is_data and frame.payload.dst == self.topology.root
