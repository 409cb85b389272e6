"""Storing-mode RPL node: DODAG join, trickle-paced DIOs, DAO propagation
and hop-by-hop data routing.

The objective function is hop count: a node's rank is its preferred
parent's rank plus a fixed step, and the preferred parent is the candidate
with the lowest advertised rank (lowest id on ties).
"""
from __future__ import annotations

from dataclasses import dataclass

from . import defense as dfn
from .engine import BROADCAST, Frame, Simulator, seconds
from .messages import (DAO, DIO, DIS, DaoAck, DaoTag, DataPacket, NodeAddress,
                       global_id_of)

RANK_MAX = 0xFFFF
MIN_HOP_RANK_INCREASE = 256
ROOT_RANK = MIN_HOP_RANK_INCREASE


class RankOverflow(ValueError):
    pass


def compute_rank(parent_rank: int, step: int = MIN_HOP_RANK_INCREASE) -> int:
    rank = parent_rank + step
    if rank > RANK_MAX:
        raise RankOverflow(f"rank {parent_rank} + {step} exceeds 16 bits")
    return rank


def select_parent(candidates) -> int | None:
    """Pick the ``(node_id, rank)`` pair with minimum rank, lowest id on ties."""
    best = min(candidates, key=lambda c: (c[1], c[0]), default=None)
    return None if best is None else best[0]


@dataclass
class RplParams:
    rank_step: int = MIN_HOP_RANK_INCREASE
    trickle_imin_us: int = seconds(4)
    trickle_doublings: int = 8
    trickle_k: int = 10
    dao_delay_us: int = seconds(0.5)
    dis_interval_us: int = seconds(10)
    dis_jitter_us: int = seconds(1)
    app_interval_us: int = seconds(10)
    app_start_us: int = seconds(30)
    app_jitter_us: int = seconds(1)
    payload_bits: int = 256
    app_enabled: bool = True
    downward_traffic: bool = False


@dataclass
class TrickleState:
    i_min: int
    i_max_doublings: int
    k: int
    current_interval: int = 0
    t: int = 0
    counter: int = 0
    interval_start: int = 0
    epoch: int = 0

    @property
    def i_max(self) -> int:
        return self.i_min << self.i_max_doublings

    def begin_interval(self, now: int, rng) -> None:
        self.interval_start = now
        self.counter = 0
        half = self.current_interval // 2
        self.t = now + rng.randrange(half, self.current_interval)

    def reset(self, now: int, rng) -> bool:
        """Handle an inconsistency. Returns False if already at ``i_min``."""
        if self.current_interval == self.i_min:
            return False
        self.current_interval = self.i_min
        self.epoch += 1
        self.begin_interval(now, rng)
        return True

    def double(self) -> None:
        self.current_interval = min(2 * self.current_interval, self.i_max)


class RplNode:
    DODAG_ID = 0
    VERSION = 0

    def __init__(self, node_id: int, sim: Simulator, params: RplParams | None = None,
                 defense_threshold: int | None = None, defense_window_us: int | None = None):
        self.node_id = node_id
        self.sim = sim
        self.p = params or RplParams()
        self.addr = NodeAddress.of(node_id)
        self.is_root = node_id == sim.topology.root
        self.rank: int | None = None
        self.parent: int | None = None
        self.candidates: dict[int, int] = {}
        self.trickle = TrickleState(self.p.trickle_imin_us, self.p.trickle_doublings, self.p.trickle_k)
        self.downward_routes: dict[int, int] = {}
        self.dao_seq = 0
        self.defense = dfn.initialize(defense_threshold) if defense_threshold is not None else None
        self.defense_window_us = defense_window_us
        self._window_start = 0
        self._dao_pending = False
        self._dao_number = 0
        self._data_seq = 0
        self.decision_log: list[tuple] = []

    # -- lifecycle --------------------------------------------------------

    @property
    def joined(self) -> bool:
        return self.rank is not None

    def start(self) -> None:
        sim = self.sim
        if self.is_root:
            self.rank = ROOT_RANK
            self._trace("join", rank=self.rank)
            self._start_trickle()
            if self.p.downward_traffic and self.p.app_enabled:
                for dst in sim.topology.node_ids:
                    if dst != self.node_id:
                        self._schedule_app(dst)
        else:
            jitter = self.sim.rng("dis", self.node_id).randrange(self.p.dis_jitter_us)
            sim.after(jitter, "TimerFire", self._dis_timer)
            if self.p.app_enabled and self.generates_data:
                self._schedule_app(sim.topology.root)

    generates_data = True

    def finalize(self, m) -> None:
        if self.defense is not None:
            m.lookup_ops[self.node_id] = self.defense.lookup_ops
            m.defense_table_bytes[self.node_id] = dfn.table_memory_bytes(self.defense)

    def _trace(self, event: str, msg: str | None = None, **extra) -> None:
        if self.sim.trace is not None:
            self.sim.trace.add(self.sim.now, self.node_id, event, msg, **extra)

    # -- sending helpers --------------------------------------------------

    def _send(self, dst: int, payload) -> None:
        self.sim.transmit(Frame(self.node_id, dst, payload, payload.size_bits))

    def _broadcast(self, payload) -> None:
        self._send(BROADCAST, payload)

    def receive(self, frame: Frame) -> None:
        msg = frame.payload
        kind = msg.kind
        self._trace("rx", kind, src=frame.src)
        if kind == "DATA":
            self.route_data(msg)
        elif kind == "DIO":
            self.on_dio(frame.src, msg)
        elif kind == "DAO":
            self.on_dao(frame.src, msg)
        elif kind == "DIS":
            self.on_dis(frame.src)

    # -- DIS --------------------------------------------------------------

    def _dis_timer(self) -> None:
        if self.joined:
            return
        self._broadcast(DIS())
        self.sim.after(self.p.dis_interval_us, "TimerFire", self._dis_timer)

    def on_dis(self, sender: int) -> None:
        if not self.joined:
            return
        self._reset_trickle()

    # -- trickle ----------------------------------------------------------

    def _start_trickle(self) -> None:
        tr = self.trickle
        tr.current_interval = tr.i_min
        tr.epoch += 1
        tr.begin_interval(self.sim.now, self.sim.rng("trickle", self.node_id))
        self._arm_trickle()

    def _reset_trickle(self) -> None:
        if self.trickle.reset(self.sim.now, self.sim.rng("trickle", self.node_id)):
            self._arm_trickle()

    def _arm_trickle(self) -> None:
        tr = self.trickle
        self.sim.schedule(tr.t, "TimerFire", self.trickle_fire, tr.epoch)
        self.sim.schedule(tr.interval_start + tr.current_interval, "TimerFire",
                          self._trickle_interval_end, tr.epoch)

    def trickle_fire(self, epoch: int | None = None) -> None:
        tr = self.trickle
        if epoch is not None and epoch != tr.epoch:
            return
        if tr.counter < tr.k:
            self._broadcast(DIO(self.DODAG_ID, self.VERSION, self.rank))
        else:
            self._trace("dio_suppressed")

    def _trickle_interval_end(self, epoch: int) -> None:
        tr = self.trickle
        if epoch != tr.epoch:
            return
        tr.double()
        tr.begin_interval(self.sim.now, self.sim.rng("trickle", self.node_id))
        self._arm_trickle()

    # -- DIO --------------------------------------------------------------

    def on_dio(self, sender: int, dio: DIO) -> None:
        if self.is_root:
            self.trickle.counter += 1
            return
        step = self.p.rank_step
        if self.joined and dio.rank >= self.rank:
            # not a valid parent under the rank rule; ranks never increase
            # here, so this is always a child or a sibling
            self.candidates.pop(sender, None)
            self.trickle.counter += 1
            return
        try:
            compute_rank(dio.rank, step)
        except RankOverflow:
            return
        self.candidates[sender] = dio.rank
        best = select_parent(self.candidates.items())
        new_rank = compute_rank(self.candidates[best], step)
        if not self.joined:
            self.parent, self.rank = best, new_rank
            self._trace("join", rank=new_rank, parent=best)
            self._start_trickle()
            self.schedule_dao()
        elif best != self.parent:
            self._trace("parent_change", rank=new_rank, parent=best, old=self.parent)
            self.parent, self.rank = best, new_rank
            self._reset_trickle()
            self.schedule_dao()
        elif new_rank != self.rank:
            self.rank = new_rank
            self._reset_trickle()
        else:
            self.trickle.counter += 1

    # -- DAO --------------------------------------------------------------

    def schedule_dao(self) -> None:
        if self._dao_pending:
            return
        self._dao_pending = True
        self.sim.after(self.p.dao_delay_us, "TimerFire", self._dao_timer)

    def _dao_timer(self) -> None:
        self._dao_pending = False
        if self.parent is not None:
            self.originate_dao()

    def _next_tag(self, malicious: bool = False) -> DaoTag:
        self._dao_number += 1
        return DaoTag(self.node_id, self._dao_number, malicious)

    def originate_dao(self) -> DAO:
        if self.parent is None:
            raise RuntimeError(f"node {self.node_id} has no preferred parent")
        self.dao_seq += 1
        dao = DAO(self.addr.global_id, self.addr, self.dao_seq, self._next_tag())
        self.sim.metrics.dao_originated += 1
        self._send(self.parent, dao)
        return dao

    def on_dao(self, sender: int, dao: DAO) -> bool:
        """Install the downward route, acknowledge and pass the DAO up.

        Returns False when the DAO was dropped instead.
        """
        m = self.sim.metrics
        if not self.joined:
            m.count_drop("dao_unjoined")
            return False
        sender_global = global_id_of(sender)
        if dao.prefix == sender_global:
            key = (self.node_id, sender)
            m.child_originations[key] = m.child_originations.get(key, 0) + 1
        if self.defense is not None:
            decision = self._defend(sender, dao, sender_global)
            if not decision.forwards:
                return False
        self.downward_routes[dao.prefix] = sender
        work = self.sim.params.dao_processing_us
        if work:
            self.sim.hold_cpu(self.node_id, work, lambda: self._ack_and_forward(sender, dao))
        else:
            self._ack_and_forward(sender, dao)
        return True

    def _ack_and_forward(self, sender: int, dao: DAO) -> None:
        self._send(sender, DaoAck(dao.seq))
        if not self.is_root and self.parent is not None:
            self._send(self.parent, dao)

    def _defend(self, sender: int, dao: DAO, sender_global: int) -> dfn.DaoDecision:
        st = self.defense
        now = self.sim.now
        if self.defense_window_us and now - self._window_start >= self.defense_window_us:
            self._window_start = now - (now - self._window_start) % self.defense_window_us
            st.reset_counters()
        decision = dfn.on_dao_receive(st, sender, dao.prefix, sender_global)
        ops = st.last_call_ops
        self.decision_log.append((now, sender, dao.prefix, decision, ops))
        m = self.sim.metrics
        tag = dao.tag
        extra = {"origin": tag.origin, "num": tag.number, "mal": tag.malicious} if tag else {}
        self._trace("defense", "DAO", sender=sender, prefix=dao.prefix,
                    decision=decision.value, ops=ops, **extra)
        if decision is dfn.DaoDecision.BLACKLIST_AND_DISCARD:
            m.blacklist_events.append((now, self.node_id, sender))
            m.dao_discarded_by_defense += 1
        elif decision is dfn.DaoDecision.DISCARD:
            m.dao_discarded_by_defense += 1
        return decision

    # -- data -------------------------------------------------------------

    def _schedule_app(self, dst: int) -> None:
        p = self.p
        phase = self.sim.rng("app", (self.node_id, dst)).randrange(p.app_interval_us)
        self._app_next(dst, p.app_start_us + phase)

    def _app_next(self, dst: int, slot: int) -> None:
        # each packet leaves at a random point of the first ``app_jitter``
        # of its period slot; the long-run rate stays one per interval
        jitter = self.p.app_jitter_us
        at = slot + (self.sim.rng("app", (self.node_id, dst)).randrange(jitter) if jitter else 0)
        self.sim.schedule(max(at, self.sim.now), "AppDataGen", self._app_tick, dst, slot)

    def _app_tick(self, dst: int, slot: int) -> None:
        self._data_seq += 1
        pkt = DataPacket(self.node_id, dst, self._data_seq, self.sim.now, self.p.payload_bits)
        m = self.sim.metrics
        if dst == self.sim.topology.root:
            m.data_sent += 1
        else:
            m.down_sent += 1
        self._trace("gen", "DATA", dst=dst, seq=pkt.seq, bits=pkt.payload_bits)
        self.route_data(pkt)
        self._app_next(dst, slot + self.p.app_interval_us)

    def route_data(self, pkt: DataPacket) -> None:
        m = self.sim.metrics
        upward = pkt.dst == self.sim.topology.root
        if pkt.dst == self.node_id:
            latency = self.sim.now - pkt.created_at
            if upward:
                m.data_delivered += 1
                m.latencies_us.append(latency)
                m.data_bits_delivered += pkt.payload_bits
            else:
                m.down_delivered += 1
                m.down_latencies_us.append(latency)
                m.down_bits_delivered += pkt.payload_bits
            self._trace("deliver", "DATA", origin=pkt.origin, seq=pkt.seq,
                        latency=latency, bits=pkt.payload_bits)
            return
        if upward:
            if self.parent is None:
                m.count_data_drop("unjoined")
                self._trace("drop", "DATA", reason="unjoined", to=pkt.dst)
                return
            self._send(self.parent, pkt)
        else:
            nxt = self.downward_routes.get(global_id_of(pkt.dst))
            if nxt is None:
                m.down_dropped += 1
                m.count_drop("no_route")
                self._trace("drop", "DATA", reason="no_route", to=pkt.dst)
                return
            self._send(nxt, pkt)
