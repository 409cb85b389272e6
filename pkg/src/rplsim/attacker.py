"""DAO insider attacker.

A compromised node that joins the DODAG like any other and, from the first
DIO it hears from a parent onward, unicasts a fixed captured DAO to its
current preferred parent every ``replay_interval``.
"""
from __future__ import annotations

from dataclasses import dataclass

from .engine import Simulator, seconds
from .messages import DAO, DIO, DaoTag, NodeAddress
from .rpl import RplNode, RplParams

SELF_PREFIX = "self_prefix"
FOREIGN_PREFIX = "foreign_prefix"


@dataclass(frozen=True)
class AttackParams:
    replay_interval_us: int = seconds(1)
    mode: str = SELF_PREFIX
    victim_id: int | None = None
    fresh_seq: bool = False
    generates_data: bool = True

    def __post_init__(self):
        if self.replay_interval_us <= 0:
            raise ValueError("replay interval must be positive")
        if self.mode not in (SELF_PREFIX, FOREIGN_PREFIX):
            raise ValueError(f"unknown attack mode {self.mode!r}")
        if self.mode == FOREIGN_PREFIX and self.victim_id is None:
            raise ValueError("foreign_prefix mode needs a victim_id")


class AttackerNode(RplNode):
    def __init__(self, node_id: int, sim: Simulator, attack: AttackParams,
                 params: RplParams | None = None, **kw):
        super().__init__(node_id, sim, params, **kw)
        if self.is_root:
            raise ValueError("the DODAG root cannot be the attacker")
        self.attack = attack
        self.generates_data = attack.generates_data
        self.attack_started_at: int | None = None
        self.replays = 0
        self._captured: DAO | None = None

    def on_dio(self, sender: int, dio: DIO) -> None:
        super().on_dio(sender, dio)
        if self.attack_started_at is None and sender == self.parent:
            self.attack_started_at = self.sim.now
            self._trace("attack_start")
            self._arm(1)

    def _arm(self, k: int) -> None:
        at = self.attack_started_at + k * self.attack.replay_interval_us
        self.sim.schedule(at, "TimerFire", self._replay_timer, k)

    def _replay_timer(self, k: int) -> None:
        if self.parent is not None:
            self.replay_dao()
        self._arm(k + 1)

    def _payload(self) -> DAO:
        a = self.attack
        if self._captured is None:
            if a.mode == SELF_PREFIX:
                origin = self.addr
            else:
                origin = NodeAddress.of(a.victim_id)
            # a captured DAO carries whatever seq the originator had used
            self._captured = DAO(origin.global_id, origin, max(self.dao_seq, 1))
        if a.fresh_seq:
            self.dao_seq += 1
            return DAO(self._captured.prefix, self._captured.originator, self.dao_seq)
        return self._captured

    def replay_dao(self) -> DAO:
        base = self._payload()
        self.replays += 1
        self._dao_number += 1
        dao = DAO(base.prefix, base.originator, base.seq,
                  DaoTag(self.node_id, self._dao_number, malicious=True))
        self._send(self.parent, dao)
        return dao
