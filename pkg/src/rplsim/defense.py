"""Per-node DAO flood detection by blacklisting.

Each parent keeps two local tables:

* a neighbor table, keyed by the link-local id of the child that handed it
  a DAO, holding that child's global id and a counter of DAOs the child
  *originated* (the DAO prefix equals the child's own global id);
* a blacklist of link-local ids whose counter hit the threshold.

DAOs from blacklisted senders are discarded before touching the neighbor
table. DAOs that a child merely forwards carry somebody else's prefix and
never move the counter, so relays deep in the tree are not punished for
their descendants' traffic.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

DEFAULT_THRESHOLD = 20

# Contiki-style storage: two 16-byte IPv6 addresses + a 16-bit counter per
# neighbor entry, one 16-byte address per blacklisted sender.
DEFAULT_ENTRY_BYTES = 34
DEFAULT_ID_BYTES = 16


class DefenseConfigError(ValueError):
    pass


class DaoDecision(enum.Enum):
    DISCARD = "discard"
    FORWARD_AND_COUNT = "forward_and_count"
    FORWARD_ONLY = "forward_only"
    BLACKLIST_AND_DISCARD = "blacklist_and_discard"
    ADMIT_NEW = "admit_new"

    @property
    def forwards(self) -> bool:
        return self in (DaoDecision.FORWARD_AND_COUNT, DaoDecision.FORWARD_ONLY,
                        DaoDecision.ADMIT_NEW)


@dataclass
class NeighborEntry:
    source_id: int
    global_id: int
    dao_count: int = 0


@dataclass
class DefenseState:
    threshold: int
    neighbor_table: dict[int, NeighborEntry] = field(default_factory=dict)
    blacklist_table: set[int] = field(default_factory=set)
    lookup_ops: int = 0
    last_call_ops: int = 0
    calls: int = 0

    def reset_counters(self) -> None:
        """Zero every neighbor counter; used by the optional windowed mode."""
        for entry in self.neighbor_table.values():
            entry.dao_count = 0


def initialize(threshold: int = DEFAULT_THRESHOLD) -> DefenseState:
    if not isinstance(threshold, int) or threshold < 1:
        raise DefenseConfigError(f"DAO receive threshold must be an integer >= 1, got {threshold!r}")
    return DefenseState(threshold=threshold)


def is_blacklisted(st: DefenseState, sender: int) -> bool:
    return sender in st.blacklist_table


def on_dao_receive(st: DefenseState, sender: int, dao_prefix: int, sender_global: int) -> DaoDecision:
    """Classify one received DAO and update the tables.

    ``sender`` is the link-local previous hop, ``sender_global`` its global
    id. A first-time sender is inserted and its DAO then goes through the
    normal counting rule; the decision reported for that DAO is
    ``ADMIT_NEW`` (it is always forwarded, since the threshold is >= 1).

    Every table probe (membership test, lookup, insert) counts as one
    lookup operation in ``st.lookup_ops``.
    """
    ops = 1
    st.calls += 1
    if sender in st.blacklist_table:
        st.last_call_ops = ops
        st.lookup_ops += ops
        return DaoDecision.DISCARD

    ops += 1
    entry = st.neighbor_table.get(sender)
    admitted = False
    if entry is None:
        ops += 1
        entry = st.neighbor_table[sender] = NeighborEntry(sender, sender_global)
        admitted = True

    if dao_prefix == entry.global_id:
        if entry.dao_count < st.threshold:
            entry.dao_count += 1
            decision = DaoDecision.FORWARD_AND_COUNT
        else:
            ops += 1
            st.blacklist_table.add(sender)
            decision = DaoDecision.BLACKLIST_AND_DISCARD
    else:
        decision = DaoDecision.FORWARD_ONLY

    if admitted:
        decision = DaoDecision.ADMIT_NEW
    st.last_call_ops = ops
    st.lookup_ops += ops
    return decision


def table_memory_bytes(st: DefenseState, entry_cost: int = DEFAULT_ENTRY_BYTES,
                       id_cost: int = DEFAULT_ID_BYTES) -> int:
    if entry_cost <= 0 or id_cost <= 0:
        raise ValueError("byte costs must be positive")
    return len(st.neighbor_table) * entry_cost + len(st.blacklist_table) * id_cost
