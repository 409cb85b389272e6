"""Wire-level payloads exchanged between nodes.

Sizes are in bits and include a fixed link/adaptation header. They feed the
airtime model only; nothing here is byte-exact 6LoWPAN.
"""
from __future__ import annotations

from dataclasses import dataclass

# 802.15.4 MAC header + FCS + compressed IPv6 header, rounded.
HEADER_BITS = 30 * 8
ICMP_BITS = 4 * 8
UDP_BITS = 8 * 8

GLOBAL_PREFIX = 0xAAAA << 16


@dataclass(frozen=True)
class NodeAddress:
    source_id: int
    global_id: int

    @classmethod
    def of(cls, node_id: int) -> "NodeAddress":
        return cls(node_id, GLOBAL_PREFIX | node_id)


def global_id_of(node_id: int) -> int:
    return GLOBAL_PREFIX | node_id


def node_of_global(global_id: int) -> int:
    return global_id & 0xFFFF


@dataclass(frozen=True)
class DIO:
    dodag_id: int
    version: int
    rank: int
    kind = "DIO"
    size_bits = HEADER_BITS + ICMP_BITS + 24 * 8


@dataclass(frozen=True)
class DIS:
    kind = "DIS"
    size_bits = HEADER_BITS + ICMP_BITS + 2 * 8


@dataclass(frozen=True)
class DaoTag:
    """Simulation-only provenance: who created this DAO and why.

    Never read by protocol logic; used to attribute transmissions.
    """
    origin: int
    number: int
    malicious: bool = False


@dataclass(frozen=True)
class DAO:
    prefix: int
    originator: NodeAddress
    seq: int
    tag: DaoTag | None = None
    kind = "DAO"
    # base object + one RPL target option carrying a /128 prefix
    size_bits = HEADER_BITS + ICMP_BITS + (4 + 20) * 8


@dataclass(frozen=True)
class DaoAck:
    seq: int
    kind = "DAO_ACK"
    size_bits = HEADER_BITS + ICMP_BITS + 4 * 8


CONTROL_KINDS = ("DIO", "DIS", "DAO", "DAO_ACK")


@dataclass(frozen=True)
class DataPacket:
    origin: int
    dst: int
    seq: int
    created_at: int
    payload_bits: int
    kind = "DATA"

    @property
    def size_bits(self) -> int:
        return HEADER_BITS + UDP_BITS + self.payload_bits
