"""Run counters, performance indicators and cross-seed statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import stats

from .messages import CONTROL_KINDS

US_PER_S = 1_000_000


@dataclass
class RunMetrics:
    """Everything one simulation run counts.

    Times are integer microseconds. ``data_*`` fields cover upward
    application traffic (node -> root); downward traffic has its own
    ``down_*`` counters.
    """
    duration_s: float = 0.0
    data_sent: int = 0
    data_delivered: int = 0
    latencies_us: list[int] = field(default_factory=list)
    data_bits_delivered: int = 0
    data_dropped: dict[str, int] = field(default_factory=dict)
    down_sent: int = 0
    down_delivered: int = 0
    down_dropped: int = 0
    down_latencies_us: list[int] = field(default_factory=list)
    down_bits_delivered: int = 0
    control_tx: dict[str, int] = field(default_factory=lambda: dict.fromkeys(CONTROL_KINDS, 0))
    data_tx: int = 0
    tx_by_node: dict[int, int] = field(default_factory=dict)
    malicious_dao_tx: int = 0
    dao_originated: int = 0
    dao_discarded_by_defense: int = 0
    blacklist_events: list[tuple[int, int, int]] = field(default_factory=list)
    lookup_ops: dict[int, int] = field(default_factory=dict)
    defense_table_bytes: dict[int, int] = field(default_factory=dict)
    child_originations: dict[tuple[int, int], int] = field(default_factory=dict)
    frame_drops: dict[str, int] = field(default_factory=dict)

    def count_drop(self, reason: str, n: int = 1) -> None:
        self.frame_drops[reason] = self.frame_drops.get(reason, 0) + n

    def count_data_drop(self, reason: str) -> None:
        self.data_dropped[reason] = self.data_dropped.get(reason, 0) + 1

    @property
    def max_child_originations(self) -> int:
        return max(self.child_originations.values(), default=0)

    @property
    def blacklist_count(self) -> int:
        return len(self.blacklist_events)


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    half_width_95ci: float | None
    n: int


def pdr(m: RunMetrics, include_downward: bool = False) -> float | None:
    sent = m.data_sent + (m.down_sent if include_downward else 0)
    if sent == 0:
        return None
    delivered = m.data_delivered + (m.down_delivered if include_downward else 0)
    return delivered / sent


def ae2ed(m: RunMetrics) -> float | None:
    """Mean end-to-end delay of delivered upward packets, in milliseconds."""
    if not m.latencies_us:
        return None
    return sum(m.latencies_us) / len(m.latencies_us) / 1000.0


def throughput(m: RunMetrics) -> float:
    """Delivered application bits per second of simulated time."""
    if m.duration_s <= 0:
        raise ValueError("run duration must be positive")
    return m.data_bits_delivered / m.duration_s


def control_overhead(m: RunMetrics) -> dict[str, int]:
    return dict(m.control_tx)


def summarize(samples, confidence: float = 0.95) -> SummaryStats:
    """Mean with a Student-t confidence half-width (absent for n < 2)."""
    xs = [float(x) for x in samples]
    n = len(xs)
    if n == 0:
        raise ValueError("no samples")
    # fsum keeps the mean independent of sample order
    mean = math.fsum(xs) / n
    if n < 2:
        return SummaryStats(mean, None, n)
    var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1)
    t = stats.t.ppf(0.5 + confidence / 2, n - 1)
    return SummaryStats(mean, float(t * math.sqrt(var / n)), n)
