"""Scenario configuration (JSON documents, strict keys)."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .attacker import AttackParams
from .defense import DEFAULT_THRESHOLD
from .engine import NodeParams, RadioParams, seconds
from .rpl import RplParams
from .topology import Topology, build_grid, build_random

SCENARIO_NAMES = ("rpl", "rpl_under_attack", "rpl_secure")
DEFAULT_INTERVALS = (1.0, 2.0, 4.0, 8.0)


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class TopologyConfig(_Strict):
    kind: Literal["grid", "random"] = "grid"
    rows: int = Field(4, ge=1)
    cols: int = Field(4, ge=1)
    spacing: float = Field(20.0, gt=0)
    n: int = Field(16, ge=2)
    area: tuple[float, float] = (100.0, 100.0)
    tx_range: float = Field(30.0, gt=0)
    interference_range: Optional[float] = Field(None, gt=0)

    def build(self, seed: int) -> Topology:
        if self.kind == "grid":
            return build_grid(self.rows, self.cols, self.spacing, self.tx_range, self.interference_range)
        return build_random(self.n, self.area, self.tx_range, seed, self.interference_range)


class RadioConfig(_Strict):
    rx_success: float = Field(1.0, ge=0.0, le=1.0)
    interference: bool = True
    data_rate_bps: int = Field(250_000, gt=0)

    def params(self) -> RadioParams:
        return RadioParams(self.data_rate_bps, self.rx_success, self.interference)


class EngineConfig(_Strict):
    processing_delay_ms: float = Field(2.0, ge=0)
    dao_processing_ms: float = Field(30.0, ge=0)
    queue_capacity: int = Field(8, ge=1)
    outbound_capacity: int = Field(8, ge=1)

    def params(self) -> NodeParams:
        return NodeParams(round(self.processing_delay_ms * 1000), round(self.dao_processing_ms * 1000),
                          self.queue_capacity, self.outbound_capacity)


class RplConfig(_Strict):
    rank_step: int = Field(256, ge=1)
    trickle_imin_s: float = Field(4.0, gt=0)
    trickle_doublings: int = Field(8, ge=0)
    trickle_k: int = Field(10, ge=1)
    dao_delay_s: float = Field(0.5, ge=0)
    dis_interval_s: float = Field(10.0, gt=0)


class AppConfig(_Strict):
    interval_s: float = Field(10.0, gt=0)
    payload_bits: int = Field(256, gt=0)
    start_s: float = Field(30.0, ge=0)
    jitter_s: float = Field(1.0, ge=0)
    downward: bool = False
    include_downward_in_pdr: bool = False


class AttackConfig(_Strict):
    attacker_id: Optional[int] = None
    replay_interval_s: float = Field(1.0, gt=0)
    mode: Literal["self_prefix", "foreign_prefix"] = "self_prefix"
    victim_id: Optional[int] = None
    fresh_seq: bool = False
    generates_data: bool = True

    @model_validator(mode="after")
    def _victim(self):
        if self.mode == "foreign_prefix" and self.victim_id is None:
            raise ValueError("foreign_prefix mode requires victim_id")
        return self

    def params(self) -> AttackParams:
        return AttackParams(seconds(self.replay_interval_s), self.mode, self.victim_id,
                            self.fresh_seq, self.generates_data)


class DefenseConfig(_Strict):
    threshold: int = Field(DEFAULT_THRESHOLD, ge=1)
    window_s: Optional[float] = Field(None, gt=0)


class Scenario(_Strict):
    name: Literal["rpl", "rpl_under_attack", "rpl_secure"]
    topology: TopologyConfig = TopologyConfig()
    radio: RadioConfig = RadioConfig()
    engine: EngineConfig = EngineConfig()
    rpl: RplConfig = RplConfig()
    app: AppConfig = AppConfig()
    attack: Optional[AttackConfig] = None
    defense: Optional[DefenseConfig] = None
    duration_s: float = Field(600.0, gt=0)
    seeds: list[int] = Field(default_factory=lambda: list(range(1, 11)))

    @model_validator(mode="after")
    def _scenario_shape(self):
        wants = {"rpl": (False, False), "rpl_under_attack": (True, False), "rpl_secure": (True, True)}
        attack, defense = wants[self.name]
        if (self.attack is not None) != attack:
            raise ValueError(f"scenario {self.name!r} {'requires' if attack else 'must not have'} an attack block")
        if (self.defense is not None) != defense:
            raise ValueError(f"scenario {self.name!r} {'requires' if defense else 'must not have'} a defense block")
        return self

    @property
    def replay_interval(self) -> float | None:
        return self.attack.replay_interval_s if self.attack else None

    def rpl_params(self) -> RplParams:
        r, a = self.rpl, self.app
        return RplParams(
            rank_step=r.rank_step,
            trickle_imin_us=seconds(r.trickle_imin_s),
            trickle_doublings=r.trickle_doublings,
            trickle_k=r.trickle_k,
            dao_delay_us=seconds(r.dao_delay_s),
            dis_interval_us=seconds(r.dis_interval_s),
            app_interval_us=seconds(a.interval_s),
            app_start_us=seconds(a.start_s),
            app_jitter_us=seconds(a.jitter_s),
            payload_bits=a.payload_bits,
            downward_traffic=a.downward,
        )

    def with_overrides(self, **changes) -> "Scenario":
        """Validated copy with top-level fields replaced."""
        data = self.model_dump()
        data.update(changes)
        return parse_scenario(data)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)


def _format_error(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "; ".join(parts)


def parse_scenario(data: dict) -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_error(err)) from None


def load_scenario(path: str | Path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON ({err})") from None
    return parse_scenario(data)


def default_scenario(name: str, replay_interval_s: float = 1.0, **overrides) -> Scenario:
    data: dict = {"name": name}
    if name != "rpl":
        data["attack"] = {"replay_interval_s": replay_interval_s}
    if name == "rpl_secure":
        data["defense"] = {}
    data.update(overrides)
    return parse_scenario(data)
