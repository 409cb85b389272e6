"""Experiment orchestration: build runs from scenarios, sweep seeds and
replay intervals, calibrate the DAO threshold, write CSV/JSON reports."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import metrics as mx
from .attacker import AttackerNode
from .config import (DEFAULT_INTERVALS, SCENARIO_NAMES, ConfigError, Scenario,
                     default_scenario, parse_scenario)
from .defense import DEFAULT_ENTRY_BYTES, DEFAULT_ID_BYTES
from .engine import Simulator, Trace, seconds
from .metrics import RunMetrics
from .rpl import RplNode

CSV_COLUMNS = ("scenario", "seed", "interval", "pdr", "ae2ed_ms", "throughput_bps",
               "dao_tx", "blacklist_count", "attack_mode", "max_defense_bytes")
SUMMARY_METRICS = ("pdr", "ae2ed_ms", "throughput_bps", "dao_tx", "blacklist_count")
Z1_RAM_BYTES = 8 * 1024
Z1_ROM_BYTES = 92 * 1024


@dataclass
class RunResult:
    scenario: Scenario
    seed: int
    metrics: RunMetrics
    sim: Simulator | None = field(default=None, repr=False)

    @property
    def row(self) -> dict:
        m, sc = self.metrics, self.scenario
        return {
            "scenario": sc.name,
            "seed": self.seed,
            "interval": sc.replay_interval,
            "pdr": mx.pdr(m, sc.app.include_downward_in_pdr),
            "ae2ed_ms": mx.ae2ed(m),
            "throughput_bps": mx.throughput(m),
            "dao_tx": m.control_tx["DAO"],
            "blacklist_count": m.blacklist_count,
            "attack_mode": sc.attack.mode if sc.attack else None,
            "max_defense_bytes": max(m.defense_table_bytes.values(), default=None),
        }


def attacker_id(sc: Scenario, topo) -> int | None:
    if sc.attack is None:
        return None
    aid = sc.attack.attacker_id
    if aid is None:
        return topo.edge_node()
    if aid not in topo.positions or aid == topo.root:
        raise ConfigError(f"attack.attacker_id: {aid} is not a non-root node of the topology")
    return aid


def build(sc: Scenario, seed: int, trace: Trace | None = None) -> Simulator:
    """Wire up a simulator with one node per topology position."""
    topo = sc.topology.build(seed)
    sim = Simulator(topo, seed, sc.radio.params(), sc.engine.params(), trace)
    params = sc.rpl_params()
    aid = attacker_id(sc, topo)
    if sc.attack is not None and sc.attack.victim_id is not None and sc.attack.victim_id not in topo.positions:
        raise ConfigError(f"attack.victim_id: {sc.attack.victim_id} is not in the topology")
    kw = {}
    if sc.defense is not None:
        kw["defense_threshold"] = sc.defense.threshold
        if sc.defense.window_s:
            kw["defense_window_us"] = seconds(sc.defense.window_s)
    for nid in topo.node_ids:
        if nid == aid:
            node = AttackerNode(nid, sim, sc.attack.params(), params, **kw)
        else:
            node = RplNode(nid, sim, params, **kw)
        sim.add_node(node)
    return sim


def run_once(sc: Scenario, seed: int, trace: Trace | None = None, keep_sim: bool = False) -> RunResult:
    sim = build(sc, seed, trace)
    m = sim.run_until(seconds(sc.duration_s))
    return RunResult(sc, seed, m, sim if keep_sim else None)


def _run_task(args) -> RunResult:
    sc_json, seed = args
    return run_once(parse_scenario(json.loads(sc_json)), seed)


def _sort_key(r: RunResult):
    iv = r.scenario.replay_interval
    return (SCENARIO_NAMES.index(r.scenario.name), -1.0 if iv is None else iv, r.seed)


def run_many(scenarios: list[Scenario], workers: int = 1) -> list[RunResult]:
    """Run every (scenario, seed) pair; output order never depends on workers."""
    tasks = [(sc.to_json(), seed) for sc in scenarios for seed in sc.seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    return sorted(results, key=_sort_key)


@dataclass
class ExperimentResult:
    rows: list[dict]
    summary: dict
    runs: list[RunResult] = field(default_factory=list, repr=False)


def run_experiment(sc: Scenario | list[Scenario], workers: int = 1) -> ExperimentResult:
    scenarios = sc if isinstance(sc, list) else [sc]
    runs = run_many(scenarios, workers)
    rows = [r.row for r in runs]
    return ExperimentResult(rows, summarize_rows(rows), runs)


def suite_scenarios(base: Scenario | None = None, intervals=DEFAULT_INTERVALS,
                    seeds: list[int] | None = None, threshold: int | None = None,
                    duration_s: float | None = None) -> list[Scenario]:
    """The three-way comparison: baseline, then attacked and defended runs
    for every replay interval."""
    base = base or default_scenario("rpl")
    data = base.model_dump()
    data.pop("attack", None)
    data.pop("defense", None)
    if seeds is not None:
        data["seeds"] = list(seeds)
    if duration_s is not None:
        data["duration_s"] = duration_s
    attack = dict(base.attack.model_dump()) if base.attack else {}
    defense = dict(base.defense.model_dump()) if base.defense else {}
    if threshold is not None:
        defense["threshold"] = threshold
    out = [parse_scenario({**data, "name": "rpl"})]
    for name in ("rpl_under_attack", "rpl_secure"):
        for iv in intervals:
            d = {**data, "name": name, "attack": {**attack, "replay_interval_s": iv}}
            if name == "rpl_secure":
                d["defense"] = defense
            out.append(parse_scenario(d))
    return out


def run_suite(base: Scenario | None = None, workers: int = 1, **kw) -> ExperimentResult:
    return run_experiment(suite_scenarios(base, **kw), workers)


def calibrate_threshold(base: Scenario, seeds: list[int], safety: float = 2.0) -> int:
    """Largest per-child originated-DAO count any parent saw across
    attack-free runs, times ``safety``, rounded up."""
    if base.attack is not None:
        raise ConfigError("calibration needs an attack-free scenario")
    if not seeds:
        raise ConfigError("calibration needs at least one seed")
    if safety <= 0:
        raise ConfigError("safety multiplier must be positive")
    data = base.model_dump()
    data.update(name="rpl", defense=None, seeds=list(seeds))
    sc = parse_scenario(data)
    worst = max(run_once(sc, s).metrics.max_child_originations for s in seeds)
    return max(1, math.ceil(worst * safety))


# -- reporting -------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)  # shortest form that parses back to the same float
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[dict]:
    ints = {"seed", "dao_tx", "blacklist_count", "max_defense_bytes"}
    floats = {"interval", "pdr", "ae2ed_ms", "throughput_bps"}
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {}
        for c in CSV_COLUMNS:
            v = rec[c]
            if v == "":
                row[c] = None
            elif c in ints:
                row[c] = int(v)
            elif c in floats:
                row[c] = float(v)
            else:
                row[c] = v
        rows.append(row)
    return rows


def summarize_rows(rows: list[dict]) -> dict:
    """Per (scenario, interval): mean and 95% half-width of each metric."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["scenario"], row["interval"]), []).append(row)
    entries = []
    for (name, iv), grp in groups.items():
        stats = {}
        for metric in SUMMARY_METRICS:
            xs = [r[metric] for r in grp if r[metric] is not None]
            if xs:
                s = mx.summarize(xs)
                stats[metric] = {"mean": s.mean, "half_width_95ci": s.half_width_95ci, "n": s.n}
        mem = [r["max_defense_bytes"] for r in grp if r["max_defense_bytes"] is not None]
        flags = []
        modes = {r["attack_mode"] for r in grp}
        if name == "rpl_secure" and "foreign_prefix" in modes and all(r["blacklist_count"] == 0 for r in grp):
            flags.append("foreign_prefix_bypass: replayed DAOs carry a prefix other than the "
                         "sender's, so the originator counter never moves and nothing is blacklisted")
        entries.append({
            "scenario": name,
            "interval": iv,
            "attack_mode": sorted(m for m in modes if m) or None,
            "metrics": stats,
            "max_defense_table_bytes": max(mem) if mem else None,
            "flags": flags,
        })
    entries.sort(key=lambda e: (SCENARIO_NAMES.index(e["scenario"]),
                                -1.0 if e["interval"] is None else e["interval"]))
    return {
        "groups": entries,
        "memory_budget": {"z1_ram_bytes": Z1_RAM_BYTES, "z1_rom_bytes": Z1_ROM_BYTES,
                          "entry_bytes": DEFAULT_ENTRY_BYTES, "blacklist_id_bytes": DEFAULT_ID_BYTES},
    }


def plot_table(summary: dict, metric: str) -> str:
    """Whitespace-separated columns (interval, then mean/half-width per
    scenario) for gnuplot or similar."""
    cols = ("rpl_under_attack", "rpl_secure")
    base = next((g for g in summary["groups"] if g["scenario"] == "rpl"), None)
    by_key = {(g["scenario"], g["interval"]): g for g in summary["groups"]}
    intervals = sorted({g["interval"] for g in summary["groups"] if g["interval"] is not None})
    lines = ["# interval rpl rpl_ci " + " ".join(f"{c} {c}_ci" for c in cols)]

    def cell(g):
        if g is None or metric not in g["metrics"]:
            return "nan nan"
        s = g["metrics"][metric]
        return f"{s['mean']:.6g} {(s['half_width_95ci'] or 0.0):.6g}"

    for iv in intervals:
        lines.append(" ".join([format(iv, "g"), cell(base)] + [cell(by_key.get((c, iv))) for c in cols]))
    return "\n".join(lines) + "\n"


def emit_report(rows: list[dict], out_dir: str | Path, plots: bool = True) -> list[Path]:
    if not rows:
        raise ValueError("no completed runs to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = summarize_rows(rows)
    written = []
    p = out / "runs.csv"
    p.write_text(rows_to_csv(rows))
    written.append(p)
    p = out / "summary.json"
    p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    written.append(p)
    if plots:
        for metric in ("pdr", "ae2ed_ms", "throughput_bps"):
            p = out / f"{metric}.dat"
            p.write_text(plot_table(summary, metric))
            written.append(p)
    return written
