"""The threshold defense, first on its own and then inside a run."""
from pathlib import Path

from rplsim import defense
from rplsim.config import default_scenario, load_scenario
from rplsim.harness import run_once
from rplsim.messages import global_id_of

# table-level: a child that keeps originating its own prefix
state = defense.initialize(threshold=3)
g = global_id_of(7)
for i in range(5):
    print(i + 1, defense.on_dao_receive(state, 7, g, g).value)

# a relayed DAO (someone else's prefix) is never counted
for _ in range(3):
    print("relay:", defense.on_dao_receive(state, 4, global_id_of(9), global_id_of(4)).value)
print("table bytes:", defense.table_memory_bytes(state))

# network-level: who blacklisted the attacker, and when
for name in ("rpl_under_attack", "rpl_secure"):
    m = run_once(default_scenario(name, 1.0, duration_s=300.0), seed=1).metrics
    print(f"{name}: dao_tx {m.control_tx['DAO']}, discarded {m.dao_discarded_by_defense}")
    for t_us, parent, child in m.blacklist_events:
        print(f"  t={t_us / 1e6:.1f}s node {parent} blacklisted {child}")

# replaying someone else's prefix slips past the counter
sc = load_scenario(Path(__file__).parent.parent / "scenarios" / "rpl_secure_foreign_prefix.json")
sc = sc.with_overrides(duration_s=300.0)
m = run_once(sc, seed=1).metrics
print("foreign_prefix blacklists:", m.blacklist_count)
