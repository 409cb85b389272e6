"""DAO replay at each interval against the clean network.

Every scenario below uses the same seeds, so the runs differ only in the
attacker. Shorter replay intervals mean more DAO traffic upward.
"""
from rplsim.config import default_scenario
from rplsim.harness import run_experiment

seeds = [1, 2, 3]
scs = [default_scenario("rpl", seeds=seeds)]
scs += [default_scenario("rpl_under_attack", iv, seeds=seeds) for iv in (1.0, 2.0, 4.0, 8.0)]
res = run_experiment(scs, workers=4)

print(f"{'scenario':18} {'interval':>8} {'pdr':>8} {'ae2ed ms':>9} {'dao_tx':>7}")
for g in res.summary["groups"]:
    met = g["metrics"]
    dao = [r["dao_tx"] for r in res.rows
           if r["scenario"] == g["scenario"] and r["interval"] == g["interval"]]
    print(f"{g['scenario']:18} {g['interval'] or '-':>8} {met['pdr']['mean']:8.4f} "
          f"{met['ae2ed_ms']['mean']:9.3f} {sum(dao) / len(dao):7.0f}")
