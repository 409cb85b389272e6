"""One attack-free run, then the first few trace records of a short one."""
import itertools
import sys

from rplsim.config import default_scenario
from rplsim.engine import Trace
from rplsim.harness import run_once
from rplsim.metrics import ae2ed, control_overhead, pdr

sc = default_scenario("rpl", duration_s=120.0)
res = run_once(sc, seed=1)
m = res.metrics
print(f"sent {m.data_sent}, delivered {m.data_delivered}")
print(f"pdr {pdr(m):.4f}  ae2ed {ae2ed(m):.2f} ms")
print("control frames:", control_overhead(m))

# traces are plain dicts; Trace.dump writes them as JSON lines
trace = Trace()
run_once(sc.with_overrides(duration_s=10.0), seed=1, trace=trace)
for line in itertools.islice(trace.lines(), 8):
    sys.stdout.write(line + "\n")
print("...", len(trace.records), "records in 10 s")
