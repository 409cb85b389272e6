"""Full three-way suite with a report on disk.

Writes runs.csv, summary.json and one .dat table per metric into
./suite_out. The CSV alone is enough to rebuild the summary.
"""
import json
from pathlib import Path

from rplsim.harness import emit_report, rows_from_csv, run_suite, summarize_rows

res = run_suite(workers=4, seeds=list(range(1, 11)))
out = Path("suite_out")
for p in emit_report(res.rows, out):
    print("wrote", p)

again = summarize_rows(rows_from_csv((out / "runs.csv").read_text()))
assert again == res.summary
print((out / "pdr.dat").read_text())
print(json.dumps(res.summary["memory_budget"]))
