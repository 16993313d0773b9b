"""
Run reports and independent re-verification
===========================================

The ``simtri`` command writes a JSON run report that embeds the family, the
tolerances and the result. ``simtri verify`` re-checks a report without
trusting anything but the family and the stored basis change.
"""

import json
import tempfile
from pathlib import Path

from simtri.cli import main

work = Path(tempfile.mkdtemp())
family, report, check = work / "family.json", work / "report.json", work / "check.json"

# simtri generate --kind shemesh_ll --dim 4 --seed 2 --out family.json
main(["generate", "--kind", "shemesh_ll", "--dim", "4", "--seed", "2", "--out", str(family)])

# simtri triangularize family.json --out report.json
code = main(["triangularize", str(family), "--out", str(report)])
rep = json.loads(report.read_text())
print("exit", code, "| status", rep["status"], "| mode", rep["result"]["mode"], "| routes", rep["result"]["routes"])

# simtri verify report.json
code = main(["verify", str(report), "--out", str(check)])
print("verify exit", code)

# Swap two basis vectors and the verification fails with exit status 1.
rep["result"]["basis_change"] = [[r[1], r[0]] + r[2:] for r in rep["result"]["basis_change"]]
report.write_text(json.dumps(rep))
code = main(["verify", str(report), "--out", str(check)])
failed = [c["name"] for c in json.loads(check.read_text())["verification"]["checks"] if not c["passed"]]
print("tampered verify exit", code, "| failed checks:", failed[:4], "...")
