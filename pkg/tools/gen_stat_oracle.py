"""One-off generator for tests/fixtures/stat_oracle.json.

Reference values come from scipy; the fixture is committed so the test
suite never depends on scipy at run time.
"""

import json
from pathlib import Path

import numpy as np
from scipy import stats

out = {"t_cdf": [], "f_cdf": []}

xs = [round(x, 6) for x in np.linspace(0.0, 10.0, 50)]
for df in (1, 5, 14, 30):
    for x in xs:
        out["t_cdf"].append(
            {"df": df, "x": x, "cdf": float(stats.t.cdf(x, df))}
        )

for df1, df2 in ((1, 5), (2, 6), (5, 14), (14, 30)):
    for x in xs:
        out["f_cdf"].append(
            {"df1": df1, "df2": df2, "x": x, "cdf": float(stats.f.cdf(x, df1, df2))}
        )

path = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "stat_oracle.json"
path.parent.mkdir(parents=True, exist_ok=True)
path.write_text(json.dumps(out, indent=1) + "\n")
print(f"wrote {path} ({len(out['t_cdf'])} t entries, {len(out['f_cdf'])} F entries)")
