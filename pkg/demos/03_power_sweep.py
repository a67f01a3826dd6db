"""Sum rate against transmit power, written as CSV and SVG under demos/out/.

Equivalent CLI call:
    starris sweep --sweep demos/power.sweep --out demos/out
"""
from pathlib import Path

from starris import SweepSpec, default_scenario, run_sweep

out = Path(__file__).parent / "out"
sc = default_scenario().with_elements(4)            # small surfaces keep this quick
spec = SweepSpec("transmit_power_dbm", (10, 20, 30), schemes=("proposed", "refl_trans_only"))
result = run_sweep(sc, spec, out)

for scheme in spec.schemes:
    xs, ys = result.series(scheme)
    print(scheme, ", ".join(f"{x:g} dBm: {y:.3f}" for x, y in zip(xs, ys)))
print("wrote", out / "sweep.csv")
