"""Run an experiment file through the library API and print the means.

Equivalent to ``hlisa sweep --config configs/desk.cfg`` but keeps the rows
as Python objects.
"""
from pathlib import Path

from hlisa import load_spec, run_sweep

spec = load_spec(Path(__file__).resolve().parents[1] / "configs" / "desk.cfg")
res = run_sweep(spec)
print(f"{len(res.rows)} rows")
for a in res.aggregate:
    print(f"{a['method']:<8s} {a['snr_db']:6.1f} dB  {a['mean_sum_rate']:.3f}")
