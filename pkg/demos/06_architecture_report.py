"""A small two-architecture sweep with the full report pipeline.

Runs matic_i and circuit_iii for two seeds each (shortened epochs so the
demo stays quick), then renders every figure family into out/figures:
training curves, test-score boxes, confidence-error and ensemble
densities, calibration, pooled weight densities, and the difference
versus accuracy scatter.
"""

import os

from qcbnn.config import RunConfig, apply_settings
from qcbnn.experiment import run_report, run_train

out = os.environ.get("QBNN_OUT", "out/demo_sweep")
config = apply_settings(RunConfig(), {
    "arch": "matic_i,circuit_iii",
    "seed": "1,2",
    "epochs": "15",
    "n_ensemble": "50",
    "out": out,
})

print(f"running {len(config.cells())} cells into {out} ...")
run_train(config, progress=True)
written = run_report(out)
print("\nreport files:")
for path in written:
    print(" ", os.path.relpath(path, out))
