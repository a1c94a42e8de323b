"""A miniature version of the order-selection simulation study.

Repeats sample -> fit K = 1..6 -> select -> evaluate on the well-specified
scenario at a small scale (8 trials, n = 800), printing the selected-K
histogram per method and the per-K divergence summary.  The full-scale
study behind the acceptance suite uses n = 2000, K up to 10 and 30 trials;
run it through the CLI:

    glome experiment --scenario ws --n 2000 --k-max 10 --trials 30 \
        --methods jump,slope --divergence all --out-dir results/
"""

import numpy as np

from glome import EmConfig, run_selection_trials, ws_scenario

report = run_selection_trials(
    ws_scenario(), n=800, K_max=6, n_trials=8,
    em=EmConfig(n_restarts=2, max_iter=200),
    methods=("jump", "slope", "aic", "bic"),
    seed=11, divergence="all", n_y=50, threads=4,
)

print(f"scenario {report.scenario}, n = {report.n}, {report.n_trials} trials")
for method in report.methods:
    print(f"  {method:6s} histogram: {report.histogram(method)}")

print("\nper-K tensorized KL summary (mean [q1, median, q3]):")
for K, s in report.tkl_summary().items():
    print(f"  K = {K}: {s['mean']:.5f}  [{s['q1']:.5f}, {s['median']:.5f}, {s['q3']:.5f}]")

sel = np.asarray(report.tkl_selected["jump"])
print(f"\njump-selected estimator mean tKL: {np.nanmean(sel):.5f}")
print(f"total trial runtime: {sum(report.runtimes):.1f}s")
