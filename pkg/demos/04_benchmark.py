"""The full benchmark protocol: AUC, timing, and model size vs OCSVM.

One shared test set; per repetition a fresh training draw, hyperparameters
from a small labeled validation set (tuned scenario), wall-clock-timed
training and scoring, and exact serialized sizes. Ratios are per-rep values
over the OCSVM mean.

Takes a minute or two at this scale.

Run: python3 demos/04_benchmark.py
"""

from ocsketch.evaluate import (
    MINIMAL_TUNING,
    ExperimentProtocol,
    emit_report,
    run_experiment,
    synth_cluster_in_cluster,
)

X, y = synth_cluster_in_cluster(6500, seed=11)
normal, novel = X[y == 0], X[y == 1]

protocol = ExperimentProtocol(
    n_train=1500,          # desk-scale; the acceptance suite runs 2500
    n_test_per_class=300,
    n_val=150,             # 75 normal + 75 novel for hyperparameter tuning
    reps=3,
    timing_repeats=20,     # scoring repeated for stable wall-clock numbers
    seed=0,
)

report = run_experiment(
    normal, novel,
    methods=["ocsvm", "kjl-qs", "nystrom-qs"],
    protocol=protocol,
    scenario=MINIMAL_TUNING,
)

print(emit_report(report, "markdown"))
for method in ("kjl-qs", "nystrom-qs"):
    picks = report.per_rep[method]
    print(f"{method}: chose h quantiles {picks['h_quantile']}, k = {picks['k']}")

print("\nfull-precision JSON is one call away: emit_report(report, 'json')")
print("test-time speedup and space reduction grow with n_train (the OCSVM "
      "model scales with its support vectors; the embedded detectors do not)")
