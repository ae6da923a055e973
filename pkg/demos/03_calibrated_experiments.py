"""Run the fidelity and scaling experiments with the frozen calibrated noise.

Run: python demos/03_calibrated_experiments.py  (about a minute)
"""
from nvflux import config, experiments

print("calibrated noise magnitudes:", config.CALIBRATED)

cfg, prov = config.resolve({"noise.trajectories": 300}, "fidelity")
fid = experiments.run_fidelity(cfg, workers=4).curves["fidelity"]
for t, v, e in zip(fid.times, fid.values, fid.std_errors):
    print(f"  t={t:5.2f} ms  F={v:.4f} +- {e:.1e}")
# gate depolarization is applied as an exact channel, so the spread left is from the weak OU field
print(f"plateau {fid.meta['plateau']:.3f} (target 0.82)")

# the calibrated single-NV coherence time is a fraction of a second, so the grid spans one second
cfg, _ = config.resolve({"noise.trajectories": 300, "grid.units": "s", "grid.stop": 1.0, "grid.points": 11}, "scaling")
res = experiments.run_scaling(cfg, workers=4)
tn = res.curves["coherence_time_vs_n"]
for n, t, e in zip(tn.times, tn.values, tn.std_errors):
    print(f"  n={int(n)} NV: coherence drops below 0.4 at {t:.3f} +- {e:.3f} s")
