"""Baseline flow from a conformally balanced metric, with the monitors.

Run:  python demos/03_baseline_flow.py [N]
(N=16 takes a few seconds, N=32 about forty.)
"""

import sys

from anomalyflow import FlowConfig, doubling_monitor, run_flow, shi_monitor

N = int(sys.argv[1]) if len(sys.argv) > 1 else 16
config = FlowConfig(N=N, eps=0.05, t_end=0.175, output_every=max(1, 100 * N * N // 1024))
result = run_flow(config)
print(f"outcome {result.outcome} after {result.steps} steps")

cols = ("t", "omega_norm_min", "T2_max", "Rm_max", "DRm_max", "balanced_residual", "f_max")
print("  ".join(f"{c:>17s}" for c in cols))
for s in result.samples:
    print("  ".join(f"{getattr(s, c):17.6g}" for c in cols))

shi = shi_monitor(result.samples)
print(f"\nShi window t <= {shi.window:.4f} (A = {shi.A:.3f}); "
      f"sup t^1/2 |DRm| = {shi.rm_sup[1]:.4f}, sup t^1/2 |D^2 T| = {shi.torsion_sup[1]:.4f}")
rep = doubling_monitor(result.samples)
print(f"curvature-scale doubling: {rep.doubled} (largest f ratio {rep.max_ratio:.2f})")
