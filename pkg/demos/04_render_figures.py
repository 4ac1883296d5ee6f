"""End-to-end pipeline: simulate, estimate, and render figures.

Produces a small convergence report with the study harness, then feeds
the CSV to the separately installed figures package (if present) to
draw the rate plot with the N^{-1/2} ln(1+N) reference overlay.
"""

import json
import os
import tempfile

from vortexlab.harness import SweepConfig, run_convergence_study

out = tempfile.mkdtemp(prefix="vortexlab-demo-")
cfg = SweepConfig(
    N_list=[64, 128, 256, 512], times=[0.25], dt=5e-3, replicas=8,
    master_seed=42, pde_grid_n=64, kernel_grid_n=512,
    quantization_points=900, k_orders=(1,), out_dir=out,
)
res = run_convergence_study(cfg)
print(f"report written to {out}/report.csv ({len(res.rows)} rows)")
print(json.dumps(res.fits, indent=2, default=str))

try:
    from vortexfigures import FigureSpec, render
except ImportError:
    print("figures package not installed; skipping the plot "
          "(pip install -e figures/)")
else:
    spec = FigureSpec(
        inputs=[os.path.join(out, "report.csv")], kind="rate_plot",
        out=os.path.join(out, "rate.svg"), options={"t": 0.25},
    )
    print(f"figure written to {render(spec)}")
    with open(os.path.join(out, "rate.values.txt")) as f:
        print("sidecar:")
        print(f.read())
