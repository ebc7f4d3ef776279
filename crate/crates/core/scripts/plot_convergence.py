#!/usr/bin/env python3
"""Log-log plot of a sweep's convergence.dat.

usage: plot_convergence.py <sweep output dir> [out.png]
"""
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

out_dir = Path(sys.argv[1])
data = np.loadtxt(out_dir / "convergence.dat", ndmin=2)
unknowns = data[:, 0]
labels = ["H1 error", "L2 flux error", "10 h_X", "10 k^1/2"]
styles = ["o-", "s-", "k--", "k:"]
for col, (label, style) in enumerate(zip(labels, styles), start=1):
    plt.loglog(unknowns, data[:, col], style, label=label)
plt.xlabel("unknowns N + M")
plt.legend()
plt.grid(True, which="both", alpha=0.3)
target = sys.argv[2] if len(sys.argv) > 2 else out_dir / "convergence.png"
plt.savefig(target, dpi=150)
print(f"wrote {target}")
