#!/usr/bin/env python3
"""Reference (a, b) for the layout curve 1 / (1 + a * x^(2b)), fitted with
scipy's curve_fit exactly as the reference UMAP implementation does."""
import json
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import curve_fit


def fit(min_dist, spread):
    xv = np.linspace(0, spread * 3, 300)
    yv = np.zeros(xv.shape)
    yv[xv < min_dist] = 1.0
    yv[xv >= min_dist] = np.exp(-(xv[xv >= min_dist] - min_dist) / spread)
    params, _ = curve_fit(lambda x, a, b: 1.0 / (1.0 + a * x ** (2 * b)), xv, yv)
    return float(params[0]), float(params[1])


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "data" / "layout_curve.json"
    rows = []
    for min_dist in (0.0, 0.05, 0.1, 0.25, 0.5):
        a, b = fit(min_dist, 1.0)
        rows.append({"min_dist": min_dist, "spread": 1.0, "a": a, "b": b})
    out.write_text(json.dumps(rows, indent=1) + "\n")


if __name__ == "__main__":
    main()
