#!/usr/bin/env python3
"""Regenerate the Lalonde fixtures under crates/core/tests/fixtures/lalonde.

Requires the `causaldata` (0.1.5), `numpy`, `pandas` and `scipy` packages.

  pilot.csv          all CPS controls (cps_mixtape), treat = 0
  analysis.csv       the NSW experimental sample (nsw_mixtape), treated + controls
  post_optmatch.csv  optimal 1:1 pair match of the analysis sample on the
                     Mahalanobis distance over (log_re75, log_re74), pooled
                     within-group covariance, solved as an assignment problem

Earnings are stored as the exact doubles of the source float32 values; the
log_* columns are log1p of those.
"""
import os
import sys

import causaldata
import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                   "..", "crates", "core", "tests", "fixtures", "lalonde")
INT_COLS = ["treat", "age", "educ", "black", "hisp", "marr", "nodegree"]
EARN = ["re74", "re75", "re78"]
COLS = INT_COLS + EARN + ["log_" + c for c in EARN]


def prep(df):
    df = df.reset_index(drop=True).copy()
    for c in INT_COLS:
        df[c] = df[c].astype(np.int64)
    for c in EARN:
        df[c] = df[c].astype(np.float64)
        df["log_" + c] = np.log1p(df[c])
    return df[COLS]


def write(df, name):
    path = os.path.join(OUT, name)
    with open(path, "w", newline="\n") as f:
        f.write(",".join(df.columns) + "\n")
        for row in df.itertuples(index=False):
            cells = []
            for col, v in zip(df.columns, row):
                cells.append(str(int(v)) if col in INT_COLS or col == "pair" else repr(float(v)))
            f.write(",".join(cells) + "\n")
    print("wrote", path, len(df), "rows", file=sys.stderr)


def optimal_pairs(analysis, vars_):
    treated = analysis[analysis.treat == 1]
    control = analysis[analysis.treat == 0]
    xt = treated[vars_].to_numpy()
    xc = control[vars_].to_numpy()
    pooled = (np.cov(xt.T, ddof=1) * (len(xt) - 1) + np.cov(xc.T, ddof=1) * (len(xc) - 1)) / (
        len(xt) + len(xc) - 2)
    inv = np.linalg.inv(pooled)
    dist = np.empty((len(xt), len(xc)))
    for i, row in enumerate(xt):
        d = xc - row
        dist[i] = np.sqrt(np.einsum("ij,jk,ik->i", d, inv, d))
    rows, cols = linear_sum_assignment(dist)
    t = treated.iloc[rows].copy()
    c = control.iloc[cols].copy()
    t["pair"] = np.arange(1, len(rows) + 1)
    c["pair"] = np.arange(1, len(rows) + 1)
    return pd.concat([t, c]).sort_values(["pair", "treat"], ascending=[True, False])


def main():
    os.makedirs(OUT, exist_ok=True)
    nsw = prep(causaldata.nsw_mixtape.load_pandas().data)
    cps = prep(causaldata.cps_mixtape.load_pandas().data)
    write(cps, "pilot.csv")
    write(nsw, "analysis.csv")
    write(optimal_pairs(nsw, ["log_re75", "log_re74"]), "post_optmatch.csv")


if __name__ == "__main__":
    main()
