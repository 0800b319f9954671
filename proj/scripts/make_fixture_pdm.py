#!/usr/bin/env python3
"""Regenerates data/pdm_fixture/, a 100-row PdM-schema telemetry fixture.

Machine 56 fails on comp3 at 2015-01-02 03:00; its 22 in-window telemetry
rows are solved so the windowed aggregates land on fixed reference values
(volt_mean 169.0608, vibration_mean 39.2568, pressure_mean 124.67, and a
comp3 maintenance recency of 477 hours). Deterministic output.
"""
import random
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

OUTDIR = Path(__file__).resolve().parent.parent / "data" / "pdm_fixture"

T0 = datetime(2015, 1, 1, 6, 0, 0)
FAIL_56 = datetime(2015, 1, 2, 3, 0, 0)
FAIL_57 = datetime(2015, 1, 3, 0, 0, 0)


def fmt(ts):
    return ts.strftime("%Y-%m-%d %H:%M:%S")


def solve_series(n, mean, std, vmin, vmax, slope, seed):
    """Solve for n values with the given sample stats (population std,
    least-squares slope against index), min/max pinned at two indices."""
    rng = np.random.default_rng(seed)
    idx = np.arange(n, dtype=float)
    i_min, i_max = 3, n - 5
    fixed = {i_min: vmin, i_max: vmax}
    free = np.array([i for i in range(n) if i not in fixed])

    sxx = float(((idx - idx.mean()) ** 2).sum())
    s_target = n * mean
    t_target = slope * sxx + idx.mean() * s_target

    v = mean + rng.normal(0.0, std * 0.8, size=n)
    for i, val in fixed.items():
        v[i] = val

    A = np.vstack([np.ones(len(free)), idx[free]])
    b_fixed = np.array([sum(fixed.values()),
                        sum(i * val for i, val in fixed.items())])
    target = np.array([s_target, t_target]) - b_fixed

    for _ in range(400):
        x = v[free]
        resid = A @ x - target
        x = x - A.T @ np.linalg.solve(A @ A.T, resid)
        # match variance by scaling deviations from the free-value mean
        full = v.copy()
        full[free] = x
        cur_ss = ((full - full.mean()) ** 2).sum()
        want_ss = n * std * std
        scale = np.sqrt(max(want_ss, 1e-12) / max(cur_ss, 1e-12))
        x = x.mean() + (x - x.mean()) * scale
        x = np.clip(x, vmin + 1.5, vmax - 1.5)
        v[free] = x

    v = np.round(v, 4)
    # exact 4-decimal sum via an interior balancer
    bal = free[len(free) // 2]
    v[bal] = np.round(s_target - (v.sum() - v[bal]), 4)
    return v


def balanced_series(n, mean, spread, seed, decimals=4):
    rng = np.random.default_rng(seed)
    v = np.round(mean + rng.normal(0.0, spread, size=n), decimals)
    v[-1] = np.round(n * mean - v[:-1].sum(), decimals)
    return v


def main():
    rng = random.Random(7)
    rows = []

    # --- machine 56: 52 hourly rows, failure comp3 at 2015-01-02 03:00 ---
    ts56 = [T0 + timedelta(hours=h) for h in range(52)]
    n_win = 22  # rows in (2015-01-01 03:00, 2015-01-02 03:00]
    volt_w = solve_series(n_win, 169.0608, 17.8556, 139.2351, 209.8819, 0.2177, seed=11)
    vib_w = balanced_series(n_win, 39.2568, 4.4, seed=12)
    pres_w = balanced_series(n_win, 124.67, 9.5, seed=13)
    rot_w = balanced_series(n_win, 445.71, 42.0, seed=14)

    for k, ts in enumerate(ts56):
        if k < n_win:
            volt, rot, pres, vib = volt_w[k], rot_w[k], pres_w[k], vib_w[k]
        else:
            volt = round(rng.gauss(170.2, 14.0), 4)
            rot = round(rng.gauss(452.0, 45.0), 4)
            pres = round(rng.gauss(101.5, 9.0), 4)
            vib = round(rng.gauss(40.1, 4.5), 4)
        rows.append((ts, 56, volt, rot, pres, vib))

    # --- machine 57: 48 hourly rows, failure comp1 at 2015-01-03 00:00 ---
    ts57 = [T0 + timedelta(hours=h) for h in range(48)]
    for k, ts in enumerate(ts57):
        drift = 18.0 * max(0.0, (k - 18) / 30.0)  # volt drifts up before comp1 fails
        volt = round(rng.gauss(168.0 + drift, 9.0), 4)
        rot = round(rng.gauss(448.0, 38.0), 4)
        pres = round(rng.gauss(99.0, 8.0), 4)
        vib = round(rng.gauss(38.5, 4.0), 4)
        rows.append((ts, 57, volt, rot, pres, vib))

    rows.sort(key=lambda r: (r[0], r[1]))
    assert len(rows) == 100

    OUTDIR.mkdir(parents=True, exist_ok=True)
    with (OUTDIR / "PdM_telemetry.csv").open("w") as fh:
        fh.write("datetime,machineID,volt,rotate,pressure,vibration\n")
        for ts, mid, volt, rot, pres, vib in rows:
            fh.write(f"{fmt(ts)},{mid},{volt},{rot},{pres},{vib}\n")

    with (OUTDIR / "PdM_failures.csv").open("w") as fh:
        fh.write("datetime,machineID,failure\n")
        fh.write(f"{fmt(FAIL_56)},56,comp3\n")
        fh.write(f"{fmt(FAIL_57)},57,comp1\n")

    with (OUTDIR / "PdM_errors.csv").open("w") as fh:
        fh.write("datetime,machineID,errorID\n")
        fh.write("2015-01-01 10:00:00,56,error1\n")
        fh.write("2015-01-01 18:00:00,56,error2\n")
        fh.write("2015-01-02 20:00:00,56,error1\n")
        fh.write("2015-01-02 12:00:00,57,error3\n")

    with (OUTDIR / "PdM_maint.csv").open("w") as fh:
        fh.write("datetime,machineID,comp\n")
        fh.write("2014-12-13 06:00:00,56,comp3\n")   # 477 h before the comp3 failure
        fh.write("2014-12-20 00:00:00,56,comp2\n")
        fh.write("2015-01-01 00:00:00,57,comp1\n")

    with (OUTDIR / "PdM_machines.csv").open("w") as fh:
        fh.write("machineID,model,age\n")
        fh.write("56,model1,10\n")
        fh.write("57,model2,7\n")

    mu = volt_w.mean()
    print(f"volt window: mean={mu:.6f} std={volt_w.std():.4f} "
          f"min={volt_w.min():.4f} max={volt_w.max():.4f}")
    sl = np.polyfit(np.arange(n_win), volt_w, 1)[0]
    print(f"volt slope={sl:.4f}  vib mean={vib_w.mean():.6f}  "
          f"pres mean={pres_w.mean():.6f}")
    hours = (FAIL_56 - datetime(2014, 12, 13, 6)).total_seconds() / 3600
    print(f"hours_since_last_maint_comp3={hours}")


if __name__ == "__main__":
    main()
