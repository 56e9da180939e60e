#!/usr/bin/env python3
"""Writes synthetic scenario files under data/.

Loads follow a residential day shape scaled by season, weekday and noise;
PV availability is a clear-sky bell scaled by season and a daily cloud
factor. Fixed seeds, so reruns produce identical files.

Run from the repository root: python3 tools/make_scenarios.py
"""
import json
import math
import pathlib
import random

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"

SHAPE = [0.62, 0.58, 0.55, 0.54, 0.55, 0.60, 0.70, 0.80, 0.86, 0.88, 0.90, 0.91,
         0.90, 0.88, 0.87, 0.88, 0.92, 0.98, 1.00, 0.99, 0.95, 0.88, 0.78, 0.68]


def fmt(v):
    return f"{v:.6g}"


def day_profile(rng, day, n_bus, n_pv, hours=24):
    season = math.cos(2.0 * math.pi * (day - 15) / 365.0)  # +1 mid-winter, -1 mid-summer
    weekday = 1.0 if day % 7 < 5 else 0.93
    level = (0.86 + 0.08 * abs(season)) * weekday
    hourly = [level * SHAPE[h] * (1.0 + rng.gauss(0.0, 0.03)) for h in range(hours)]
    bus_scale = [1.0 + rng.gauss(0.0, 0.04) for _ in range(n_bus)]

    cloud = rng.choice([0.95, 0.95, 0.9, 0.65, 0.6, 0.3])
    rise = 6.0 + 1.2 * season
    sett = 18.5 - 1.2 * season
    peak = 0.80 - 0.12 * season
    pv = []
    for u in range(n_pv):
        unit = 1.0 + rng.gauss(0.0, 0.03)
        row = []
        for h in range(hours):
            x = (h + 0.5 - rise) / (sett - rise)
            a = 0.0
            if 0.0 < x < 1.0:
                a = peak * cloud * unit * math.sin(math.pi * x) ** 1.3 * (1.0 + rng.gauss(0.0, 0.05))
            row.append(min(1.0, max(0.0, a)))
        pv.append(row)
    return hourly, bus_scale, pv


def write(path, case, days, seed):
    rng = random.Random(seed)
    buses = case["buses"]
    pvs = case.get("inverter_dg", [])
    lines = ["scenario,entity_id,hour,p_mw,q_mvar,availability"]
    for label, day in days:
        hourly, bus_scale, pv = day_profile(rng, day, len(buses), len(pvs))
        for h in range(24):
            for b, k in zip(buses, bus_scale):
                p = b.get("p_demand_mw", 0.0) * hourly[h] * k
                q = b.get("q_demand_mvar", 0.0) * hourly[h] * k
                lines.append(f"{label},bus:{b['id']},{h + 1},{fmt(p)},{fmt(q)},")
            for g, row in zip(pvs, pv):
                lines.append(f"{label},pv:{g['id']},{h + 1},,,{fmt(row[h])}")
    path.write_text("\n".join(lines) + "\n")


def main():
    ieee33 = json.loads((DATA / "ieee33.json").read_text())
    # one day per week across a year
    write(DATA / "ieee33_pool.csv", ieee33, [(f"day-{d + 1:03d}", d) for d in range(3, 365, 7)], 2023)
    tut = json.loads((DATA / "tutorial6.json").read_text())
    write(DATA / "tutorial6_scenarios.csv", tut, [("spring", 100), ("winter", 20)], 7)


if __name__ == "__main__":
    main()
