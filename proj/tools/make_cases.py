#!/usr/bin/env python3
"""Writes the shipped case files under data/.

Run from the repository root: python3 tools/make_cases.py
The output is deterministic; the JSON files are committed.
"""
import json
import math
import pathlib

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"

# Baran & Wu 33-bus feeder: (from, to, r ohm, x ohm, load kW at `to`, load kVAr at `to`)
IEEE33 = [
    (1, 2, 0.0922, 0.0470, 100, 60), (2, 3, 0.4930, 0.2511, 90, 40),
    (3, 4, 0.3660, 0.1864, 120, 80), (4, 5, 0.3811, 0.1941, 60, 30),
    (5, 6, 0.8190, 0.7070, 60, 20), (6, 7, 0.1872, 0.6188, 200, 100),
    (7, 8, 0.7114, 0.2351, 200, 100), (8, 9, 1.0300, 0.7400, 60, 20),
    (9, 10, 1.0440, 0.7400, 60, 20), (10, 11, 0.1966, 0.0650, 45, 30),
    (11, 12, 0.3744, 0.1238, 60, 35), (12, 13, 1.4680, 1.1550, 60, 35),
    (13, 14, 0.5416, 0.7129, 120, 80), (14, 15, 0.5910, 0.5260, 60, 10),
    (15, 16, 0.7463, 0.5450, 60, 20), (16, 17, 1.2890, 1.7210, 60, 20),
    (17, 18, 0.7320, 0.5740, 90, 40), (2, 19, 0.1640, 0.1565, 90, 40),
    (19, 20, 1.5042, 1.3554, 90, 40), (20, 21, 0.4095, 0.4784, 90, 40),
    (21, 22, 0.7089, 0.9373, 90, 40), (3, 23, 0.4512, 0.3083, 90, 50),
    (23, 24, 0.8980, 0.7091, 420, 200), (24, 25, 0.8960, 0.7011, 420, 200),
    (6, 26, 0.2030, 0.1034, 60, 25), (26, 27, 0.2842, 0.1447, 60, 25),
    (27, 28, 1.0590, 0.9337, 60, 20), (28, 29, 0.8042, 0.7006, 120, 70),
    (29, 30, 0.5075, 0.2585, 200, 600), (30, 31, 0.9744, 0.9630, 150, 70),
    (31, 32, 0.3105, 0.3619, 210, 100), (32, 33, 0.3410, 0.5302, 60, 40),
]


def tou_prices(hours=24):
    # smooth day shape with distinct hourly values (no price ties between hours)
    out = []
    for h in range(hours):
        x = h + 0.5
        morning = math.exp(-((x - 9.0) / 2.5) ** 2)
        evening = math.exp(-((x - 19.0) / 2.8) ** 2)
        out.append(round(42.0 + 38.0 * morning + 62.0 * evening + 0.37 * h, 3))
    return out


def ev_window(hours, p_max, energy, window):
    p_ub = [p_max if h in window else 0.0 for h in range(hours)]
    e_ub = []
    acc = 0.0
    for p in p_ub:
        acc += p
        e_ub.append(round(acc, 6))
    e_lb = [0.0] * (hours - 1) + [energy]
    e_ub[-1] = energy
    # cumulative upper bounds must stay non-decreasing after capping the last hour
    for h in range(hours - 1):
        e_ub[h] = min(e_ub[h], energy)
    return {"p_lb_mw": [0.0] * hours, "p_ub_mw": p_ub, "e_lb_mwh": e_lb, "e_ub_mwh": e_ub}


def ieee33():
    base_mva, base_kv = 10.0, 12.66
    zbase = base_kv ** 2 / base_mva
    trunk = {(1, 2), (2, 3), (3, 4), (4, 5), (5, 6)}
    buses = [{"id": 1, "v_min": 0.95, "v_max": 1.05, "p_demand_mw": 0.0, "q_demand_mvar": 0.0,
              "substation": True}]
    branches = []
    for f, t, r, x, pk, qk in IEEE33:
        buses.append({"id": t, "v_min": 0.90, "v_max": 1.10, "p_demand_mw": pk / 1000.0,
                      "q_demand_mvar": qk / 1000.0})
        branches.append({"from": f, "to": t, "r": round(r / zbase, 8), "x": round(x / zbase, 8),
                         "i_max": 0.9 if (f, t) in trunk else 0.45})
    prices = tou_prices()
    return {
        "name": "ieee33",
        "base": {"mva": base_mva, "kv": base_kv},
        "horizon": 24,
        "options": {"delta_t": 1.0, "terminal_storage": True, "reactive_cost": "signed",
                    "storage_emission_rate": 0.0},
        "emission_rates": {"coal": 0.875, "gas": 0.520},
        "buses": buses,
        "branches": branches,
        "inverter_dg": [
            {"id": f"pv{k + 1}", "bus": b, "capacity_mw": 10.0, "kappa_min": 0.9,
             "price_p": round(1.0 + 0.1 * k, 2)}
            for k, b in enumerate([13, 18, 22, 25, 33])
        ],
        "sync_dg": [
            {"id": "gas1", "bus": 30, "p_min_mw": 0.2, "p_max_mw": 1.8, "q_min_mvar": -0.6,
             "q_max_mvar": 0.9, "ramp_down_mw": -0.35, "ramp_up_mw": 0.35, "p_initial_mw": 0.6,
             "emission_rate": "gas", "price_p": 78.0, "price_q": 4.1},
        ],
        "storage": [
            {"id": "ess1", "bus": 24, "p_cha_max_mw": 0.5, "p_dis_max_mw": 0.5, "e_min_mwh": 0.1,
             "e_max_mwh": 1.0, "e_init_mwh": 0.4, "eta_cha": 0.90, "eta_dis": 0.92, "price": 2.0},
        ],
        "ev": [dict({"id": "ev1", "bus": 8}, **ev_window(24, 0.4, 1.9, set(range(0, 7)) | set(range(19, 24))))],
        "substation": {"bus": 1, "emission_rate": "coal", "p_min_mw": 0.0, "p_max_mw": 12.0,
                       "q_max_mvar": 8.0, "v_set": 1.0},
        "prices": {"substation_p": prices},
        "assumptions": [
            "Feeder topology and nominal loads follow the Baran-Wu 33-bus system; impedances converted on 10 MVA / 12.66 kV.",
            "Five PV units of 10 MW each (50 MW fleet) on buses 13, 18, 22, 25 and 33.",
            "Substation imports at the coal rate 0.875 tCO2/MWh; export to the upstream grid is not allowed.",
            "One gas unit (0.520 tCO2/MWh) on bus 30; one storage unit on bus 24 with power equal to half its energy capacity; one EV aggregator on bus 8.",
            "Substation reactive price is 0.1 of the active price; PV reactive output is priced the same.",
        ],
    }


def tutorial6():
    prices = tou_prices()
    buses = [{"id": 1, "v_min": 0.95, "v_max": 1.05, "substation": True}]
    loads = {2: (0.9, 0.35), 3: (1.2, 0.5), 4: (0.8, 0.3), 5: (1.1, 0.45), 6: (0.7, 0.25)}
    for b, (p, q) in loads.items():
        buses.append({"id": b, "v_min": 0.92, "v_max": 1.08, "p_demand_mw": p, "q_demand_mvar": q})
    branches = [
        {"from": 1, "to": 2, "r": 0.0060, "x": 0.0100, "i_max": 0.8},
        {"from": 2, "to": 3, "r": 0.0110, "x": 0.0140, "i_max": 0.5},
        {"from": 3, "to": 4, "r": 0.0150, "x": 0.0180, "i_max": 0.4},
        {"from": 2, "to": 5, "r": 0.0120, "x": 0.0090, "i_max": 0.5},
        {"from": 5, "to": 6, "r": 0.0180, "x": 0.0150, "i_max": 0.3},
    ]
    return {
        "name": "tutorial6",
        "base": {"mva": 10.0, "kv": 12.66},
        "horizon": 24,
        "options": {"delta_t": 1.0, "terminal_storage": True, "reactive_cost": "signed"},
        "emission_rates": {"coal": 0.875, "gas": 0.520},
        "buses": buses,
        "branches": branches,
        "inverter_dg": [{"id": "pv1", "bus": 4, "capacity_mw": 3.0, "kappa_min": 0.9, "price_p": 1.0}],
        "sync_dg": [
            {"id": "gas1", "bus": 6, "p_min_mw": 0.1, "p_max_mw": 1.5, "q_min_mvar": -0.5,
             "q_max_mvar": 0.7, "ramp_down_mw": -0.3, "ramp_up_mw": 0.3, "p_initial_mw": 0.5,
             "emission_rate": "gas", "price_p": 78.0, "price_q": 4.1},
        ],
        "storage": [
            {"id": "ess1", "bus": 3, "p_cha_max_mw": 0.4, "p_dis_max_mw": 0.4, "e_min_mwh": 0.1,
             "e_max_mwh": 0.8, "e_init_mwh": 0.3, "eta_cha": 0.90, "eta_dis": 0.92, "price": 2.0},
        ],
        "ev": [dict({"id": "ev1", "bus": 5}, **ev_window(24, 0.3, 1.4, set(range(0, 6)) | set(range(20, 24))))],
        "substation": {"bus": 1, "emission_rate": "coal", "p_min_mw": 0.0, "p_max_mw": 10.0,
                       "q_max_mvar": 6.0, "v_set": 1.0},
        "prices": {"substation_p": prices},
        "assumptions": ["Small illustrative feeder with one unit of each DER type."],
    }


def single_bus():
    return {
        "name": "single_bus",
        "base": {"mva": 10.0, "kv": 12.66},
        "horizon": 24,
        "emission_rates": {"coal": 0.875},
        "buses": [{"id": 1, "v_min": 0.95, "v_max": 1.05, "p_demand_mw": 5.0, "q_demand_mvar": 2.0,
                   "substation": True}],
        "substation": {"bus": 1, "emission_rate": "coal", "p_min_mw": 0.0, "p_max_mw": 20.0,
                       "q_max_mvar": 10.0},
        "prices": {"substation_p": tou_prices()},
        "assumptions": ["Substation only; every MWh is imported at the coal rate."],
    }


def two_bus():
    return {
        "name": "two_bus",
        "base": {"mva": 10.0, "kv": 12.66},
        "horizon": 24,
        "emission_rates": {"coal": 0.875},
        "buses": [
            {"id": 1, "v_min": 0.95, "v_max": 1.05, "substation": True},
            {"id": 2, "v_min": 0.90, "v_max": 1.10, "p_demand_mw": 4.0, "q_demand_mvar": 1.5},
        ],
        "branches": [{"from": 1, "to": 2, "r": 0.02, "x": 0.03, "i_max": 1.0}],
        "substation": {"bus": 1, "emission_rate": "coal", "p_min_mw": 0.0, "p_max_mw": 20.0,
                       "q_max_mvar": 10.0, "v_set": 1.0},
        "prices": {"substation_p": tou_prices()},
        "assumptions": ["One lossy line between the substation and a load."],
    }


def main():
    DATA.mkdir(exist_ok=True)
    for name, case in [("ieee33", ieee33()), ("tutorial6", tutorial6()),
                       ("single_bus", single_bus()), ("two_bus", two_bus())]:
        (DATA / f"{name}.json").write_text(json.dumps(case, indent=2) + "\n")


if __name__ == "__main__":
    main()
