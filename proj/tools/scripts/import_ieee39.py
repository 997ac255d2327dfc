#!/usr/bin/env python3
"""Convert the IEEE 39-bus (New England) case into the tdsim model format.

Usage: import_ieee39.py <case39.py> <out-model.json>

Network data come from the MATPOWER/PYPOWER case39 file. Machine data are the
classical New England dynamic set (H, Xd, Xq, X'd, X'q, T'do, T'qo, Xl on the
100 MVA system base) completed with typical subtransient, saturation and ST1A
values; every number here can be overridden through a machine parameter file.
"""
import json
import math
import sys

KV = 345.0
MVA = 100.0
ZBASE = KV * KV / MVA

# bus: (H, Xd', Xq', Xd, Xq, T'do, T'qo, Xl)
CLASSIC = {
    39: (500.0, 0.006, 0.008, 0.02, 0.019, 7.0, 0.7, 0.003),
    31: (30.3, 0.0697, 0.170, 0.295, 0.282, 6.56, 1.5, 0.035),
    32: (35.8, 0.0531, 0.0876, 0.2495, 0.237, 5.7, 1.5, 0.0304),
    33: (28.6, 0.0436, 0.166, 0.262, 0.258, 5.69, 1.5, 0.0295),
    34: (26.0, 0.132, 0.166, 0.67, 0.62, 5.4, 0.44, 0.054),
    35: (34.8, 0.05, 0.0814, 0.254, 0.241, 7.3, 0.4, 0.0224),
    36: (26.4, 0.049, 0.186, 0.295, 0.292, 5.66, 1.5, 0.0322),
    37: (24.3, 0.057, 0.0911, 0.29, 0.28, 6.7, 0.41, 0.028),
    38: (34.5, 0.057, 0.0587, 0.2106, 0.205, 4.79, 1.96, 0.0298),
    # The classical set gives this unit no q-axis transient circuit; a
    # round-rotor X'q and T'qo are supplied so GENROU is well posed.
    30: (42.0, 0.031, 0.05, 0.1, 0.069, 10.2, 0.4, 0.0125),
}

# Loads at buses 1 and 9 exist only in the MATPOWER variant of the case; the
# 19-load system is kept.
DROP_LOADS = {1, 9}


def cx(re_, im_=0.0):
    return {"re": float(re_), "im": float(im_)}


def main(case_path, out_model):
    scope = {}
    exec(open(case_path).read(), scope)
    ppc = scope["case39"]()

    buses = [{"id": str(int(b[0])), "phases": "ABC", "nominal_kv": KV, "kind": "transmission"}
             for b in ppc["bus"]]

    branches = []
    nline = ntx = 0
    for br in ppc["branch"]:
        f, t = str(int(br[0])), str(int(br[1]))
        r, x, b, ratio = br[2], br[3], br[4], br[8]
        if ratio == 0.0:
            nline += 1
            z1 = cx(r * ZBASE, x * ZBASE)
            y1 = cx(0.0, b / ZBASE)
            branches.append({"id": f"L{f}_{t}", "kind": "line", "from": f, "to": t,
                             "phases": "ABC",
                             "sequence": {"z1": z1, "z0": cx(3 * z1["re"], 3 * z1["im"]),
                                          "y1": y1, "y0": y1, "length": 1.0,
                                          "asymmetry": 0.0}})
        else:
            ntx += 1
            branches.append({"id": f"T{f}_{t}", "kind": "transformer", "from": f, "to": t,
                             "phases": "ABC",
                             "transformer": {"conn_from": "wye-g", "conn_to": "wye-g",
                                             "kv_from": KV, "kv_to": KV, "kva": MVA * 1000.0,
                                             "r_pct": 100.0 * r, "x_pct": 100.0 * x,
                                             "taps": [float(ratio)] * 3}})

    loads = []
    for b in ppc["bus"]:
        bus = int(b[0])
        if (b[2] or b[3]) and bus not in DROP_LOADS:
            loads.append({"id": f"LD{bus}", "bus": str(bus), "phases": "ABC",
                          "connection": "wye", "kw": [b[2] * 1000.0 / 3] * 3,
                          "kvar": [b[3] * 1000.0 / 3] * 3,
                          "model": {"p": 1.0, "i": 0.0, "z": 0.0}, "kv": KV / math.sqrt(3.0)})

    generators = []
    machines = []
    slack = int(next(b[0] for b in ppc["bus"] if b[1] == 3))
    for g in ppc["gen"]:
        bus = int(g[0])
        h, xdp, xqp, xd, xq, tdop, tqop, xl = CLASSIC[bus]
        xpp = 0.5 * (min(xdp, xqp) + xl)
        mid = f"M{bus}"
        generators.append({"id": f"G{bus}", "bus": str(bus),
                           "role": "slack" if bus == slack else "pv",
                           "p_mw": float(g[1]), "v_pu": float(g[5]), "angle_deg": 0.0,
                           "machine": mid})
        machines.append({"id": mid, "bus": str(bus), "mva_base": MVA,
                         "genrou": {"h": h, "d": 1.0, "ra": 0.0, "tdo_p": tdop, "tdo_pp": 0.03,
                                    "tqo_p": tqop, "tqo_pp": 0.05, "xd": xd, "xq": xq,
                                    "xd_p": xdp, "xq_p": xqp, "x_pp": xpp, "xl": xl,
                                    "s10": 0.05, "s12": 0.3},
                         "st1a": {"tr": 0.02, "ka": 200.0, "tb": 10.0, "tc": 1.0,
                                  "vrmax": 6.0, "vrmin": -5.0}})

    model = {
        "name": "ieee39",
        "frequency_hz": 60.0,
        "mva_base": MVA,
        "notes": "IEEE 39-bus system. Lines synthesized from positive-sequence data with "
                 "z0 = 3*z1 and y0 = y1 (no zero-sequence data published), asymmetry 0. "
                 f"{nline} lines, {ntx} transformers modeled grounded-wye both sides.",
        "buses": buses,
        "branches": branches,
        "loads": loads,
        "shunts": [],
        "generators": generators,
        "machines": machines,
        "dgs": [],
        "sources": [],
        "substations": [],
    }
    with open(out_model, "w") as f:
        f.write(json.dumps(model, indent=1) + "\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
