#!/usr/bin/env python3
"""Convert the OpenDSS IEEE 123-bus feeder deck into the tdsim model format.

Usage: import_ieee123.py <dss-dir> <out-model.json> <out-reference.csv>

The deck is the one distributed with OpenDSS (IEEE123Master.dss and friends).
The reference CSV is extracted from the OpenDSS node-voltage report that ships
alongside the deck (ieee123_VLN_Node.Txt) and is used as the feeder oracle.
"""
import json
import math
import re
import sys
from pathlib import Path

PH = "ABC"
OMEGA = 2.0 * math.pi * 60.0


def cx(re_, im_=0.0):
    return {"re": float(re_), "im": float(im_)}


def read_deck(path):
    """Join continuation lines and drop comments."""
    lines = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("!")[0].rstrip()
        if not line.strip():
            continue
        if line.lstrip().startswith("~"):
            lines[-1] += " " + line.lstrip()[1:]
        else:
            lines.append(line.strip())
    return lines


def props(line):
    out = {}
    for m in re.finditer(r"(\w+)\s*=\s*(\[[^\]]*\]|\([^)]*\)|\S+)", line):
        out.setdefault(m.group(1).lower(), m.group(2))
    return out


def lower_tri(text):
    rows = [r.split() for r in text.strip("[]() ").split("|")]
    n = len(rows)
    m = [[0.0] * n for _ in range(n)]
    for i, r in enumerate(rows):
        for j, v in enumerate(r):
            m[i][j] = m[j][i] = float(v)
    return m


def bus_nodes(spec, default_phases):
    parts = spec.split(".")
    name = parts[0].lower()
    nodes = [int(p) for p in parts[1:]] or default_phases
    return name, "".join(PH[n - 1] for n in nodes)


def main(dss_dir, out_model, out_ref):
    d = Path(dss_dir)
    codes = {}
    cur = None
    for line in read_deck(d / "IEEELineCodes.DSS"):
        p = props(line)
        if line.lower().startswith("new linecode."):
            cur = line.split()[1].split(".")[1]
            codes[cur] = {}
        if cur is not None:
            for k in ("rmatrix", "xmatrix", "cmatrix"):
                if k in p:
                    codes[cur][k] = lower_tri(p[k])

    buses = {}

    def touch(name, phases):
        have = buses.setdefault(name, set())
        have.update(phases)

    branches = []
    for line in read_deck(d / "IEEE123Master.dss"):
        low = line.lower()
        p = props(line)
        if low.startswith("new line.") and "switch" not in p:
            lid = line.split()[1].split(".", 1)[1]
            nph = int(p.get("phases", 3))
            default = [1, 2, 3][:nph]
            fb, fph = bus_nodes(p["bus1"], default)
            tb, tph = bus_nodes(p["bus2"], default)
            assert fph == tph, lid
            code = codes[p["linecode"]]
            length = float(p["length"])
            k = len(fph)
            z = [cx(code["rmatrix"][i][j] * length, code["xmatrix"][i][j] * length)
                 for i in range(k) for j in range(k)]
            y = [cx(0.0, OMEGA * code["cmatrix"][i][j] * 1e-9 * length)
                 for i in range(k) for j in range(k)]
            kind = "cable" if p["linecode"] == "12" else "line"
            branches.append({"id": lid, "kind": kind, "from": fb, "to": tb, "phases": fph,
                             "z_series": z, "y_shunt": y})
            touch(fb, fph)
            touch(tb, tph)
        elif low.startswith("new line."):
            lid = line.split()[1].split(".", 1)[1]
            nph = int(p.get("phases", 3))
            fb, fph = bus_nodes(p["bus1"], [1, 2, 3][:nph])
            tb, _ = bus_nodes(p["bus2"], [1, 2, 3][:nph])
            branches.append({"id": lid, "kind": "switch", "from": fb, "to": tb, "phases": fph,
                             "switch": {"closed": lid not in ("Sw7", "Sw8")}})
            touch(fb, fph)
            touch(tb, fph)

    # Normally-open ties of the published feeder that the deck leaves out.
    for sid, fb, tb in (("Sw9", "250", "251"), ("Sw10", "450", "451"), ("Sw11", "300", "350")):
        branches.append({"id": sid, "kind": "switch", "from": fb, "to": tb, "phases": "ABC",
                         "switch": {"closed": False}})
        touch(fb, "ABC")
        touch(tb, "ABC")

    regs = [
        ("reg1", "150", "150r", "ABC", [7, 7, 7], 120.0, 2.0, 700.0, [3.0] * 3, [7.5] * 3, True),
        ("reg2", "9", "9r", "A", [-1], 120.0, 2.0, 50.0, [0.4], [0.4], False),
        ("reg3", "25", "25r", "AC", [0, -1], 120.0, 1.0, 50.0, [0.4] * 2, [0.4] * 2, False),
        ("reg4", "160", "160r", "ABC", [8, 1, 5], 124.0, 2.0, 300.0,
         [0.6, 1.4, 0.2], [1.3, 2.6, 1.4], False),
    ]
    for rid, fb, tb, ph, taps, vreg, band, ct, rc, xc, ganged in regs:
        branches.append({"id": rid, "kind": "regulator", "from": fb, "to": tb, "phases": ph,
                         "regulator": {"taps": taps, "band_center_pu": vreg / 120.0,
                                       "bandwidth_pu": band / 120.0, "step_pu": 0.00625,
                                       "tap_min": -16, "tap_max": 16, "pt_ratio": 20.0,
                                       "ct_primary_a": ct, "r_comp_v": rc, "x_comp_v": xc,
                                       "ganged": ganged}})
        touch(fb, ph)
        touch(tb, ph)

    # The deck declares wye windings but its comment and the published node
    # voltages correspond to the 150 kVA delta-delta bank.
    branches.append({"id": "XFM1", "kind": "transformer", "from": "61s", "to": "610",
                     "phases": "ABC",
                     "transformer": {"conn_from": "delta", "conn_to": "delta", "kv_from": 4.16,
                                     "kv_to": 0.48, "kva": 150.0, "r_pct": 1.27, "x_pct": 2.72,
                                     "taps": [1.0, 1.0, 1.0]}})
    touch("61s", "ABC")
    touch("610", "ABC")

    vln = 4.16 / math.sqrt(3.0)
    loads = []
    merged = {"49": ("wye", 1), "65": ("delta", 2), "76": ("delta", 5)}
    groups = {}
    for line in read_deck(d / "IEEE123Loads.DSS"):
        if not line.lower().startswith("new load."):
            continue
        p = props(line)
        lid = line.split()[1].split(".", 1)[1]
        conn = p["conn"].lower()
        model = int(p["model"])
        kw = float(p["kw"])
        kvar = float(p["kvar"])
        kv = float(p["kv"])
        bus, ph = bus_nodes(p["bus1"], [1, 2, 3][:int(p["phases"])])
        if bus in merged:
            groups.setdefault(bus, []).append((ph, kw, kvar, kv))
            continue
        nph = int(p["phases"])
        if conn == "wye" and nph == 3:
            kws, kvars, kv_el = [kw / 3] * 3, [kvar / 3] * 3, kv / math.sqrt(3.0)
        else:
            kws, kvars, kv_el = [kw], [kvar], kv
        loads.append(make_load(lid, bus, ph, conn, model, kws, kvars, kv_el))
    for bus, (conn, model) in merged.items():
        parts = groups[bus]
        if conn == "wye":
            order = {ph: (kw, kvar) for ph, kw, kvar, _ in parts}
            kws = [order[c][0] for c in PH]
            kvars = [order[c][1] for c in PH]
            kv_el = parts[0][3]
        else:
            order = {ph: (kw, kvar) for ph, kw, kvar, _ in parts}
            keys = ["AB", "BC", "CA"]
            kws = [order[k][0] for k in keys]
            kvars = [order[k][1] for k in keys]
            kv_el = parts[0][3]
        loads.append(make_load("S" + bus, bus, "ABC", conn, model, kws, kvars, kv_el))

    shunts = [
        {"id": "C83", "bus": "83", "phases": "ABC", "kvar": [200.0] * 3, "kv": vln},
        {"id": "C88a", "bus": "88", "phases": "A", "kvar": [50.0], "kv": 2.402},
        {"id": "C90b", "bus": "90", "phases": "B", "kvar": [50.0], "kv": 2.402},
        {"id": "C92c", "bus": "92", "phases": "C", "kvar": [50.0], "kv": 2.402},
    ]

    bus_list = []
    for name in sorted(buses, key=natural_key):
        ph = "".join(c for c in PH if c in buses[name])
        kv = 0.48 if name == "610" else 4.16
        bus_list.append({"id": name, "phases": ph, "nominal_kv": kv, "kind": "distribution"})

    model = {
        "name": "ieee123",
        "frequency_hz": 60.0,
        "mva_base": 100.0,
        "notes": "IEEE 123-bus test feeder converted from the OpenDSS deck; regulator taps "
                 "locked at the published solution; open ties 250-251, 450-451, 300-350 "
                 "added as normally-open switches to dead-end buses.",
        "buses": bus_list,
        "branches": branches,
        "loads": loads,
        "shunts": shunts,
        "generators": [],
        "machines": [],
        "dgs": [],
        "sources": [{"id": "SRC", "bus": "150", "phases": "ABC",
                     "voltage": [cx(1.0, 0.0), polar(1.0, -120.0), polar(1.0, 120.0)]}],
        "substations": [],
    }
    Path(out_model).write_text(json.dumps(model, indent=1) + "\n")

    rows = []
    bus = None
    for raw in (d / "ieee123_VLN_Node.Txt").read_text().splitlines():
        m = re.match(r"^\s*(\S+)\s+\.*\s*(\d)\s+([\d.]+)\s+/_\s+(-?[\d.]+)\s+([\d.]+)", raw)
        if m and m.group(1) != "-":
            bus = m.group(1).lower()
        elif not m:
            continue
        node = int(m.group(2))
        rows.append((bus, PH[node - 1], float(m.group(5)), float(m.group(4))))
    with open(out_ref, "w") as f:
        f.write("bus,phase,v_pu,angle_deg\n")
        for b, ph, v, a in rows:
            if b.endswith("_open"):
                continue
            f.write(f"{b},{ph},{v},{a}\n")


def make_load(lid, bus, ph, conn, model, kws, kvars, kv):
    comp = {1: {"p": 1.0, "i": 0.0, "z": 0.0}, 2: {"p": 0.0, "i": 0.0, "z": 1.0},
            5: {"p": 0.0, "i": 1.0, "z": 0.0}}[model]
    return {"id": lid, "bus": bus, "phases": ph, "connection": conn, "kw": kws, "kvar": kvars,
            "model": comp, "kv": kv}


def polar(mag, deg):
    r = math.radians(deg)
    return cx(mag * math.cos(r), mag * math.sin(r))


def natural_key(s):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", s)]


if __name__ == "__main__":
    main(*sys.argv[1:4])
