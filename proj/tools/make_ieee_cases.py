#!/usr/bin/env python3
"""Writes data/ieee33.json and data/ieee123.json in the sdnr case format.

33-bus: Baran & Wu (1989) feeder, 12.66 kV, 10 MVA base, five tie branches.

123-bus: single-phase positive-sequence approximation of the IEEE 123-node
test feeder, 4.16 kV, 10 MVA base. Closed switches are kept as 10 ft
three-phase segments, regulators and the 61-610 transformer are dropped.
Tie branches: the feeder's own 54-94 and 151-300 switches plus two added
ties (32-250, 66-450). A 17-52 tie exists in the full variant and is
removed in data/ieee123.json, leaving four redundant branches.
"""
import json
import math
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"


def admittance(r, x):
    d = r * r + x * x
    return r / d, -x / d


def write(path, base_mva, names, sub, branches, loads, ren, v_min=0.9, v_max=1.1, s_max=1.0):
    index = {name: k for k, name in enumerate(names)}
    buses = []
    for k, name in enumerate(names):
        bus = {"id": k, "kind": "substation" if name == sub else "load", "v_min": v_min, "v_max": v_max, "name": str(name)}
        if name == sub:
            bus.update(p_min=-2.0, p_max=2.0, q_min=-2.0, q_max=2.0)
        if name in loads:
            p, q = loads[name]
            bus["p_load"] = p / (base_mva * 1000.0)
            bus["q_load"] = q / (base_mva * 1000.0)
        if name in ren:
            bus["ren_capacity"] = ren[name] / (base_mva * 1000.0)
        buses.append(bus)
    out = []
    for k, (a, b, r_pu, x_pu) in enumerate(branches):
        g, bb = admittance(r_pu, x_pu)
        out.append({"id": k, "from": index[a], "to": index[b], "g": g, "b": bb, "s_max": s_max})
    doc = {"format": "sdnr-network/1", "base_mva": base_mva, "buses": buses, "branches": out}
    path.write_text(json.dumps(doc, indent=1) + "\n")


def ieee33():
    lines = [
        (1, 2, 0.0922, 0.0470), (2, 3, 0.4930, 0.2511), (3, 4, 0.3660, 0.1864), (4, 5, 0.3811, 0.1941),
        (5, 6, 0.8190, 0.7070), (6, 7, 0.1872, 0.6188), (7, 8, 0.7114, 0.2351), (8, 9, 1.0300, 0.7400),
        (9, 10, 1.0440, 0.7400), (10, 11, 0.1966, 0.0650), (11, 12, 0.3744, 0.1238), (12, 13, 1.4680, 1.1550),
        (13, 14, 0.5416, 0.7129), (14, 15, 0.5910, 0.5260), (15, 16, 0.7463, 0.5450), (16, 17, 1.2890, 1.7210),
        (17, 18, 0.7320, 0.5740), (2, 19, 0.1640, 0.1565), (19, 20, 1.5042, 1.3554), (20, 21, 0.4095, 0.4784),
        (21, 22, 0.7089, 0.9373), (3, 23, 0.4512, 0.3083), (23, 24, 0.8980, 0.7091), (24, 25, 0.8960, 0.7011),
        (6, 26, 0.2030, 0.1034), (26, 27, 0.2842, 0.1447), (27, 28, 1.0590, 0.9337), (28, 29, 0.8042, 0.7006),
        (29, 30, 0.5075, 0.2585), (30, 31, 0.9744, 0.9630), (31, 32, 0.3105, 0.3619), (32, 33, 0.3410, 0.5302),
        (8, 21, 2.0, 2.0), (9, 15, 2.0, 2.0), (12, 22, 2.0, 2.0), (18, 33, 0.5, 0.5), (25, 29, 0.5, 0.5),
    ]
    p = [100, 90, 120, 60, 60, 200, 200, 60, 60, 45, 60, 60, 120, 60, 60, 60, 90, 90, 90, 90, 90, 90, 420, 420,
         60, 60, 60, 120, 200, 150, 210, 60]
    q = [60, 40, 80, 30, 20, 100, 100, 20, 20, 30, 35, 35, 80, 10, 20, 20, 40, 40, 40, 40, 40, 50, 200, 200,
         25, 25, 20, 70, 600, 70, 100, 40]
    base_mva, kv = 10.0, 12.66
    zb = kv * kv / base_mva
    branches = [(a, b, r / zb, x / zb) for a, b, r, x in lines]
    loads = {k + 2: (p[k], q[k]) for k in range(32)}
    ren = {10: 300.0, 18: 300.0, 22: 300.0, 33: 300.0}
    write(ROOT / "ieee33.json", base_mva, list(range(1, 34)), 1, branches, loads, ren)


def ieee123(with_17_52):
    # (from, to, length ft, phases)
    segments = [
        (1, 2, 175, 1), (1, 3, 250, 1), (1, 7, 300, 3), (3, 4, 200, 1), (3, 5, 325, 1), (5, 6, 250, 1),
        (7, 8, 200, 3), (8, 12, 225, 1), (8, 9, 225, 1), (8, 13, 300, 3), (9, 14, 425, 1), (13, 34, 150, 1),
        (13, 18, 825, 3), (14, 11, 250, 1), (14, 10, 250, 1), (15, 16, 375, 1), (15, 17, 350, 1), (18, 19, 250, 1),
        (18, 21, 300, 3), (19, 20, 325, 1), (21, 22, 525, 1), (21, 23, 250, 3), (23, 24, 550, 1), (23, 25, 275, 3),
        (25, 26, 350, 2), (25, 28, 200, 3), (26, 27, 275, 2), (26, 31, 225, 1), (27, 33, 500, 1), (28, 29, 300, 3),
        (29, 30, 350, 3), (30, 250, 200, 3), (31, 32, 300, 1), (34, 15, 100, 1), (35, 36, 650, 2), (35, 40, 250, 3),
        (36, 37, 300, 1), (36, 38, 250, 1), (38, 39, 325, 1), (40, 41, 325, 1), (40, 42, 250, 3), (42, 43, 500, 1),
        (42, 44, 200, 3), (44, 45, 200, 1), (44, 47, 250, 3), (45, 46, 300, 1), (47, 48, 150, 3), (47, 49, 250, 3),
        (49, 50, 250, 3), (50, 51, 250, 3), (51, 151, 500, 3), (52, 53, 200, 3), (53, 54, 125, 3), (54, 55, 275, 3),
        (54, 57, 350, 3), (55, 56, 275, 3), (57, 58, 250, 1), (57, 60, 750, 3), (58, 59, 250, 1), (60, 61, 550, 3),
        (60, 62, 250, 3), (62, 63, 175, 3), (63, 64, 350, 3), (64, 65, 425, 3), (65, 66, 325, 3), (67, 68, 200, 1),
        (67, 72, 275, 3), (67, 97, 250, 3), (68, 69, 275, 1), (69, 70, 325, 1), (70, 71, 275, 1), (72, 73, 275, 1),
        (72, 76, 200, 3), (73, 74, 350, 1), (74, 75, 400, 1), (76, 77, 400, 3), (76, 86, 700, 3), (77, 78, 100, 3),
        (78, 79, 225, 3), (78, 80, 475, 3), (80, 81, 475, 3), (81, 82, 250, 3), (81, 84, 675, 1), (82, 83, 250, 3),
        (84, 85, 475, 1), (86, 87, 450, 3), (87, 88, 175, 1), (87, 89, 275, 3), (89, 90, 225, 1), (89, 91, 225, 3),
        (91, 92, 300, 1), (91, 93, 225, 3), (93, 94, 275, 1), (93, 95, 300, 3), (95, 96, 200, 1), (97, 98, 275, 3),
        (97, 101, 250, 3), (98, 99, 550, 3), (99, 100, 300, 3), (100, 450, 800, 3), (101, 102, 225, 1),
        (101, 105, 275, 3), (102, 103, 325, 1), (103, 104, 700, 1), (105, 106, 225, 2), (105, 108, 325, 3),
        (106, 107, 575, 2), (108, 109, 450, 1), (108, 300, 1000, 3), (109, 110, 300, 1), (110, 111, 575, 1),
        (110, 112, 125, 1), (112, 113, 525, 1), (113, 114, 325, 1), (135, 35, 375, 3), (149, 1, 400, 3),
        (152, 52, 400, 3), (160, 67, 350, 3), (197, 101, 250, 3),
        # closed switches
        (13, 152, 10, 3), (18, 135, 10, 3), (60, 160, 10, 3), (97, 197, 10, 3),
    ]
    ties = [(54, 94, 100, 3), (151, 300, 100, 3), (32, 250, 500, 3), (66, 450, 500, 3)]
    if with_17_52:
        ties.append((17, 52, 500, 3))
    # ohm per mile, positive-sequence approximation by phase count
    per_mile = {3: (0.306, 0.627), 2: (0.592, 0.852), 1: (1.329, 1.347)}
    base_mva, kv = 10.0, 4.16
    zb = kv * kv / base_mva
    branches = []
    for a, b, ft, ph in segments + ties:
        r, x = per_mile[ph]
        miles = ft / 5280.0
        branches.append((a, b, r * miles / zb, x * miles / zb))
    loads_kw = {
        1: (40, 20), 2: (20, 10), 4: (40, 20), 5: (20, 10), 6: (40, 20), 7: (20, 10), 9: (40, 20), 10: (20, 10),
        11: (40, 20), 12: (20, 10), 16: (40, 20), 17: (20, 10), 19: (40, 20), 20: (40, 20), 22: (40, 20),
        24: (40, 20), 28: (40, 20), 29: (40, 20), 30: (40, 20), 31: (20, 10), 32: (20, 10), 33: (40, 20),
        34: (40, 20), 35: (40, 20), 37: (40, 20), 38: (20, 10), 39: (20, 10), 41: (20, 10), 42: (20, 10),
        43: (40, 20), 45: (20, 10), 46: (20, 10), 47: (105, 75), 48: (210, 150), 49: (140, 95), 50: (40, 20),
        51: (20, 10), 52: (40, 20), 53: (40, 20), 55: (20, 10), 56: (20, 10), 58: (20, 10), 59: (20, 10),
        60: (20, 10), 62: (40, 20), 63: (40, 20), 64: (75, 35), 65: (140, 100), 66: (75, 35), 68: (20, 10),
        69: (40, 20), 70: (20, 10), 71: (40, 20), 73: (40, 20), 74: (40, 20), 75: (40, 20), 76: (245, 180),
        77: (40, 20), 79: (40, 20), 80: (40, 20), 82: (40, 20), 83: (20, 10), 84: (20, 10), 85: (40, 20),
        86: (20, 10), 87: (40, 20), 88: (40, 20), 90: (40, 20), 92: (40, 20), 94: (40, 20), 95: (20, 10),
        96: (20, 10), 98: (40, 20), 99: (40, 20), 100: (40, 20), 102: (20, 10), 103: (40, 20), 104: (40, 20),
        106: (40, 20), 107: (40, 20), 109: (40, 20), 111: (20, 10), 112: (20, 10), 113: (40, 20), 114: (20, 10),
    }
    ren = {30: 300.0, 48: 300.0, 65: 300.0, 76: 300.0, 96: 300.0, 114: 300.0}
    names = [149] + list(range(1, 115)) + [135, 151, 152, 160, 197, 250, 300, 450]
    name = "ieee123_full.json" if with_17_52 else "ieee123.json"
    write(ROOT / name, base_mva, names, 149, branches, loads_kw, ren)


if __name__ == "__main__":
    ROOT.mkdir(exist_ok=True)
    ieee33()
    ieee123(False)
    ieee123(True)
