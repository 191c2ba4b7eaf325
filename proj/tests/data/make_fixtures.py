"""Regenerates the CLI pulse fixtures from a straight-line forward model.

Run from this directory. Golden solution documents are produced separately by
`gunloc locate` and committed next to their inputs.
"""
import json
import math
import random


def c_of(temp_c):
    return 20.03 * math.sqrt(temp_c + 273.15)


def arrival(src, t0, s, c):
    return t0 + math.dist(src, s) / c


def write_csv(path, rows):
    with open(path, "w") as f:
        f.write("shot_id,sensor_id,x_m,y_m,z_m,arrival_time_s,amplitude_dbspl,snr_db\n")
        for shot, sid, (x, y, z), t, amp in sorted(rows, key=lambda r: (r[0], r[3], r[1])):
            a = "" if amp is None else f"{amp:.2f}"
            f.write(f"{shot},{sid},{x:.3f},{y:.3f},{z:.3f},{t:.3f},{a},\n")


def sensors(rng, n, side=1000.0):
    return [(f"S{i:02d}", (rng.uniform(0, side), rng.uniform(0, side), 0.0)) for i in range(n)]


def golden():
    rng = random.Random(11)
    c = c_of(20.0)
    array = sensors(rng, 8)
    shots = {"G1": ((420.0, 515.0, 0.0), 1000.0), "G2": ((610.0, 300.0, 0.0), 1007.5),
             "G3": ((250.0, 760.0, 0.0), 1019.25)}
    rows = []
    for shot, (src, t0) in shots.items():
        for sid, pos in array:
            d = math.dist(src, pos)
            rows.append((shot, sid, pos, round(arrival(src, t0, pos, c), 3), 90.0 - 20 * math.log10(max(d, 1.0) / 50)))
    write_csv("golden_pulses.csv", rows)
    # A fourth shot heard on two sensors only cannot be solved.
    partial = rows + [("G4", sid, pos, 1030.0 + i * 0.1, None) for i, (sid, pos) in enumerate(array[:2])]
    write_csv("partial_pulses.csv", partial)


def pool_rows(rng, shot_src, t0, array, c, echoes):
    rows = []
    for sid, pos in array:
        rows.append(("pool", sid, pos, round(arrival(shot_src, t0, pos, c), 3), None))
    for sid, pos in rng.sample(array, echoes):
        t = arrival(shot_src, t0, pos, c) + rng.uniform(0.080, 0.300)
        rows.append(("pool", sid, pos, round(t, 3), None))
    return rows


def select_fixtures():
    rng = random.Random(5)
    c = c_of(20.0)
    array = sensors(rng, 8)
    write_csv("select_echoes.csv", pool_rows(rng, (480.0, 390.0, 0.0), 50.0, array, c, 3))

    big = sensors(rng, 10)
    rows = pool_rows(rng, (300.0, 350.0, 0.0), 80.0, big, c, 0)
    rows += pool_rows(rng, (700.0, 620.0, 0.0), 80.35, big[:7], c, 0)
    write_csv("select_two_shots.csv", rows)

    # Uniform random pulses; this draw has no consistent subset at 40 ms.
    nrng = random.Random(2)
    noise = [("pool", f"S{i:02d}", (nrng.uniform(0, 1000), nrng.uniform(0, 1000), 0.0), round(nrng.uniform(0, 0.9), 3),
              None) for i in range(10)]
    write_csv("select_noise.csv", noise)

    with open("select_truth.json", "w") as f:
        json.dump({"select_echoes": [480.0, 390.0], "select_two_shots": [[300.0, 350.0], [700.0, 620.0]]}, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    golden()
    select_fixtures()
