#!/usr/bin/env python3
"""Check the qualitative orderings in an aggregate.csv written by `valse_cli simulate`.

  * VALSE-EP is no worse than AQNM-VALSE at 1 and 2 bits (signal error and
    model-order success).
  * VALSE-EP improves with bit depth at each (N, K, SNR).

Prints one line per comparison and exits 1 when any ordering is violated.
"""

import argparse
import csv
import math
import sys
from collections import defaultdict

BIT_ORDER = {"1": 1, "2": 2, "3": 3, "inf": 99}


def load(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def point_key(item):
    n, k, snr = item[0][:3]
    return int(n), int(k), float(snr)


def num(s):
    try:
        return float(s)
    except ValueError:
        return math.nan


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("aggregate", help="aggregate.csv")
    ap.add_argument("--slack-db", type=float, default=0.5, help="allowed dB slack per comparison")
    ap.add_argument("--slack-rate", type=float, default=0.02, help="allowed success-rate slack")
    args = ap.parse_args()

    rows = load(args.aggregate)
    by_point = defaultdict(dict)
    for r in rows:
        key = (r["N"], r["K"], r["snr_db"], r["bits"])
        by_point[key][r["algorithm"]] = r

    bad = 0

    def verdict(ok, text):
        nonlocal bad
        bad += not ok
        print(("ok   " if ok else "FAIL ") + text)

    for (n, k, snr, bits), algs in sorted(by_point.items(), key=point_key):
        if bits not in ("1", "2") or not {"valse_ep", "valse_aqnm"} <= algs.keys():
            continue
        ep, aq = algs["valse_ep"], algs["valse_aqnm"]
        e, a = num(ep["signal_db"]), num(aq["signal_db"])
        verdict(e <= a + args.slack_db,
                f"N={n} K={k} snr={snr} bits={bits}: signal EP {e:.2f} dB vs AQNM {a:.2f} dB")
        e, a = num(ep["success_rate"]), num(aq["success_rate"])
        verdict(e >= a - args.slack_rate,
                f"N={n} K={k} snr={snr} bits={bits}: success EP {e:.2f} vs AQNM {a:.2f}")

    by_setting = defaultdict(list)
    for (n, k, snr, bits), algs in by_point.items():
        if "valse_ep" in algs:
            by_setting[(n, k, snr)].append((BIT_ORDER.get(bits, 50), bits, num(algs["valse_ep"]["signal_db"])))
    for (n, k, snr), points in sorted(by_setting.items(), key=point_key):
        points.sort()
        for (_, b0, e0), (_, b1, e1) in zip(points, points[1:]):
            verdict(e1 <= e0 + args.slack_db,
                    f"N={n} K={k} snr={snr}: EP signal {b0} bit {e0:.2f} dB -> {b1} bit {e1:.2f} dB")

    print(f"{bad} ordering violations")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
