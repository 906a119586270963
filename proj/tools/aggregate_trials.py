#!/usr/bin/env python3
"""Recompute report.csv from trials.csv and check trial seeds and count invariants."""

import argparse
import csv
import math
import sys
from collections import defaultdict
from pathlib import Path

MASK = (1 << 64) - 1


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return x ^ (x >> 31)


def trial_seed(base, scenario, trial):
    return splitmix64(splitmix64(base) ^ (scenario << 32) ^ trial)


def pct(num, den):
    return math.nan if den == 0 else 100.0 * num / den


def summarize(rows):
    total = lambda key: sum(int(r[key]) for r in rows)
    n = len(rows)
    attempted = total("attempted")
    return {
        "trials": n,
        "reachable": total("reachable") / n,
        "avg_seen": total("seen") / n,
        "touched_pct": pct(total("touched"), attempted),
        "pollinated_pct": pct(total("pollinated"), attempted),
        "missed_pct": pct(total("missed"), attempted),
        "detection_accuracy_pct": pct(total("seen"), total("reachable")),
        "false_positives": total("false_positives"),
        "attempted": attempted,
    }


def close(expected, got):
    if isinstance(expected, float) and math.isnan(expected):
        return got == "nan"
    return abs(float(got) - expected) <= 5e-6


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("dir", type=Path, help="bench output directory")
    parser.add_argument("--seed", type=int, default=1, help="campaign seed")
    args = parser.parse_args()

    with open(args.dir / "trials.csv", newline="") as f:
        trials = list(csv.DictReader(f))
    with open(args.dir / "report.csv", newline="") as f:
        report = {row["scenario"]: row for row in csv.DictReader(f)}

    errors = []
    by_scenario = defaultdict(list)
    for t in trials:
        s, i = int(t["scenario"]), int(t["trial"])
        if int(t["seed"]) != trial_seed(args.seed, s, i):
            errors.append(f"scenario {s} trial {i}: seed {t['seed']} != {trial_seed(args.seed, s, i)}")
        c = {k: int(t[k]) for k in ("reachable", "seen", "attempted", "touched", "pollinated", "missed")}
        if not (c["pollinated"] <= c["touched"] <= c["attempted"] <= c["seen"] <= c["reachable"]):
            errors.append(f"scenario {s} trial {i}: counts out of order {c}")
        if c["touched"] + c["missed"] != c["attempted"]:
            errors.append(f"scenario {s} trial {i}: touched + missed != attempted")
        by_scenario[str(s)].append(t)

    groups = dict(by_scenario)
    groups["all"] = trials
    if set(groups) != set(report):
        errors.append(f"report rows {sorted(report)} != scenarios {sorted(groups)}")
    for name, rows in groups.items():
        if name not in report:
            continue
        for key, expected in summarize(rows).items():
            if not close(expected, report[name][key]):
                errors.append(f"row {name} {key}: report {report[name][key]} != recomputed {expected}")

    for e in errors:
        print(e, file=sys.stderr)
    print(f"{len(trials)} trials, {len(report)} report rows, {len(errors)} mismatches")
    return 1 if errors else 0


if __name__ == "__main__":
    sys.exit(main())
