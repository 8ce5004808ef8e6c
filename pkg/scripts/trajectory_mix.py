"""Per-iteration counts of watering trajectory types from run directories.

Usage: python scripts/trajectory_mix.py RUN_DIR [RUN_DIR ...] > mix.csv

Reads ``records/iter_XXX.json`` and writes one CSV row per (run, iteration)
with the count of each label and the cumulative below_success fraction.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

LABELS = ("below_success", "below_spill", "above_success", "above_spill")


def mix_rows(run_dir: Path):
    cfg = json.loads((run_dir / "config.json").read_text())
    seen = below = 0
    for path in sorted((run_dir / "records").glob("iter_*.json")):
        rec = json.loads(path.read_text())
        counts = {k: rec["trajectory_types"].get(k, 0) for k in LABELS}
        seen += sum(counts.values())
        below += counts["below_success"]
        yield {
            "strategy": cfg["strategy"],
            "seed": cfg["seed"],
            "iteration": rec["iteration"],
            **counts,
            "cumulative_below_success_fraction": below / seen if seen else 0.0,
        }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("run_dirs", nargs="+", type=Path)
    args = parser.parse_args(argv)
    fields = ["strategy", "seed", "iteration", *LABELS, "cumulative_below_success_fraction"]
    w = csv.DictWriter(sys.stdout, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for d in args.run_dirs:
        for row in mix_rows(d):
            w.writerow(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
