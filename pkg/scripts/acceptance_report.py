"""Run the acceptance checks and write a markdown traceability table.

    python scripts/acceptance_report.py [--ids 1 4 7] [--out report.md]
"""
import argparse
import sys

from breather_lab.acceptance import run_all


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ids", type=int, nargs="*")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    lines = ["| id | claim | check | measured | tolerance | verdict |", "|---|---|---|---|---|---|"]
    results = run_all(args.ids)
    for r in results:
        print(r.line(), flush=True)
        lines.append(f"| {r.id} | {r.anchor} | {r.name} | {r.measured:.4g} | {r.tolerance} | {r.verdict} |")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0 if all(r.passed for r in results) else 3


if __name__ == "__main__":
    sys.exit(main())
