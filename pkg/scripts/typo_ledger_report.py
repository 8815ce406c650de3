"""Score each corrected closed form and its uncorrected variant against the moment engine."""
import argparse
import json
import sys

from dirsim import ledger


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--json", action="store_true", help="emit one JSON object per entry")
    args = ap.parse_args()

    entries = ledger.verify_all()
    for e in entries:
        if args.json:
            print(json.dumps({"name": e.name, "corrected": e.corrected, "uncorrected": e.printed, "pass": e.passed}))
        else:
            print(e.line())
    return 0 if all(e.passed for e in entries) else 3


if __name__ == "__main__":
    sys.exit(main())
