"""Write every figure dataset and summarise each sidecar report."""
import argparse
import json
import os
import sys
import time

from dirsim import jobs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="figures")
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--method", choices=("rk4", "exact"), default="rk4")
    args = ap.parse_args()

    ok = True
    for name in jobs.FIGURES:
        start = time.perf_counter()
        for stem, (table, report) in jobs.figure_job(name, method=args.method, jobs=args.jobs).items():
            jobs.write_dataset(args.out, stem, table, report)
            disc = report.get("max_abs_discrepancy", report.get("max_rel_discrepancy"))
            verdict = "ok" if report.get("pass", True) else "FAIL"
            ok &= verdict == "ok"
            print(f"{stem:34s} rows={len(table.rows):6d} discrepancy={disc:.2e} {verdict}")
        print(f"  ({name}: {time.perf_counter() - start:.1f}s)")
    with open(os.path.join(args.out, "index.json"), "w") as fh:
        json.dump({"figures": list(jobs.FIGURES), "method": args.method}, fh, indent=1)
    return 0 if ok else 3


if __name__ == "__main__":
    sys.exit(main())
