"""Coverage of early-2019 Chicago Part I incidents by ridges fitted to 2018.

Download the two yearly extracts (2019 through May) from the Chicago Data
Portal crimes dataset and pass their paths.
"""

import argparse
import logging

from ridgepatrol.evaluation import coverage_curve
from ridgepatrol.ingest import filter_part1, load_csv, to_point_set
from ridgepatrol.scms import ScmsConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("train", help="2018 crimes CSV")
    ap.add_argument("test", help="2019 (January-May) crimes CSV")
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    rec, rep = load_csv(args.train, year=2018)
    train, rep = filter_part1(rec, report=rep)
    print(f"2018 rows in year {rep.rows_read - rep.rows_outside_year}, retained {rep.rows_retained}, "
          f"Part I {len(train)}")
    for cat, count in rep.per_type_counts.items():
        print(f"  {cat:<22}{count:>7}")
    rec, _ = load_csv(args.test, year=2019)
    test, _ = filter_part1(rec)
    print(f"2019 Part I {len(test)}")

    radii = [0.1, 0.2, 0.3, 0.6, 1.0]
    curve, iters = coverage_curve(to_point_set(train), to_point_set(test), ScmsConfig(), runs=args.runs,
                                  radii=radii, threads=args.threads)
    print("radius_mi  mean   ci_low ci_high")
    for r, m, lo, hi in zip(curve.radii, curve.mean, curve.ci_low, curve.ci_high):
        print(f"{r:>8.2f}  {m:.4f} {lo:.4f} {hi:.4f}")
    print(f"iterations median {iters.median:g}, IQR {iters.iqr:g}, per run {iters.per_run_iterations}")


if __name__ == "__main__":
    main()
