#!/usr/bin/env python3
"""Run the full default verification battery and write CSV/JSON reports.

Equivalent to `fluxlab run --config configs/default.json`; kept as a plain
script so the experiment can be launched and tweaked without the console
entry point.
"""

import argparse
import sys
import time
from pathlib import Path

from fluxlab.config import load_config
from fluxlab.suites import emit_report, run_suite


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    default_cfg = Path(__file__).resolve().parent.parent / "configs" / "default.json"
    parser.add_argument("--config", default=str(default_cfg))
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
        config.sampler.seed = args.seed
    if args.out is not None:
        config.out = args.out

    t0 = time.perf_counter()
    report = run_suite(config)
    elapsed = time.perf_counter() - t0
    paths = emit_report(report, config.out)

    n_pass = sum(r.passed for r in report.rows)
    for r in report.rows:
        mark = "pass" if r.passed else "FAIL"
        print(f"[{mark}] {r.check_id}: value={r.value:.6g} tol={r.tolerance:.6g}")
    print(f"\n{n_pass}/{len(report.rows)} checks passed in {elapsed:.1f}s")
    print("reports:", ", ".join(paths))
    return 0 if report.overall_pass else 1


if __name__ == "__main__":
    sys.exit(main())
