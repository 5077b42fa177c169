"""Run bundled scenarios and leave reports, series CSVs and plot data
under the output root (out/ by default, or $KSLOGISTIC_OUTDIR).

    python scripts/run_bundled.py                # all of them
    python scripts/run_bundled.py fisher_1d --out /tmp/runs --force
"""

import argparse
import sys

from kslogistic.harness import run_experiment
from kslogistic.scenario import bundled_scenario_names, bundled_scenario_path, load_scenario


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", help="bundled scenario names (default: all)")
    ap.add_argument("--out", default=None)
    ap.add_argument("--force", action="store_true")
    args = ap.parse_args(argv)

    names = args.names or bundled_scenario_names()
    bad = 0
    for name in names:
        scenario = load_scenario(bundled_scenario_path(name))
        report, paths = run_experiment(scenario, outdir=args.out, force=args.force)
        status = "ok" if report.ok else "FAILED"
        print(f"{name}: {status} ({report.wall_time:.1f}s) -> {paths['dir']}")
        for v in report.checks:
            mark = "pass" if v.passed else "FAIL"
            note = "" if v.asserted else " [informational]"
            print(f"    {mark} {v.name}{note}: {v.detail}")
        if report.abort is not None:
            print(f"    aborted: {report.abort['message']}")
        bad += not report.ok
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
