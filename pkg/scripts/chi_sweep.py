"""Sweep the chemotaxis strength over a bundled scenario and tabulate
measured front speed against chi.

    python scripts/chi_sweep.py
    python scripts/chi_sweep.py --scenario spreading_1d --values "0,0.15,0.3,0.45,0.6" --workers 2
"""

import argparse
import sys

from kslogistic.harness import output_root, sweep, write_sweep_csv
from kslogistic.scenario import bundled_scenario_path, load_scenario


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="spreading_1d")
    ap.add_argument("--values", default="0,0.15,0.3,0.45,0.6")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)

    scenario = load_scenario(bundled_scenario_path(args.scenario))
    values = [float(tok) for tok in args.values.split(",") if tok.strip()]
    rows = sweep(scenario, "params.chi", values, workers=args.workers)

    dest = output_root(args.out) / f"{scenario.name}_sweep_chi"
    dest.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, "params.chi", dest / "sweep.csv")

    print(f"{'chi':>8}  {'status':<12} {'speed':>9}  {'final sup u':>12}")
    for r in rows:
        speed = "-" if r["speed"] is None else f"{r['speed']:.4f}"
        print(f"{r['value']:>8g}  {r['status']:<12} {speed:>9}  {r['final_linf']:>12.6g}")
    print(f"wrote {dest / 'sweep.csv'}")
    return 0 if all(r["status"] == "ok" for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
