"""Large-sample report for m = 1, 2, 3 and every AR coefficient of Table 2,
written as one long CSV (quantity per row)."""
import argparse
from pathlib import Path

from binlat.config import load_config
from binlat.harness import emit_tables, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results/analytic")
    ap.add_argument("--all-phi", action="store_true",
                    help="also cover phi = 0.8, 0.2, -0.2, -0.8 (slower)")
    args = ap.parse_args()
    cfg = load_config(ROOT / "configs" / "analytic.ini")
    if args.all_phi:
        cfg = cfg.replace(phi=(0.8, 0.2, 0.0, -0.2, -0.8))
    result = run_experiment(cfg)
    for path in emit_tables(result, "csv", args.out_dir):
        print(path)


if __name__ == "__main__":
    main()
