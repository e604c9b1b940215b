"""Run the shipped table configs and write CSV (and JSON) tables.

    python3 scripts/run_tables.py --out-dir results --threads 4
    python3 scripts/run_tables.py table2 --replications 200
"""
import argparse
import logging
import time
from pathlib import Path

from binlat.config import load_config
from binlat.harness import emit_tables, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawTextHelpFormatter)
    ap.add_argument("tables", nargs="*", default=["table1", "table2", "table3"])
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--replications", type=int, default=None,
                    help="override the config (desk-scale runs)")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    for name in args.tables:
        cfg = load_config(ROOT / "configs" / f"{name}.ini")
        if args.replications:
            cfg = cfg.replace(replications=args.replications)
        t0 = time.time()
        result = run_experiment(cfg, threads=args.threads,
                                progress=lambda c: logging.info("%s n=%d m=%s phi=%g done",
                                                                name, c.n, c.label_m, c.phi))
        for fmt in ("csv", "json"):
            emit_tables(result, fmt, Path(args.out_dir) / name)
        logging.info("%s: %d cells, %d failures, %.0f s", name, len(result.cells),
                     result.total_failures, time.time() - t0)


if __name__ == "__main__":
    main()
