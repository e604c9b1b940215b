"""Command line entry point: ``binlat run`` and ``binlat analytic``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .config import load_config
from .harness import emit_tables, run_experiment


def _print_analytic(result, out=None):
    out = out or sys.stdout
    with np.printoptions(precision=6):
        _write_report(result, out)


def _write_report(result, out):
    for a in result.analytic:
        print(f"== m={a['m']}  phi={a['phi']:g}", file=out)
        print(f"beta'            {np.array(a['beta_prime'])}", file=out)
        print(f"c1, c2           {a['c1']:.6g}, {a['c2']:.6g}", file=out)
        print(f"c_S, sigma_S     {a['c_S']:.6g}, {a['sigma_S']:.6g}  "
              f"(ratio {a['cS_over_sigmaS']:.6g})", file=out)
        print(f"eig(Omega_11)    {np.array(a['eigenvalues_omega11'])}", file=out)
        print(f"sigma_tau        {a['sigma_tau']:.6g}  (variance {a['sigma_tau_sq']:.6g})",
              file=out)
        print(f"Omega_11\n{np.array(a['omega11'])}", file=out)
        print(f"Omega_12\n{np.array(a['omega12'])}", file=out)
        print(f"GLM sandwich\n{np.array(a['sandwich_glm'])}", file=out)
        print(f"marginal sandwich\n{np.array(a['sandwich_marginal'])}", file=out)
        print(f"{'n':>8} {'kappa1_bar':>11} {'kappa2_bar':>11}  asd", file=out)
        for i, n in enumerate(a["n"]):
            print(f"{n:>8d} {a['kappa1_bar'][i]:>11.4%} {a['kappa2_bar'][i]:>11.4%}  "
                  f"{np.array(a['asd'][i])}", file=out)
        for note in a["notes"]:
            print(f"note: {note}", file=out)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="binlat", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the simulation cells of a config")
    run.add_argument("--config", required=True)
    run.add_argument("--out-dir", default=".")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("-v", "--verbose", action="store_true")
    an = sub.add_parser("analytic", help="print the large-sample report of a config")
    an.add_argument("--config", required=True)
    an.add_argument("--out-dir", default=None)
    an.add_argument("--format", choices=("csv", "json"), default="csv")
    args = ap.parse_args(argv)

    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"binlat: bad config: {exc}", file=sys.stderr)
        return 1
    if args.command == "analytic":
        cfg = cfg.replace(outputs=("analytic",))
        result = run_experiment(cfg)
        _print_analytic(result)
        if args.out_dir:
            emit_tables(result, args.format, args.out_dir)
        return 0

    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)

    def progress(cell):
        logging.getLogger("binlat").info("cell n=%d m=%s phi=%g done (%d failures)",
                                         cell.n, cell.label_m, cell.phi, cell.failures)

    result = run_experiment(cfg, threads=max(1, args.threads), progress=progress)
    paths = emit_tables(result, args.format, args.out_dir)
    for p in paths:
        print(p)
    return 2 if result.total_failures else 0


if __name__ == "__main__":
    sys.exit(main())
