"""Seeded Monte Carlo experiments and table output.

Seeding: the study seed is a ``SeedSequence``; cell c (in the order
n x trial spec x phi) uses child c, and replication i of that cell uses
child i of the cell sequence.  Within a replication the model module's
stream rule applies (latent path, Bernoulli draws, trial counts).
Replications are reduced in index order, so results do not depend on the
number of worker processes.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .asymptotics import AsymptoticReport, analytic_report, mixture_from_report
from .config import ExperimentConfig
from .errors import BinlatError, NearSingularWarning
from .marginal import DEGENERACY_THRESHOLD, fit_marginal
from .model import ModelParams, child_seed, linear_trend, linear_trend_design, simulate_series, simulate_trials
from .quadrature import gauss_hermite
from .subsampling import block_length, subsample_covariance

log = logging.getLogger(__name__)

SCORE_THRESHOLD = 1e-6
IMPLICATION_SLACK = 1e-4


# ---------------------------------------------------------------------------
# per-replication work
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Task:
    n: int
    spec: object
    params: ModelParams
    order: int
    tau_init: float
    tau_max: float
    C: tuple
    subsample: bool
    boundary_rule: str = "score"


def _replicate(task: _Task, seed, index: int) -> dict:
    rec = {"index": index, "ok": False, "error": None}
    try:
        X = linear_trend_design(task.n)
        m = simulate_trials(task.n, task.spec, seed)
        data = simulate_series(X, m, task.params, seed)
        rule = gauss_hermite(task.order)
        fit = fit_marginal(data, rule=rule, tau_init=task.tau_init, tau_max=task.tau_max,
                           boundary_rule=task.boundary_rule)
        rec.update(ok=True, beta_tilde=fit.beta_tilde.tolist(), score0=fit.score_at_zero,
                   delta=fit.delta_hat.tolist(), degenerate=fit.degenerate,
                   at_upper=fit.at_upper, sub={})
        if task.subsample and not fit.degenerate:
            for C in task.C:
                try:
                    rec["sub"][C] = subsample_covariance(data, fit.delta_hat, C, rule).se.tolist()
                except (BinlatError, ValueError, np.linalg.LinAlgError) as exc:
                    rec["sub"][C] = None
                    rec.setdefault("sub_errors", []).append(f"C={C}: {exc}")
    except (BinlatError, ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
    return rec


def _run_chunk(args):
    task, seeds, indices = args
    return [_replicate(task, s, i) for s, i in zip(seeds, indices)]


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

def _f(x):
    """JSON-friendly float (None for missing or non-finite)."""
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


def _fl(xs):
    return None if xs is None else [_f(x) for x in xs]


@dataclass
class CellSummary:
    n: int
    m: object
    phi: float
    replications: int
    failures: int = 0
    failure_log: list = field(default_factory=list)
    mean: list | None = None
    sd: list | None = None
    kappa1_hat: float | None = None
    kappa2_hat: float | None = None
    boundary_violations: int = 0
    at_upper: int = 0
    boundary_count: int = 0
    boundary_mean: list | None = None
    boundary_sd: list | None = None
    interior_mean: list | None = None
    interior_sd: list | None = None
    tau_shift: float | None = None
    tau_var: float | None = None
    asd: list | None = None
    kappa1_bar: float | None = None
    kappa2_bar: float | None = None
    theo_boundary_mean: list | None = None
    theo_boundary_sd: list | None = None
    theo_interior_mean: list | None = None
    theo_interior_sd: list | None = None
    k_n: list | None = None
    sub_se: list | None = None
    sub_count: list | None = None
    notes: list = field(default_factory=list)

    @property
    def label_m(self) -> str:
        return _m_label(self.m)


def _m_label(m) -> str:
    if isinstance(m, dict):
        items = sorted((int(k), float(v)) for k, v in m.items())
        return "{" + ", ".join(f"{k}:{v:g}" for k, v in items) + "}"
    return str(m)


@dataclass
class ExperimentResult:
    config: dict
    config_sha256: str
    seed: int
    version: str
    cells: list = field(default_factory=list)
    analytic: list = field(default_factory=list)

    @property
    def total_failures(self) -> int:
        return sum(c.failures for c in self.cells)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentResult":
        names = {f.name for f in fields(CellSummary)}
        cells = []
        for c in d["cells"]:
            c = {k: v for k, v in c.items() if k in names}
            cells.append(CellSummary(**c))
        return cls(d["config"], d["config_sha256"], d["seed"], d["version"], cells,
                   d.get("analytic", []))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentResult":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# theory
# ---------------------------------------------------------------------------

def _theory(cfg: ExperimentConfig, spec, phi, cache: dict):
    key = (_m_label(spec), phi)
    if key not in cache:
        params = ModelParams(cfg.beta0, cfg.tau0, phi)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", NearSingularWarning)
                design = linear_trend(cfg.mesh)
                rep = analytic_report(params, design, spec, np.asarray(cfg.n, float),
                                      gauss_hermite(cfg.quadrature_order), cfg.order2d,
                                      moments=cfg.moments)
            cache[key] = (rep, None)
        except (ValueError, BinlatError, np.linalg.LinAlgError) as exc:
            cache[key] = (None, f"theory unavailable: {exc}")
    return cache[key]


def _m_json(m):
    return {str(k): float(v) for k, v in m.items()} if isinstance(m, dict) else int(m)


def _analytic_record(cfg, spec, phi, rep: AsymptoticReport) -> dict:
    return {
        "m": _m_json(spec), "phi": phi, "beta_prime": _fl(rep.beta_prime), "c1": _f(rep.c1),
        "c2": _f(rep.c2), "c_S": _f(rep.c_S), "sigma_S": _f(rep.sigma_S),
        "cS_over_sigmaS": _f(rep.c_S / rep.sigma_S), "sigma_tau_sq": _f(rep.sigma_tau_sq),
        "sigma_tau": _f(np.sqrt(rep.sigma_tau_sq)),
        "eigenvalues_omega11": _fl(rep.eigenvalues_omega11),
        "omega11": [_fl(r) for r in rep.omega11], "omega12": [_fl(r) for r in rep.omega12],
        "sandwich_marginal": [_fl(r) for r in rep.sandwich_marginal],
        "omega1": [_fl(r) for r in rep.omega1], "omega2": [_fl(r) for r in rep.omega2],
        "sandwich_glm": [_fl(r) for r in rep.sandwich_glm],
        "n": [int(x) for x in rep.n], "kappa1_bar": _fl(rep.kappa1_bar),
        "kappa2_bar": _fl(rep.kappa2_bar), "asd": [_fl(r) for r in rep.asd],
        "condition_numbers": {k: _f(v) for k, v in rep.condition_numbers.items()},
        "notes": list(rep.notes),
    }


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

SIM_TABLES = ("table1", "table2", "table3")


def cells_of(cfg: ExperimentConfig):
    """(index, n, spec, phi) in the fixed seeding order."""
    prod = itertools.product(cfg.n, cfg.trial_specs, cfg.phi)
    return [(i, n, spec, phi) for i, (n, spec, phi) in enumerate(prod)]


def _mean_sd(a):
    if a.shape[0] == 0:
        return None, None
    mean = a.mean(axis=0).tolist()
    sd = a.std(axis=0, ddof=1).tolist() if a.shape[0] > 1 else None
    return mean, sd


def _summarise(cfg, n, spec, phi, recs, theory) -> CellSummary:
    cell = CellSummary(n=n, m=_m_json(spec), phi=phi, replications=len(recs))
    ok = [r for r in recs if r["ok"]]
    cell.failures = len(recs) - len(ok)
    cell.failure_log = [[r["index"], r["error"]] for r in recs if not r["ok"]]
    if ok:
        D = np.array([r["delta"] for r in ok])
        S0 = np.array([r["score0"] for r in ok])
        deg = D[:, -1] <= DEGENERACY_THRESHOLD
        cell.mean, cell.sd = _mean_sd(D)
        cell.kappa1_hat = _f(np.mean(S0 <= SCORE_THRESHOLD))
        cell.kappa2_hat = _f(np.mean(deg))
        cell.boundary_violations = int(np.sum(deg & (S0 > IMPLICATION_SLACK)))
        cell.at_upper = int(sum(r["at_upper"] for r in ok))
        cell.boundary_count = int(deg.sum())
        cell.boundary_mean, cell.boundary_sd = _mean_sd(D[deg, :-1])
        cell.interior_mean, cell.interior_sd = _mean_sd(D[~deg, :-1])
        tpos = D[~deg, -1]
        if tpos.size:
            cell.tau_shift = _f(tpos.mean() - cfg.tau0)
            cell.tau_var = _f(tpos.var(ddof=1)) if tpos.size > 1 else None
    rep, note = theory
    if note:
        cell.notes.append(note)
    if rep is not None:
        j = list(rep.n).index(float(n))
        cell.asd = _fl(rep.asd[j])
        cell.kappa1_bar = _f(rep.kappa1_bar[j])
        cell.kappa2_bar = _f(rep.kappa2_bar[j])
        if "table1" in cfg.outputs and cell.tau_shift is not None and cell.tau_var is not None:
            mm = mixture_from_report(rep, cfg.beta0, cfg.tau0, n, (cell.tau_shift, cell.tau_var))
            cell.theo_boundary_mean = _fl(mm.boundary_mean)
            cell.theo_boundary_sd = _fl(mm.boundary_sd)
            cell.theo_interior_mean = _fl(mm.interior_mean)
            cell.theo_interior_sd = _fl(mm.interior_sd)
    if "table3" in cfg.outputs:
        cell.k_n = [block_length(n, C) for C in cfg.C]
        cell.sub_se, cell.sub_count = [], []
        for C in cfg.C:
            vals = [r["sub"][C] for r in ok if r.get("sub", {}).get(C) is not None]
            cell.sub_count.append(len(vals))
            cell.sub_se.append(np.mean(vals, axis=0).tolist() if vals else None)
    return cell


def run_experiment(cfg: ExperimentConfig, threads: int = 1, progress=None) -> ExperimentResult:
    """Simulate and fit every cell of ``cfg``; theory columns once per (m, phi)."""
    result = ExperimentResult(cfg.to_dict(), cfg.sha256(), cfg.seed, __version__)
    cache: dict = {}
    if "analytic" in cfg.outputs:
        for spec in cfg.trial_specs:
            for phi in cfg.phi:
                rep, note = _theory(cfg, spec, phi, cache)
                if rep is not None:
                    result.analytic.append(_analytic_record(cfg, spec, phi, rep))
    if not any(t in cfg.outputs for t in SIM_TABLES):
        return result
    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for idx, n, spec, phi in cells_of(cfg):
            task = _Task(n, spec, ModelParams(cfg.beta0, cfg.tau0, phi), cfg.quadrature_order,
                         cfg.tau_init, cfg.tau_max, tuple(cfg.C), "table3" in cfg.outputs,
                         cfg.boundary_rule)
            cell_ss = child_seed(cfg.seed, idx)
            seeds = [child_seed(cell_ss, i) for i in range(cfg.replications)]
            recs = _dispatch(pool, threads, task, seeds)
            for r in recs:
                if not r["ok"]:
                    log.warning("cell %d (n=%d, m=%s, phi=%g) replication %d failed "
                                "[study seed %d]: %s", idx, n, _m_label(spec), phi,
                                r["index"], cfg.seed, r["error"])
            result.cells.append(_summarise(cfg, n, spec, phi, recs,
                                           _theory(cfg, spec, phi, cache)))
            if progress:
                progress(result.cells[-1])
    finally:
        if pool is not None:
            pool.shutdown()
    return result


def _dispatch(pool, threads, task, seeds):
    idx = list(range(len(seeds)))
    if pool is None:
        return _run_chunk((task, seeds, idx))
    size = max(1, len(seeds) // (4 * threads))
    chunks = [(task, seeds[i:i + size], idx[i:i + size]) for i in range(0, len(seeds), size)]
    out = []
    for part in pool.map(_run_chunk, chunks):
        out.extend(part)
    return out


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return f"{float(x):.4g}"


def _round(x):
    if x is None or isinstance(x, (str, int)):
        return x
    return float(f"{float(x):.4g}")


def _param_names(r: int):
    return [f"beta{j + 1}" for j in range(r)] + ["tau"]


def _get(v, j):
    return None if v is None else v[j]


def table_rows(result: ExperimentResult, table: str):
    """(header, rows) for one table, values unformatted."""
    r = len(result.config["beta0"])
    names = _param_names(r)
    rows = []
    if table == "table1":
        header = ["n", "m", "phi", "param", "theo_mean_tau0", "theo_sd_tau0",
                  "theo_mean_taupos", "theo_sd_taupos", "kappa1_bar", "kappa2_bar",
                  "emp_mean_tau0", "emp_sd_tau0", "emp_mean_taupos", "emp_sd_taupos",
                  "kappa1_hat", "kappa2_hat"]
        for c in result.cells:
            for j in range(r):
                rows.append([c.n, c.label_m, c.phi, names[j],
                             _get(c.theo_boundary_mean, j), _get(c.theo_boundary_sd, j),
                             _get(c.theo_interior_mean, j), _get(c.theo_interior_sd, j),
                             c.kappa1_bar, c.kappa2_bar,
                             _get(c.boundary_mean, j), _get(c.boundary_sd, j),
                             _get(c.interior_mean, j), _get(c.interior_sd, j),
                             c.kappa1_hat, c.kappa2_hat])
    elif table == "table2":
        header = ["n", "m", "phi", "param", "mean", "sd", "asd", "kappa_hat", "kappa1_bar",
                  "failures"]
        for c in result.cells:
            for j in range(r + 1):
                rows.append([c.n, c.label_m, c.phi, names[j], _get(c.mean, j), _get(c.sd, j),
                             _get(c.asd, j), c.kappa2_hat, c.kappa1_bar, c.failures])
    elif table == "table3":
        Cs = result.config["C"]
        header = ["n", "m", "phi", "param", "ASD", "SD"] + [f"C={C}" for C in Cs] + ["k_n"]
        for c in result.cells:
            kn = "/".join(str(k) for k in (c.k_n or []))
            for j in range(r + 1):
                subs = [_get(s, j) for s in (c.sub_se or [None] * len(Cs))]
                rows.append([c.n, c.label_m, c.phi, names[j], _get(c.asd, j), _get(c.sd, j)]
                            + subs + [kn])
    elif table == "analytic":
        header = ["m", "phi", "quantity", "value"]
        for a in result.analytic:
            m, phi = _m_label(a["m"]), a["phi"]
            for j, v in enumerate(a["beta_prime"]):
                rows.append([m, phi, f"beta_prime{j + 1}", v])
            for key in ("c1", "c2", "c_S", "sigma_S", "cS_over_sigmaS", "sigma_tau_sq",
                        "sigma_tau"):
                rows.append([m, phi, key, a[key]])
            for j, v in enumerate(a["eigenvalues_omega11"]):
                rows.append([m, phi, f"omega11_eig{j + 1}", v])
            for mat in ("sandwich_glm", "sandwich_marginal"):
                for i, row in enumerate(a[mat]):
                    for j, v in enumerate(row):
                        rows.append([m, phi, f"{mat}[{i + 1},{j + 1}]", v])
            for i, nn in enumerate(a["n"]):
                rows.append([m, phi, f"kappa1_bar(n={nn})", a["kappa1_bar"][i]])
                rows.append([m, phi, f"kappa2_bar(n={nn})", a["kappa2_bar"][i]])
                for j, v in enumerate(a["asd"][i]):
                    rows.append([m, phi, f"asd_{names[j]}(n={nn})", v])
    else:
        raise ValueError(f"unknown table {table!r}")
    return header, rows


def _metadata(result: ExperimentResult, table: str) -> str:
    return (f"# binlat {result.version} table={table} config_sha256={result.config_sha256} "
            f"seed={result.seed} replications={result.config['replications']} "
            f"schema_version={result.config['schema_version']}")


def emit_tables(result: ExperimentResult, fmt: str = "csv", out_dir=".") -> list:
    """Write one file per requested table; JSON also writes result.json."""
    if fmt not in ("csv", "json"):
        raise ValueError("format must be csv or json")
    tables = list(result.config["outputs"])
    if not tables:
        return []
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for table in tables:
        header, rows = table_rows(result, table)
        path = os.path.join(out_dir, f"{table}.{fmt}")
        if fmt == "csv":
            buf = io.StringIO()
            buf.write(_metadata(result, table) + "\n")
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
            text = buf.getvalue()
        else:
            doc = {"metadata": {"table": table, "config_sha256": result.config_sha256,
                                "seed": result.seed, "version": result.version},
                   "columns": header,
                   "rows": [[_round(v) for v in row]
                            for row in rows]}
            text = json.dumps(doc, indent=1) + "\n"
        _write(path, text)
        paths.append(path)
    if fmt == "json":
        path = os.path.join(out_dir, "result.json")
        _write(path, result.to_json() + "\n")
        paths.append(path)
    return paths


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc
