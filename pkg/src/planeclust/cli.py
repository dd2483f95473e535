"""Benchmark harness and command line entry point.

Datasets come from CSV files or from the synthetic generators. A benchmark
repeats one method from ``restarts`` seeded K-means starts and scores every
restart; a grid search runs a benchmark per (alpha, lam) cell. Reports are
written as JSON (schema in ``docs/report_schema.md``) or as a long CSV with
one row per (restart, metric).

Parallelism: restarts and grid cells run in a process pool when more than
one worker is requested (``--threads`` or ``PLANECLUST_THREADS``). Results
are collected in submission order, so reports do not depend on scheduling.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .baselines import fcrm_fit, fkpc_fit, kpc_fit
from .core import (
    Dataset,
    HyperParams,
    InvalidInputError,
    NumericalFailureError,
    hard_labels,
    minmax_normalize,
)
from .datagen import SyntheticSpec, generate
from .metrics import METRICS, score
from .rflkpc import fit

REPORT_VERSION = "1.0"
THREADS_ENV = "PLANECLUST_THREADS"
METHODS = ("rflkpc", "kpc", "fkpc", "fcrm")
SELECTIONS = ("best_metric", "best_objective")
DEFAULT_ALPHA_GRID = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_LAMBDA_GRID = tuple(10.0**i for i in range(-4, 1))
TIMING_FIELDS = ("wall_time", "total_wall_time")


class CsvParseError(InvalidInputError):
    """Malformed dataset file; ``row`` and ``column`` are 1-based when known."""

    def __init__(self, message, *, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.row = row
        self.column = column


# ---------------------------------------------------------------- CSV I/O


def _label_index(header, label_column, width):
    if label_column is None:
        return None
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if header is None or label_column not in header:
            raise CsvParseError(f"label column {label_column!r} not found", row=1)
        return header.index(label_column)
    idx = int(label_column)
    if idx < 0:
        idx += width
    if not 0 <= idx < width:
        raise CsvParseError(f"label column index {label_column} out of range for {width} columns")
    return idx


def load_csv(path, has_header: bool = True, label_column: Union[str, int, None] = None) -> Dataset:
    """Read a comma-separated numeric table into a Dataset.

    Args:
        path: UTF-8 file, one sample per row.
        has_header: first row holds column names.
        label_column: name or 0-based index of an integer class column,
            removed from the features. Negative ids mark outliers.

    Raises:
        CsvParseError: ragged rows, non-numeric cells, a missing label
            column or an empty table; the message names the row and column.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise CsvParseError("file has no rows")
    header = None
    first = 1
    if has_header:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        first = 2
    if not rows:
        raise CsvParseError("file has a header but no data rows")
    width = len(header) if header is not None else len(rows[0])
    li = _label_index(header, label_column, width)

    feats = np.empty((len(rows), width - (li is not None)))
    labels = np.empty(len(rows), dtype=np.int64) if li is not None else None
    for r, row in enumerate(rows):
        line = r + first
        if len(row) != width:
            raise CsvParseError(f"expected {width} fields, found {len(row)}", row=line)
        col = 0
        for c, cell in enumerate(row):
            text = cell.strip()
            if c == li:
                try:
                    val = float(text)
                except ValueError:
                    raise CsvParseError(f"label {text!r} is not an integer", row=line, column=c + 1) from None
                if not val.is_integer():
                    raise CsvParseError(f"label {text!r} is not an integer", row=line, column=c + 1)
                labels[r] = int(val)
                continue
            try:
                feats[r, col] = float(text)
            except ValueError:
                raise CsvParseError(f"cell {text!r} is not numeric", row=line, column=c + 1) from None
            if not math.isfinite(feats[r, col]):
                raise CsvParseError(f"cell {text!r} is not finite", row=line, column=c + 1)
            col += 1
    if feats.shape[1] == 0:
        raise CsvParseError("no feature columns")
    names = None
    if header is not None:
        names = tuple(h for c, h in enumerate(header) if c != li)
    return Dataset(feats, labels, names)


def dataset_to_csv(data: Dataset, label_name: str = "label") -> str:
    """CSV text with a header row; floats use 17 significant digits."""
    names = data.feature_names or tuple(f"x{j}" for j in range(data.d))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(names) + ([label_name] if data.labels is not None else []))
    for i in range(data.n):
        row = [format(float(v), ".17g") for v in data.points[i]]
        if data.labels is not None:
            row.append(str(int(data.labels[i])))
        w.writerow(row)
    return buf.getvalue()


def save_csv(data: Dataset, path, label_name: str = "label") -> None:
    """Write :func:`dataset_to_csv` output to ``path``."""
    text = dataset_to_csv(data, label_name)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one benchmark or grid search.

    ``dataset`` is a CSV path or a :class:`SyntheticSpec`. ``alpha_grid`` and
    ``lam_grid`` are only used by :func:`grid_search`; ``response_column``
    (name or index among the features) is required for ``fcrm``.
    """

    dataset: Union[str, SyntheticSpec]
    method: str = "rflkpc"
    k: Optional[int] = None
    m: float = 2.0
    alpha: float = 0.5
    lam: float = 1.0
    eta: float = 1e-5
    max_outer: int = 100
    max_inner: int = 20
    restarts: int = 100
    seed: int = 0
    normalize: bool = False
    has_header: bool = True
    label_column: Union[str, int, None] = None
    response_column: Union[str, int, None] = None
    outliers: str = "exclude"
    alpha_grid: tuple = DEFAULT_ALPHA_GRID
    lam_grid: tuple = DEFAULT_LAMBDA_GRID
    out: Optional[str] = None
    format: str = "json"

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if int(self.restarts) != self.restarts or self.restarts < 1:
            raise InvalidInputError("restarts must be a positive integer")
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        object.__setattr__(self, "lam_grid", tuple(float(v) for v in self.lam_grid))
        if not self.alpha_grid or not self.lam_grid:
            raise InvalidInputError("alpha and lambda grids must be non-empty")
        if any(not 0.0 <= a <= 1.0 for a in self.alpha_grid):
            raise InvalidInputError("alpha grid values must lie in [0, 1]")
        if any(not v >= 0.0 for v in self.lam_grid):
            raise InvalidInputError("lambda grid values must be >= 0")
        if self.method == "fcrm" and self.response_column is None:
            raise InvalidInputError("fcrm needs a response column")
        if self.format not in ("json", "csv"):
            raise InvalidInputError("format must be 'json' or 'csv'")
        if self.outliers not in ("exclude", "own_class"):
            raise InvalidInputError("outliers must be 'exclude' or 'own_class'")
        if self.k is None and not isinstance(self.dataset, SyntheticSpec):
            raise InvalidInputError("k is required for file datasets")

    @property
    def n_clusters(self) -> int:
        if self.k is not None:
            return int(self.k)
        return self.dataset.k

    def params(self, seed: int, alpha=None, lam=None) -> HyperParams:
        return HyperParams(
            k=self.n_clusters, m=self.m,
            alpha=self.alpha if alpha is None else alpha,
            lam=self.lam if lam is None else lam,
            eta=self.eta, max_outer=self.max_outer, max_inner=self.max_inner, seed=seed,
        )

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if isinstance(self.dataset, SyntheticSpec):
            spec = dataclasses.asdict(self.dataset)
            if spec["n_per_cluster"] is not None and np.ndim(spec["n_per_cluster"]):
                spec["n_per_cluster"] = list(spec["n_per_cluster"])
            d["dataset"] = {"synthetic": spec}
        else:
            d["dataset"] = {"path": str(self.dataset)}
        d["alpha_grid"] = list(self.alpha_grid)
        d["lam_grid"] = list(self.lam_grid)
        d["k"] = self.n_clusters
        # where the report goes is not part of the experiment
        del d["out"], d["format"]
        return d


def load_dataset(config: ExperimentConfig) -> Dataset:
    if isinstance(config.dataset, SyntheticSpec):
        data = generate(config.dataset)
    else:
        data = load_csv(config.dataset, config.has_header, config.label_column)
    return minmax_normalize(data) if config.normalize else data


def restart_seed(seed: int, r: int) -> int:
    """Seed of restart ``r``: first word of ``SeedSequence([seed, r])``."""
    return int(np.random.SeedSequence([int(seed), int(r)]).generate_state(1)[0])


def _response_split(data: Dataset, column):
    names = data.feature_names
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        if names is None or column not in names:
            raise InvalidInputError(f"response column {column!r} not found")
        j = names.index(column)
    else:
        j = int(column) % data.d
    if data.d < 2:
        raise InvalidInputError("fcrm needs at least one explanatory column")
    keep = [c for c in range(data.d) if c != j]
    return data.points[:, keep], data.points[:, j]


# ---------------------------------------------------------------- benchmark


def _run_one(config: ExperimentConfig, data: Dataset, r: int, alpha=None, lam=None) -> dict:
    seed = restart_seed(config.seed, r)
    row = {"restart": r, "seed": seed, "status": "ok", "error": None}
    start = time.perf_counter()
    try:
        k = config.n_clusters
        if config.method == "rflkpc":
            rep = fit(data, config.params(seed, alpha, lam))
            labels, trace, iters, conv = rep.hard_labels, rep.objective_trace, rep.outer_iters, rep.converged
        elif config.method == "kpc":
            rep = kpc_fit(data, k, seed=seed, max_iter=config.max_outer)
            labels, trace, iters, conv = rep.hard_labels, rep.objective_trace, rep.outer_iters, rep.converged
        elif config.method == "fkpc":
            rep = fkpc_fit(data, k, m=config.m, seed=seed, tol=config.eta, max_iter=config.max_outer)
            labels, trace, iters, conv = rep.hard_labels, rep.objective_trace, rep.outer_iters, rep.converged
        else:
            xt, y = _response_split(data, config.response_column)
            model, memb = fcrm_fit(xt, y, k, m=config.m, seed=seed, tol=config.eta, max_iter=config.max_outer)
            labels, trace, iters, conv = hard_labels(memb), model.objective_trace, model.n_iter, model.converged
        trace = [float(t) for t in trace]
        if not trace or not math.isfinite(trace[-1]):
            raise NumericalFailureError("fit produced a non-finite objective")
        row.update(
            objective=trace[-1], objective_trace=trace, iterations=int(iters), converged=bool(conv),
            metrics=score(data.labels, labels, config.outliers) if data.labels is not None else {},
        )
    except NumericalFailureError as exc:
        # invalid input is a configuration error and propagates instead
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}", objective=None,
                   objective_trace=[], iterations=0, converged=False, metrics={})
    row["wall_time"] = time.perf_counter() - start
    return row


def _mean_std(values):
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        return None, None
    mean = float(np.mean(vals))
    std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
    return mean, std


def _aggregate(rows):
    ok = [r for r in rows if r["status"] == "ok"]
    agg = {}
    names = [n for n in METRICS if ok and n in ok[0]["metrics"]] + ["objective"]
    for name in names:
        vals = [r["objective"] if name == "objective" else r["metrics"][name] for r in ok]
        mean, std = _mean_std(vals)
        agg[name] = {"mean": mean, "std": std, "n": len(vals)}
    return agg


def resolve_threads(threads: Optional[int] = None) -> int:
    """``threads`` if given, else ``PLANECLUST_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        threads = int(env) if env else 1
    if threads < 1:
        raise InvalidInputError("thread count must be >= 1")
    return int(threads)


def _map(fn, jobs, threads):
    if threads <= 1 or len(jobs) <= 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, *j) for j in jobs]
        return [f.result() for f in futures]


def _report(config, data, rows, alpha=None, lam=None, elapsed=0.0) -> dict:
    cfg = config.to_dict()
    if alpha is not None:
        cfg["alpha"], cfg["lam"] = alpha, lam
    return {
        "version": REPORT_VERSION,
        "kind": "benchmark",
        "config": cfg,
        "dataset": {"n": data.n, "d": data.d, "labeled": data.labels is not None},
        "restarts": rows,
        "failures": sum(r["status"] != "ok" for r in rows),
        "aggregate": _aggregate(rows),
        "total_wall_time": elapsed,
    }


def run_benchmark(config: ExperimentConfig, threads: Optional[int] = None, data: Optional[Dataset] = None) -> dict:
    """Fit ``config.restarts`` times and score every restart.

    Restart r uses the seed from :func:`restart_seed`. Failed fits are kept in
    the restart list with ``status = "failed"``, counted in ``failures`` and
    left out of the aggregates. ``aggregate`` holds the mean and the sample
    standard deviation (0 for a single restart) of each score and of the
    final objective.
    """
    start = time.perf_counter()
    data = load_dataset(config) if data is None else data
    threads = resolve_threads(threads)
    rows = _map(_run_one, [(config, data, r) for r in range(config.restarts)], threads)
    return _report(config, data, rows, elapsed=time.perf_counter() - start)


def grid_search(config: ExperimentConfig, selection: str = "best_metric", threads: Optional[int] = None) -> dict:
    """Benchmark every (alpha, lam) cell and pick the best one.

    ``best_metric`` maximizes mean ACC and needs labels; ``best_objective``
    minimizes the mean final objective. Ties go to the smaller lam, then the
    smaller alpha. Returns a report with the full grid table, one row per
    cell, alpha varying fastest within each lam block.
    """
    if selection not in SELECTIONS:
        raise InvalidInputError(f"unknown selection {selection!r}; expected one of {SELECTIONS}")
    if config.method != "rflkpc":
        raise InvalidInputError("grid search tunes alpha and lambda, which only rflkpc has")
    start = time.perf_counter()
    data = load_dataset(config)
    if selection == "best_metric" and data.labels is None:
        raise InvalidInputError("best_metric selection needs ground-truth labels")
    threads = resolve_threads(threads)
    cells = [(a, v) for v in sorted(config.lam_grid) for a in sorted(config.alpha_grid)]
    jobs = [(config, data, r, a, v) for a, v in cells for r in range(config.restarts)]
    flat = _map(_run_one, jobs, threads)

    table = []
    for c, (a, v) in enumerate(cells):
        rows = flat[c * config.restarts:(c + 1) * config.restarts]
        agg = _aggregate(rows)
        entry = {"alpha": a, "lam": v, "failures": sum(r["status"] != "ok" for r in rows)}
        for name, stats in agg.items():
            entry[f"{name}_mean"] = stats["mean"]
            entry[f"{name}_std"] = stats["std"]
        table.append(entry)

    key = "acc_mean" if selection == "best_metric" else "objective_mean"
    scored = [e for e in table if e.get(key) is not None]
    if not scored:
        raise NumericalFailureError("every grid cell failed")
    sign = -1.0 if selection == "best_metric" else 1.0
    # cells are ordered by (lam, alpha), so min() keeps the first of equal keys
    best = min(scored, key=lambda e: sign * e[key])
    return {
        "version": REPORT_VERSION,
        "kind": "gridsearch",
        "config": config.to_dict(),
        "selection": selection,
        "best": {"alpha": best["alpha"], "lam": best["lam"], key: best[key]},
        "grid": table,
        "total_wall_time": time.perf_counter() - start,
    }


# ---------------------------------------------------------------- reports


def _clean(obj):
    # non-finite floats are not valid JSON
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def strip_timing(obj):
    """Copy of a report without timing fields, for byte comparisons."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_FIELDS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def report_to_json(report: dict) -> str:
    # repr floats are the shortest text that parses back to the same double
    return json.dumps(_clean(report), indent=2, allow_nan=False) + "\n"


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def report_to_csv_rows(report: dict) -> list:
    """Header plus one row per (restart, metric) or per grid cell."""
    if report.get("kind") == "gridsearch":
        grid = report["grid"]
        if not grid:
            raise InvalidInputError("grid table is empty")
        cols = list(grid[0].keys())
        return [cols] + [[_fmt(e.get(c)) for c in cols] for e in grid]
    rows = report.get("restarts") or []
    if not rows:
        raise InvalidInputError("report has no restarts; refusing to write an empty table")
    names = [n for n in METRICS if report["dataset"]["labeled"]] + ["objective"]
    out = [["method", "restart", "seed", "status", "metric", "value"]]
    method = report["config"]["method"]
    for r in rows:
        for name in names:
            val = r["objective"] if name == "objective" else r["metrics"].get(name)
            out.append([method, str(r["restart"]), str(r["seed"]), r["status"], name, _fmt(val)])
    return out


def emit_report(report: dict, path, format: str = "json") -> None:
    """Write a benchmark or grid report.

    Raises:
        InvalidInputError: unknown format, or a report with no restarts.
        OSError: the path cannot be written.
    """
    if format == "json":
        if report.get("kind") == "benchmark" and not report.get("restarts"):
            raise InvalidInputError("report has no restarts; refusing to write an empty report")
        text = report_to_json(report)
    elif format == "csv":
        rows = report_to_csv_rows(report)
        text = "".join(",".join(r) + "\n" for r in rows)
    else:
        raise InvalidInputError(f"unknown report format {format!r}")
    # build the whole text first so a failure never leaves a partial file
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# ---------------------------------------------------------------- CLI

_FLAG_KEYS = {
    "method": str, "k": int, "m": float, "alpha": float, "lambda": float, "eta": float,
    "restarts": int, "seed": int, "normalize": "bool", "label_col": str, "response_col": str,
    "out": str, "format": str, "threads": int, "data": str, "synthetic": str, "no_header": "bool",
    "alpha_grid": "floats", "lambda_grid": "floats", "selection": str, "max_outer": int,
    "max_inner": int, "noise_scale": float, "outlier_fraction": float, "n_per_cluster": int,
    "outliers": str,
}
_DEFAULTS = {
    "method": "rflkpc", "m": 2.0, "alpha": 0.5, "lambda": 1.0, "eta": 1e-5, "restarts": 100,
    "seed": 0, "normalize": False, "format": "json", "no_header": False, "selection": "best_metric",
    "max_outer": 100, "max_inner": 20, "outliers": "exclude",
}


def _coerce(key, text):
    kind = _FLAG_KEYS[key]
    if kind == "bool":
        if isinstance(text, bool):
            return text
        low = str(text).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise InvalidInputError(f"{key}: expected a boolean, got {text!r}")
    if kind == "floats":
        if isinstance(text, (list, tuple)):
            return [float(t) for t in text]
        return [float(t) for t in str(text).split(",") if t.strip()]
    try:
        return kind(text)
    except ValueError:
        raise InvalidInputError(f"{key}: cannot parse {text!r}") from None


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Keys are the long flag names with dashes or underscores.
    """
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInputError(f"{path}:{n}: expected key = value")
            key, val = (p.strip() for p in line.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key not in _FLAG_KEYS:
                raise InvalidInputError(f"{path}:{n}: unknown key {key!r}")
            out[key] = _coerce(key, val)
    return out


def _merged(args) -> dict:
    opts = dict(_DEFAULTS)
    if getattr(args, "config", None):
        opts.update(read_config_file(args.config))
    for key in _FLAG_KEYS:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            opts[key] = _coerce(key, val)
    return opts


def _dataset_source(opts):
    if opts.get("synthetic"):
        extra = {}
        for key in ("noise_scale", "outlier_fraction", "n_per_cluster"):
            if opts.get(key) is not None:
                extra[key] = opts[key]
        return SyntheticSpec.from_name(opts["synthetic"], seed=opts["seed"], **extra)
    if opts.get("data"):
        return opts["data"]
    raise InvalidInputError("give a dataset with --data PATH or --synthetic NAME")


def _col(val):
    if val is None:
        return None
    return int(val) if str(val).lstrip("-").isdigit() else val


def config_from_options(opts: dict) -> ExperimentConfig:
    kw = dict(
        dataset=_dataset_source(opts), method=opts["method"], k=opts.get("k"), m=opts["m"],
        alpha=opts["alpha"], lam=opts["lambda"], eta=opts["eta"], max_outer=opts["max_outer"],
        max_inner=opts["max_inner"], restarts=opts["restarts"], seed=opts["seed"],
        normalize=opts["normalize"], has_header=not opts["no_header"],
        label_column=_col(opts.get("label_col")), response_column=_col(opts.get("response_col")),
        outliers=opts["outliers"], out=opts.get("out"), format=opts["format"],
    )
    if opts.get("alpha_grid"):
        kw["alpha_grid"] = tuple(opts["alpha_grid"])
    if opts.get("lambda_grid"):
        kw["lam_grid"] = tuple(opts["lambda_grid"])
    return ExperimentConfig(**kw)


def _add_common(p):
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--data", help="CSV dataset path")
    p.add_argument("--synthetic", help="synthetic dataset name, e.g. S2-T or S3-UN")
    p.add_argument("--no-header", action="store_true", default=None, help="CSV has no header row")
    p.add_argument("--label-col", help="label column name or 0-based index")
    p.add_argument("--normalize", action="store_true", default=None, help="min-max scale every feature")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--k", type=int, help="number of clusters (defaults to the synthetic family's)")
    p.add_argument("--m", type=float, help="fuzzifier, > 1")
    p.add_argument("--alpha", type=float, help="squared vs absolute projection weight in [0, 1]")
    p.add_argument("--lambda", type=float, help="locality weight >= 0")
    p.add_argument("--eta", type=float, help="outer tolerance on the membership change")
    p.add_argument("--max-outer", type=int)
    p.add_argument("--max-inner", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--response-col", help="response column for fcrm")
    p.add_argument("--outliers", choices=("exclude", "own_class"), help="scoring of label -1")
    p.add_argument("--noise-scale", type=float)
    p.add_argument("--outlier-fraction", type=float)
    p.add_argument("--n-per-cluster", type=int)
    p.add_argument("--out", help="output file (stdout when omitted)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--threads", type=int, help=f"worker processes (default ${THREADS_ENV} or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planeclust", description="Fuzzy plane clustering benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("fit", "fit once and print the model"),
                       ("benchmark", "multi-restart benchmark"),
                       ("gridsearch", "exhaustive (alpha, lambda) search")):
        p = sub.add_parser(name, help=text)
        _add_common(p)
        p.add_argument("--restarts", type=int)
        if name == "gridsearch":
            p.add_argument("--alpha-grid", help="comma-separated alpha values")
            p.add_argument("--lambda-grid", help="comma-separated lambda values")
            p.add_argument("--selection", choices=SELECTIONS)
    p = sub.add_parser("datagen", help="write a synthetic dataset as CSV")
    p.add_argument("--config")
    p.add_argument("--synthetic", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise-scale", type=float)
    p.add_argument("--outlier-fraction", type=float)
    p.add_argument("--n-per-cluster", type=int)
    p.add_argument("--out")
    p = sub.add_parser("metrics", help="score predicted labels against ground truth")
    p.add_argument("truth", help="CSV with the true labels")
    p.add_argument("pred", help="CSV with the predicted labels")
    p.add_argument("--label-col", help="label column in both files (default: last)")
    p.add_argument("--no-header", action="store_true", default=None)
    p.add_argument("--outliers", choices=("exclude", "own_class"))
    p.add_argument("--out")
    return parser


def _write(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_labels(path, has_header, column):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if has_header:
        header, rows = rows[0], rows[1:]
        idx = header.index(column) if column is not None and not str(column).lstrip("-").isdigit() \
            else int(column if column is not None else -1)
    else:
        idx = int(column) if column is not None else -1
    out = []
    for n, row in enumerate(rows, 2 if has_header else 1):
        try:
            out.append(int(float(row[idx])))
        except (ValueError, IndexError):
            raise CsvParseError("missing or non-integer label", row=n) from None
    return np.array(out)


def _cmd_fit(opts):
    cfg = config_from_options(opts)
    data = load_dataset(cfg)
    if cfg.method == "rflkpc":
        rep = fit(data, cfg.params(cfg.seed))
        out = {
            "version": REPORT_VERSION, "kind": "fit", "config": cfg.to_dict(),
            "normals": rep.model.normals, "centers": rep.model.centers,
            "offsets": rep.model.plane_offsets(), "labels": rep.hard_labels,
            "objective_trace": rep.objective_trace, "outer_iters": rep.outer_iters,
            "inner_iters_total": rep.inner_iters_total, "converged": rep.converged,
            "reseeded": rep.reseeded, "wall_time": rep.wall_time,
        }
        if data.labels is not None:
            out["metrics"] = score(data.labels, rep.hard_labels, cfg.outliers)
    else:
        # baselines: report the single restart with the configured seed
        row = _run_one(cfg, data, 0)
        out = {"version": REPORT_VERSION, "kind": "fit", "config": cfg.to_dict(), **row}
    _write(report_to_json(out), cfg.out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "datagen":
            opts = _merged(args)
            _write(dataset_to_csv(generate(_dataset_source(opts))), opts.get("out"))
            return 0
        if args.command == "metrics":
            has_header = not args.no_header
            truth = _read_labels(args.truth, has_header, args.label_col)
            pred = _read_labels(args.pred, has_header, args.label_col)
            res = score(truth, pred, args.outliers or "exclude")
            _write(json.dumps(res, indent=2) + "\n", args.out)
            return 0
        opts = _merged(args)
        if args.command == "fit":
            _cmd_fit(opts)
            return 0
        cfg = config_from_options(opts)
        if args.command == "benchmark":
            report = run_benchmark(cfg, threads=opts.get("threads"))
        else:
            report = grid_search(cfg, opts["selection"], threads=opts.get("threads"))
        if cfg.out:
            emit_report(report, cfg.out, cfg.format)
        elif cfg.format == "json":
            sys.stdout.write(report_to_json(report))
        else:
            sys.stdout.write("".join(",".join(r) + "\n" for r in report_to_csv_rows(report)))
        return 0
    except (InvalidInputError, NumericalFailureError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
