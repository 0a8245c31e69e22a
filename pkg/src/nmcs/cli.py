"""Experiment runner: classic benchmark protocol, solar-cell comparisons and reports.

Usage::

    nmcs bench --suite classic --algo nmcs --runs 100 --seed 1 --out results
    nmcs solar --topology ss --cells 3..10 --algo nmcs,nms,sa,ga --budget 1500 --out results
    nmcs report --in results
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import benchmarks, solar
from .baselines import GaParams, SaParams, ga_minimize, sa_minimize
from .cuckoo import CsParams, cs_minimize
from .hybrid import HybridParams, nmcs_minimize, stop_spread
from .objective import RunReport
from .simplex import nms_minimize

ALGORITHMS = ("nms", "cs", "nmcs", "sa", "ga")
BENCH_COLUMNS = ["function", "d", "algorithm", "runs", "mean_evals", "mean_error", "success_rate"]
SOLAR_COLUMNS = ["topology", "n_cells", "algorithm", "seed", "best_eta_percent", "evals_used"]
MAX_CELLS = 10

# published NMS-CS results: (evaluations, average error) and best efficiency in percent
PUBLISHED_BENCH = {
    "RC": (269, 2.1e-5), "B2": (132, 1e-5), "GP": (313, 2.4e-5), "SH": (569, 2e-5),
    "R2": (473, 2.1e-5), "Z2": (150, 1e-5), "H3,4": (418, 5e-4), "S4,5": (1125, 2.8e-5),
    "R5": (1504, 3.1e-5), "R10": (2621, 2.2e-4),
}
PUBLISHED_SS = {3: 51.351, 4: 55.396, 5: 57.790, 6: 59.658, 7: 60.706, 8: 61.618, 9: 62.596, 10: 63.296}
PUBLISHED_MJ = {3: 51.003, 4: 54.558, 5: 56.610, 6: 58.078, 7: 59.732, 8: 60.140, 9: 59.051, 10: 61.231}
STRICT_ERROR_FUNCTIONS = ("RC", "B2", "GP", "SH", "Z2", "R2")

SUCCESS_ERROR = 1e-3
TARGET_TOLERANCE = 1e-4


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class SchemaError(ValueError):
    """A CSV does not have the expected columns."""


class MissingSpectrum(FileNotFoundError):
    """No spectrum file could be found."""


@dataclass
class ExperimentConfig:
    experiment: str = "benchmark"
    algorithms: tuple = ("nmcs",)
    runs: int = 100
    seed_base: int = 1
    # None -> 2000 * d for benchmarks, 1500 for solar runs
    budget: Optional[int] = None
    # per-algorithm keyword overrides, e.g. {"nmcs": {"p_a": 0.1}}
    params: dict = field(default_factory=dict)
    output_path: str = "results"
    functions: Optional[tuple] = None
    topologies: tuple = ("ss", "mj")
    cells: tuple = tuple(range(3, MAX_CELLS + 1))
    spectrum_path: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        self.algorithms = tuple(self.algorithms)
        self.topologies = tuple(t.lower() for t in self.topologies)
        self.cells = tuple(int(c) for c in self.cells)
        if self.functions is not None:
            self.functions = tuple(self.functions)
        self.validate()

    def validate(self) -> None:
        if self.experiment not in ("benchmark", "solar"):
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        for algo in self.algorithms:
            if algo not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {algo!r}")
        if not self.algorithms:
            raise ConfigError("no algorithm selected")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.budget is not None and self.budget < 1:
            raise ConfigError("budget must be positive")
        for topology in self.topologies:
            if topology not in ("ss", "mj"):
                raise ConfigError(f"unknown topology {topology!r}")
        for n in self.cells:
            if not 1 <= n <= MAX_CELLS:
                raise ConfigError(f"cell count {n} outside 1..{MAX_CELLS}")
        if self.functions is not None:
            known = {b.name.lower() for b in benchmarks.suite()}
            for name in self.functions:
                if name.lower() not in known:
                    raise ConfigError(f"unknown function {name!r}")
        for algo in self.params:
            if algo not in ALGORITHMS:
                raise ConfigError(f"parameters given for unknown algorithm {algo!r}")

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data.update({k: v for k, v in overrides.items() if v is not None})
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def _overrides(config: ExperimentConfig, algo: str) -> dict:
    return dict(config.params.get(algo, {}))


def _build(cls, config: ExperimentConfig, algo: str, **defaults):
    kw = {**defaults, **_overrides(config, algo)}
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {algo}: {exc}") from exc


# ---------------------------------------------------------------- benchmarks


def benchmark_hybrid_params(fn: benchmarks.BenchmarkFunction, config: ExperimentConfig) -> HybridParams:
    """Classic-suite settings: 6 nests (20 for R10), p=1, k=2n, eps=1e-7.

    Runs also stop once the best value is within 1e-4 of the known optimum.
    """
    return _build(
        HybridParams, config, "nmcs",
        n_nests=20 if fn.spec.d == 10 else 6,
        p=1,
        centroid_excludes_worst=True,
        epsilon=1e-7,
        stop_rule="n_plus_1",
        target_value=fn.optimum_value + TARGET_TOLERANCE,
    )


def run_benchmark_once(fn_name: str, algo: str, seed: int, config: ExperimentConfig) -> RunReport:
    fn = benchmarks.get(fn_name)
    spec = fn.spec
    budget = config.budget or 2000 * spec.d
    target = fn.optimum_value + TARGET_TOLERANCE
    rng = np.random.default_rng(seed)
    if algo == "nmcs":
        return nmcs_minimize(spec, benchmark_hybrid_params(fn, config), budget=budget, seed=rng)
    if algo == "nms":
        nms_kw = _overrides(config, "nms")
        ftol = nms_kw.get("ftol", 1e-10)
        return nms_minimize(
            spec, spec.sample_uniform(rng), budget,
            stop=lambda s: s.fitness <= target or s.spread() < ftol,
            centroid_excludes_worst=nms_kw.get("centroid_excludes_worst", True),
        )
    if algo == "cs":
        params = _build(CsParams, config, "cs", n_nests=15)
        pool = max(2, params.n_nests // 3)
        return cs_minimize(
            spec, params, budget,
            stop=lambda v: v[0] <= target or stop_spread(v, pool) < 1e-7,
            seed=rng,
        )
    if algo == "sa":
        return sa_minimize(spec, _build(SaParams, config, "sa"), [spec.sample_uniform(rng)], budget, rng)
    return ga_minimize(spec, _build(GaParams, config, "ga"), (), budget, rng)


def _bench_task(args):
    fn_name, algo, seed, config = args
    report = run_benchmark_once(fn_name, algo, seed, config)
    return fn_name, algo, seed, report


def _map(tasks, fn, workers: int):
    if workers == 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def run_benchmark_suite(config: ExperimentConfig, write: bool = True) -> list[dict]:
    """Run every (function, algorithm) pair ``config.runs`` times; optionally write ``benchmark.csv``."""
    functions = [b for b in benchmarks.suite()
                 if config.functions is None
                 or b.name.lower() in {n.lower() for n in config.functions}]
    tasks = [
        (fn.name, algo, config.seed_base + i, config)
        for fn in functions for algo in config.algorithms for i in range(config.runs)
    ]
    results = _map(tasks, _bench_task, config.workers)
    rows = []
    for fn in functions:
        for algo in config.algorithms:
            reports = [r for name, a, _, r in results if name == fn.name and a == algo]
            errors = [benchmarks.error_vs_optimum(fn, r.best_value) for r in reports]
            successes = [r.stopped and e < SUCCESS_ERROR for r, e in zip(reports, errors)]
            rows.append({
                "function": fn.name,
                "d": fn.spec.d,
                "algorithm": algo,
                "runs": len(reports),
                "mean_evals": float(np.mean([r.evals_used for r in reports])),
                "mean_error": float(np.mean(errors)),
                "success_rate": float(np.mean(successes)),
            })
    if write:
        _write_csv(Path(config.output_path) / "benchmark.csv", BENCH_COLUMNS, rows)
    return rows


# ---------------------------------------------------------------- solar


def resolve_spectrum(path: Optional[str] = None) -> str:
    candidate = path or os.environ.get("SPECTRUM_PATH") or solar.default_spectrum_path()
    if not Path(candidate).is_file():
        raise MissingSpectrum(f"spectrum file not found: {candidate}")
    return str(candidate)


def solar_start_points(stack: solar.StackSpec, rng: np.random.Generator):
    """The shared start recipe: two informed points, eight random ones, five more random ones."""
    spec = solar.objective_for(stack)
    informed = list(solar.informed_starts(stack))
    eight = list(spec.sample_uniform(rng, 8))
    five = list(spec.sample_uniform(rng, 5))
    return informed, eight, five


def run_solar_once(stack: solar.StackSpec, algo: str, seed: int, budget: int,
                   config: Optional[ExperimentConfig] = None) -> RunReport:
    config = config or ExperimentConfig(experiment="solar")
    spec = solar.objective_for(stack)
    rng = np.random.default_rng(seed)
    informed, eight, five = solar_start_points(stack, rng)
    if algo == "nms":
        return _multistart_nms(spec, informed + eight, budget, _overrides(config, "nms"))
    if algo == "nmcs":
        params = _build(HybridParams, config, "nmcs", n_nests=15, epsilon=0.0,
                        centroid_excludes_worst=True)
        return nmcs_minimize(spec, params, informed + eight + five, budget, seed=rng)
    if algo == "sa":
        return sa_minimize(spec, _build(SaParams, config, "sa"), informed, budget, rng)
    if algo == "ga":
        return ga_minimize(spec, _build(GaParams, config, "ga"), informed + eight + five, budget, rng)
    if algo == "cs":
        return cs_minimize(spec, _build(CsParams, config, "cs"), budget, seed=rng)
    raise ConfigError(f"unknown algorithm {algo!r}")


def _multistart_nms(spec, starts, budget: int, overrides: dict) -> RunReport:
    # the budget is split evenly over the starts; the best run wins
    shares = [budget // len(starts) + (i < budget % len(starts)) for i in range(len(starts))]
    scale = overrides.get("scale", 0.1)
    textbook = overrides.get("centroid_excludes_worst", True)
    reports = [nms_minimize(spec, s, share, scale=scale, centroid_excludes_worst=textbook)
               for s, share in zip(starts, shares) if share > 0]
    best = min(reports, key=lambda r: r.best_value)
    used = sum(r.evals_used for r in reports)
    return dataclasses.replace(
        best, evals_used=used, wall_time=sum(r.wall_time for r in reports)
    )


def _solar_task(args):
    topology, n_cells, algo, seed, budget, spectrum_path, config = args
    stack = solar.make_stack(n_cells, topology, _spectrum_cached(spectrum_path))
    report = run_solar_once(stack, algo, seed, budget, config)
    gaps = np.sort(report.best_point)
    eta = solar.efficiency(stack, gaps)
    # reporter and optimizer must agree on the objective value
    if abs((1.0 - eta) - report.best_value) > 1e-9:
        raise RuntimeError(f"efficiency mismatch for {topology}-{n_cells} {algo}: {eta} vs {1 - report.best_value}")
    return {
        "topology": topology,
        "n_cells": n_cells,
        "algorithm": algo,
        "seed": seed,
        "best_eta_percent": 100.0 * eta,
        "evals_used": report.evals_used,
        "best_gaps": [float(g) for g in gaps],
    }


_SPECTRA: dict = {}


def _spectrum_cached(path: str) -> solar.SpectrumTable:
    if path not in _SPECTRA:
        _SPECTRA[path] = solar.load_spectrum(path)
    return _SPECTRA[path]


def run_solar_experiment(config: ExperimentConfig, write: bool = True) -> list[dict]:
    """Every (topology, N, algorithm, seed) run; rows sorted, optionally written to ``solar.csv``."""
    path = resolve_spectrum(config.spectrum_path)
    budget = config.budget or 1500
    tasks = [
        (topology, n, algo, config.seed_base + i, budget, path, config)
        for topology in config.topologies for n in config.cells
        for algo in config.algorithms for i in range(config.runs)
    ]
    rows = _map(tasks, _solar_task, config.workers)
    rows.sort(key=lambda r: (r["topology"], r["n_cells"], r["algorithm"], r["seed"]))
    if write:
        flat = []
        for r in rows:
            row = {k: v for k, v in r.items() if k != "best_gaps"}
            row.update({f"gap_{i + 1}": g for i, g in enumerate(r["best_gaps"])})
            flat.append(row)
        header = SOLAR_COLUMNS + [f"gap_{i + 1}" for i in range(max(config.cells))]
        _write_csv(Path(config.output_path) / "solar.csv", header, flat)
    return rows


def best_of(rows: Sequence[dict]) -> dict:
    """Best efficiency per (topology, n_cells, algorithm)."""
    best: dict = {}
    for r in rows:
        key = (r["topology"], int(r["n_cells"]), r["algorithm"])
        best[key] = max(best.get(key, -math.inf), float(r["best_eta_percent"]))
    return best


def mean_of(rows: Sequence[dict]) -> dict:
    groups: dict = {}
    for r in rows:
        key = (r["topology"], int(r["n_cells"]), r["algorithm"])
        groups.setdefault(key, []).append(float(r["best_eta_percent"]))
    return {k: float(np.mean(v)) for k, v in groups.items()}


# ---------------------------------------------------------------- reports


def _write_csv(path: Path, header: list, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, restval="", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def _read_csv(path) -> tuple[str, list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        rows = list(reader)
    if all(c in header for c in BENCH_COLUMNS):
        return "benchmark", rows
    if all(c in header for c in SOLAR_COLUMNS):
        return "solar", rows
    missing_b = [c for c in BENCH_COLUMNS if c not in header]
    missing_s = [c for c in SOLAR_COLUMNS if c not in header]
    missing = missing_b if len(missing_b) < len(missing_s) else missing_s
    raise SchemaError(f"{path}: missing columns {missing}")


def benchmark_thresholds_ok(row: dict) -> bool:
    name = row["function"]
    error_limit = 1e-4 if name in STRICT_ERROR_FUNCTIONS else 1e-3
    published_evals = PUBLISHED_BENCH[name][0]
    evals = float(row["mean_evals"])
    return float(row["mean_error"]) <= error_limit and published_evals / 2 <= evals <= 2 * published_evals


def solar_threshold(topology: str, n: int) -> Optional[tuple[float, float]]:
    """(published efficiency, tolerance) for rows covered by the reproduction targets."""
    if topology == "ss" and n in PUBLISHED_SS:
        return PUBLISHED_SS[n], 1.0 if n <= 6 else 1.5
    if topology == "mj" and 3 <= n <= 7:
        return PUBLISHED_MJ[n], 1.5
    return None


def compare_report(paths: Sequence, check: bool = True) -> tuple[str, bool]:
    """Side-by-side table of one or more result CSVs.

    Each column is ``label:algorithm``; the best entry per row is marked with
    ``*`` and entries sharing the best value with ``=``. With ``check`` the
    NMS-CS rows are held to the reproduction thresholds and the returned flag
    is False if any of them misses.
    """
    if not paths:
        raise SchemaError("no CSV files given")
    loaded = [(Path(p).stem if len(paths) == 1 else f"{i}", *_read_csv(p)) for i, p in enumerate(paths)]
    kinds = {kind for _, kind, _ in loaded}
    if len(kinds) != 1:
        raise SchemaError("CSVs do not share a schema")
    kind = kinds.pop()
    lines, ok = [], True
    if kind == "benchmark":
        table: dict = {}
        for label, _, rows in loaded:
            for r in rows:
                table.setdefault(r["function"], {})[f"{label}:{r['algorithm']}"] = r
        columns = sorted({c for entries in table.values() for c in entries})
        lines.append("function  " + "  ".join(f"{c:>26}" for c in columns))
        for name, entries in table.items():
            scores = {c: float(e["mean_error"]) for c, e in entries.items()}
            cells = []
            for c in columns:
                if c not in entries:
                    cells.append(f"{'-':>26}")
                    continue
                e = entries[c]
                mark = _marker(scores, c, lower_is_better=True)
                cells.append(f"{float(e['mean_evals']):9.1f} ev {float(e['mean_error']):9.2e}{mark:>3}")
                if check and c.endswith(":nmcs") and name in PUBLISHED_BENCH and not benchmark_thresholds_ok(e):
                    ok = False
                    cells[-1] = cells[-1][:-1] + "!"
            lines.append(f"{name:<9} " + "  ".join(cells))
    else:
        table = {}
        for label, _, rows in loaded:
            for (topology, n, algo), eta in best_of(rows).items():
                table.setdefault((topology, n), {})[f"{label}:{algo}"] = eta
        columns = sorted({c for entries in table.values() for c in entries})
        lines.append("row      " + "  ".join(f"{c:>14}" for c in columns) + "   published")
        for (topology, n) in sorted(table):
            entries = table[(topology, n)]
            cells = []
            for c in columns:
                if c not in entries:
                    cells.append(f"{'-':>14}")
                    continue
                mark = _marker(entries, c, lower_is_better=False)
                flag = ""
                limit = solar_threshold(topology, n)
                if check and c.endswith(":nmcs") and limit is not None:
                    if abs(entries[c] - limit[0]) > limit[1]:
                        ok = False
                        flag = "!"
                cells.append(f"{entries[c]:11.3f}{mark}{flag:<1}".rjust(14))
            published = (PUBLISHED_SS if topology == "ss" else PUBLISHED_MJ).get(n)
            ref = f"{published:12.3f}" if published else ""
            lines.append(f"{topology.upper()}-{n:<5} " + "  ".join(cells) + ref)
    lines.append("")
    lines.append("* best in row, = tied for best" + (", ! outside the reproduction threshold" if check else ""))
    return "\n".join(lines), ok


def _marker(scores: dict, column: str, lower_is_better: bool) -> str:
    best = min(scores.values()) if lower_is_better else max(scores.values())
    if scores[column] != best:
        return ""
    tied = sum(1 for v in scores.values() if v == best) > 1
    return "=" if tied else "*"


# ---------------------------------------------------------------- command line


def _parse_cells(text: str) -> tuple:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return tuple(range(int(lo), int(hi) + 1))
        return tuple(int(c) for c in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad cell specification {text!r}") from exc


def _split(text: Optional[str]) -> Optional[tuple]:
    return None if text is None else tuple(t.strip() for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nmcs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file mirroring ExperimentConfig")
        p.add_argument("--algo", help="comma-separated algorithms")
        p.add_argument("--runs", type=int)
        p.add_argument("--seed", type=int, dest="seed_base")
        p.add_argument("--budget", type=int)
        p.add_argument("--out", dest="output_path")
        p.add_argument("--workers", type=int)

    bench = sub.add_parser("bench", help="classic benchmark protocol")
    common(bench)
    bench.add_argument("--suite", default="classic", choices=["classic"])
    bench.add_argument("--functions", help="comma-separated subset, e.g. RC,B2")

    sol = sub.add_parser("solar", help="solar-cell band-gap comparisons")
    common(sol)
    sol.add_argument("--topology", help="ss, mj or ss,mj")
    sol.add_argument("--cells", help="e.g. 3..10 or 3,4")
    sol.add_argument("--spectrum", dest="spectrum_path")

    rep = sub.add_parser("report", help="summarize result CSVs")
    rep.add_argument("--in", dest="inputs", nargs="+", required=True, help="directories or CSV files")
    rep.add_argument("--no-check", action="store_true", help="skip the reproduction thresholds")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    experiment = "benchmark" if args.command == "bench" else "solar"
    overrides = {
        "experiment": experiment,
        "algorithms": _split(args.algo),
        "runs": args.runs,
        "seed_base": args.seed_base,
        "budget": args.budget,
        "output_path": args.output_path,
        "workers": args.workers,
    }
    if experiment == "benchmark":
        overrides["functions"] = _split(args.functions)
    else:
        overrides["topologies"] = _split(args.topology)
        overrides["cells"] = _parse_cells(args.cells) if args.cells else None
        overrides["spectrum_path"] = args.spectrum_path
    if args.config:
        return ExperimentConfig.from_file(args.config, **overrides)
    defaults = {"runs": 5} if experiment == "solar" else {}
    defaults.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**defaults)


def _csv_paths(inputs) -> list:
    paths = []
    for item in inputs:
        p = Path(item)
        paths.extend(sorted(p.glob("*.csv")) if p.is_dir() else [p])
    return paths


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            paths = _csv_paths(args.inputs)
            by_kind: dict = {}
            for p in paths:
                by_kind.setdefault(_read_csv(p)[0], []).append(p)
            if not by_kind:
                raise SchemaError("no CSV files found")
            all_ok = True
            for kind in sorted(by_kind):
                text, ok = compare_report(by_kind[kind], check=not args.no_check)
                print(text)
                all_ok &= ok
            return 0 if all_ok else 1
        config = config_from_args(args)
        if config.experiment == "benchmark":
            rows = run_benchmark_suite(config)
            out = Path(config.output_path) / "benchmark.csv"
        else:
            rows = run_solar_experiment(config)
            out = Path(config.output_path) / "solar.csv"
        print(f"wrote {len(rows)} rows to {out}")
        return 0
    except (ConfigError, SchemaError, MissingSpectrum) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
