"""Benchmark and verification command line.

Subcommands
-----------
``solve``
    Run configured solvers on synthetic instances; write one trace file
    per (instance, method) plus a summary.
``diagnose``
    Run the theory-verification suite at the solved point and write a
    pass/fail report.
``bench``
    Reproduce the benchmark table over the (family, qubits) grid with
    all four methods, asserting the portable orderings.

Configuration is a single strict JSON document (unknown keys rejected);
``--seed``, ``--out``, and ``--precision`` override it.  The environment
variable ``MAXENT_LOG`` (off/info/debug) controls verbosity.  Exit codes:
0 all-pass, 1 flagged rows, 2 config or I/O errors.

Heavy imports happen inside functions: parallel workers must pin BLAS
thread pools through the environment before numpy loads.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

log = logging.getLogger("qmaxent")

DEFAULT_SEED = 40
DEFAULT_PRECISION = 1e-7
BENCH_KINDS = ("ising", "transversal1d", "local1d")
BENCH_SIZES = (6, 7, 8)
ALL_METHODS = ("qis", "gd", "am-qis", "lbfgs-gd")
PLAIN_METHODS = ("qis", "gd")
ACCELERATED_STEP_CAP = 40
PLAIN_STEP_BAND = (100, 10000)
CHECKPOINT_EVERY = 10

_METHOD_FIELDS = {
    "method",
    "eta",
    "history",
    "use_bb",
    "max_iters",
    "tol",
    "rcond",
}
_CONFIG_FIELDS = {
    "families",
    "n_qubits",
    "beta",
    "seeds",
    "complete",
    "methods",
    "out_dir",
    "precision",
}


@dataclass(frozen=True)
class MethodSpec:
    """JSON-facing mirror of SolverConfig with optional stopping fields."""

    method: str
    eta: float | None = None
    history: int = 10
    use_bb: bool = True
    max_iters: int | None = None
    tol: float | None = None
    rcond: float = 1e-7


@dataclass(frozen=True)
class ExperimentConfig:
    families: tuple[str, ...]
    n_qubits: tuple[int, ...]
    seeds: tuple[int, ...]
    methods: tuple[MethodSpec, ...]
    beta: float = 1.0
    complete: bool = False
    out_dir: str = "results"
    precision: float = DEFAULT_PRECISION


def _as_tuple(value, caster, what):
    if isinstance(value, (list, tuple)):
        return tuple(caster(v) for v in value)
    return (caster(value),)


def parse_method(raw: dict) -> MethodSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"method entry must be an object, got {type(raw).__name__}")
    unknown = set(raw) - _METHOD_FIELDS
    if unknown:
        raise ConfigError(f"unknown method keys: {sorted(unknown)}")
    if "method" not in raw:
        raise ConfigError("method entry needs a 'method' name")
    try:
        return MethodSpec(**raw)
    except TypeError as exc:
        raise ConfigError(f"bad method entry: {exc}") from exc


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate and normalize a configuration document."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(raw) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    try:
        families = _as_tuple(raw.get("families", ["ising"]), str, "families")
        sizes = _as_tuple(raw.get("n_qubits", [4]), int, "n_qubits")
        seeds = _as_tuple(raw.get("seeds", [DEFAULT_SEED]), int, "seeds")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad configuration value: {exc}") from exc
    methods_raw = raw.get("methods", [{"method": m} for m in ALL_METHODS])
    if not isinstance(methods_raw, list) or not methods_raw:
        raise ConfigError("configuration needs at least one method")
    methods = tuple(parse_method(m) for m in methods_raw)
    if not seeds:
        raise ConfigError("configuration needs at least one seed")
    from .model import FAMILY_KINDS

    for fam in families:
        if fam not in FAMILY_KINDS:
            raise ConfigError(
                f"unknown family {fam!r}; pick from {FAMILY_KINDS}"
            )
    return ExperimentConfig(
        families=families,
        n_qubits=sizes,
        seeds=seeds,
        methods=methods,
        beta=float(raw.get("beta", 1.0)),
        complete=bool(raw.get("complete", False)),
        out_dir=str(raw.get("out_dir", "results")),
        precision=float(raw.get("precision", DEFAULT_PRECISION)),
    )


def serialize_config(config: ExperimentConfig) -> dict:
    """Inverse of parse_config: parse(serialize(c)) == c."""
    return {
        "families": list(config.families),
        "n_qubits": list(config.n_qubits),
        "seeds": list(config.seeds),
        "methods": [dataclasses.asdict(m) for m in config.methods],
        "beta": config.beta,
        "complete": config.complete,
        "out_dir": config.out_dir,
        "precision": config.precision,
    }


def _method_solver_config(spec: MethodSpec, default_tol: float):
    from .solvers import SolverConfig

    if spec.max_iters is not None:
        max_iters = spec.max_iters
    elif spec.method in PLAIN_METHODS:
        max_iters = 20000
    else:
        max_iters = 100
    return SolverConfig(
        method=spec.method,
        eta=spec.eta,
        history=spec.history,
        use_bb=spec.use_bb,
        max_iters=max_iters,
        tol=spec.tol if spec.tol is not None else default_tol,
        rcond=spec.rcond,
    )


def _cell_name(family: str, n: int, seed: int, method: str) -> str:
    return f"{family}-n{n}-seed{seed}-{method}"


def write_trace_files(trace, out_dir: Path, name: str) -> Path:
    """Write the per-iteration CSV and the parameter-checkpoint sidecar.

    The wall_ns column is zeroed so repeated runs are byte-identical;
    real timings are reported in the summary only.
    """
    path = out_dir / f"{name}.trace.csv"
    lines = ["iter,gap,residual,wall_ns"]
    for t in range(len(trace.gaps)):
        lines.append(f"{t},{trace.gaps[t]!r},{trace.residuals[t]!r},0")
    path.write_text("\n".join(lines) + "\n")

    checkpoints = [
        t for t in range(len(trace.lambdas)) if t % CHECKPOINT_EVERY == 0
    ]
    final = len(trace.lambdas) - 1
    if final not in checkpoints:
        checkpoints.append(final)
    sidecar = {
        "name": name,
        "method": trace.method,
        "status": trace.status,
        "checkpoint_iterations": checkpoints,
        "lambda": [list(map(float, trace.lambdas[t])) for t in checkpoints],
    }
    (out_dir / f"{name}.lambda.json").write_text(
        json.dumps(sidecar, indent=1, sort_keys=True) + "\n"
    )
    return path


_FAMILY_CACHE: dict = {}


def _build_instance(family: str, n: int, seed: int, beta: float, complete: bool):
    from .model import build_family, make_instance

    key = (family, n, seed, beta, complete)
    if key not in _FAMILY_CACHE:
        fam = build_family(family, n, seed)
        _FAMILY_CACHE[key] = make_instance(fam, seed, beta=beta, complete=complete)
    return _FAMILY_CACHE[key]


def run_cell(task: dict) -> dict:
    """Solve one (family, n, seed, method) cell and write its files.

    Takes and returns plain JSON-able data so it can cross process
    boundaries; instances are rebuilt deterministically from the spec.
    """
    import numpy as np

    from .model import recover_weights
    from .solvers import STATUS_CONVERGED, run

    instance = _build_instance(
        task["family"], task["n"], task["seed"], task["beta"], task["complete"]
    )
    spec = MethodSpec(**task["method"])
    config = _method_solver_config(spec, task["default_tol"])
    tic = time.perf_counter()
    trace = run(instance, config)
    wall_s = time.perf_counter() - tic

    out_dir = Path(task["out_dir"])
    name = _cell_name(task["family"], task["n"], task["seed"], spec.method)
    trace_path = write_trace_files(trace, out_dir, name)

    steps = trace.steps_to_gap(task["precision"])
    row = {
        "instance": instance.label,
        "family": task["family"],
        "n_qubits": task["n"],
        "seed": task["seed"],
        "method": spec.method,
        "status": trace.status,
        "iterations": trace.n_iterations,
        "steps_to_precision": steps,
        "final_gap": trace.final_gap,
        "final_residual": trace.final_residual,
        "wall_ms": wall_s * 1e3,
        "trace_file": trace_path.name,
        "converged": trace.status == STATUS_CONVERGED,
    }
    if instance.ground_truth is not None:
        mu_hat = recover_weights(instance, trace.final_lambda)
        row["recovered_mu"] = [float(v) for v in mu_hat]
        row["mu_error_inf"] = float(
            np.abs(mu_hat - instance.ground_truth.mu).max()
        )
    log.info(
        "%s: %s in %d iterations (steps to %.0e: %s)",
        name,
        trace.status,
        trace.n_iterations,
        task["precision"],
        steps,
    )
    return row


def _run_cells(tasks: list[dict], jobs: int) -> list[dict]:
    if jobs <= 1:
        return [run_cell(t) for t in tasks]
    import multiprocessing

    # spawned children re-import numpy while loading the entry module, so
    # the single-thread BLAS caps must already sit in the inherited
    # environment; limiting from an initializer would come too late
    for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = "1"
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
        return list(pool.map(run_cell, tasks))


def _tasks_for(config: ExperimentConfig, default_tol: float) -> list[dict]:
    tasks = []
    for family in config.families:
        for n in config.n_qubits:
            for seed in config.seeds:
                for spec in config.methods:
                    tasks.append(
                        {
                            "family": family,
                            "n": n,
                            "seed": seed,
                            "beta": config.beta,
                            "complete": config.complete,
                            "method": dataclasses.asdict(spec),
                            "default_tol": default_tol,
                            "precision": config.precision,
                            "out_dir": config.out_dir,
                        }
                    )
    return tasks


def cmd_solve(config: ExperimentConfig, jobs: int) -> int:
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = _run_cells(_tasks_for(config, default_tol=1e-12), jobs)
    summary = {
        "config": serialize_config(config),
        "precision": config.precision,
        "rows": rows,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=1, sort_keys=True) + "\n"
    )
    flagged = [r for r in rows if not r["converged"]]
    for r in flagged:
        log.warning("flagged (no convergence): %s %s", r["instance"], r["method"])
    print(
        f"solve: {len(rows)} runs, {len(rows) - len(flagged)} converged, "
        f"summary in {out_dir / 'summary.json'}"
    )
    return 1 if flagged else 0


def _diag_checks(report) -> list[dict]:
    z = report.bounds.partition
    rel_qis = abs(report.fd_spectral_radius_qis - report.spectral_radius_qis) / max(
        report.spectral_radius_qis, 1e-300
    )
    rel_gd = abs(report.fd_spectral_radius_gd - report.spectral_radius_gd) / max(
        report.spectral_radius_gd, 1e-300
    )
    sym_agree = abs(
        report.spectral_radius_qis - report.spectral_radius_qis_symmetrized
    )
    checks = [
        ("jacobian_qis_fd_radius_reldiff", rel_qis, 1e-4, rel_qis <= 1e-4),
        ("jacobian_gd_fd_radius_reldiff", rel_gd, 1e-4, rel_gd <= 1e-4),
        ("qis_radius_similarity_agreement", sym_agree, 1e-10, sym_agree <= 1e-10),
        (
            "min_eig_p_minus_l",
            report.bounds.min_eig_p_minus_l,
            -1e-10,
            report.bounds.min_eig_p_minus_l >= -1e-10,
        ),
        (
            "min_entry_partition_hessian",
            report.bounds.min_entry_partition_hessian,
            -1e-12,
            report.bounds.min_entry_partition_hessian >= -1e-12,
        ),
        (
            "min_colsum_dominance_over_z",
            report.bounds.min_colsum_dominance / z,
            -1e-10,
            report.bounds.min_colsum_dominance / z >= -1e-10,
        ),
        (
            "hessian_identity_residual",
            report.bounds.identity_residual,
            1e-8,
            report.bounds.identity_residual <= 1e-8,
        ),
        ("q_rank", report.bounds.q_rank, 1, report.bounds.q_rank == 1),
        (
            "qbp_anticommutator_rel_err",
            report.qbp.anticommutator_rel_err,
            1e-6,
            report.qbp.anticommutator_rel_err <= 1e-6,
        ),
        (
            "qbp_sandwich_rel_err",
            report.qbp.sandwich_rel_err,
            1e-6,
            report.qbp.sandwich_rel_err <= 1e-6,
        ),
        (
            "qbp_trace_defect",
            report.qbp.trace_defect,
            1e-10,
            report.qbp.trace_defect <= 1e-10,
        ),
        (
            "min_eig_log_partition_hessian_positive",
            report.min_eig_log_partition_hessian,
            0.0,
            report.min_eig_log_partition_hessian > 0.0,
        ),
    ]
    if report.empirical_rate_qis is not None:
        rel_rate = abs(report.empirical_rate_qis - report.spectral_radius_qis) / max(
            report.spectral_radius_qis, 1e-300
        )
        checks.append(
            ("empirical_rate_vs_radius_reldiff", rel_rate, 0.15, rel_rate <= 0.15)
        )
    return [
        {"name": n, "value": v, "tolerance": tol, "pass": bool(ok)}
        for n, v, tol, ok in checks
    ]


def cmd_diagnose(config: ExperimentConfig, jobs: int) -> int:
    from .analysis import diagnose_instance

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    all_pass = True
    for family in config.families:
        for n in config.n_qubits:
            for seed in config.seeds:
                instance = _build_instance(
                    family, n, seed, config.beta, config.complete
                )
                report = diagnose_instance(instance)
                checks = _diag_checks(report)
                ok = all(c["pass"] for c in checks)
                if report.bounds.status != "ok":
                    ok = False
                all_pass = all_pass and ok
                reports.append(
                    {
                        "instance": instance.label,
                        "hypotheses": report.bounds.status,
                        "spectral_radius_qis": report.spectral_radius_qis,
                        "spectral_radius_gd": report.spectral_radius_gd,
                        "fd_spectral_radius_qis": report.fd_spectral_radius_qis,
                        "fd_spectral_radius_gd": report.fd_spectral_radius_gd,
                        "empirical_rate_qis": report.empirical_rate_qis,
                        "min_eig_log_partition_hessian": (
                            report.min_eig_log_partition_hessian
                        ),
                        # informational: the sandwich channel is not
                        # positivity preserving for non-commuting
                        # directions, so this value is not gated
                        "qbp_channel_min_eig": report.qbp.min_eig_channel,
                        "checks": checks,
                        "all_pass": ok,
                    }
                )
                log.info(
                    "diagnose %s: %s", instance.label, "pass" if ok else "FAIL"
                )
    (out_dir / "diagnostics.json").write_text(
        json.dumps(
            {"config": serialize_config(config), "reports": reports},
            indent=1,
            sort_keys=True,
        )
        + "\n"
    )
    n_pass = sum(1 for r in reports if r["all_pass"])
    print(
        f"diagnose: {n_pass}/{len(reports)} instances pass, report in "
        f"{out_dir / 'diagnostics.json'}"
    )
    return 0 if all_pass else 1


def _bench_flags(by_method: dict, precision: float) -> list[str]:
    flags = []
    qis = by_method.get("qis", {}).get("steps_to_precision")
    gd = by_method.get("gd", {}).get("steps_to_precision")
    if qis is None and "qis" in by_method:
        flags.append("qis-not-reached")
    if gd is None and "gd" in by_method:
        flags.append("gd-not-reached")
    if qis is not None and gd is not None and not qis < gd:
        flags.append("qis>=gd")
    for method in PLAIN_METHODS:
        steps = by_method.get(method, {}).get("steps_to_precision")
        if steps is not None and not (
            PLAIN_STEP_BAND[0] <= steps <= PLAIN_STEP_BAND[1]
        ):
            flags.append(f"{method}-outside-band")
    for method in ("am-qis", "lbfgs-gd"):
        if method in by_method:
            steps = by_method[method].get("steps_to_precision")
            if steps is None or steps > ACCELERATED_STEP_CAP:
                flags.append(f"{method}>40")
    return flags


def cmd_bench(config: ExperimentConfig, jobs: int) -> int:
    for family in config.families:
        if family not in BENCH_KINDS:
            raise ConfigError(f"bench families must be among {BENCH_KINDS}")
    for n in config.n_qubits:
        if n not in BENCH_SIZES:
            raise ConfigError(f"bench sizes must be among {BENCH_SIZES}")
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tic = time.perf_counter()
    rows = _run_cells(_tasks_for(config, default_tol=config.precision), jobs)
    wall_s = time.perf_counter() - tic

    cells: dict = {}
    for row in rows:
        key = (row["family"], row["n_qubits"], row["seed"])
        cells.setdefault(key, {})[row["method"]] = row

    methods = [m.method for m in config.methods]
    table_rows = []
    any_flagged = False
    for key in sorted(cells):
        family, n, seed = key
        by_method = cells[key]
        flags = _bench_flags(by_method, config.precision)
        any_flagged = any_flagged or bool(flags)
        entry = {
            "instance": f"{n}-qubit-{family}",
            "seed": seed,
            "flags": flags,
        }
        for method in methods:
            r = by_method.get(method, {})
            entry[f"{method}_steps"] = r.get("steps_to_precision")
            entry[f"{method}_wall_ms"] = r.get("wall_ms")
            entry[f"{method}_final_gap"] = r.get("final_gap")
        table_rows.append(entry)

    csv_path = out_dir / "bench_table.csv"
    headers = ["instance", "seed"]
    for method in methods:
        headers += [f"{method}_steps", f"{method}_wall_ms", f"{method}_final_gap"]
    headers.append("flags")
    lines = [",".join(headers)]
    for entry in table_rows:
        cellvals = [entry["instance"], str(entry["seed"])]
        for method in methods:
            steps = entry[f"{method}_steps"]
            wall = entry[f"{method}_wall_ms"]
            gap = entry[f"{method}_final_gap"]
            cellvals.append("" if steps is None else str(steps))
            cellvals.append("" if wall is None else f"{wall:.1f}")
            cellvals.append("" if gap is None else repr(gap))
        cellvals.append(";".join(entry["flags"]))
        lines.append(",".join(cellvals))
    csv_path.write_text("\n".join(lines) + "\n")

    width = max(len(e["instance"]) for e in table_rows) + 2
    text = [
        f"steps to gap <= {config.precision:g} (flags appended)",
        "".join(
            [f"{'instance':<{width}}"] + [f"{m:>12}" for m in methods] + ["  flags"]
        ),
    ]
    for entry in table_rows:
        cellvals = [f"{entry['instance']:<{width}}"]
        for method in methods:
            steps = entry[f"{method}_steps"]
            cellvals.append(f"{'-' if steps is None else steps:>12}")
        cellvals.append("  " + (";".join(entry["flags"]) or "ok"))
        text.append("".join(cellvals))
    text.append(f"total wall time: {wall_s:.1f} s")
    (out_dir / "bench_table.txt").write_text("\n".join(text) + "\n")
    print("\n".join(text))
    print(f"table files in {out_dir}")
    return 1 if any_flagged else 0


def default_bench_config(out_dir: str) -> ExperimentConfig:
    return ExperimentConfig(
        families=BENCH_KINDS,
        n_qubits=BENCH_SIZES,
        seeds=(DEFAULT_SEED,),
        methods=tuple(MethodSpec(method=m) for m in ALL_METHODS),
        out_dir=out_dir,
    )


def default_solve_config(out_dir: str) -> ExperimentConfig:
    return ExperimentConfig(
        families=("ising",),
        n_qubits=(4,),
        seeds=(DEFAULT_SEED,),
        methods=tuple(MethodSpec(method=m) for m in ALL_METHODS),
        out_dir=out_dir,
    )


def default_diagnose_config(out_dir: str) -> ExperimentConfig:
    return ExperimentConfig(
        families=("local1d",),
        n_qubits=(3,),
        seeds=(DEFAULT_SEED,),
        methods=(MethodSpec(method="qis"),),
        out_dir=out_dir,
    )


def _setup_logging():
    level_name = os.environ.get("MAXENT_LOG", "off").lower()
    levels = {
        "off": logging.CRITICAL,
        "info": logging.INFO,
        "debug": logging.DEBUG,
    }
    if level_name not in levels:
        level_name = "off"
    logging.basicConfig(
        level=levels[level_name],
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmaxent",
        description="maximum-entropy Gibbs inference benchmarks and diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "run solvers and record traces"),
        ("diagnose", "verify the convergence theory at the solved point"),
        ("bench", "reproduce the step-count table over the benchmark grid"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="JSON experiment configuration")
        p.add_argument("--out", type=Path, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="single seed (overrides config)")
        p.add_argument(
            "--precision",
            type=float,
            help="step-count precision target (overrides config)",
        )
        p.add_argument(
            "--jobs", type=int, default=1, help="parallel experiment cells"
        )
    return parser


_blas_limiter = None


def _pin_blas_threads():
    # single-threaded LAPACK is faster at these matrix sizes (measured);
    # parallelism comes from --jobs instead
    global _blas_limiter
    try:
        import threadpoolctl

        _blas_limiter = threadpoolctl.threadpool_limits(limits=1)
    except ImportError:  # pragma: no cover - sklearn ships threadpoolctl
        pass


def main(argv=None) -> int:
    _setup_logging()
    _pin_blas_threads()
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            raw = json.loads(Path(args.config).read_text())
            config = parse_config(raw)
        else:
            default = {
                "solve": default_solve_config,
                "diagnose": default_diagnose_config,
                "bench": default_bench_config,
            }[args.command]
            config = default("results")
        if args.out is not None:
            config = dataclasses.replace(config, out_dir=str(args.out))
        if args.seed is not None:
            config = dataclasses.replace(config, seeds=(args.seed,))
        if args.precision is not None:
            config = dataclasses.replace(config, precision=args.precision)
        command = {
            "solve": cmd_solve,
            "diagnose": cmd_diagnose,
            "bench": cmd_bench,
        }[args.command]
        return command(config, jobs=max(1, args.jobs))
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
