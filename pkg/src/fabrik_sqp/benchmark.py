"""Random-query benchmark: success rates and solve-time distributions.

Queries are generated by forward kinematics from joint vectors drawn
uniformly within the joint limits (reachable by construction), solved
under one or more solver modes, and aggregated into per-mode reports
with CSV/JSON exports.
"""
from __future__ import annotations

import json
import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .iktypes import IKQuery, IKResult, IKStatus, SolverConfig
from .robots import RobotModel, forward_kinematics, get_model, pose_mismatch

RNG_NAME = "numpy-pcg64"


@dataclass(frozen=True)
class Mode:
    """One benchmark configuration: combined(n_l) or fabrik(n_max)."""

    kind: str  # "combined" | "fabrik"
    param: int

    def __post_init__(self):
        if self.kind not in ("combined", "fabrik"):
            raise ValueError(f"unknown mode kind {self.kind!r}")
        if self.param < 1:
            raise ValueError("mode parameter must be >= 1")

    @property
    def label(self) -> str:
        return f"{self.kind}:{self.param}"

    def config(self, eps_tol: float) -> SolverConfig:
        if self.kind == "combined":
            return SolverConfig(eps_tol=eps_tol, n_l=self.param, use_optimizer=True)
        return SolverConfig(eps_tol=eps_tol, n_max=self.param, use_optimizer=False)


def parse_mode(text: str) -> Mode:
    kind, _, param = text.partition(":")
    if not param:
        raise ValueError(f"mode {text!r} must look like 'combined:5' or 'fabrik:100'")
    return Mode(kind=kind.strip(), param=int(param))


@dataclass(frozen=True)
class QuerySet:
    robot: str
    seed: int
    queries: tuple  # ((t_des, theta_init), ...)

    def __len__(self) -> int:
        return len(self.queries)


def generate_queries(model: RobotModel, n: int, seed: int) -> QuerySet:
    """n FK-generated poses plus independently drawn initial vectors."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    lo = model.joint_limits[:, 0]
    hi = model.joint_limits[:, 1]
    samples = rng.uniform(lo, hi, size=(n, model.dof))
    inits = rng.uniform(lo, hi, size=(n, model.dof))
    queries = tuple(
        (forward_kinematics(model, samples[i]), inits[i].copy()) for i in range(n)
    )
    return QuerySet(robot=model.name, seed=seed, queries=queries)


@dataclass(frozen=True)
class QueryRecord:
    query_id: int
    status: str
    eps_pos: float
    eps_rot: float
    fabrik_iters: int
    opt_used: bool
    time_seconds: float
    theta: np.ndarray | None


@dataclass
class BenchmarkReport:
    robot: str
    seed: int
    mode: Mode
    eps_tol: float
    records: list[QueryRecord] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.time_seconds for r in self.records])

    @property
    def solved(self) -> int:
        return sum(1 for r in self.records if r.status == IKStatus.SOLVED.value)

    @property
    def success_rate(self) -> float:
        return self.solved / len(self.records)

    @property
    def avg_time(self) -> float:
        return float(np.mean(self.times))

    @property
    def max_time(self) -> float:
        return float(np.max(self.times))


def _record(idx: int, result: IKResult) -> QueryRecord:
    err = result.error
    return QueryRecord(
        query_id=idx,
        status=result.status.value,
        eps_pos=err.eps_pos if err is not None else math.nan,
        eps_rot=err.eps_rot if err is not None else math.nan,
        fabrik_iters=result.fabrik_iterations,
        opt_used=result.optimizer_used,
        time_seconds=result.solve_time,
        theta=result.theta,
    )


def _solve_chunk(args):
    robot, mode, eps_tol, chunk = args
    from . import solve_ik  # local import keeps workers picklable

    model = get_model(robot)
    config = mode.config(eps_tol)
    out = []
    for idx, t_des, theta_init in chunk:
        result = solve_ik(model, IKQuery(t_des=t_des, theta_init=theta_init, config=config))
        out.append(_record(idx, result))
    return out


def run_benchmark(
    model: RobotModel,
    queries: QuerySet,
    modes,
    eps_tol: float = 1e-6,
    workers: int = 1,
) -> list[BenchmarkReport]:
    """Solve every query under every mode; per-query failures are data."""
    reports = []
    indexed = [(i, t, th) for i, (t, th) in enumerate(queries.queries)]
    for mode in modes:
        report = BenchmarkReport(robot=queries.robot, seed=queries.seed, mode=mode, eps_tol=eps_tol)
        if workers <= 1:
            (records,) = [_solve_chunk((queries.robot, mode, eps_tol, indexed))]
        else:
            chunks = [indexed[i::workers] for i in range(workers)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(
                    pool.map(
                        _solve_chunk,
                        [(queries.robot, mode, eps_tol, c) for c in chunks if c],
                    )
                )
            records = [r for part in parts for r in part]
            records.sort(key=lambda r: r.query_id)
        report.records = list(records)
        reports.append(report)
    return reports


def audit_solved(model: RobotModel, queries: QuerySet, report: BenchmarkReport) -> float:
    """Verify every solved query against forward kinematics.

    Returns the worst pose mismatch over the solved set; raises if any
    solved record violates the acceptance threshold.
    """
    worst = 0.0
    for rec in report.records:
        if rec.status != IKStatus.SOLVED.value:
            continue
        t_des, _ = queries.queries[rec.query_id]
        mismatch = pose_mismatch(model, rec.theta, t_des)
        worst = max(worst, mismatch)
        if mismatch > report.eps_tol:
            raise AssertionError(
                f"query {rec.query_id} marked solved but mismatch {mismatch:.3e} "
                f"exceeds {report.eps_tol:.1e}"
            )
    return worst


# --- exports ----------------------------------------------------------------

def export_report_csv(report: BenchmarkReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "query_id",
                "mode",
                "status",
                "eps_pos",
                "eps_rot",
                "fabrik_iters",
                "opt_used",
                "time_seconds",
            ]
        )
        for r in report.records:
            writer.writerow(
                [
                    r.query_id,
                    report.mode.label,
                    r.status,
                    f"{r.eps_pos:.17g}",
                    f"{r.eps_rot:.17g}",
                    r.fabrik_iters,
                    int(r.opt_used),
                    f"{r.time_seconds:.17g}",
                ]
            )


def export_summary_json(report: BenchmarkReport, path) -> None:
    doc = {
        "mode": report.mode.label,
        "robot": report.robot,
        "success_rate": report.success_rate,
        "avg_time_s": report.avg_time,
        "n": len(report.records),
        "seed": report.seed,
        "rng": RNG_NAME,
        "eps_tol": report.eps_tol,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def export_time_distribution(report: BenchmarkReport, path) -> None:
    """Per-query times plus min/q1/median/q3/max summary rows."""
    if not report.records:
        raise ValueError("cannot export an empty report")
    times = report.times
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "mode", "time_seconds", "log10_time"])
        for r in report.records:
            writer.writerow(
                [
                    r.query_id,
                    report.mode.label,
                    f"{r.time_seconds:.17g}",
                    f"{math.log10(r.time_seconds):.17g}",
                ]
            )
        stats = {
            "min": float(np.min(times)),
            "q1": float(np.percentile(times, 25)),
            "median": float(np.median(times)),
            "q3": float(np.percentile(times, 75)),
            "max": float(np.max(times)),
        }
        for name, value in stats.items():
            writer.writerow([name, report.mode.label, f"{value:.17g}", f"{math.log10(value):.17g}"])
