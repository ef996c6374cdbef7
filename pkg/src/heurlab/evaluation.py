"""Reference solves, search-efficiency metrics, and experiment runs.

Metrics compare a candidate heuristic's solves against quick-heuristic
references on the same instances:

  ILR        mean of S_ref / S_run (higher = fewer iterations than reference)
  SWC        mean of plan_ref / plan_run with unsolved instances scoring 0
  ITR        mean of wall_ref / wall_run
  Optimal%   share of instances solved at the reference plan length

ILR/ITR come in two flavours: on-solved averages over solved instances,
on-optimal restricts further to optimally solved ones.
"""

from __future__ import annotations

import csv
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .domains import PuzzleInstance
from .search import HeuristicEvaluator, QuickHeuristic, SearchLimits, SearchResult, TieBreak, astar
from .util import content_hash, write_jsonl


@dataclass(frozen=True)
class ReferenceSolution:
    instance_id: str
    closed_length: int
    plan_length: int
    wall_time: float


@dataclass
class MetricsReport:
    ilr_on_solved: float
    ilr_on_optimal: float
    swc: float
    optimal_pct: float
    itr_on_solved: float
    itr_on_optimal: float
    n_total: int
    n_solved: int
    n_optimal: int
    rows: list[dict] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "ilr_on_solved": self.ilr_on_solved,
            "ilr_on_optimal": self.ilr_on_optimal,
            "swc": self.swc,
            "optimal_pct": self.optimal_pct,
            "itr_on_solved": self.itr_on_solved,
            "itr_on_optimal": self.itr_on_optimal,
            "n_total": self.n_total,
            "n_solved": self.n_solved,
            "n_optimal": self.n_optimal,
        }


def _solve_task(task):
    instance, evaluator, limits, tie_break = task
    return instance.id, astar(instance, evaluator, limits=limits, tie_break=tie_break)


def solve_all(
    instances: Sequence[PuzzleInstance],
    evaluator_for: Callable[[PuzzleInstance], HeuristicEvaluator],
    limits: SearchLimits | None = None,
    tie_break: TieBreak = TieBreak.LARGER_G,
    jobs: int = 1,
) -> dict[str, SearchResult]:
    """Solve every instance; evaluators are built in-process, solves may fan
    out to worker processes. Results keyed by instance id."""
    tasks = [(inst, evaluator_for(inst), limits, tie_break) for inst in instances]
    if jobs <= 1 or len(tasks) <= 1:
        pairs = [_solve_task(t) for t in tasks]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            pairs = list(pool.map(_solve_task, tasks, chunksize=8))
    return dict(pairs)


def compute_references(
    instances: Sequence[PuzzleInstance],
    limits: SearchLimits | None = None,
    tie_break: TieBreak = TieBreak.LARGER_G,
    jobs: int = 1,
) -> tuple[dict[str, ReferenceSolution], list[str]]:
    """Quick-heuristic reference solves. Returns (references, unsolved ids)."""
    results = solve_all(instances, lambda inst: QuickHeuristic(), limits=limits, tie_break=tie_break, jobs=jobs)
    references = {}
    failed = []
    for inst in instances:
        res = results[inst.id]
        if res.solved:
            references[inst.id] = ReferenceSolution(inst.id, res.closed_length, res.path_length, res.wall_time)
        else:
            failed.append(inst.id)
    return references, failed


def reference_records(references: Mapping[str, ReferenceSolution]) -> list[dict]:
    return [
        {
            "instance_id": ref.instance_id,
            "closed_length": ref.closed_length,
            "plan_length": ref.plan_length,
            "wall_time": ref.wall_time,
        }
        for _, ref in sorted(references.items())
    ]


def references_from_records(records: Iterable[dict]) -> dict[str, ReferenceSolution]:
    return {
        rec["instance_id"]: ReferenceSolution(
            rec["instance_id"], rec["closed_length"], rec["plan_length"], rec["wall_time"]
        )
        for rec in records
    }


def compute_metrics(results: Mapping[str, SearchResult], references: Mapping[str, ReferenceSolution]) -> MetricsReport:
    """Aggregate one run against references. Instances missing a reference are
    reported as error rows and excluded from every aggregate. Means over empty
    sets are reported as 0.0."""
    rows = []
    errors = []
    ilr_solved = []
    ilr_optimal = []
    itr_solved = []
    itr_optimal = []
    swc_total = 0.0
    n_total = 0
    n_solved = 0
    n_optimal = 0
    for instance_id in sorted(results):
        result = results[instance_id]
        ref = references.get(instance_id)
        if ref is None:
            errors.append({"instance_id": instance_id, "error": "missing_reference"})
            continue
        n_total += 1
        row = {
            "instance_id": instance_id,
            "status": result.status.value,
            "s_ref": ref.closed_length,
            "s_run": result.closed_length,
            "plan_ref": ref.plan_length,
            "plan_run": result.path_length if result.solved else None,
            "wall_ref": ref.wall_time,
            "wall_run": result.wall_time,
            "ilr": None,
            "swc": 0.0,
            "itr": None,
            "optimal": False,
        }
        if result.solved:
            n_solved += 1
            # Both solves share the goal-test-at-selection rule, so a zero
            # closed length means start == goal for the reference too.
            ilr = ref.closed_length / result.closed_length if result.closed_length else 1.0
            itr = ref.wall_time / result.wall_time
            swc = ref.plan_length / result.path_length if result.path_length else 1.0
            row.update(ilr=ilr, itr=itr, swc=swc)
            swc_total += swc
            ilr_solved.append(ilr)
            itr_solved.append(itr)
            if result.path_length == ref.plan_length:
                n_optimal += 1
                row["optimal"] = True
                ilr_optimal.append(ilr)
                itr_optimal.append(itr)
        rows.append(row)

    def mean(values):
        return sum(values) / len(values) if values else 0.0

    return MetricsReport(
        ilr_on_solved=mean(ilr_solved),
        ilr_on_optimal=mean(ilr_optimal),
        swc=swc_total / n_total if n_total else 0.0,
        optimal_pct=100.0 * n_optimal / n_total if n_total else 0.0,
        itr_on_solved=mean(itr_solved),
        itr_on_optimal=mean(itr_optimal),
        n_total=n_total,
        n_solved=n_solved,
        n_optimal=n_optimal,
        rows=rows,
        errors=errors,
    )


@dataclass
class ExperimentOutcome:
    per_seed: list[tuple[int, MetricsReport]]
    aggregate: dict
    manifest: dict


def run_experiment(
    instances: Sequence[PuzzleInstance],
    references: Mapping[str, ReferenceSolution],
    evaluator_for: Callable[[PuzzleInstance, int], HeuristicEvaluator],
    seeds: Sequence[int],
    limits: SearchLimits | None = None,
    tie_break: TieBreak = TieBreak.LARGER_G,
    jobs: int = 1,
    config: dict | None = None,
) -> ExperimentOutcome:
    """Solve all instances once per seed and aggregate mean/std across seeds."""
    per_seed = []
    for seed in seeds:
        results = solve_all(
            instances, lambda inst: evaluator_for(inst, seed), limits=limits, tie_break=tie_break, jobs=jobs
        )
        per_seed.append((seed, compute_metrics(results, references)))
    keys = ["ilr_on_solved", "ilr_on_optimal", "swc", "optimal_pct", "itr_on_solved", "itr_on_optimal"]
    aggregate = {}
    for key in keys:
        values = [getattr(report, key) for _, report in per_seed]
        m = sum(values) / len(values)
        var = sum((v - m) ** 2 for v in values) / len(values)
        aggregate[key] = m
        aggregate[key + "_std"] = var**0.5
    manifest = {
        "config_hash": content_hash(config or {}),
        "inputs_hash": content_hash([inst.id for inst in instances]),
        "n_instances": len(instances),
        "seeds": list(seeds),
        "python": sys.version.split()[0],
        "platform": platform.platform(),
    }
    return ExperimentOutcome(per_seed=per_seed, aggregate=aggregate, manifest=manifest)


# ---------------------------------------------------------------------------
# Report files: per-instance rows, an aggregate summary, and a manifest.

def write_rows_csv(rows: Sequence[dict], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        path.write_text("", encoding="utf-8")
        return
    fields = list(rows[0].keys())
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def read_rows_csv(path: str | Path) -> list[dict]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def write_report(report: MetricsReport, out_dir: str | Path, name: str, manifest: dict | None = None) -> None:
    out_dir = Path(out_dir)
    write_rows_csv(report.rows, out_dir / f"{name}_results.csv")
    write_rows_csv([report.summary()], out_dir / f"{name}_summary.csv")
    records = [{"kind": "summary", **report.summary()}]
    if manifest:
        records.insert(0, {"kind": "manifest", **manifest})
    if report.errors:
        records.extend({"kind": "error", **err} for err in report.errors)
    write_jsonl(out_dir / f"{name}_manifest.jsonl", records)
