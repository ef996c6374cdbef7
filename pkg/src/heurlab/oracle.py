"""Exact distance oracles and the section-targeted noise study.

The study perturbs an exact distance-to-goal table with per-state Gaussian
noise in two of the three path sections (by depth thirds) while keeping the
oracle exact in the remaining one, then compares search metrics across which
section stays exact.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from . import domains
from .domains import Domain, MazeState, PuzzleInstance
from .search import HeuristicEvaluator, SearchLimits, TieBreak, astar
from .util import unit_normal


class SectionLabel(str, Enum):
    INITIAL = "initial"
    MIDDLE = "middle"
    END = "end"


ALL_SECTIONS = frozenset(SectionLabel)


def section_of(g: int, plan_len: int) -> SectionLabel:
    """Classify a node by depth thirds: initial < 1/3 <= middle < 2/3 <= end."""
    if plan_len <= 0:
        raise ValueError("plan_len must be positive")
    if g < 0:
        raise ValueError("g must be nonnegative")
    if g < plan_len / 3:
        return SectionLabel.INITIAL
    if g < 2 * plan_len / 3:
        return SectionLabel.MIDDLE
    return SectionLabel.END


class UnsupportedDomainError(ValueError):
    pass


def oracle_distances(instance: PuzzleInstance) -> dict[bytes, int]:
    """Exact distance-to-goal for every reachable cell, keyed by state key.

    Unit-cost Dijkstra expanding outward from the goal; only mazes have a
    small enough reversible state space for a full table.
    """
    if instance.domain is not Domain.MAZE:
        raise UnsupportedDomainError(f"exact oracle tables only cover mazes, not {instance.domain.value}")
    walls = instance.board.walls
    h, w = instance.board.height, instance.board.width
    goal = instance.goal_spec
    dist: dict[tuple[int, int], int] = {goal: 0}
    heap = [(0, goal)]
    while heap:
        d, (r, c) = heapq.heappop(heap)
        if d > dist[(r, c)]:
            continue
        for _, (dr, dc) in domains.DIRECTIONS:
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and not walls[nr][nc]:
                nd = d + 1
                if nd < dist.get((nr, nc), nd + 1):
                    dist[(nr, nc)] = nd
                    heapq.heappush(heap, (nd, (nr, nc)))
    return {MazeState(cell).key(): d for cell, d in dist.items()}


def _parse_sections(sections) -> frozenset[SectionLabel]:
    if isinstance(sections, str):
        if sections.lower() == "all":
            return ALL_SECTIONS
        sections = [sections]
    if isinstance(sections, SectionLabel):
        sections = [sections]
    out = frozenset(SectionLabel(s) for s in sections)
    if not out:
        raise ValueError("oracle_sections must name at least one section")
    return out


@dataclass(frozen=True)
class NoiseSpec:
    """Which sections keep the exact oracle, and how the rest are perturbed."""

    sigma: float
    oracle_sections: object = "all"  # section name(s) or "all"
    noise_seed: int = 0
    clamp_at_zero: bool = True
    per_query: bool = False  # redraw noise on every query instead of per state

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        object.__setattr__(self, "oracle_sections", _parse_sections(self.oracle_sections))


class NoisyOracle(HeuristicEvaluator):
    """Exact h* inside the NoiseSpec's oracle sections, h* + N(0, sigma) elsewhere.

    Noise is a pure function of (noise_seed, state key), so a state keeps the
    same perturbed value across re-encounters and runs reproduce exactly. The
    per_query switch instead redraws on every evaluation, which also disables
    the engine's per-state reuse. Section classification uses the querying
    node's g against the instance's optimal plan length.
    """

    def __init__(self, instance: PuzzleInstance, spec: NoiseSpec, distances: dict[bytes, int] | None = None):
        self.spec = spec
        self.distances = distances if distances is not None else oracle_distances(instance)
        start_key = domains.state_key(instance.start_state)
        if start_key not in self.distances:
            raise ValueError("start state is not connected to the goal")
        self.plan_len = self.distances[start_key]
        self.cacheable = not spec.per_query
        self._draws = 0
        self.fallback_queries = 0

    def evaluate_batch(self, states, instance, gs):
        spec = self.spec
        exact_everywhere = spec.oracle_sections == ALL_SECTIONS
        out = []
        for state, g in zip(states, gs):
            key = domains.state_key(state)
            d = self.distances.get(key)
            if d is None:
                # Disconnected pocket opened by wall breaking; fall back to the
                # quick heuristic rather than failing the whole solve.
                self.fallback_queries += 1
                out.append(float(domains.quick_heuristic(state, instance)))
                continue
            if exact_everywhere or section_of(g, self.plan_len) in spec.oracle_sections:
                out.append(float(d))
                continue
            draw = 0
            if spec.per_query:
                draw = self._draws
                self._draws += 1
            value = d + spec.sigma * unit_normal(spec.noise_seed, key, draw)
            if spec.clamp_at_zero and value < 0:
                value = 0.0
            out.append(value)
        return out


def exact_oracle(instance: PuzzleInstance, distances: dict[bytes, int] | None = None) -> NoisyOracle:
    return NoisyOracle(instance, NoiseSpec(sigma=0.0, oracle_sections="all"), distances)


def run_oracle_experiment(
    instances: Sequence[PuzzleInstance],
    sigmas: Iterable[float],
    seeds: Iterable[int],
    references=None,
    limits: SearchLimits | None = None,
    tie_break: TieBreak = TieBreak.LARGER_G,
    clamp_at_zero: bool = True,
    per_query: bool = False,
    jobs: int = 1,
):
    """Solve every instance under every (kept-exact section, sigma, seed) mix.

    Returns (rows, details): one aggregate row per table line ("all" first,
    then each sigma by section), and the per-(row, seed) metric reports.
    """
    from .evaluation import compute_metrics, compute_references, solve_all

    sigmas = list(sigmas)
    seeds = list(seeds)
    if references is None:
        references, failed = compute_references(instances, limits=limits, tie_break=tie_break, jobs=jobs)
        if failed:
            raise ValueError(f"{len(failed)} instances lack reference solutions: {failed[:5]}")
    tables = {inst.id: oracle_distances(inst) for inst in instances}

    def metrics_for(evaluator_for):
        results = solve_all(instances, evaluator_for, limits=limits, tie_break=tie_break, jobs=jobs)
        return compute_metrics(results, references)

    rows = []
    details = {}
    exact = metrics_for(lambda inst: exact_oracle(inst, tables[inst.id]))
    details[("all", None, None)] = exact
    rows.append(_row("all", None, [exact]))
    for sigma in sigmas:
        for section in (SectionLabel.INITIAL, SectionLabel.MIDDLE, SectionLabel.END):
            per_seed = []
            for seed in seeds:
                spec = NoiseSpec(
                    sigma=sigma,
                    oracle_sections=section,
                    noise_seed=seed,
                    clamp_at_zero=clamp_at_zero,
                    per_query=per_query,
                )
                report = metrics_for(lambda inst, s=spec: NoisyOracle(inst, s, tables[inst.id]))
                details[(section.value, sigma, seed)] = report
                per_seed.append(report)
            rows.append(_row(section.value, sigma, per_seed))
    return rows, details


def _row(set_name: str, sigma: float | None, reports) -> dict:
    def mean(attr):
        vals = [getattr(r, attr) for r in reports]
        return sum(vals) / len(vals)

    return {
        "set": set_name,
        "sigma": sigma,
        "ilr_on_solved": mean("ilr_on_solved"),
        "ilr_on_optimal": mean("ilr_on_optimal"),
        "swc": mean("swc"),
        "optimal_pct": mean("optimal_pct"),
    }


def ordering_holds(rows: Sequence[dict], margin: float = 0.0) -> bool:
    """True when end > middle > initial on ILR-on-solved for every sigma."""
    by_sigma: dict[float, dict[str, float]] = {}
    for row in rows:
        if row["set"] == "all":
            continue
        by_sigma.setdefault(row["sigma"], {})[row["set"]] = row["ilr_on_solved"]
    if not by_sigma:
        return False
    for sigma, vals in by_sigma.items():
        if not (vals["end"] >= vals["middle"] + margin and vals["middle"] >= vals["initial"] + margin):
            return False
    return True
