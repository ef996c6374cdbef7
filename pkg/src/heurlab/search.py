"""Best-first search engine with duplicate detection and node reopening.

The engine expands the frontier node with the smallest f = g + h (unit edge
costs, exact float comparison). A child is admitted to the tree iff no node
with the same state exists in frontier-union-closed, or one exists with
strictly greater f; the admitted child supersedes it, and a superseded closed
node may be re-expanded, which keeps solutions optimal under admissible but
inconsistent heuristics. The goal test happens at selection, not generation.

``closed_length`` counts selection steps that entered the closed list; the
terminal goal selection returns before being closed, so with an exact oracle
heuristic and larger-g tie-breaking it equals the optimal plan length.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from heapq import heappop, heappush
from typing import Optional

from . import domains


class Status(Enum):
    SOLUTION_FOUND = "solution_found"
    FRONTIER_EXHAUSTED = "frontier_exhausted"
    LIMIT_EXCEEDED = "limit_exceeded"


class TieBreak(Enum):
    """How f-ties are ordered: deeper-first/LIFO or shallower-first/FIFO."""

    LARGER_G = "larger_g"
    SMALLER_G = "smaller_g"


@dataclass
class SearchLimits:
    max_iterations: int | None = None  # cap on closed_length
    max_wall_time: float | None = None  # seconds

    def __post_init__(self):
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if self.max_wall_time is not None and self.max_wall_time <= 0:
            raise ValueError("max_wall_time must be positive")


class SearchNode:
    __slots__ = ("state", "key", "g", "h", "f", "parent", "seq")

    def __init__(self, state, key: bytes, g: int, h: float, parent: Optional["SearchNode"], seq: int):
        self.state = state
        self.key = key
        self.g = g
        self.h = h
        self.f = g + h
        self.parent = parent
        self.seq = seq


@dataclass
class SearchResult:
    status: Status
    path: list = field(default_factory=list)  # states start..goal when solved
    path_length: int = 0  # moves
    closed_length: int = 0
    expansions: int = 0
    heuristic_calls: int = 0
    wall_time: float = 0.0

    @property
    def solved(self) -> bool:
        return self.status is Status.SOLUTION_FOUND


class HeuristicEvaluator:
    """Batch heuristic interface consumed by the engine.

    ``shareable`` marks evaluators safe to reuse across concurrent searches.
    ``cacheable`` lets the engine reuse a state's value within one search, so
    each distinct state is evaluated at most once; evaluators whose value is
    not a pure function of the state opt out.
    """

    shareable: bool = True
    cacheable: bool = True

    def evaluate_batch(self, states, instance, gs) -> list[float]:
        raise NotImplementedError


class QuickHeuristic(HeuristicEvaluator):
    def evaluate_batch(self, states, instance, gs):
        return [float(domains.quick_heuristic(s, instance)) for s in states]


class ZeroHeuristic(HeuristicEvaluator):
    """Degenerates A* to uniform-cost search; useful as an informativeness floor."""

    def evaluate_batch(self, states, instance, gs):
        return [0.0] * len(states)


def reconstruct_path(node: SearchNode) -> list:
    """States from the root to ``node``; length is g(node) + 1."""
    path = []
    while node is not None:
        path.append(node.state)
        node = node.parent
    path.reverse()
    return path


def astar(
    instance: domains.PuzzleInstance,
    heuristic: HeuristicEvaluator,
    limits: SearchLimits | None = None,
    tie_break: TieBreak = TieBreak.LARGER_G,
) -> SearchResult:
    """Solve ``instance``; exhaustion and limits are ordinary results, not errors."""
    t0 = time.perf_counter()
    limits = limits or SearchLimits()
    use_cache = getattr(heuristic, "cacheable", True)
    h_seen: dict[bytes, float] = {}
    heuristic_calls = 0

    def evaluate(states, keys, g):
        nonlocal heuristic_calls
        # One evaluator call per expansion, covering the not-yet-seen children.
        if use_cache:
            miss = [(s, k) for s, k in zip(states, keys) if k not in h_seen]
            if miss:
                values = heuristic.evaluate_batch([s for s, _ in miss], instance, [g] * len(miss))
                heuristic_calls += len(miss)
                for (_, k), v in zip(miss, values):
                    h_seen[k] = float(v)
            return [h_seen[k] for k in keys]
        values = heuristic.evaluate_batch(list(states), instance, [g] * len(states))
        heuristic_calls += len(states)
        return [float(v) for v in values]

    if tie_break is TieBreak.LARGER_G:
        entry = lambda node: (node.f, -node.g, -node.seq, node)
    else:
        entry = lambda node: (node.f, node.g, node.seq, node)

    start = instance.start_state
    start_key = domains.state_key(start)
    h0 = evaluate([start], [start_key], 0)[0]
    root = SearchNode(start, start_key, 0, h0, None, 0)
    best: dict[bytes, SearchNode] = {start_key: root}
    heap = [entry(root)]
    closed = 0
    expansions = 0
    next_seq = 1

    def result(status, node=None):
        wall = time.perf_counter() - t0
        if node is None:
            return SearchResult(status, [], 0, closed, expansions, heuristic_calls, wall)
        return SearchResult(status, reconstruct_path(node), node.g, closed, expansions, heuristic_calls, wall)

    while heap:
        node = heappop(heap)[-1]
        if best.get(node.key) is not node:
            continue  # superseded by a cheaper duplicate; lazy deletion
        if domains.is_goal(node.state, instance):
            return result(Status.SOLUTION_FOUND, node)
        if limits.max_iterations is not None and closed >= limits.max_iterations:
            return result(Status.LIMIT_EXCEEDED)
        if limits.max_wall_time is not None and time.perf_counter() - t0 > limits.max_wall_time:
            return result(Status.LIMIT_EXCEEDED)
        closed += 1
        expansions += 1
        g_child = node.g + 1
        children = domains.successors(node.state, instance)
        states = [s for _, s in children]
        keys = [domains.state_key(s) for s in states]
        hs = evaluate(states, keys, g_child)
        for s, k, h in zip(states, keys, hs):
            f = g_child + h
            existing = best.get(k)
            if existing is not None and f >= existing.f:
                continue
            child = SearchNode(s, k, g_child, h, node, next_seq)
            next_seq += 1
            best[k] = child  # supersedes a frontier twin or reopens a closed state
            heappush(heap, entry(child))
    return result(Status.FRONTIER_EXHAUSTED)
