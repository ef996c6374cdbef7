"""Instance generators: Prim's mazes with broken walls, boxoban ingestion,
sliding-tile permutations and scrambles, plus difficulty filtering.

Every generator draws from an RNG derived from (master seed, instance index),
so split construction is reproducible and embarrassingly parallel.
"""

from __future__ import annotations

import dataclasses
import math
import random
import string
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import domains
from .domains import Domain, ParseError, PuzzleInstance
from .domains.base import DIRECTIONS, MazeBoard, MazeState, OPPOSITE_ACTION, SokobanBoard, SokobanState, freeze_grid
from .search import QuickHeuristic, SearchLimits, SearchResult, astar
from .util import derive_seed, read_jsonl, write_jsonl

GENERATION_CAP = 1000  # fresh boards per requested instance before giving up

_QUICK = QuickHeuristic()


class GenerationExhausted(RuntimeError):
    """No instance satisfying the filter within the generation cap."""


@dataclass(frozen=True)
class GenFilter:
    """Difficulty gate: plan length, closed-to-plan ratio, iteration window."""

    o_l: int = 0  # accepted iff optimal plan length > o_l
    alpha: float = 0.0  # accepted iff closed_length / plan_length > alpha
    beta_min: int | None = None  # inclusive bounds on solve iterations
    beta_max: int | None = None
    retries: int = 10  # start/goal (or subset) resamples before a fresh board

    def __post_init__(self):
        if self.o_l < 0 or self.alpha < 0 or self.retries < 1:
            raise ValueError("filter parameters out of range")
        if self.beta_min is not None and self.beta_max is not None and self.beta_min > self.beta_max:
            raise ValueError("beta_min exceeds beta_max")

    def search_limits(self) -> SearchLimits:
        return SearchLimits(max_iterations=self.beta_max)

    def accepts(self, result: SearchResult) -> bool:
        if not result.solved or result.path_length <= self.o_l:
            return False
        if result.closed_length <= self.alpha * result.path_length:
            return False
        if self.beta_min is not None and result.closed_length < self.beta_min:
            return False
        if self.beta_max is not None and result.closed_length > self.beta_max:
            return False
        return True


def _filter_provenance(filt: GenFilter, result: SearchResult) -> dict:
    return {
        "o_l": filt.o_l,
        "alpha": filt.alpha,
        "beta_min": filt.beta_min,
        "beta_max": filt.beta_max,
        "plan_length": result.path_length,
        "closed_length": result.closed_length,
        "wall_time": result.wall_time,
    }


# ---------------------------------------------------------------------------
# Maze

def _odd(n: int) -> int:
    return n if n % 2 else n + 1


def _prims_lattice(height: int, width: int, rng: random.Random) -> list[list[bool]]:
    """Perfect maze via randomized Prim's on the odd-coordinate room lattice."""
    walls = [[True] * width for _ in range(height)]
    rooms = [(r, c) for r in range(1, height - 1, 2) for c in range(1, width - 1, 2)]
    first = rooms[rng.randrange(len(rooms))]
    walls[first[0]][first[1]] = False
    frontier: list[tuple[tuple[int, int], tuple[int, int]]] = []

    def add_walls(room):
        r, c = room
        for dr, dc in ((-2, 0), (2, 0), (0, -2), (0, 2)):
            nr, nc = r + dr, c + dc
            if 1 <= nr < height - 1 and 1 <= nc < width - 1:
                frontier.append(((r + dr // 2, c + dc // 2), (nr, nc)))

    add_walls(first)
    while frontier:
        wall, room = frontier.pop(rng.randrange(len(frontier)))
        if walls[room[0]][room[1]]:
            walls[wall[0]][wall[1]] = False
            walls[room[0]][room[1]] = False
            add_walls(room)
    return walls


def _break_boundary_walls(walls: list[list[bool]], start, goal, rng: random.Random, prob: float = 0.2) -> int:
    """Open a random subset of walls between the closer-to-start and
    closer-to-goal regions, guaranteeing at least one extra opening.

    A perfect maze has exactly one start-goal path; labelling every open cell
    by which endpoint is nearer and then piercing the boundary between the two
    regions adds alternative routes without touching the border ring.
    """
    ds = domains.maze.bfs_distances(walls, start)
    dg = domains.maze.bfs_distances(walls, goal)
    height, width = len(walls), len(walls[0])
    candidates = []
    for r in range(1, height - 1):
        for c in range(1, width - 1):
            if not walls[r][c]:
                continue
            for (ar, ac), (br, bc) in (((r - 1, c), (r + 1, c)), ((r, c - 1), (r, c + 1))):
                if walls[ar][ac] or walls[br][bc]:
                    continue
                if (ar, ac) not in ds or (br, bc) not in ds:
                    continue
                if (ds[(ar, ac)] <= dg[(ar, ac)]) != (ds[(br, bc)] <= dg[(br, bc)]):
                    candidates.append((r, c))
                break
    chosen = [cell for cell in candidates if rng.random() < prob]
    if candidates and not chosen:
        chosen = [candidates[rng.randrange(len(candidates))]]
    for r, c in chosen:
        walls[r][c] = False
    return len(chosen)


def generate_maze(width: int, height: int, filt: GenFilter, seed: int, id: str = "") -> PuzzleInstance:
    """One filtered maze instance. Board dims round up to odd so the interior
    keeps the room/wall lattice; the border ring is always walled."""
    grid_h, grid_w = _odd(height), _odd(width)
    if grid_h - 2 < 5 or grid_w - 2 < 5:
        raise ValueError(f"maze interior must be at least 5x5, got {grid_h - 2}x{grid_w - 2}")
    rng = random.Random(seed)
    for _ in range(GENERATION_CAP):
        base = _prims_lattice(grid_h, grid_w, rng)
        open_cells = [(r, c) for r in range(grid_h) for c in range(grid_w) if not base[r][c]]
        for _ in range(filt.retries):
            start, goal = rng.sample(open_cells, 2)
            grid = [row[:] for row in base]
            broken = _break_boundary_walls(grid, start, goal, rng)
            instance = PuzzleInstance(
                domain=Domain.MAZE,
                board=MazeBoard(freeze_grid(grid)),
                start_state=MazeState(start),
                goal_spec=goal,
                id=id,
                seed=seed,
            )
            result = astar(instance, _QUICK, limits=filt.search_limits())
            if filt.accepts(result):
                instance.provenance.update(_filter_provenance(filt, result))
                instance.provenance["broken_walls"] = broken
                return instance
    raise GenerationExhausted(f"no maze met the filter within {GENERATION_CAP} boards (seed {seed})")


# ---------------------------------------------------------------------------
# Sokoban

def load_boxoban(path: str | Path) -> list[PuzzleInstance]:
    """Parse a boxoban-layout file: ``; <index>`` header lines, then 10 board rows."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    puzzles = []
    i = 0
    while i < len(lines):
        line = lines[i]
        if not line.strip():
            i += 1
            continue
        if not line.startswith(";"):
            raise ParseError(f"expected '; <index>' header, got {line!r}", line=i + 1)
        try:
            index = int(line[1:].strip())
        except ValueError:
            raise ParseError(f"bad puzzle index {line!r}", line=i + 1) from None
        rows = lines[i + 1 : i + 11]
        if len(rows) < 10:
            raise ParseError(f"puzzle {index} has {len(rows)} rows, expected 10", line=i + 1)
        # Corpus files may write box-on-dock as '*' and player-on-dock as '+'.
        text = "\n".join(rows).translate({ord("*"): "X", ord("+"): "O"})
        try:
            instance = domains.sokoban.parse_ascii(text)
        except ParseError as exc:
            raise ParseError(f"puzzle {index}: {exc}", line=i + 2) from None
        puzzles.append(
            dataclasses.replace(
                instance,
                id=f"boxoban-{index:06d}",
                provenance={"source": str(path), "index": index},
            )
        )
        i += 11
    return puzzles


def subsample_boxes(instance: PuzzleInstance, boxes: int, seed: int, filt: GenFilter | None = None) -> PuzzleInstance:
    """Keep a seeded random subset of B boxes and B docks; when a filter is
    given, retry with fresh subsets until the reduced instance passes."""
    state = instance.start_state
    if boxes < 1 or boxes > len(state.boxes) or boxes > len(instance.board.docks):
        raise ValueError(f"cannot keep {boxes} of {len(state.boxes)} boxes / {len(instance.board.docks)} docks")
    rng = random.Random(seed)
    attempts = filt.retries if filt is not None else 1
    last = None
    for _ in range(attempts):
        kept_boxes = tuple(sorted(rng.sample(state.boxes, boxes)))
        kept_docks = tuple(sorted(rng.sample(instance.board.docks, boxes)))
        board = SokobanBoard(instance.board.walls, kept_docks)
        candidate = PuzzleInstance(
            domain=Domain.SOKOBAN,
            board=board,
            start_state=SokobanState(state.player, kept_boxes),
            goal_spec=kept_docks,
            id=instance.id,
            seed=seed,
            provenance=dict(instance.provenance),
        )
        if filt is None:
            return candidate
        result = astar(candidate, _QUICK, limits=filt.search_limits())
        if filt.accepts(result):
            candidate.provenance.update(_filter_provenance(filt, result))
            return candidate
        last = candidate
    raise GenerationExhausted(f"no {boxes}-box subset of {instance.id or 'instance'} met the filter")


# ---------------------------------------------------------------------------
# Sliding-tile puzzle

def stp_is_solvable(tiles: Sequence[int], width: int) -> bool:
    """Parity test against the canonical goal (0, 1, ..., n-1).

    Odd width: the inversion count over non-blank tiles must be even. Even
    width: inversions plus the blank's row index from the bottom must be odd.
    """
    seq = [t for t in tiles if t != 0]
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    if width % 2 == 1:
        return inversions % 2 == 0
    blank_row_from_bottom = width - 1 - tiles.index(0) // width
    return (inversions + blank_row_from_bottom) % 2 == 1


def _scramble(width: int, moves: int, rng: random.Random):
    """Random legal walk from the goal, never undoing the previous move."""
    instance = domains.stp.make_instance(range(width * width), width)
    state = instance.start_state
    last = None
    for _ in range(moves):
        options = [(a, s) for a, s in domains.stp.successors(state, instance) if a != last]
        action, state = options[rng.randrange(len(options))]
        last = OPPOSITE_ACTION[action]
    return state.tiles


def generate_stp(width: int, filt: GenFilter, seed: int, id: str = "",
                 scramble_range: tuple[int, int] = (20, 30)) -> PuzzleInstance:
    """3x3 boards draw uniform solvable permutations; wider boards scramble
    the goal with 20-30 seeded random moves."""
    if width < 3:
        raise ValueError("width must be at least 3")
    rng = random.Random(seed)
    for _ in range(GENERATION_CAP):
        if width == 3:
            tiles = list(range(9))
            rng.shuffle(tiles)
            if not stp_is_solvable(tiles, width):
                continue
            provenance = {"method": "permutation"}
        else:
            moves = rng.randint(*scramble_range)
            tiles = _scramble(width, moves, rng)
            provenance = {"method": "scramble", "scramble_moves": moves}
        instance = domains.stp.make_instance(tiles, width, id=id, seed=seed, provenance=provenance)
        result = astar(instance, _QUICK, limits=filt.search_limits())
        if filt.accepts(result):
            instance.provenance.update(_filter_provenance(filt, result))
            return instance
    raise GenerationExhausted(f"no {width}x{width} sliding-tile instance met the filter (seed {seed})")


def remap_stp_symbols(instance: PuzzleInstance, seed: int) -> tuple[dict[int, str], tuple[str, str]]:
    """Per-instance alphabet for exported boards: sample w*w-1 distinct lowercase
    letters, sort them, assign ascending to digits 1..; the blank stays "0".

    Returns the symbol table plus (puzzle_str, goal_str) renderings.
    """
    width = instance.board.width
    table = stp_symbol_table(width, seed)
    puzzle = render_stp_with_table(instance.start_state.tiles, table)
    goal = render_stp_with_table(instance.goal_spec, table)
    return table, (puzzle, goal)


def stp_symbol_table(width: int, seed: int) -> dict[int, str]:
    count = width * width - 1
    if count > len(string.ascii_lowercase):
        raise ValueError(f"board needs {count} symbols, alphabet has {len(string.ascii_lowercase)}")
    rng = random.Random(seed)
    letters = sorted(rng.sample(string.ascii_lowercase, count))
    table = {0: "0"}
    for digit, letter in enumerate(letters, start=1):
        table[digit] = letter
    return table


def render_stp_with_table(tiles: Sequence[int], table: dict[int, str]) -> str:
    return " ".join(table[t] for t in tiles)


# ---------------------------------------------------------------------------
# Split catalogues (counts and parameters at scale 1.0)

@dataclass(frozen=True)
class SplitSpec:
    """One homogeneous block of a split: count plus domain parameters."""

    count: int
    size: int = 0  # board width/height (maze) or width (stp)
    boxes: int = 0  # sokoban box count B
    filt: GenFilter = GenFilter()


MAZE_FILTER = GenFilter(o_l=20, alpha=3.5)
MAZE_OOD_FILTER = GenFilter(o_l=30, alpha=3.5)

MAZE_SPLITS: dict[str, tuple[SplitSpec, ...]] = {
    "train": (SplitSpec(750, size=20, filt=MAZE_FILTER),),
    "val": (SplitSpec(750, size=20, filt=MAZE_FILTER),),
    "test_iid": (SplitSpec(500, size=20, filt=MAZE_FILTER),),
    "test_ood": (SplitSpec(500, size=30, filt=MAZE_OOD_FILTER),),
}

def _sokoban_filter(beta_min: int, beta_max: int) -> GenFilter:
    return GenFilter(o_l=20, alpha=6.0, beta_min=beta_min, beta_max=beta_max)


SOKOBAN_SPLITS: dict[str, tuple[SplitSpec, ...]] = {
    "train": (SplitSpec(1000, boxes=2, filt=_sokoban_filter(0, 7000)),),
    "val": (SplitSpec(1000, boxes=2, filt=_sokoban_filter(0, 7000)),),
    "test_iid": (SplitSpec(284, boxes=2, filt=_sokoban_filter(0, 7000)),),
    "test_ood": (
        SplitSpec(15, boxes=2, filt=_sokoban_filter(7000, 14000)),
        SplitSpec(100, boxes=3, filt=_sokoban_filter(0, 7000)),
        SplitSpec(100, boxes=3, filt=_sokoban_filter(7000, 14000)),
        SplitSpec(100, boxes=4, filt=_sokoban_filter(0, 7000)),
        SplitSpec(100, boxes=4, filt=_sokoban_filter(7000, 14000)),
    ),
}

STP_FILTER = GenFilter(o_l=20, alpha=6.0, beta_min=0, beta_max=5000)

STP_SPLITS: dict[str, tuple[SplitSpec, ...]] = {
    "train": (SplitSpec(1000, size=3, filt=STP_FILTER),),
    "val": (SplitSpec(1000, size=3, filt=STP_FILTER),),
    "test_iid": (SplitSpec(500, size=3, filt=STP_FILTER),),
    "test_ood": (SplitSpec(250, size=4, filt=STP_FILTER), SplitSpec(250, size=5, filt=STP_FILTER)),
}

SPLIT_CATALOGUE = {Domain.MAZE: MAZE_SPLITS, Domain.SOKOBAN: SOKOBAN_SPLITS, Domain.STP: STP_SPLITS}


def scaled_count(count: int, scale: float) -> int:
    return max(1, round(count * scale))


def _expand_blocks(blocks: tuple[SplitSpec, ...], split: str, master_seed: int, scale: float):
    tasks = []
    index = 0
    for block in blocks:
        for _ in range(scaled_count(block.count, scale)):
            tasks.append((split, master_seed, index, block))
            index += 1
    return tasks


def _maze_worker(task):
    split, master_seed, index, block = task
    return generate_maze(
        block.size, block.size, block.filt,
        seed=derive_seed(master_seed, "maze", split, index),
        id=f"maze-{split}-{index:05d}",
    )


def _stp_worker(task):
    split, master_seed, index, block = task
    return generate_stp(
        block.size, block.filt,
        seed=derive_seed(master_seed, "stp", split, index),
        id=f"stp-{split}-{index:05d}",
    )


def build_maze_split(split: str, master_seed: int, scale: float = 1.0, jobs: int = 1,
                     blocks: tuple[SplitSpec, ...] | None = None) -> list[PuzzleInstance]:
    tasks = _expand_blocks(blocks or MAZE_SPLITS[split], split, master_seed, scale)
    return _run_tasks(_maze_worker, tasks, jobs)


def build_stp_split(split: str, master_seed: int, scale: float = 1.0, jobs: int = 1,
                    blocks: tuple[SplitSpec, ...] | None = None) -> list[PuzzleInstance]:
    tasks = _expand_blocks(blocks or STP_SPLITS[split], split, master_seed, scale)
    return _run_tasks(_stp_worker, tasks, jobs)


def build_sokoban_split(split: str, master_seed: int, source: list[PuzzleInstance],
                        scale: float = 1.0, blocks: tuple[SplitSpec, ...] | None = None) -> list[PuzzleInstance]:
    """Shuffle the boxoban pool with a derived seed, then walk it block by
    block, subsampling boxes/docks and filtering until each block is filled."""
    blocks = blocks or SOKOBAN_SPLITS[split]
    order = list(range(len(source)))
    random.Random(derive_seed(master_seed, "sokoban", split, "shuffle")).shuffle(order)
    out: list[PuzzleInstance] = []
    cursor = 0
    index = 0
    for block in blocks:
        need = scaled_count(block.count, scale)
        got = 0
        while got < need and cursor < len(order):
            base = source[order[cursor]]
            cursor += 1
            try:
                instance = subsample_boxes(
                    base, block.boxes, seed=derive_seed(master_seed, "sokoban", split, index), filt=block.filt
                )
            except GenerationExhausted:
                continue
            instance = dataclasses.replace(instance, id=f"sokoban-{split}-{index:05d}")
            instance.provenance["shuffle_seed"] = derive_seed(master_seed, "sokoban", split, "shuffle")
            out.append(instance)
            got += 1
            index += 1
        if got < need:
            raise GenerationExhausted(
                f"sokoban {split}: block B={block.boxes} needs {need} instances, pool yielded {got}"
            )
    return out


def _run_tasks(worker, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks, chunksize=4))


# ---------------------------------------------------------------------------
# Instance folders: one ASCII file per instance plus a manifest

def write_split(instances: Iterable[PuzzleInstance], out_dir: str | Path, force: bool = False) -> Path:
    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()) and not force:
        raise FileExistsError(f"{out_dir} is not empty; pass force to overwrite")
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for inst in instances:
        if not inst.id:
            raise ValueError("instance has no id; assign ids before writing")
        (out_dir / f"{inst.id}.txt").write_text(domains.render_ascii(inst) + "\n", encoding="utf-8")
        row = {"id": inst.id, "seed": inst.seed, "domain": inst.domain.value}
        for field in ("o_l", "alpha", "beta_min", "beta_max", "plan_length", "closed_length", "wall_time"):
            row[field] = inst.provenance.get(field)
        manifest.append(row)
    write_jsonl(out_dir / "manifest.jsonl", manifest)
    return out_dir


def read_split(in_dir: str | Path) -> list[PuzzleInstance]:
    in_dir = Path(in_dir)
    rows = read_jsonl(in_dir / "manifest.jsonl")
    out = []
    for row in sorted(rows, key=lambda r: r["id"]):
        text = (in_dir / f"{row['id']}.txt").read_text(encoding="utf-8")
        inst = domains.parse_ascii(text, row["domain"])
        out.append(dataclasses.replace(inst, id=row["id"], seed=row["seed"], provenance=dict(row)))
    return out
