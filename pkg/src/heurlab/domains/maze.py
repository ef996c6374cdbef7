"""Grid maze: one player cell, one goal cell, four-connected moves."""

from __future__ import annotations

from collections import deque

from .base import (
    DIRECTIONS,
    Cell,
    Domain,
    MazeBoard,
    MazeState,
    ParseError,
    PuzzleInstance,
    freeze_grid,
    manhattan,
    occupancy_window,
)

LEGEND = "@ - player, # - wall, . - empty cell, X - goal"

GLYPHS = frozenset("#.@X")


def successors(state: MazeState, instance: PuzzleInstance):
    walls = instance.board.walls
    h, w = instance.board.height, instance.board.width
    r, c = state.player
    out = []
    for action, (dr, dc) in DIRECTIONS:
        nr, nc = r + dr, c + dc
        if 0 <= nr < h and 0 <= nc < w and not walls[nr][nc]:
            out.append((action, MazeState((nr, nc))))
    return out


def is_goal(state: MazeState, instance: PuzzleInstance) -> bool:
    return state.player == instance.goal_spec


def quick_heuristic(state: MazeState, instance: PuzzleInstance) -> int:
    return manhattan(state.player, instance.goal_spec)


def bfs_distances(walls, start: Cell) -> dict[Cell, int]:
    """Exact unit-cost distances from ``start`` over open cells."""
    h, w = len(walls), len(walls[0])
    dist = {start: 0}
    queue = deque([start])
    while queue:
        r, c = queue.popleft()
        d = dist[(r, c)]
        for _, (dr, dc) in DIRECTIONS:
            nr, nc = r + dr, c + dc
            if 0 <= nr < h and 0 <= nc < w and not walls[nr][nc] and (nr, nc) not in dist:
                dist[(nr, nc)] = d + 1
                queue.append((nr, nc))
    return dist


def render_ascii(instance: PuzzleInstance, state: MazeState | None = None) -> str:
    player = (state or instance.start_state).player
    goal = instance.goal_spec
    walls = instance.board.walls
    rows = []
    for r, row in enumerate(walls):
        chars = []
        for c, is_wall in enumerate(row):
            if (r, c) == player:
                chars.append("@")
            elif (r, c) == goal:
                chars.append("X")
            elif is_wall:
                chars.append("#")
            else:
                chars.append(".")
        rows.append("".join(chars))
    return "\n".join(rows)


def parse_ascii(text: str) -> PuzzleInstance:
    lines = [line for line in text.rstrip("\n").split("\n")]
    if not lines:
        raise ParseError("empty maze text")
    width = len(lines[0])
    player = None
    goal = None
    rows: list[list[bool]] = []
    for r, line in enumerate(lines):
        if len(line) != width:
            raise ParseError(f"ragged row: expected width {width}, got {len(line)}", line=r + 1)
        row = []
        for c, ch in enumerate(line):
            if ch not in GLYPHS:
                raise ParseError(f"unknown glyph {ch!r}", line=r + 1, column=c + 1)
            if ch == "@":
                if player is not None:
                    raise ParseError("duplicate player", line=r + 1, column=c + 1)
                player = (r, c)
            elif ch == "X":
                if goal is not None:
                    raise ParseError("duplicate goal", line=r + 1, column=c + 1)
                goal = (r, c)
            row.append(ch == "#")
        rows.append(row)
    if player is None:
        raise ParseError("missing player")
    if goal is None:
        raise ParseError("missing goal")
    # Boards always carry a closed border ring; catch corrupt files early.
    h = len(rows)
    for r in range(h):
        for c in (0, width - 1):
            if not rows[r][c]:
                raise ParseError("border is not walled", line=r + 1, column=c + 1)
    for c in range(width):
        for r in (0, h - 1):
            if not rows[r][c]:
                raise ParseError("border is not walled", line=r + 1, column=c + 1)
    return PuzzleInstance(
        domain=Domain.MAZE,
        board=MazeBoard(freeze_grid(rows)),
        start_state=MazeState(player),
        goal_spec=goal,
    )


def feature_vector(state: MazeState, instance: PuzzleInstance) -> list[float]:
    walls = instance.board.walls
    h, w = instance.board.height, instance.board.width
    r, c = state.player
    gr, gc = instance.goal_spec
    feats = [
        float(quick_heuristic(state, instance)),
        r / (h - 1),
        c / (w - 1),
        (gr - r) / (h - 1),
        (gc - c) / (w - 1),
    ]
    feats.extend(
        occupancy_window(lambda rr, cc: not (0 <= rr < h and 0 <= cc < w) or walls[rr][cc], (r, c))
    )
    return feats
