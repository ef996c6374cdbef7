"""Sokoban: player pushes boxes onto docks; pushes are irreversible moves."""

from __future__ import annotations

from .base import (
    DIRECTIONS,
    Domain,
    ParseError,
    PuzzleInstance,
    SokobanBoard,
    SokobanState,
    freeze_grid,
    manhattan,
    occupancy_window,
)
from .hungarian import hungarian_min_cost

LEGEND = "@ - player, # - wall, . - empty docks, ' ' - empty cell, $ - box, X - box on dock, O - player on dock"

GLYPHS = frozenset("#@$.XO ")


def successors(state: SokobanState, instance: PuzzleInstance):
    walls = instance.board.walls
    h, w = instance.board.height, instance.board.width
    boxes = frozenset(state.boxes)
    pr, pc = state.player
    out = []
    for action, (dr, dc) in DIRECTIONS:
        tr, tc = pr + dr, pc + dc
        if not (0 <= tr < h and 0 <= tc < w) or walls[tr][tc]:
            continue
        if (tr, tc) in boxes:
            br, bc = tr + dr, tc + dc
            if not (0 <= br < h and 0 <= bc < w) or walls[br][bc] or (br, bc) in boxes:
                continue
            moved = [(br, bc) if b == (tr, tc) else b for b in state.boxes]
            out.append((action, SokobanState.make((tr, tc), moved)))
        else:
            out.append((action, SokobanState((tr, tc), state.boxes)))
    return out


def is_goal(state: SokobanState, instance: PuzzleInstance) -> bool:
    return state.boxes == instance.board.docks


def quick_heuristic(state: SokobanState, instance: PuzzleInstance) -> int:
    """Walk-to-nearest-box term plus a minimum-cost box-to-dock assignment.

    The walk term is min-over-boxes Manhattan minus one: the player only ever
    needs to reach a cell adjacent to the first box it pushes, and each push
    itself is counted by the assignment term. Dropping the -1 would
    overestimate (e.g. player next to a box one step from its dock: true cost
    is a single push). Zero once every box is docked, which is the goal test.
    """
    docks = instance.board.docks
    if state.boxes == docks:
        return 0
    player = state.player
    nearest = min(manhattan(player, box) for box in state.boxes)
    costs = [[manhattan(box, dock) for dock in docks] for box in state.boxes]
    _, total = hungarian_min_cost(costs)
    return max(0, nearest - 1) + int(total)


def render_ascii(instance: PuzzleInstance, state: SokobanState | None = None) -> str:
    state = state or instance.start_state
    walls = instance.board.walls
    docks = frozenset(instance.board.docks)
    boxes = frozenset(state.boxes)
    player = state.player
    rows = []
    for r, row in enumerate(walls):
        chars = []
        for c, is_wall in enumerate(row):
            cell = (r, c)
            if cell == player:
                chars.append("O" if cell in docks else "@")
            elif cell in boxes:
                chars.append("X" if cell in docks else "$")
            elif is_wall:
                chars.append("#")
            elif cell in docks:
                chars.append(".")
            else:
                chars.append(" ")
        rows.append("".join(chars))
    return "\n".join(rows)


def parse_ascii(text: str) -> PuzzleInstance:
    lines = text.rstrip("\n").split("\n")
    if not lines:
        raise ParseError("empty sokoban text")
    width = len(lines[0])
    rows: list[list[bool]] = []
    docks = []
    boxes = []
    player = None
    for r, line in enumerate(lines):
        if len(line) != width:
            raise ParseError(f"ragged row: expected width {width}, got {len(line)}", line=r + 1)
        row = []
        for c, ch in enumerate(line):
            if ch not in GLYPHS:
                raise ParseError(f"unknown glyph {ch!r}", line=r + 1, column=c + 1)
            cell = (r, c)
            if ch in "@O":
                if player is not None:
                    raise ParseError("duplicate player", line=r + 1, column=c + 1)
                player = cell
            if ch in "$X":
                boxes.append(cell)
            if ch in ".XO":
                docks.append(cell)
            row.append(ch == "#")
        rows.append(row)
    if player is None:
        raise ParseError("missing player")
    if len(boxes) != len(docks):
        raise ParseError(f"box/dock count mismatch: {len(boxes)} boxes, {len(docks)} docks")
    board = SokobanBoard(freeze_grid(rows), tuple(sorted(docks)))
    return PuzzleInstance(
        domain=Domain.SOKOBAN,
        board=board,
        start_state=SokobanState.make(player, boxes),
        goal_spec=board.docks,
    )


def feature_vector(state: SokobanState, instance: PuzzleInstance) -> list[float]:
    walls = instance.board.walls
    docks = instance.board.docks
    h, w = instance.board.height, instance.board.width
    pr, pc = state.player
    pair_dists = [manhattan(box, dock) for box in state.boxes for dock in docks]
    feats = [
        float(quick_heuristic(state, instance)),
        pr / (h - 1),
        pc / (w - 1),
        float(min(pair_dists)),
        sum(pair_dists) / len(pair_dists),
        float(max(pair_dists)),
    ]
    boxes = frozenset(state.boxes)
    dock_set = frozenset(docks)
    in_board = lambda rr, cc: 0 <= rr < h and 0 <= cc < w
    feats.extend(occupancy_window(lambda rr, cc: not in_board(rr, cc) or walls[rr][cc], (pr, pc)))
    feats.extend(occupancy_window(lambda rr, cc: (rr, cc) in boxes, (pr, pc)))
    feats.extend(occupancy_window(lambda rr, cc: (rr, cc) in dock_set, (pr, pc)))
    return feats
