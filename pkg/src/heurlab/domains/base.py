"""Shared domain types: puzzle instances, states, boards, parse errors."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

Cell = tuple[int, int]

# Successor generation visits moves in this fixed order so that searches are
# reproducible run to run.
DIRECTIONS: tuple[tuple[str, Cell], ...] = (
    ("up", (-1, 0)),
    ("down", (1, 0)),
    ("left", (0, -1)),
    ("right", (0, 1)),
)

OPPOSITE_ACTION = {"up": "down", "down": "up", "left": "right", "right": "left"}


class Domain(str, Enum):
    MAZE = "maze"
    SOKOBAN = "sokoban"
    STP = "stp"


class ParseError(ValueError):
    """Malformed puzzle text; carries 1-based line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class MazeBoard(NamedTuple):
    walls: tuple[tuple[bool, ...], ...]  # walls[r][c] is True for a wall cell

    @property
    def height(self) -> int:
        return len(self.walls)

    @property
    def width(self) -> int:
        return len(self.walls[0])


class SokobanBoard(NamedTuple):
    walls: tuple[tuple[bool, ...], ...]
    docks: tuple[Cell, ...]  # sorted

    @property
    def height(self) -> int:
        return len(self.walls)

    @property
    def width(self) -> int:
        return len(self.walls[0])


class StpBoard(NamedTuple):
    width: int


class MazeState(NamedTuple):
    player: Cell

    def key(self) -> bytes:
        return struct.pack("<HH", *self.player)


class SokobanState(NamedTuple):
    player: Cell
    boxes: tuple[Cell, ...]  # kept sorted so equal configurations compare equal

    def key(self) -> bytes:
        flat = [*self.player]
        for box in self.boxes:
            flat.extend(box)
        return struct.pack(f"<{len(flat)}H", *flat)

    @staticmethod
    def make(player: Cell, boxes) -> "SokobanState":
        return SokobanState(player, tuple(sorted(boxes)))


class StpState(NamedTuple):
    tiles: tuple[int, ...]  # row-major permutation of 0..width*width-1; 0 is the blank
    width: int

    def key(self) -> bytes:
        return bytes(self.tiles)


@dataclass(frozen=True)
class PuzzleInstance:
    domain: Domain
    board: object
    start_state: object
    goal_spec: object
    id: str = ""
    seed: int | None = None
    provenance: dict = field(default_factory=dict, compare=False)


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def freeze_grid(rows: list[list[bool]]) -> tuple[tuple[bool, ...], ...]:
    return tuple(tuple(row) for row in rows)


def occupancy_window(predicate, center: Cell, radius: int = 2) -> list[float]:
    """Flattened (2r+1)^2 window around ``center``; out-of-board counts as occupied."""
    r0, c0 = center
    out = []
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            out.append(1.0 if predicate(r0 + dr, c0 + dc) else 0.0)
    return out
