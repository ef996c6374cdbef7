"""heurlab: A* planning lab with learned-heuristic data selection tooling."""

__version__ = "0.1.0"
