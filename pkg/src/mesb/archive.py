"""MAP-Elites archive with sliding (percentile) boundaries and resolution expansion.

Cell boundaries are not fixed in behavior space. Every ``remap_frequency``
offered individuals the boundaries are re-derived from the empirical
distribution of recently seen behaviors, so each cell along a dimension holds
roughly the same share of the population. The grid also grows from
``min_resolution`` to ``max_resolution`` cells per dimension at uniform
intervals of the evaluation budget.
"""

from __future__ import annotations

import bisect
import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

import numpy as np

Behavior = tuple[float, ...]
Cell = tuple[int, ...]


class ArchiveError(ValueError):
    pass


def as_behavior(values: Iterable[float], dims: Optional[int] = None) -> Behavior:
    """Validate and freeze a behavior vector."""
    out = tuple(float(v) for v in values)
    if dims is not None and len(out) != dims:
        raise ArchiveError(f"behavior has {len(out)} dimensions, expected {dims}")
    if not all(math.isfinite(v) for v in out):
        raise ArchiveError(f"invalid sample: non-finite behavior {out}")
    return out


class SampleBuffer:
    """FIFO of the last ``capacity`` behaviors (``None`` keeps everything)."""

    def __init__(self, capacity: Optional[int] = None):
        if capacity is not None and capacity < 1:
            raise ArchiveError("buffer capacity must be positive or None")
        self.capacity = capacity
        self._items: deque[Behavior] = deque(maxlen=capacity)

    def append(self, behavior: Behavior) -> None:
        self._items.append(behavior)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def as_array(self) -> np.ndarray:
        return np.asarray(self._items, dtype=float)


@dataclass(frozen=True)
class BoundaryGrid:
    boundaries: tuple[tuple[float, ...], ...]
    resolution: int

    def __post_init__(self):
        if self.resolution < 1:
            raise ArchiveError("resolution must be >= 1")
        for b in self.boundaries:
            if len(b) != self.resolution - 1:
                raise ArchiveError(
                    f"boundary list of length {len(b)} does not match resolution {self.resolution}"
                )
            if any(b[i] > b[i + 1] for i in range(len(b) - 1)):
                raise ArchiveError("boundary lists must be sorted")

    @property
    def dims(self) -> int:
        return len(self.boundaries)

    @classmethod
    def uniform(cls, lows: Sequence[float], highs: Sequence[float], resolution: int) -> "BoundaryGrid":
        """Evenly spaced interior boundaries between ``lows`` and ``highs``."""
        bounds = []
        for lo, hi in zip(lows, highs):
            step = (hi - lo) / resolution
            bounds.append(tuple(lo + step * i for i in range(1, resolution)))
        return cls(tuple(bounds), resolution)


def compute_boundaries(samples, resolution: int, dims: Optional[int] = None) -> BoundaryGrid:
    """Nearest-rank percentile boundaries, one sorted list per dimension.

    The i-th interior boundary (i = 1..resolution-1) is the sorted sample at
    index ``floor(i * n / resolution)`` clamped to ``n - 1``.
    """
    if resolution < 2:
        raise ArchiveError("resolution must be >= 2")
    arr = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples, dtype=float)
    if arr.size == 0:
        raise ArchiveError("no samples")
    if arr.ndim == 1:
        arr = arr[:, None]
    if dims is not None and arr.shape[1] != dims:
        raise ArchiveError(f"samples have {arr.shape[1]} dimensions, expected {dims}")
    if not np.isfinite(arr).all():
        raise ArchiveError("invalid sample: non-finite value")
    n = arr.shape[0]
    idx = np.minimum(np.arange(1, resolution, dtype=np.int64) * n // resolution, n - 1)
    ordered = np.sort(arr, axis=0)
    bounds = tuple(tuple(float(v) for v in ordered[idx, d]) for d in range(arr.shape[1]))
    return BoundaryGrid(bounds, resolution)


def locate_cell(grid: BoundaryGrid, behavior: Sequence[float]) -> Cell:
    """Cell index per dimension = number of boundaries <= value (ties go up)."""
    if len(behavior) != grid.dims:
        raise ArchiveError(f"behavior has {len(behavior)} dimensions, grid has {grid.dims}")
    return tuple(bisect.bisect_right(b, v) for b, v in zip(grid.boundaries, behavior))


class InsertOutcome(str, enum.Enum):
    PLACED_NEW = "placed-new"
    REPLACED = "replaced-incumbent"
    REJECTED = "rejected"


@dataclass
class Elite:
    genome: Any
    behavior: Behavior
    fitness: float
    stats: dict = field(default_factory=dict)

    @property
    def winrate(self) -> float:
        return self.stats.get("winrate", 0.0)


@dataclass(frozen=True)
class ArchiveConfig:
    remap_frequency: int = 100
    buffer_capacity: Optional[int] = None
    min_resolution: int = 2
    max_resolution: int = 20
    total_evaluations: int = 10_000
    dims: int = 2

    def __post_init__(self):
        if self.remap_frequency < 1:
            raise ArchiveError("remap_frequency must be >= 1")
        if self.min_resolution < 2:
            raise ArchiveError("min_resolution must be >= 2")
        if self.max_resolution < self.min_resolution:
            raise ArchiveError("max_resolution must be >= min_resolution")
        if self.total_evaluations < 1:
            raise ArchiveError("total_evaluations must be positive")
        if self.buffer_capacity is not None and self.buffer_capacity < 1:
            raise ArchiveError("buffer_capacity must be positive or None")


def resolution_for(eval_index: int, config: ArchiveConfig) -> int:
    """Cells per dimension in effect for evaluation ``eval_index``."""
    if not 0 <= eval_index < config.total_evaluations:
        raise ArchiveError(f"evaluation index {eval_index} outside [0, {config.total_evaluations})")
    levels = config.max_resolution - config.min_resolution + 1
    step = eval_index * levels // config.total_evaluations
    return min(config.min_resolution + step, config.max_resolution)


class SlidingArchive:
    """Elite store over a percentile grid. Single writer; not thread safe."""

    def __init__(self, config: ArchiveConfig = ArchiveConfig()):
        self.config = config
        self.buffer = SampleBuffer(config.buffer_capacity)
        self.cells: dict[Cell, Elite] = {}
        self.grid: Optional[BoundaryGrid] = None
        self.resolution = config.min_resolution
        self.inserted_count = 0
        self.remap_count = 0
        # samples known to exist but not held in ``buffer`` (archives loaded from snapshots)
        self.detached_samples = 0

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def sample_count(self) -> int:
        return len(self.buffer) + self.detached_samples

    def elites(self) -> list[Elite]:
        return [self.cells[c] for c in sorted(self.cells)]

    def items(self) -> list[tuple[Cell, Elite]]:
        return [(c, self.cells[c]) for c in sorted(self.cells)]

    def cell_of(self, behavior: Sequence[float]) -> Cell:
        if self.grid is None:
            raise ArchiveError("archive has no grid yet")
        return locate_cell(self.grid, behavior)

    def best(self) -> Elite:
        if not self.cells:
            raise ArchiveError("no elites")
        # first maximum in cell order
        return max(self.elites(), key=lambda e: e.fitness)

    def _place(self, elite: Elite) -> InsertOutcome:
        cell = locate_cell(self.grid, elite.behavior)
        incumbent = self.cells.get(cell)
        if incumbent is None:
            self.cells[cell] = elite
            return InsertOutcome.PLACED_NEW
        if elite.fitness > incumbent.fitness:
            self.cells[cell] = elite
            return InsertOutcome.REPLACED
        return InsertOutcome.REJECTED

    def try_insert(self, candidate: Elite) -> InsertOutcome:
        candidate.behavior = as_behavior(candidate.behavior, self.config.dims)
        self.buffer.append(candidate.behavior)
        self.inserted_count += 1
        if self.grid is None:
            self.grid = compute_boundaries(self.buffer.as_array(), self.resolution)
        outcome = self._place(candidate)

        n = self.inserted_count
        target = self.resolution
        if n < self.config.total_evaluations:
            target = resolution_for(n, self.config)
        if target != self.resolution or n % self.config.remap_frequency == 0:
            self.remap(target)
        return outcome

    def remap(self, new_resolution: Optional[int] = None) -> None:
        """Recompute boundaries from the buffer and re-seat every elite."""
        if len(self.buffer) == 0:
            raise ArchiveError("cannot remap without samples")
        res = self.resolution if new_resolution is None else new_resolution
        self.grid = compute_boundaries(self.buffer.as_array(), res)
        self.resolution = res
        old = self.items()
        self.cells = {}
        for _, elite in old:
            self._place(elite)
        self.remap_count += 1

    def select_random_elite(self, rng) -> Elite:
        """Uniform over occupied cells; ``rng`` needs ``randrange``."""
        if not self.cells:
            raise ArchiveError("no elites")
        keys = sorted(self.cells)
        return self.cells[keys[rng.randrange(len(keys))]]


def select_random_elite(archive: SlidingArchive, rng) -> Elite:
    return archive.select_random_elite(rng)


def try_insert(archive: SlidingArchive, candidate: Elite) -> InsertOutcome:
    return archive.try_insert(candidate)


def remap(archive: SlidingArchive, new_resolution: int) -> None:
    archive.remap(new_resolution)
