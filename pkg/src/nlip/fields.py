"""Cell-centered grids and field containers on thin boxes.

The domain is (0,eps)^ell x (0,1): the thin axes come first, the unit axis
last. Values live at cell centers; all interface bookkeeping is done on the
faces between cells. A plain-text serialization round-trips fields exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core1d import Profile1D


@dataclass(frozen=True)
class GridSpec:
    """Cell counts and side lengths per axis (thin axes first, unit axis last)."""

    counts: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.counts) != len(self.lengths):
            raise ValueError("counts and lengths must have equal length")
        if len(self.counts) not in (2, 3):
            raise ValueError("grids are 2D or 3D")
        if any(int(n) != n or n < 2 for n in self.counts):
            raise ValueError(f"every axis needs at least 2 cells, got {self.counts}")
        if any(l <= 0 for l in self.lengths):
            raise ValueError(f"lengths must be positive, got {self.lengths}")
        object.__setattr__(self, "counts", tuple(int(n) for n in self.counts))
        object.__setattr__(self, "lengths", tuple(float(l) for l in self.lengths))

    @property
    def ndim(self) -> int:
        return len(self.counts)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(l / n for l, n in zip(self.lengths, self.counts))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.counts))

    @property
    def cell_volume(self) -> float:
        out = 1.0
        for h in self.spacings:
            out *= h
        return out

    @property
    def thin_volume(self) -> float:
        """Product of the thin-axis lengths (eps^ell for the standard boxes)."""
        out = 1.0
        for l in self.lengths[:-1]:
            out *= l
        return out

    def centers(self, axis: int) -> np.ndarray:
        n = self.counts[axis]
        h = self.spacings[axis]
        return (np.arange(n) + 0.5) * h


@dataclass(frozen=True)
class ScalarField:
    """Real values at the cell centers of a grid."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.counts:
            raise ValueError(f"values shape {vals.shape} != grid counts {self.grid.counts}")
        object.__setattr__(self, "values", vals)

    def mean(self) -> float:
        return float(self.values.mean())

    def save(self, path: str | Path) -> None:
        _save_field(path, self.grid, self.values, 0.0)

    @classmethod
    def load(cls, path: str | Path) -> "ScalarField":
        grid, values, _ = _load_field(path)
        return cls(grid, values)


@dataclass(frozen=True)
class SpinField:
    """A +-1 configuration with a prescribed mass average m.

    The cell count makes only a discrete set of averages realizable, so the
    invariant pins the integer number of +1 cells: the achieved cell average
    must agree with m to within one cell's worth of mass (2 / n_cells).
    Passing m=None adopts the achieved average exactly.
    """

    grid: GridSpec
    values: np.ndarray
    m: float | None = None

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.counts:
            raise ValueError(f"values shape {vals.shape} != grid counts {self.grid.counts}")
        if not np.all(np.abs(vals) == 1.0):
            raise ValueError("spin values must be exactly +1 or -1")
        mean = float(vals.mean())
        m = mean if self.m is None else float(self.m)
        if abs(mean - m) > 2.0 / self.grid.n_cells + 1e-15:
            raise ValueError(
                f"cell average {mean} differs from m = {m} by more than one cell"
            )
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "m", m)

    @property
    def n_plus(self) -> int:
        return int(np.count_nonzero(self.values > 0))

    def mean(self) -> float:
        return float(self.values.mean())

    def flipped(self) -> "SpinField":
        return SpinField(self.grid, -self.values, -self.m)

    def save(self, path: str | Path) -> None:
        _save_field(path, self.grid, self.values, self.m)

    @classmethod
    def load(cls, path: str | Path) -> "SpinField":
        grid, values, m = _load_field(path)
        return cls(grid, values, m)


def _save_field(path: str | Path, grid: GridSpec, values: np.ndarray, m: float) -> None:
    """Header 'counts... lengths... m', then row-major values, last axis per line."""
    head = " ".join(str(n) for n in grid.counts)
    head += " " + " ".join(repr(float(l)) for l in grid.lengths)
    head += " " + repr(float(m))
    flat = values.reshape(-1, grid.counts[-1])
    with open(path, "w") as fh:
        fh.write(head + "\n")
        for row in flat:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def _load_field(path: str | Path) -> tuple[GridSpec, np.ndarray, float]:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) == 5:
            nd = 2
        elif len(header) == 7:
            nd = 3
        else:
            raise ValueError(f"malformed field header: {' '.join(header)}")
        counts = tuple(int(tok) for tok in header[:nd])
        lengths = tuple(float(tok) for tok in header[nd : 2 * nd])
        m = float(header[2 * nd])
        data = np.array(fh.read().split(), dtype=float)
    grid = GridSpec(counts, lengths)
    if data.size != grid.n_cells:
        raise ValueError(f"expected {grid.n_cells} values, found {data.size}")
    return grid, data.reshape(counts), m


def thin_grid(eps: float, nx: int, ny: int) -> GridSpec:
    """The standard 2D thin box (0,eps) x (0,1)."""
    return GridSpec((nx, ny), (eps, 1.0))


def default_grid(eps: float, ny: int = 240) -> GridSpec:
    """Default resolution: nx = max(8, round(eps*ny)) keeps cells near square."""
    nx = max(8, round(eps * ny))
    return thin_grid(eps, nx, ny)


def rasterize_profile(profile: Profile1D, grid: GridSpec) -> SpinField:
    """Sample a 1D profile at cell centers of the last axis, constant in the
    thin axes. Grids whose last-axis count is divisible by 2k place the k
    equally spaced jumps exactly on cell boundaries."""
    column = profile.evaluate(grid.centers(grid.ndim - 1))
    shape = [1] * grid.ndim
    shape[-1] = grid.counts[-1]
    values = np.broadcast_to(column.reshape(shape), grid.counts).copy()
    return SpinField(grid, values)


def random_spin_field(grid: GridSpec, m: float, rng: np.random.Generator) -> SpinField:
    """Uniformly random arrangement of the exact +1/-1 cell multiset for m."""
    n = grid.n_cells
    n_plus = round(n * (1.0 + m) / 2.0)
    if not 0 <= n_plus <= n:
        raise ValueError(f"m = {m} not realizable on {n} cells")
    flat = np.full(n, -1.0)
    flat[:n_plus] = 1.0
    rng.shuffle(flat)
    return SpinField(grid, flat.reshape(grid.counts), m)
