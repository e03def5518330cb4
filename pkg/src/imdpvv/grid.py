"""Uniform hyper-rectangular tilings of bounded continuous spaces.

A grid partitions ``[lower, upper]`` into half-open tiles ``[lo, hi)`` of
fixed width per dimension; the final tile of each dimension is closed so
the upper boundary belongs to it.  Points outside the bounds are clamped
into the nearest boundary tile and counted.  Tile indices are zero-based
internally; signed display labels (``floor(x / width)`` style) are
available through :meth:`GridSpec.signed_label` when the lower bound is
an integer multiple of the width.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import DataError

Tile = tuple[int, ...]

# Points within this fraction of a tile width below an upper edge are
# snapped up, so exact grid multiples land in the intended tile despite
# binary rounding of the bounds.
_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with closed bounds."""

    min_corner: tuple[float, ...]
    max_corner: tuple[float, ...]

    def __post_init__(self):
        if len(self.min_corner) != len(self.max_corner):
            raise DataError("box corners have mismatched dimensions")
        if any(a > b for a, b in zip(self.min_corner, self.max_corner)):
            raise DataError("box min_corner exceeds max_corner")

    @property
    def ndim(self) -> int:
        return len(self.min_corner)

    def center(self) -> tuple[float, ...]:
        return tuple(0.5 * (a + b) for a, b in zip(self.min_corner, self.max_corner))

    def corners(self) -> np.ndarray:
        """All 2^d corner points, one per row."""
        pairs = [(a, b) for a, b in zip(self.min_corner, self.max_corner)]
        return np.array(list(product(*pairs)), dtype=float)

    def contains(self, point) -> bool:
        return all(
            a <= x <= b
            for a, x, b in zip(self.min_corner, point, self.max_corner)
        )

    def intersects(self, other: "Box") -> bool:
        return all(
            a <= d and c <= b
            for a, b, c, d in zip(
                self.min_corner, self.max_corner, other.min_corner, other.max_corner
            )
        )


@dataclass(frozen=True)
class GridSpec:
    """Uniform tiling of ``[lower_bounds, upper_bounds]``."""

    lower_bounds: tuple[float, ...]
    upper_bounds: tuple[float, ...]
    tile_widths: tuple[float, ...]

    def __post_init__(self):
        lo, hi, w = self.lower_bounds, self.upper_bounds, self.tile_widths
        if not (len(lo) == len(hi) == len(w)):
            raise DataError("grid bound/width dimensions differ")
        if len(lo) == 0:
            raise DataError("grid needs at least one dimension")
        for d in range(len(lo)):
            if not lo[d] < hi[d]:
                raise DataError(f"grid dimension {d}: lower bound must be below upper")
            if not w[d] > 0:
                raise DataError(f"grid dimension {d}: tile width must be positive")
        object.__setattr__(self, "lower_bounds", tuple(float(x) for x in lo))
        object.__setattr__(self, "upper_bounds", tuple(float(x) for x in hi))
        object.__setattr__(self, "tile_widths", tuple(float(x) for x in w))

    @classmethod
    def from_triples(cls, triples) -> "GridSpec":
        """Build from per-dimension (lower, upper, width) triples."""
        lo, hi, w = zip(*triples)
        return cls(tuple(lo), tuple(hi), tuple(w))

    @property
    def ndim(self) -> int:
        return len(self.lower_bounds)

    @property
    def shape(self) -> tuple[int, ...]:
        """Tiles per dimension: ceil((upper - lower) / width), fp-tolerant."""
        return tuple(
            max(1, int(np.ceil((hi - lo) / w - _EDGE_EPS)))
            for lo, hi, w in zip(self.lower_bounds, self.upper_bounds, self.tile_widths)
        )

    @property
    def num_tiles(self) -> int:
        n = 1
        for k in self.shape:
            n *= k
        return n

    def _check_dim(self, point):
        if len(point) != self.ndim:
            raise DataError(
                f"point has {len(point)} dimensions, grid has {self.ndim}"
            )

    def abstract_point(self, point) -> Tile:
        """Map a concrete point to its tile, clamping out-of-range points."""
        self._check_dim(point)
        idx, _ = self.abstract_points(np.asarray(point, dtype=float)[None, :])
        return tuple(int(i) for i in idx[0])

    def abstract_points(self, points: np.ndarray) -> tuple[np.ndarray, int]:
        """Vectorized tiling of an (N, ndim) array.

        Returns integer indices of shape (N, ndim) and the number of
        coordinates that had to be clamped into range.
        """
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.ndim:
            raise DataError("expected an (N, ndim) array of points")
        if not np.all(np.isfinite(points)):
            raise DataError("non-finite coordinates cannot be abstracted")
        lo = np.array(self.lower_bounds)
        w = np.array(self.tile_widths)
        n = np.array(self.shape)
        raw = np.floor((points - lo) / w + _EDGE_EPS).astype(np.int64)
        clamped = int(np.count_nonzero((raw < 0) | (raw >= n)))
        np.clip(raw, 0, n - 1, out=raw)
        return raw, clamped

    def concretize(self, tile) -> Box:
        """Closed box of a tile; the two may share boundary faces."""
        self._check_dim(tile)
        shape = self.shape
        for d, i in enumerate(tile):
            if not 0 <= i < shape[d]:
                raise DataError(f"tile index {i} out of range in dimension {d}")
        lo = tuple(
            l + i * w
            for l, i, w in zip(self.lower_bounds, tile, self.tile_widths)
        )
        hi = tuple(
            min(l + (i + 1) * w, u)
            for l, i, w, u in zip(
                self.lower_bounds, tile, self.tile_widths, self.upper_bounds
            )
        )
        return Box(lo, hi)

    def enumerate_tiles(self):
        """Yield every tile exactly once in lexicographic index order."""
        for idx in product(*(range(k) for k in self.shape)):
            yield idx

    def flat_index(self, tile) -> int:
        """Row-major flat index of a tile."""
        flat = 0
        for i, k in zip(tile, self.shape):
            flat = flat * k + i
        return flat

    def flat_indices(self, idx: np.ndarray) -> np.ndarray:
        """Row-major flat indices for an (N, ndim) index array."""
        return np.ravel_multi_index(tuple(idx.T), self.shape)

    def tile_from_flat(self, flat: int) -> Tile:
        return tuple(int(i) for i in np.unravel_index(flat, self.shape))

    def tile_centers(self) -> np.ndarray:
        """Centers of all tiles, row-major, shape (num_tiles, ndim)."""
        axes = [
            lo + (np.arange(k) + 0.5) * w
            for lo, k, w in zip(self.lower_bounds, self.shape, self.tile_widths)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def label_offsets(self) -> tuple[int, ...] | None:
        """Signed-label offsets, or None when bounds are off-lattice.

        Valid when every lower bound is an integer multiple of its width;
        then label = index + offset reproduces floor(x / width) labels.
        """
        offs = []
        for lo, w in zip(self.lower_bounds, self.tile_widths):
            r = lo / w
            if abs(r - round(r)) > 1e-6:
                return None
            offs.append(int(round(r)))
        return tuple(offs)

    def signed_label(self, tile) -> Tile:
        offs = self.label_offsets()
        if offs is None:
            return tuple(tile)
        return tuple(i + o for i, o in zip(tile, offs))

    def tile_from_signed(self, label) -> Tile:
        offs = self.label_offsets()
        if offs is None:
            return tuple(label)
        return tuple(i - o for i, o in zip(label, offs))

    def domain_box(self) -> Box:
        return Box(self.lower_bounds, self.upper_bounds)


def abstract_point(point, grid: GridSpec) -> Tile:
    return grid.abstract_point(point)


def concretize(tile, grid: GridSpec) -> Box:
    return grid.concretize(tile)


def enumerate_tiles(grid: GridSpec):
    return grid.enumerate_tiles()
