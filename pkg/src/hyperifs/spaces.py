"""Grid discretizations of compact metric spaces and the hyperspace K(X).

Three spaces are supported:

* ``interval``  -- [0, 1] with ``|x - y|``; nodes ``i / n`` for ``i = 0..n``.
* ``circle``    -- R/Z with arc length (circumference 1); nodes ``i / n``.
* ``shift``     -- one-sided binary shift truncated at ``depth`` symbols.
  A point is stored as an integer code whose most significant bit is the
  first symbol (bit 0 <-> symbol 1, bit 1 <-> symbol 2).

A :class:`CompactSet` is a nonempty boolean occupancy mask over the cells.
Every mask is closed, so closures are implicit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from ._kernels import hausdorff_steps


class SpaceKind(str, Enum):
    INTERVAL = "interval"
    CIRCLE = "circle"
    SHIFT = "shift"


class EmptySetError(ValueError):
    """Raised when a CompactSet would have no occupied cell."""


class SpaceMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpace:
    """A compact metric space with a uniform cell discretization.

    ``resolution`` is the number of cells per unit length for the interval
    and the circle, and the truncation depth for the shift space.
    """

    kind: SpaceKind
    resolution: int

    def __post_init__(self):
        object.__setattr__(self, "kind", SpaceKind(self.kind))
        if int(self.resolution) < 1:
            raise ValueError("resolution must be a positive integer")
        if self.kind is SpaceKind.SHIFT and not 1 <= self.resolution <= 30:
            raise ValueError("shift depth must lie in [1, 30]")
        object.__setattr__(self, "resolution", int(self.resolution))

    # constructors --------------------------------------------------------
    @classmethod
    def interval(cls, n: int = 4096) -> "GridSpace":
        return cls(SpaceKind.INTERVAL, n)

    @classmethod
    def circle(cls, n: int = 4096) -> "GridSpace":
        return cls(SpaceKind.CIRCLE, n)

    @classmethod
    def shift(cls, depth: int = 12) -> "GridSpace":
        return cls(SpaceKind.SHIFT, depth)

    def refined(self, factor: int = 2) -> "GridSpace":
        if self.kind is SpaceKind.SHIFT:
            return GridSpace(self.kind, self.resolution + int(math.log2(factor)))
        return GridSpace(self.kind, self.resolution * factor)

    # geometry --------------------------------------------------------------
    @property
    def depth(self) -> int:
        if self.kind is not SpaceKind.SHIFT:
            raise AttributeError("only the shift space has a depth")
        return self.resolution

    @property
    def size(self) -> int:
        """Number of cells, i.e. the mask length."""
        if self.kind is SpaceKind.INTERVAL:
            return self.resolution + 1
        if self.kind is SpaceKind.CIRCLE:
            return self.resolution
        return 1 << self.resolution

    @property
    def cell_diameter(self) -> float:
        if self.kind is SpaceKind.SHIFT:
            return 2.0 ** -self.resolution
        return 1.0 / self.resolution

    @property
    def diameter(self) -> float:
        return 0.5 if self.kind is SpaceKind.CIRCLE else 1.0

    @property
    def centers(self) -> np.ndarray:
        if self.kind is SpaceKind.SHIFT:
            return np.arange(self.size, dtype=np.int64)
        return np.arange(self.size) / self.resolution

    def metric(self, x, y) -> np.ndarray:
        """Vectorized metric on points (floats, or integer codes for shift)."""
        if self.kind is SpaceKind.INTERVAL:
            return np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        if self.kind is SpaceKind.CIRCLE:
            d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % 1.0
            return np.minimum(d, 1.0 - d)
        xor = np.bitwise_xor(np.asarray(x, dtype=np.int64), np.asarray(y, dtype=np.int64))
        # frexp exponent equals the bit length; exact for codes < 2**53
        _, bits = np.frexp(xor.astype(float))
        return np.where(xor == 0, 0.0, np.ldexp(1.0, bits - self.resolution))

    def index_of(self, x) -> np.ndarray:
        """Cell index of the node nearest to each point."""
        if self.kind is SpaceKind.SHIFT:
            x = np.asarray(x, dtype=np.int64)
            if np.any((x < 0) | (x >= self.size)):
                raise ValueError("shift code out of range")
            return x
        u = np.rint(np.asarray(x, dtype=float) * self.resolution).astype(np.int64)
        if self.kind is SpaceKind.INTERVAL:
            return np.clip(u, 0, self.resolution)
        return u % self.resolution

    def wrap(self, x):
        """Map raw coordinates back into the space."""
        if self.kind is SpaceKind.CIRCLE:
            return np.mod(x, 1.0)
        if self.kind is SpaceKind.INTERVAL:
            return np.clip(x, 0.0, 1.0)
        return np.asarray(x, dtype=np.int64) & (self.size - 1)

    # set constructors ------------------------------------------------------
    def empty_mask(self) -> np.ndarray:
        return np.zeros(self.size, dtype=bool)

    def full(self) -> "CompactSet":
        return CompactSet(self, np.ones(self.size, dtype=bool))

    def from_indices(self, indices: Iterable[int]) -> "CompactSet":
        mask = self.empty_mask()
        mask[np.asarray(list(indices), dtype=np.int64)] = True
        return CompactSet(self, mask)

    def from_points(self, points) -> "CompactSet":
        return self.from_indices(np.atleast_1d(self.index_of(points)))

    def singleton(self, x) -> "CompactSet":
        return self.from_points([x])

    def ball(self, center, radius: float) -> "CompactSet":
        """Cells whose node lies within ``radius`` of ``center`` (closed ball).

        The cell of the center itself is always included.
        """
        mask = self.metric(self.centers, center) <= radius + 1e-12
        mask[self.index_of(center)] = True
        return CompactSet(self, mask)

    def arc(self, a: float, b: float) -> "CompactSet":
        """Nodes in [a, b]; on the circle the arc runs counterclockwise from a to b."""
        if self.kind is SpaceKind.SHIFT:
            raise ValueError("arcs are defined on the interval and the circle only")
        i, j = (int(v) for v in np.rint(np.array([a, b]) * self.resolution))
        if self.kind is SpaceKind.INTERVAL:
            return self.from_indices(range(max(i, 0), min(j, self.resolution) + 1))
        if j < i:
            j += self.resolution
        return self.from_indices(np.arange(i, j + 1) % self.resolution)

    def cylinder(self, prefix: Sequence[int]) -> "CompactSet":
        """All words starting with ``prefix`` (symbols in {1, 2})."""
        if self.kind is not SpaceKind.SHIFT:
            raise ValueError("cylinders live in the shift space")
        k = len(prefix)
        if k > self.resolution:
            raise ValueError("prefix longer than depth")
        head = 0
        for s in prefix:
            head = (head << 1) | (int(s) - 1)
        lo = head << (self.resolution - k)
        return self.from_indices(range(lo, lo + (1 << (self.resolution - k))))

    # shift-space point helpers --------------------------------------------
    def encode(self, symbols: Sequence[int]) -> int:
        """Code of a word over {1, 2}; words shorter than depth are padded with 1."""
        if self.kind is not SpaceKind.SHIFT:
            raise ValueError("encode is for the shift space")
        code = 0
        syms = list(symbols)[: self.resolution]
        syms += [1] * (self.resolution - len(syms))
        for s in syms:
            if s not in (1, 2):
                raise ValueError("symbols must be 1 or 2")
            code = (code << 1) | (s - 1)
        return code

    def decode(self, code: int) -> tuple:
        if self.kind is not SpaceKind.SHIFT:
            raise ValueError("decode is for the shift space")
        d = self.resolution
        return tuple(((int(code) >> (d - 1 - i)) & 1) + 1 for i in range(d))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "resolution": self.resolution}

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpace":
        return cls(SpaceKind(data["kind"]), int(data["resolution"]))


class CompactSet:
    """A nonempty closed subset of a :class:`GridSpace`, stored as a cell mask."""

    __slots__ = ("space", "mask")

    def __init__(self, space: GridSpace, mask):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (space.size,):
            raise ValueError(f"mask length {mask.shape} does not match space size {space.size}")
        if not mask.any():
            raise EmptySetError("a CompactSet must be nonempty")
        mask = mask.copy()
        mask.flags.writeable = False
        self.space = space
        self.mask = mask

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def points(self) -> np.ndarray:
        return self.space.centers[self.mask]

    @property
    def cardinality(self) -> int:
        return int(self.mask.sum())

    def _check(self, other: "CompactSet"):
        if other.space != self.space:
            raise SpaceMismatchError(f"{self.space} vs {other.space}")

    def __or__(self, other: "CompactSet") -> "CompactSet":
        self._check(other)
        return CompactSet(self.space, self.mask | other.mask)

    def issubset(self, other: "CompactSet") -> bool:
        self._check(other)
        return not np.any(self.mask & ~other.mask)

    def __le__(self, other):
        return self.issubset(other)

    def __eq__(self, other):
        if not isinstance(other, CompactSet):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash((self.space, np.packbits(self.mask).tobytes()))

    def __len__(self):
        return self.cardinality

    def __repr__(self):
        return f"CompactSet({self.space.kind.value}, n={self.space.size}, occupied={self.cardinality})"

    def is_full(self) -> bool:
        return bool(self.mask.all())

    def dilate(self, radius: float) -> "CompactSet":
        """All cells within ``radius`` of the set."""
        return CompactSet(self.space, distance_transform(self.space, self.mask) <= radius + 1e-12)

    def erode(self, radius: float) -> "CompactSet | None":
        """Cells whose closed ``radius``-ball lies inside the set; None if nothing survives."""
        if self.is_full():
            return self
        far = distance_transform(self.space, ~self.mask) > radius + 1e-12
        mask = self.mask & far
        return CompactSet(self.space, mask) if mask.any() else None

    def runs(self) -> list:
        """Run-length encoding as ``[[start, length], ...]``."""
        m = np.concatenate([[False], self.mask, [False]]).astype(np.int8)
        edges = np.flatnonzero(np.diff(m))
        starts, stops = edges[::2], edges[1::2]
        return [[int(s), int(e - s)] for s, e in zip(starts, stops)]

    def to_json(self) -> dict:
        return {"space": self.space.to_dict(), "runs": self.runs()}

    @classmethod
    def from_json(cls, data: dict) -> "CompactSet":
        space = GridSpace.from_dict(data["space"])
        mask = space.empty_mask()
        for start, length in data["runs"]:
            if start < 0 or length < 0 or start + length > space.size:
                raise ValueError(f"run [{start}, {length}] exceeds the space")
            mask[start : start + length] = True
        return cls(space, mask)


# distance transforms -------------------------------------------------------

def _steps_1d(mask: np.ndarray) -> np.ndarray:
    """Index distance to the nearest True entry along the last axis."""
    n = mask.shape[-1]
    idx = np.arange(n, dtype=np.int32)
    big = np.int32(4 * n + 4)
    left = np.maximum.accumulate(np.where(mask, idx, -big), axis=-1)
    rev = np.ascontiguousarray(mask[..., ::-1])
    right = np.maximum.accumulate(np.where(rev, idx, -big), axis=-1)
    return np.minimum(idx - left, (idx - right)[..., ::-1])


def distance_steps(space: GridSpace, mask: np.ndarray) -> np.ndarray:
    """Integer node-distance to the mask for the interval and the circle."""
    if space.kind is SpaceKind.INTERVAL:
        return _steps_1d(mask)
    n = space.size
    half = n // 2
    tiled = np.concatenate([mask[..., n - half :], mask, mask[..., :half]], axis=-1)
    return _steps_1d(tiled)[..., half : half + n]


def distance_transform(space: GridSpace, mask: np.ndarray) -> np.ndarray:
    """Distance from every cell center to the set ``mask`` (batched on leading axes).

    The interval and circle use a two-sweep transform over the cell path
    (equivalent to breadth-first search on the adjacency graph); the shift
    space walks the prefix tree one level at a time.
    """
    mask = np.asarray(mask, dtype=bool)
    if space.kind is not SpaceKind.SHIFT:
        return distance_steps(space, mask) * space.cell_diameter
    d = space.resolution
    lead = mask.shape[:-1]
    out = np.ones(mask.shape, dtype=float)
    for level in range(d + 1):
        occ = mask.reshape(*lead, 1 << level, 1 << (d - level)).any(axis=-1)
        occ = np.repeat(occ, 1 << (d - level), axis=-1)
        out = np.where(occ, 0.0 if level == d else 2.0 ** -level, out)
    return out


def _masks_of(a: CompactSet, b: CompactSet):
    if a.space != b.space:
        raise SpaceMismatchError(f"{a.space} vs {b.space}")
    return a.mask, b.mask


def hausdorff_distance(a: CompactSet, b: CompactSet) -> float:
    ma, mb = _masks_of(a, b)
    return float(hausdorff_masks(a.space, ma, mb))


def hausdorff_masks(space: GridSpace, ma: np.ndarray, mb: np.ndarray) -> np.ndarray:
    """Hausdorff distance between (batches of) nonempty masks."""
    ma = np.asarray(ma, dtype=bool)
    mb = np.asarray(mb, dtype=bool)
    if not (ma.any(axis=-1).all() and mb.any(axis=-1).all()):
        raise EmptySetError("Hausdorff distance needs nonempty sets")
    if space.kind is SpaceKind.SHIFT:
        return _shift_hausdorff(space, ma, mb)
    ma, mb = np.broadcast_arrays(ma, mb)
    shape = ma.shape[:-1]
    a2 = np.ascontiguousarray(ma.reshape(-1, space.size))
    b2 = np.ascontiguousarray(mb.reshape(-1, space.size))
    steps = hausdorff_steps(a2, b2, space.kind is SpaceKind.CIRCLE)
    return (steps * space.cell_diameter).reshape(shape)


def _shift_hausdorff(space: GridSpace, ma: np.ndarray, mb: np.ndarray) -> np.ndarray:
    # d_H <= 2^-L iff both sets meet exactly the same depth-L cylinders.
    ma, mb = np.broadcast_arrays(ma, mb)
    out = np.where((ma == mb).all(axis=-1), 0.0, 1.0)
    undecided = out > 0
    levels = []
    for level in range(space.resolution, 0, -1):
        ma = ma[..., ::2] | ma[..., 1::2]
        mb = mb[..., ::2] | mb[..., 1::2]
        levels.append((level - 1, (ma == mb).all(axis=-1)))
    for level, same in levels:
        hit = undecided & same
        out = np.where(hit, 2.0**-level, out)
        undecided &= ~same
    return out


def hausdorff_bruteforce(a: CompactSet, b: CompactSet) -> float:
    """O(n^2) reference: all pairwise metric evaluations between occupied centers."""
    _masks_of(a, b)
    d = a.space.metric(a.points[:, None], b.points[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def distance_point_to_set(x, a: CompactSet) -> float:
    return float(a.space.metric(a.points, x).min())


def epsilon_net_cover_check(a: CompactSet, eps: float) -> bool:
    """True iff every cell center of the space lies within ``eps`` of ``a``."""
    if eps <= a.space.cell_diameter:
        raise ValueError("eps must exceed the cell diameter")
    return bool(distance_transform(a.space, a.mask).max() < eps)


def net_points(space: GridSpace, spacing: float) -> np.ndarray:
    """Cell centers forming a net with (at most) the given spacing."""
    if space.kind is SpaceKind.SHIFT:
        level = max(0, min(space.resolution, math.ceil(-math.log2(spacing))))
        step = 1 << (space.resolution - level)
        return np.arange(0, space.size, step, dtype=np.int64)
    step = max(1, int(math.floor(spacing * space.resolution)))
    idx = np.arange(0, space.resolution, step)
    if space.kind is SpaceKind.INTERVAL and idx[-1] != space.resolution:
        idx = np.append(idx, space.resolution)
    return idx / space.resolution


def random_mask(space: GridSpace, rng: np.random.Generator) -> np.ndarray:
    """A random nonempty mask: sparse points, a union of balls, or a mixture."""
    n = space.size
    style = rng.integers(3)
    if style == 0:
        k = int(rng.integers(1, 6))
        mask = space.empty_mask()
        mask[rng.integers(0, n, size=k)] = True
        return mask
    centers = space.centers[rng.integers(0, n, size=int(rng.integers(1, 4)))]
    radii = rng.uniform(0, 0.15, size=len(centers)) * space.diameter
    mask = np.zeros(n, dtype=bool)
    for c, r in zip(centers, radii):
        mask |= space.metric(space.centers, c) <= r
    if style == 2:
        mask |= rng.random(n) < 0.01
    mask[rng.integers(n)] = True
    return mask
