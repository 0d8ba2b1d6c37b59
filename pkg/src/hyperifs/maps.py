"""Generator maps, words in the semigroup they generate, and set images.

Grid images are superset-safe: the image of a cell is the set of cells
meeting the ball of radius ``L * cell_diameter / 2`` around the image of the
cell center, where ``L`` bounds the map's Lipschitz constant over that cell.
Each map is compiled once per space into a sparse 0/1 transfer matrix whose
row ``i`` marks the grid image of cell ``i``; images and preimages of masks
are then sparse matrix products.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, fields
from functools import cached_property, lru_cache
from typing import ClassVar, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .spaces import CompactSet, GridSpace, SpaceKind, SpaceMismatchError

_REGISTRY: dict = {}


def _register(cls):
    _REGISTRY[cls.kind] = cls
    return cls


@dataclass(frozen=True)
class MapSpec:
    """Base class for continuous self-maps of a grid space."""

    kind: ClassVar[str] = ""
    domain: ClassVar[tuple] = ()
    exact: ClassVar[bool] = True

    def evaluate(self, x, space: GridSpace) -> np.ndarray:
        raise NotImplementedError

    @property
    def lipschitz_bound(self) -> float:
        raise NotImplementedError

    def local_lipschitz(self, x, radius: float, space: GridSpace) -> np.ndarray:
        """Upper bound of the Lipschitz constant on the closed ball B(x, radius)."""
        return np.full(np.shape(x), self.lipschitz_bound, dtype=float)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    @staticmethod
    def from_dict(data: dict) -> "MapSpec":
        data = dict(data)
        try:
            cls = _REGISTRY[data.pop("kind")]
        except KeyError as exc:
            raise ValueError(f"unknown map kind {exc.args[0]!r}") from None
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**kwargs)


@_register
@dataclass(frozen=True)
class PiecewiseLinear(MapSpec):
    """Continuous piecewise linear self-map of [0, 1] through the given nodes."""

    breakpoints: tuple = (0.0, 1.0)
    values: tuple = (0.0, 1.0)

    kind: ClassVar[str] = "piecewise_linear"
    domain: ClassVar[tuple] = (SpaceKind.INTERVAL,)

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        if len(bp) != len(vals) or len(bp) < 2:
            raise ValueError("need matching breakpoints and values (at least two)")
        if bp[0] != 0.0 or bp[-1] != 1.0 or any(b >= c for b, c in zip(bp, bp[1:])):
            raise ValueError("breakpoints must increase from 0 to 1")
        if min(vals) < 0.0 or max(vals) > 1.0:
            raise ValueError("values must lie in [0, 1]")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @cached_property
    def _slopes(self):
        bp, vals = np.array(self.breakpoints), np.array(self.values)
        return np.abs(np.diff(vals) / np.diff(bp))

    def evaluate(self, x, space=None):
        return np.interp(np.asarray(x, dtype=float), self.breakpoints, self.values)

    @property
    def lipschitz_bound(self):
        return float(self._slopes.max())

    def local_lipschitz(self, x, radius, space=None):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        bp = self.breakpoints
        for k, slope in enumerate(self._slopes):
            hit = (x + radius >= bp[k]) & (x - radius <= bp[k + 1])
            out = np.where(hit, np.maximum(out, slope), out)
        return out


@_register
@dataclass(frozen=True)
class Rotation(MapSpec):
    """Rigid rotation x -> x + angle (mod 1) of the circle."""

    angle: float = 0.0

    kind: ClassVar[str] = "rotation"
    domain: ClassVar[tuple] = (SpaceKind.CIRCLE,)

    def evaluate(self, x, space=None):
        return np.mod(np.asarray(x, dtype=float) + self.angle, 1.0)

    @property
    def lipschitz_bound(self):
        return 1.0


@_register
@dataclass(frozen=True)
class NorthSouth(MapSpec):
    """North-south circle diffeomorphism ``g(t) = t - s/(2 pi) sin(2 pi (t - p))``.

    ``p`` is attracting with multiplier ``1 - s`` and ``q = p + 1/2`` is
    repelling with multiplier ``1 + s``. With ``inverse=True`` the map is
    ``g^{-1}``, which swaps the roles of the poles.
    """

    p: float = 0.0
    strength: float = 0.3
    inverse: bool = False

    kind: ClassVar[str] = "north_south"
    domain: ClassVar[tuple] = (SpaceKind.CIRCLE,)
    exact: ClassVar[bool] = False

    def __post_init__(self):
        if not 0.0 < self.strength < 1.0:
            raise ValueError("strength must lie in (0, 1) for a diffeomorphism")

    @property
    def q(self) -> float:
        return (self.p + 0.5) % 1.0

    def _lift(self, t):
        return t - self.strength / (2 * math.pi) * np.sin(2 * math.pi * (t - self.p))

    def derivative(self, t):
        return 1.0 - self.strength * np.cos(2 * math.pi * (np.asarray(t, dtype=float) - self.p))

    def _inverse_lift(self, y):
        # the lift is increasing and moves points by at most s / (2 pi)
        w = self.strength / (2 * math.pi)
        lo, hi = y - w - 1e-12, y + w + 1e-12
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self._lift(mid) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)

    def evaluate(self, x, space=None):
        x = np.asarray(x, dtype=float)
        y = self._inverse_lift(x) if self.inverse else self._lift(x)
        return np.mod(y, 1.0)

    @property
    def lipschitz_bound(self):
        s = self.strength
        return 1.0 / (1.0 - s) if self.inverse else 1.0 + s

    def local_lipschitz(self, x, radius, space=None):
        s = self.strength
        x = np.asarray(x, dtype=float)
        curvature = 2 * math.pi * s  # bound on |g''|
        if not self.inverse:
            return np.minimum(np.abs(self.derivative(x)) + curvature * radius, 1.0 + s)
        t = self._inverse_lift(x)
        r = radius / (1.0 - s)
        low = np.maximum(self.derivative(t) - curvature * r, 1.0 - s)
        return 1.0 / low


@_register
@dataclass(frozen=True)
class SymbolPrepend(MapSpec):
    """Prepend ``symbol`` (1 or 2) to a word: a 1/2-contraction of the shift space."""

    symbol: int = 1

    kind: ClassVar[str] = "symbol_prepend"
    domain: ClassVar[tuple] = (SpaceKind.SHIFT,)

    def __post_init__(self):
        if self.symbol not in (1, 2):
            raise ValueError("symbol must be 1 or 2")

    def evaluate(self, x, space):
        x = np.asarray(x, dtype=np.int64)
        return ((self.symbol - 1) << (space.resolution - 1)) | (x >> 1)

    @property
    def lipschitz_bound(self):
        return 0.5


@_register
@dataclass(frozen=True)
class Shift(MapSpec):
    """The shift map (drop the first symbol). Point evaluation pads with symbol 1;
    grid images contain both completions of the freed last symbol."""

    kind: ClassVar[str] = "shift"
    domain: ClassVar[tuple] = (SpaceKind.SHIFT,)

    def evaluate(self, x, space):
        x = np.asarray(x, dtype=np.int64)
        return (x << 1) & (space.size - 1)

    @property
    def lipschitz_bound(self):
        return 2.0


def eval_map(m: MapSpec, x, space: GridSpace):
    return m.evaluate(x, space)


# grid images --------------------------------------------------------------

def image_ranges(m: MapSpec, space: GridSpace):
    """Per-cell ``(lo, hi)`` index ranges of grid images (unwrapped on the circle)."""
    if space.kind not in m.domain:
        raise SpaceMismatchError(f"{type(m).__name__} is not defined on {space.kind.value}")
    x = space.centers
    y = m.evaluate(x, space)
    if space.kind is SpaceKind.SHIFT:
        lip = m.lipschitz_bound
        t = int(math.floor(math.log2(lip))) if lip >= 1 else 0
        lo = (y >> t) << t
        return lo, lo + (1 << t) - 1
    h = space.cell_diameter
    lip = m.local_lipschitz(x, h / 2, space)
    u = np.asarray(y, dtype=float) / h
    reach = lip / 2 + 0.5 + (0.0 if m.exact else 1e-9)
    lo = np.minimum(np.floor(u - reach) + 1, np.floor(u)).astype(np.int64)
    hi = np.maximum(np.ceil(u + reach) - 1, np.ceil(u)).astype(np.int64)
    if space.kind is SpaceKind.INTERVAL:
        lo = np.clip(lo, 0, space.resolution)
        hi = np.clip(hi, 0, space.resolution)
    else:
        hi = np.minimum(hi, lo + space.size - 1)
    return lo, hi


@lru_cache(maxsize=512)
def transfer_matrix(m: MapSpec, space: GridSpace) -> sp.csr_matrix:
    """Sparse matrix with ``M[i, k] = 1`` iff cell ``k`` is in the grid image of cell ``i``."""
    lo, hi = image_ranges(m, space)
    n = space.size
    widths = hi - lo + 1
    rows = np.repeat(np.arange(n), widths)
    starts = np.repeat(np.cumsum(widths) - widths, widths)
    cols = np.repeat(lo, widths) + (np.arange(widths.sum()) - starts)
    cols %= n
    data = np.ones(len(rows), dtype=np.float32)
    mat = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    mat.sum_duplicates()
    mat.data[:] = 1.0
    return mat


@lru_cache(maxsize=512)
def _push_matrix(m: MapSpec, space: GridSpace) -> sp.csr_matrix:
    return transfer_matrix(m, space).T.tocsr()


def push(mat_t: sp.csr_matrix, masks: np.ndarray) -> np.ndarray:
    """Apply a transposed transfer matrix to one mask or a (batch, n) stack."""
    x = np.asarray(masks, dtype=np.float32)
    if x.ndim == 1:
        return (mat_t @ x) > 0
    return (mat_t @ x.T).T > 0


def image_mask(m: MapSpec, space: GridSpace, masks: np.ndarray) -> np.ndarray:
    return push(_push_matrix(m, space), masks)


def preimage_mask(m: MapSpec, space: GridSpace, masks: np.ndarray) -> np.ndarray:
    return push(transfer_matrix(m, space), masks)


def image_of_set(m: MapSpec, a: CompactSet) -> CompactSet:
    return CompactSet(a.space, image_mask(m, a.space, a.mask))


def preimage_of_set(m: MapSpec, a: CompactSet) -> CompactSet | None:
    """Cells whose grid image meets ``a``; None when no cell qualifies."""
    mask = preimage_mask(m, a.space, a.mask)
    return CompactSet(a.space, mask) if mask.any() else None


# words ---------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Word:
    """A composition of generators. ``Word((i_k, ..., i_1))`` is
    ``phi_{i_k} o ... o phi_{i_1}``: the last index is applied first."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise ValueError("words are nonempty (the semigroup has no identity)")
        if min(idx) < 0:
            raise ValueError("generator indices are nonnegative")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    @property
    def length(self) -> int:
        return len(self.indices)

    def __matmul__(self, other: "Word") -> "Word":
        """Composition ``self o other`` (``other`` acts first)."""
        return Word(self.indices + other.indices)

    def __str__(self):
        return "o".join(f"f{i + 1}" for i in self.indices)


def enumerate_words(num_generators: int, max_len: int, min_len: int = 1) -> Iterator[Word]:
    """Breadth-first enumeration by length, lexicographic within a length."""
    for k in range(min_len, max_len + 1):
        for idx in itertools.product(range(num_generators), repeat=k):
            yield Word(idx)


# systems -------------------------------------------------------------------

@dataclass(frozen=True)
class IfsSystem:
    space: GridSpace
    generators: tuple
    name: str = field(default="", compare=False)

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise ValueError("an IFS needs at least one generator")
        for g in gens:
            if self.space.kind not in g.domain:
                raise SpaceMismatchError(f"{g} is not defined on {self.space.kind.value}")
        object.__setattr__(self, "generators", gens)

    def __len__(self):
        return len(self.generators)

    def with_resolution(self, resolution: int) -> "IfsSystem":
        return IfsSystem(GridSpace(self.space.kind, resolution), self.generators, self.name)

    def subsystem(self, indices: Sequence[int], name: str = "") -> "IfsSystem":
        return IfsSystem(self.space, tuple(self.generators[i] for i in indices), name)

    @cached_property
    def operator(self) -> sp.csr_matrix:
        """Transposed transfer matrix of the Hutchinson operator (union of generators)."""
        total = sum(transfer_matrix(g, self.space) for g in self.generators)
        total = total.T.tocsr()
        total.data[:] = 1.0
        return total

    def to_config(self) -> dict:
        return {
            "name": self.name,
            "space": self.space.to_dict(),
            "generators": [g.to_dict() for g in self.generators],
        }

    @classmethod
    def from_config(cls, data: dict) -> "IfsSystem":
        return cls(
            GridSpace.from_dict(data["space"]),
            tuple(MapSpec.from_dict(g) for g in data["generators"]),
            data.get("name", ""),
        )


def _check_word(w: Word, sys: IfsSystem):
    if max(w.indices) >= len(sys.generators):
        raise IndexError(f"word {w.indices} uses a generator outside 0..{len(sys.generators) - 1}")


def eval_word(w: Word, sys: IfsSystem, x):
    _check_word(w, sys)
    for i in reversed(w.indices):
        x = sys.generators[i].evaluate(x, sys.space)
    return x


def image_of_word(w: Word, sys: IfsSystem, a: CompactSet) -> CompactSet:
    _check_word(w, sys)
    mask = a.mask
    for i in reversed(w.indices):
        mask = image_mask(sys.generators[i], sys.space, mask)
    return CompactSet(a.space, mask)


def preimage_of_word(w: Word, sys: IfsSystem, a: CompactSet) -> CompactSet | None:
    _check_word(w, sys)
    mask = a.mask
    for i in w.indices:
        mask = preimage_mask(sys.generators[i], sys.space, mask)
        if not mask.any():
            return None
    return CompactSet(a.space, mask)
