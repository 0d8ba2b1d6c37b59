"""One-sided sequences over {1, 2}, truncated at a finite depth.

Metric statements are exact at scales >= 2^(1-depth); below that the
truncation hides the difference and nothing is asserted.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .maps import IfsSystem, Shift, SymbolPrepend, image_of_set
from .spaces import CompactSet, GridSpace


@dataclass(frozen=True)
class WordPoint:
    symbols: tuple

    def __post_init__(self):
        if not self.symbols or any(s not in (1, 2) for s in self.symbols):
            raise ValueError("symbols must be a nonempty sequence over {1, 2}")
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))

    @property
    def depth(self) -> int:
        return len(self.symbols)

    @property
    def space(self) -> GridSpace:
        return GridSpace.shift(self.depth)

    @property
    def code(self) -> int:
        return self.space.encode(self.symbols)

    @classmethod
    def from_code(cls, code: int, depth: int) -> "WordPoint":
        return cls(GridSpace.shift(depth).decode(code))

    @classmethod
    def periodic(cls, pattern, depth: int) -> "WordPoint":
        return cls(tuple(itertools.islice(itertools.cycle(pattern), depth)))

    def distance(self, other: "WordPoint") -> float:
        return float(self.space.metric(self.code, other.code))

    def __str__(self):
        return "".join(map(str, self.symbols))


def shift_map(x: WordPoint, pad: int = 1) -> WordPoint:
    """sigma: drop the first symbol; the freed last position is filled with ``pad``."""
    return WordPoint(x.symbols[1:] + (pad,))


def shift_set(a: CompactSet) -> CompactSet:
    """Set-level sigma: the freed last position takes both symbols."""
    return image_of_set(Shift(), a)


def prepend_set(a: CompactSet) -> CompactSet:
    return CompactSet(a.space, image_of_set(SymbolPrepend(1), a).mask | image_of_set(SymbolPrepend(2), a).mask)


def agrees_on_prefix(x: WordPoint, y: WordPoint, length: int) -> bool:
    return x.symbols[:length] == y.symbols[:length]


def periodic_check(pattern, depth: int) -> bool:
    """sigma^p fixes the periodic point with period p on the overlapping prefix."""
    x = WordPoint.periodic(pattern, depth)
    y = x
    for _ in range(len(pattern)):
        y = shift_map(y)
    return agrees_on_prefix(x, y, depth - len(pattern))


@dataclass
class SensitivityWitness:
    prefix: tuple
    eta: WordPoint
    omega: WordPoint
    shifts: int
    initial_distance: float
    separation: float

    def to_row(self) -> dict:
        return {
            "cylinder": "".join(map(str, self.prefix)) or "*",
            "eta": str(self.eta),
            "omega": str(self.omega),
            "shifts": self.shifts,
            "initial_distance": self.initial_distance,
            "separation": self.separation,
        }


@dataclass
class ShiftSensitivity:
    depth: int
    sensitivity_constant: float
    witnesses: list


def verify_shift_sensitive(depth: int) -> ShiftSensitivity:
    """For every cylinder of depth k < depth, a pair in it separated to distance 1 by sigma^k.

    The pair continues the prefix with 1 and with 2, padded by 1s; the shifts
    are applied with the set-level map evaluated on points.
    """
    if depth < 3:
        raise ValueError("depth must be at least 3")
    space = GridSpace.shift(depth)
    sigma = Shift()
    witnesses = []
    for k in range(depth):
        for prefix in itertools.product((1, 2), repeat=k):
            eta = WordPoint(prefix + (1,) + (1,) * (depth - k - 1))
            omega = WordPoint(prefix + (2,) + (1,) * (depth - k - 1))
            a, b = eta.code, omega.code
            for _ in range(k):
                a, b = sigma.evaluate(a, space), sigma.evaluate(b, space)
            sep = float(space.metric(a, b))
            witnesses.append(SensitivityWitness(prefix, eta, omega, k, eta.distance(omega), sep))
    const = min(w.separation for w in witnesses)
    return ShiftSensitivity(depth, const, witnesses)


@dataclass
class PrependEquicontinuity:
    depth: int
    eps: float
    delta: float
    holds: bool
    max_ratio: float
    exact_halving: bool
    pairs_checked: int
    words_checked: int


def verify_prepend_equicontinuous(depth: int, eps: float) -> PrependEquicontinuity:
    """Exhaustive check that delta = eps works for the prepend IFS.

    Every prepend word up to length ``depth`` is applied to all points, and
    all pairs within delta are compared. ``max_ratio`` is the largest
    d(w eta, w omega) / d(eta, omega); ``exact_halving`` confirms a single
    prepend halves every distance at resolvable scales.
    """
    if eps < 2.0 ** (2 - depth):
        raise ValueError(f"eps must be at least 2^(2-depth) = {2.0 ** (2 - depth)}")
    space = GridSpace.shift(depth)
    sys = IfsSystem(space, (SymbolPrepend(1), SymbolPrepend(2)), "prepend")
    codes = np.arange(space.size, dtype=np.int64)
    base = space.metric(codes[:, None], codes[None, :])
    off = base > 0
    close = off & (base < eps)
    holds, max_ratio, words = True, 0.0, 0
    halving = True
    images = codes[None, :]
    for length in range(1, depth + 1):
        images = np.concatenate([g.evaluate(images, space) for g in sys.generators])
        words += len(images)
        for row in images:
            d = space.metric(row[:, None], row[None, :])
            holds &= bool((d[close] < eps).all())
            max_ratio = max(max_ratio, float((d[off] / base[off]).max()))
            if length == 1:
                resolvable = base >= 2.0 ** (2 - depth)
                halving &= bool(np.array_equal(d[resolvable], base[resolvable] / 2))
    return PrependEquicontinuity(depth, eps, eps, holds, max_ratio, halving, int(off.sum()), words)


def left_inverse_check(depth: int) -> bool:
    """sigma(phi_j(eta)) agrees with eta on the first depth-1 symbols, for all eta and j."""
    space = GridSpace.shift(depth)
    codes = np.arange(space.size, dtype=np.int64)
    keep = ~np.int64(1)
    sigma = Shift()
    return all(
        np.array_equal(sigma.evaluate(SymbolPrepend(j).evaluate(codes, space), space) & keep, codes & keep)
        for j in (1, 2)
    )
