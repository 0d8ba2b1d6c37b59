"""The Hutchinson operator F(Y) = closure(U phi(Y)) on the grid hyperspace.

Orbits, the d_F metric sup_i d_H(F^i a, F^i b), attractor convergence and a
randomized probe of equicontinuity of (K(X), F).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .maps import IfsSystem, push
from .spaces import (
    CompactSet,
    GridSpace,
    SpaceKind,
    distance_transform,
    hausdorff_masks,
    random_mask,
)


def step_masks(sys: IfsSystem, masks: np.ndarray) -> np.ndarray:
    """F applied to one mask or a (batch, n) stack of masks."""
    return push(sys.operator, masks)


def hutchinson_step(sys: IfsSystem, a: CompactSet) -> CompactSet:
    return CompactSet(a.space, step_masks(sys, a.mask))


def orbit_masks(sys: IfsSystem, masks: np.ndarray, k: int) -> Iterator[np.ndarray]:
    """Yield F^0(masks), ..., F^k(masks) without storing the orbit."""
    yield masks
    for _ in range(k):
        masks = step_masks(sys, masks)
        yield masks


@dataclass
class HyperOrbit:
    system: IfsSystem
    seed: CompactSet
    sets: list
    horizon: int

    @property
    def last(self) -> CompactSet:
        return self.sets[-1]

    def __len__(self):
        return len(self.sets)

    def __getitem__(self, i) -> CompactSet:
        return self.sets[i]


def iterate(sys: IfsSystem, seed: CompactSet, k: int) -> HyperOrbit:
    if k < 0:
        raise ValueError("number of iterations must be nonnegative")
    sets = [CompactSet(seed.space, m) for m in orbit_masks(sys, seed.mask, k)]
    return HyperOrbit(sys, seed, sets, k)


def invariance_defect(sys: IfsSystem, a: CompactSet) -> tuple:
    """Both one-sided distances between F(A) and A.

    Returns ``(sup_{x in F(A)} d(x, A), sup_{y in A} d(y, F(A)))``; both vanish
    iff F(A) = A on the grid.
    """
    fa = step_masks(sys, a.mask)
    da = distance_transform(a.space, a.mask)
    dfa = distance_transform(a.space, fa)
    return float(da[fa].max()), float(dfa[a.mask].max())


# attractor convergence ----------------------------------------------------

@dataclass
class SeedConvergence:
    first_hit: int | None
    stays_below: bool
    distances: np.ndarray
    cardinalities: np.ndarray

    @property
    def converged(self) -> bool:
        return self.first_hit is not None and self.stays_below


@dataclass
class ConvergenceReport:
    eps: float
    max_iter: int
    seeds: list

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.seeds)

    @property
    def first_hits(self) -> list:
        return [s.first_hit for s in self.seeds]


def distances_to_target(sys: IfsSystem, masks: np.ndarray, target: np.ndarray, max_iter: int):
    """d_H(F^j(seed), target) and cardinalities for j = 0..max_iter, shape (max_iter+1, batch)."""
    masks = np.atleast_2d(masks)
    dist, card = [], []
    for m in orbit_masks(sys, masks, max_iter):
        dist.append(hausdorff_masks(sys.space, m, target[None, :]))
        card.append(m.sum(axis=-1))
    return np.array(dist), np.array(card)


def attractor_convergence(
    sys: IfsSystem,
    target: CompactSet,
    seeds: Sequence[CompactSet],
    eps: float,
    max_iter: int,
) -> ConvergenceReport:
    """First index with d_H(F^N(seed), target) < eps, and whether it stays below to max_iter.

    Non-convergence is reported, not raised.
    """
    if eps <= 2 * sys.space.cell_diameter:
        raise ValueError("eps must exceed two cell diameters")
    stack = np.array([s.mask for s in seeds])
    dist, card = distances_to_target(sys, stack, target.mask, max_iter)
    results = []
    for b in range(len(seeds)):
        below = dist[:, b] < eps
        hits = np.flatnonzero(below)
        first = int(hits[0]) if len(hits) else None
        stays = first is not None and bool(below[first:].all())
        results.append(SeedConvergence(first, stays, dist[:, b], card[:, b]))
    return ConvergenceReport(eps, max_iter, results)


def uniform_convergence_index(
    sys: IfsSystem,
    eps: float,
    max_iter: int,
    seeds: np.ndarray | None = None,
    target: np.ndarray | None = None,
) -> int | None:
    """Least n with d_H(F^j(B), target) < eps for all seeds B and all n <= j <= max_iter.

    Defaults to all singletons (every compact set contains one, and F is
    monotone, so singletons are the worst case) and target = X.
    """
    space = sys.space
    if target is None:
        target = np.ones(space.size, dtype=bool)
    if seeds is None:
        seeds = np.eye(space.size, dtype=bool)
    worst = np.zeros(max_iter + 1)
    for start in range(0, len(seeds), 512):
        dist, _ = distances_to_target(sys, seeds[start : start + 512], target, max_iter)
        worst = np.maximum(worst, dist.max(axis=1))
    bad = np.flatnonzero(worst >= eps)
    if len(bad) == 0:
        return 0
    if bad[-1] == max_iter:
        return None
    return int(bad[-1] + 1)


# d_F ----------------------------------------------------------------------

@dataclass
class DFEstimate:
    sup: float
    argmax_index: int
    tail_bound_valid: bool
    tail_distance: float


def d_F_batch(sys: IfsSystem, a: np.ndarray, b: np.ndarray, horizon: int, attractor: np.ndarray | None = None):
    """Batched sup_{0<=i<=horizon} d_H(F^i a, F^i b).

    Returns (sup, argmax index, distance of the farther orbit end to the attractor).
    """
    space = sys.space
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    if attractor is None:
        attractor = np.ones(space.size, dtype=bool)
    sup = np.full(len(a), -1.0)
    arg = np.zeros(len(a), dtype=int)
    for i, (ma, mb) in enumerate(zip(orbit_masks(sys, a, horizon), orbit_masks(sys, b, horizon))):
        d = hausdorff_masks(space, ma, mb)
        better = d > sup
        sup = np.where(better, d, sup)
        arg = np.where(better, i, arg)
    tail = np.maximum(
        hausdorff_masks(space, ma, attractor[None, :]),
        hausdorff_masks(space, mb, attractor[None, :]),
    )
    return sup, arg, tail


def d_F_estimate(
    sys: IfsSystem,
    a: CompactSet,
    b: CompactSet,
    horizon: int,
    eps: float | None = None,
    attractor: CompactSet | None = None,
) -> DFEstimate:
    """Finite-horizon estimate of d_F(a, b).

    ``tail_bound_valid`` holds when both orbits end within ``eps/4`` of the
    attractor (default X), so later indices add at most ``eps/2``. Without
    ``eps`` the tail tolerance is two cell diameters.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    eps_tail = eps / 4 if eps is not None else 2 * sys.space.cell_diameter
    att = None if attractor is None else attractor.mask
    sup, arg, tail = d_F_batch(sys, a.mask, b.mask, horizon, att)
    return DFEstimate(float(sup[0]), int(arg[0]), bool(tail[0] < eps_tail), float(tail[0]))


# equicontinuity probe ----------------------------------------------------------

@dataclass
class Witness:
    delta: float
    a: CompactSet
    b: CompactSet
    initial_distance: float
    d_F: float
    index: int


@dataclass
class EquicontinuityProbe:
    eps: float
    horizon: int
    delta_found: float | None
    witness_pairs: list = field(default_factory=list)
    ladder: list = field(default_factory=list)  # (delta, pairs tested, violations)


def _neighbor(space: GridSpace, i: int, delta: float, rng, adjacent: bool) -> int:
    if space.kind is SpaceKind.SHIFT:
        bits = math.ceil(space.resolution + math.log2(delta)) - 1
        bits = max(1, min(bits, space.resolution))
        flip = 1 if adjacent else int(rng.integers(1, 1 << bits))
        return i ^ flip
    kmax = max(1, math.ceil(delta / space.cell_diameter) - 1)
    k = 1 if adjacent else int(rng.integers(1, kmax + 1))
    j = i + k if rng.random() < 0.5 else i - k
    if space.kind is SpaceKind.CIRCLE:
        return j % space.size
    if not 0 <= j < space.size:
        j = i - (j - i)
    return j


def sample_close_pairs(space: GridSpace, delta: float, trials: int, rng) -> tuple:
    """Random mask pairs with 0 <= d_H < delta: half dilated fat sets, half singletons."""
    n = space.size
    a = np.zeros((trials, n), dtype=bool)
    b = np.zeros((trials, n), dtype=bool)
    n_fat = trials // 2
    for t in range(n_fat):
        base = random_mask(space, rng)
        dt = distance_transform(space, base)
        r = rng.uniform(0, delta)
        a[t] = base
        b[t] = dt <= r
    for t in range(n_fat, trials):
        i = int(rng.integers(n))
        j = _neighbor(space, i, delta, rng, adjacent=(t - n_fat) < max(1, (trials - n_fat) // 4))
        a[t, i] = True
        b[t, j] = True
    d0 = hausdorff_masks(space, a, b)
    keep = d0 < delta
    return a[keep], b[keep], d0[keep]


def hyperspace_equicontinuity_probe(
    sys: IfsSystem,
    eps: float,
    trials: int,
    horizon: int,
    seed: int = 0,
    max_witnesses: int = 5,
) -> EquicontinuityProbe:
    """Search a halving ladder of delta values starting at eps.

    Returns the largest ladder delta for which every sampled pair with
    d_H < delta has finite-horizon d_F < eps, plus violating pairs for each
    rejected delta. The ladder stops above two cell diameters.
    """
    space = sys.space
    if eps <= 4 * space.cell_diameter:
        raise ValueError("eps must exceed four cell diameters")
    rng = np.random.default_rng(seed)
    probe = EquicontinuityProbe(eps, horizon, None)
    delta = eps
    while delta > 2 * space.cell_diameter:
        a, b, d0 = sample_close_pairs(space, delta, trials, rng)
        sup, arg, _ = d_F_batch(sys, a, b, horizon)
        bad = np.flatnonzero(sup >= eps)
        probe.ladder.append((delta, len(a), len(bad)))
        if len(bad) == 0:
            probe.delta_found = delta
            break
        for t in bad[:max_witnesses]:
            probe.witness_pairs.append(
                Witness(delta, CompactSet(space, a[t]), CompactSet(space, b[t]),
                        float(d0[t]), float(sup[t]), int(arg[t]))
            )
        delta /= 2
    return probe
