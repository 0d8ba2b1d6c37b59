"""Pseudo-orbits of the Hutchinson operator and their shadowing by true orbits.

A delta-pseudo-orbit is a sequence X_0, X_1, ... of sets with
d_H(X_{i+1}, F(X_i)) < delta. It is eps-shadowed by Y when
d_H(F^i(Y), X_i) < eps for every i.

The infinite test follows the standard two-part argument for systems whose
whole space is the attractor. Past the uniform convergence index
n = n_{eps/4}, every true orbit is within eps/4 of X. If the pseudo-orbit is
also within eps/2 of X there, the tail error is below eps by the triangle
inequality. Only the head, indices up to n, needs a genuine shadow, found at
tolerance eps/4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .hutchinson import orbit_masks, step_masks, uniform_convergence_index
from .maps import IfsSystem
from .spaces import CompactSet, GridSpace, SpaceKind, distance_transform, hausdorff_masks

PERTURBATIONS = ("dilate", "erode", "jitter", "adversarial", "drift")


@dataclass
class PseudoOrbit:
    system: IfsSystem
    masks: np.ndarray
    delta: float
    defects: np.ndarray
    perturbation: str = "dilate"
    magnitude: float = 0.0
    seed: int | None = None

    def __len__(self):
        return len(self.masks)

    @property
    def sets(self) -> list:
        return [CompactSet(self.system.space, m) for m in self.masks]

    def __getitem__(self, i) -> CompactSet:
        return CompactSet(self.system.space, self.masks[i])


def measure_defects(sys: IfsSystem, masks: np.ndarray) -> np.ndarray:
    """d_H(X_{i+1}, F(X_i)) for each consecutive pair."""
    return hausdorff_masks(sys.space, masks[1:], step_masks(sys, masks[:-1]))


def _dilate(space: GridSpace, mask: np.ndarray, r: float) -> np.ndarray:
    return distance_transform(space, mask) <= r + 1e-12


def _erode(space: GridSpace, mask: np.ndarray, r: float) -> np.ndarray:
    if mask.all():
        return mask
    return mask & (distance_transform(space, ~mask) > r + 1e-12)


def _jitter(space: GridSpace, mask: np.ndarray, r: float, rng) -> np.ndarray:
    """Random set within Hausdorff distance r of ``mask``."""
    halo = _dilate(space, mask, r)
    out = halo & (rng.random(space.size) < 0.5)
    if out.any():
        out |= mask & (distance_transform(space, out) > r + 1e-12)
    else:
        out = mask.copy()
    return out


def _drift(space: GridSpace, mask: np.ndarray, steps: int) -> np.ndarray:
    if space.kind is SpaceKind.CIRCLE:
        return np.roll(mask, steps)
    if space.kind is SpaceKind.INTERVAL:
        idx = np.clip(np.flatnonzero(mask) + steps, 0, space.size - 1)
        out = np.zeros_like(mask)
        out[idx] = True
        return out
    raise ValueError("drift perturbation needs the interval or the circle")


def _largest_radius(space: GridSpace, delta: float) -> float:
    """Largest grid radius strictly below delta."""
    if space.kind is SpaceKind.SHIFT:
        k = math.floor(-math.log2(delta)) + 1
        return 2.0**-k
    h = space.cell_diameter
    return (math.ceil(delta / h) - 1) * h


def perturb(space: GridSpace, mask: np.ndarray, kind: str, radius: float, rng, step: int = 0) -> np.ndarray:
    if radius <= 0:
        return mask
    if kind == "dilate":
        return _dilate(space, mask, radius)
    if kind == "erode":
        out = _erode(space, mask, radius)
        return out if out.any() else mask
    if kind == "jitter":
        return _jitter(space, mask, radius, rng)
    if kind == "adversarial":
        out = _dilate(space, mask, radius) if step % 2 == 0 else _erode(space, mask, radius)
        return out if out.any() else mask
    if kind == "drift":
        return _drift(space, mask, max(1, int(round(radius / space.cell_diameter))))
    raise ValueError(f"unknown perturbation {kind!r}; choose from {', '.join(PERTURBATIONS)}")


def generate_pseudo_orbit(
    sys: IfsSystem,
    seed: CompactSet,
    length: int,
    delta: float,
    perturbation: str = "dilate",
    magnitude: float | None = None,
    rng: int | np.random.Generator | None = 0,
) -> PseudoOrbit:
    """Sets X_0 = seed, X_{i+1} = perturb(F(X_i)) with every measured defect < delta.

    ``magnitude`` bounds the perturbation radius (default: the largest grid
    radius below delta). Random radii are drawn for ``dilate``/``erode``/
    ``jitter``; ``adversarial`` alternates maximal dilation and erosion;
    ``drift`` translates by a fixed number of cells each step. A step whose
    measured defect would reach delta is retried at half the radius.
    """
    space = sys.space
    if perturbation not in PERTURBATIONS:
        raise ValueError(f"unknown perturbation {perturbation!r}; choose from {', '.join(PERTURBATIONS)}")
    if delta <= 2 * space.cell_diameter:
        raise ValueError(f"delta={delta} is below grid precision (two cell diameters = {2 * space.cell_diameter})")
    if length < 1:
        raise ValueError("length must be at least 1")
    seed_value = rng if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    top = _largest_radius(space, delta) if magnitude is None else min(magnitude, _largest_radius(space, delta))
    masks = np.empty((length + 1, space.size), dtype=bool)
    masks[0] = seed.mask
    defects = np.zeros(length)
    for i in range(length):
        image = step_masks(sys, masks[i])
        if perturbation in ("adversarial", "drift"):
            r = top
        else:
            r = rng.uniform(0, top)
        while True:
            nxt = perturb(space, image, perturbation, r, rng, i)
            d = float(hausdorff_masks(space, nxt, image))
            if d < delta or r <= 0:
                break
            r = r / 2 if r > space.cell_diameter else 0.0
        masks[i + 1] = nxt
        defects[i] = d
    return PseudoOrbit(sys, masks, delta, defects, perturbation, top, seed_value)


def true_orbit(sys: IfsSystem, seed: CompactSet, length: int) -> PseudoOrbit:
    masks = np.array(list(orbit_masks(sys, seed.mask, length)))
    return PseudoOrbit(sys, masks, 0.0, np.zeros(length), "none", 0.0, None)


def tracking_errors(sys: IfsSystem, ys: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """d_H(F^i(Y_b), X_i) for i < len(masks), shape (len(masks), batch)."""
    ys = np.atleast_2d(ys)
    out = np.empty((len(masks), len(ys)))
    for i, m in enumerate(orbit_masks(sys, ys, len(masks) - 1)):
        out[i] = hausdorff_masks(sys.space, m, masks[i][None, :])
    return out


def gamma_ladder(space: GridSpace, top: float) -> list:
    floor = 2 * space.cell_diameter
    out, g = [], top
    while g > floor:
        out.append(g)
        g /= 2
    return out or [floor]


@dataclass
class FiniteShadow:
    Y: CompactSet
    gamma: float
    error: float
    errors: np.ndarray
    robust_fraction: float
    candidate: str


def finite_shadowing_search(
    sys: IfsSystem,
    po: PseudoOrbit,
    eps: float,
    window: int,
    trials: int = 8,
    rng: int | np.random.Generator | None = 0,
) -> FiniteShadow | None:
    """A set Y near X_0 with d_H(F^j(Y), X_j) < eps for all j <= window, or None.

    Candidates are X_0 and its dilations/erosions on a halving ladder of
    radii below eps/2. After a hit, ``trials`` random sets within gamma of X_0
    are tested; gamma is the largest ladder radius at which all of them
    shadow, and ``robust_fraction`` the pass rate there.
    """
    space = sys.space
    if window >= len(po):
        raise ValueError(f"window {window} exceeds the pseudo-orbit length {len(po) - 1}")
    rng = np.random.default_rng(rng)
    x0 = po.masks[0]
    masks = po.masks[: window + 1]
    ladder = gamma_ladder(space, eps / 2)
    cands, labels = [x0], [("X0", 0.0)]
    for g in reversed(ladder):
        cands.append(_dilate(space, x0, g))
        labels.append(("dilate", g))
        er = _erode(space, x0, g)
        if er.any():
            cands.append(er)
            labels.append(("erode", g))
    errs = tracking_errors(sys, np.array(cands), masks)
    ok = np.flatnonzero(errs.max(axis=0) < eps)
    if len(ok) == 0:
        return None
    k = int(ok[0])
    robust_gamma, fraction = 0.0, 0.0
    for g in ladder:
        tries = np.array([_jitter(space, x0, _largest_radius(space, g), rng) for _ in range(trials)])
        frac = float(np.mean(tracking_errors(sys, tries, masks).max(axis=0) < eps))
        robust_gamma, fraction = g, frac
        if frac == 1.0:
            break
    return FiniteShadow(
        CompactSet(space, cands[k]),
        robust_gamma,
        float(errs[:, k].max()),
        errs[:, k],
        fraction,
        labels[k][0] if labels[k][1] == 0 else f"{labels[k][0]}({labels[k][1]:.6g})",
    )


@lru_cache(maxsize=64)
def convergence_split(sys: IfsSystem, eps: float, max_iter: int, max_seeds: int = 256) -> int | None:
    """n_eps estimated over singletons on a net of cells, the worst case by monotonicity of F."""
    n = sys.space.size
    stride = max(1, n // max_seeds)
    seeds = np.zeros((len(range(0, n, stride)), n), dtype=bool)
    seeds[np.arange(len(seeds)), np.arange(0, n, stride)] = True
    return uniform_convergence_index(sys, eps, max_iter, seeds=seeds)


@dataclass
class ShadowingReport:
    eps: float
    delta: float
    shadowed: bool
    shadow_seed: CompactSet | None
    max_tracking_error: float
    head_error: float
    tail_error: float
    split_index: int | None
    errors: np.ndarray | None = None
    offending_index: int | None = None
    reason: str = ""
    gamma: float = 0.0
    robust_fraction: float = 0.0

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "delta": self.delta,
            "shadowed": self.shadowed,
            "shadow_seed": None if self.shadow_seed is None else self.shadow_seed.to_json(),
            "max_tracking_error": self.max_tracking_error,
            "split": {
                "head_error": self.head_error,
                "tail_error": self.tail_error,
                "split_index": self.split_index,
            },
            "offending_index": self.offending_index,
            "reason": self.reason,
            "gamma": self.gamma,
            "robust_fraction": self.robust_fraction,
        }


def infinite_shadowing_test(
    sys: IfsSystem,
    po: PseudoOrbit,
    eps: float,
    split_index: int | None = None,
    trials: int = 8,
    rng: int | None = 0,
) -> ShadowingReport:
    """Shadowing of the whole pseudo-orbit via the head/tail split at n_{eps/4}.

    Failures are reported (``shadowed=False`` with a reason), not raised,
    except when the pseudo-orbit is shorter than three convergence windows.
    """
    space = sys.space
    full = np.ones(space.size, dtype=bool)
    length = len(po) - 1
    n = split_index if split_index is not None else convergence_split(sys, eps / 4, max(1, length // 3))

    def fail(reason, index=None, head=0.0):
        return ShadowingReport(eps, po.delta, False, None, math.inf, head, math.inf, n, None, index, reason)

    if n is None:
        return fail(f"orbits do not settle within eps/4 of X by index {max(1, length // 3)}")
    if length < 3 * n:
        raise ValueError(f"pseudo-orbit of length {length} is shorter than three convergence windows (n={n})")
    head = finite_shadowing_search(sys, po, eps / 4, n, trials, rng)
    if head is None:
        return fail(f"no eps/4 shadow of the first {n} steps")
    to_x = hausdorff_masks(space, po.masks[n + 1 :], full[None, :])
    far = np.flatnonzero(to_x >= eps / 2)
    if len(far):
        return fail("pseudo-orbit leaves the eps/2-neighborhood of X", int(far[0]) + n + 1, head.error)
    errs = tracking_errors(sys, head.Y.mask, po.masks)[:, 0]
    orbit_to_x = np.array([float(hausdorff_masks(space, m, full)) for m in orbit_masks(sys, head.Y.mask, length)])
    drift = np.flatnonzero(orbit_to_x[n + 1 :] >= eps / 4)
    if len(drift):
        return fail("true orbit leaves the eps/4-neighborhood of X", int(drift[0]) + n + 1, head.error)
    head_err = float(errs[: n + 1].max())
    tail_err = float(errs[n + 1 :].max()) if length > n else 0.0
    worst = float(errs.max())
    return ShadowingReport(
        eps,
        po.delta,
        worst < eps,
        head.Y,
        worst,
        head_err,
        tail_err,
        n,
        errs,
        None if worst < eps else int(np.argmax(errs)),
        "" if worst < eps else "measured tracking error reaches eps",
        head.gamma,
        head.robust_fraction,
    )


@dataclass
class DeltaSchedule:
    eps: float
    delta: float | None
    window: int | None
    tried: list = field(default_factory=list)


def random_seed_set(space: GridSpace, rng) -> CompactSet:
    from .spaces import random_mask

    return CompactSet(space, random_mask(space, rng))


def delta_schedule(
    sys: IfsSystem,
    eps: float,
    length: int,
    trials: int = 32,
    seed: int = 0,
    perturbations=("dilate", "erode", "jitter", "adversarial"),
) -> DeltaSchedule:
    """Halve delta from eps/4 until ``trials`` random pseudo-orbits all pass the eps/4 head search.

    Seeds alternate between random sets and random singletons; small seeds
    sitting in an expanding region are the hardest to shadow. The window is
    n_{eps/4}; delta stops at two cell diameters.
    """
    space = sys.space
    n = convergence_split(sys, eps / 4, max(1, length // 3))
    if n is None:
        return DeltaSchedule(eps, None, None)
    rng = np.random.default_rng(seed)
    out = DeltaSchedule(eps, None, n)
    delta = eps / 4
    while delta > 2 * space.cell_diameter:
        passed = 0
        for t in range(trials):
            kind = perturbations[t % len(perturbations)]
            seed_set = random_seed_set(space, rng) if t % 2 else space.singleton(space.centers[rng.integers(space.size)])
            po = generate_pseudo_orbit(sys, seed_set, max(n, 1), delta, kind, rng=rng)
            if finite_shadowing_search(sys, po, eps / 4, n, trials=2, rng=rng) is not None:
                passed += 1
            else:
                break
        out.tried.append((delta, passed))
        if passed == trials:
            out.delta = delta
            return out
        delta /= 2
    return out
