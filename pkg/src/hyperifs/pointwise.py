"""The metric d_Phi(x, y) = sup_w d(w x, w y) and point classification.

Words are searched breadth first. Pairs of images already reached by an
earlier word are skipped, and each level keeps at most ``beam`` states,
preferring the most separated ones, so the reported value is a lower bound
on the supremum unless ``certified_sup`` says otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hutchinson import d_F_batch
from .maps import IfsSystem, Word
from .spaces import GridSpace, SpaceKind, net_points


def _keys(images: np.ndarray, space: GridSpace) -> np.ndarray:
    if space.kind is SpaceKind.SHIFT:
        return images
    return np.round(images * 2.0**40).astype(np.int64)


def word_search(sys: IfsSystem, points, max_len: int, beam: int = 4096, score=None):
    """Yield ``(words, images)`` per level; ``images[k, i]`` is ``words[k]`` applied to ``points[i]``.

    ``score(images) -> array`` ranks states when the beam overflows (higher kept).
    """
    space = sys.space
    images = np.asarray(points)[None, :]
    words: list = [()]
    seen: set = set()
    for _ in range(max_len):
        parts = [g.evaluate(images, space) for g in sys.generators]
        stacked = np.stack(parts, axis=1).reshape(-1, images.shape[1])
        flat = [(j,) + w for w in words for j in range(len(parts))]
        keys = _keys(stacked, space)
        keep = np.zeros(len(flat), dtype=bool)
        for k, row in enumerate(keys):
            b = row.tobytes()
            if b not in seen:
                seen.add(b)
                keep[k] = True
        stacked = stacked[keep]
        flat = [w for w, k in zip(flat, keep) if k]
        if not flat:
            return
        yield [Word(w) for w in flat], stacked
        if len(flat) > beam:
            order = np.arange(len(flat)) if score is None else np.argsort(-score(stacked), kind="stable")
            order = np.sort(order[:beam])
            stacked = stacked[order]
            flat = [flat[i] for i in order]
        words, images = flat, stacked


@dataclass
class DPhiEstimate:
    lower: float
    certified_sup: bool
    word: Word | None
    distance: float


def non_expanding(sys: IfsSystem) -> bool:
    return all(g.lipschitz_bound <= 1.0 for g in sys.generators)


def d_phi_estimate(sys: IfsSystem, x, y, max_len: int, beam: int = 4096) -> DPhiEstimate:
    """Lower bound of d_Phi(x, y) over words of length <= max_len (identity excluded).

    The bound is certified as the supremum when every generator is
    non-expanding: then extending a word never increases the distance, so the
    maximum is attained by a single generator.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    space = sys.space
    best, best_word = 0.0, None
    sep = lambda im: space.metric(im[:, 0], im[:, 1])
    for words, images in word_search(sys, np.array([x, y]), max_len, beam, sep):
        d = sep(images)
        k = int(np.argmax(d))
        if d[k] > best:
            best, best_word = float(d[k]), words[k]
    certified = non_expanding(sys) and len(sys.generators) <= beam
    return DPhiEstimate(best, certified, best_word, float(space.metric(x, y)))


@dataclass
class PointWitness:
    word: Word
    y: float
    separation: float
    delta: float


@dataclass
class PointVerdict:
    x: float
    eps: float
    delta_found: float | None
    witness: PointWitness | None
    ys: np.ndarray | None = None

    @property
    def equicontinuous(self) -> bool:
        return self.delta_found is not None


def neighbors_within(space: GridSpace, x, delta: float, samples: int) -> np.ndarray:
    """Grid points y != x with d(x, y) < delta, evenly thinned to ``samples``."""
    if space.kind is SpaceKind.SHIFT:
        c = int(x)
        ys = np.array([c ^ k for k in range(1, space.size)], dtype=np.int64)
    else:
        h = space.cell_diameter
        kmax = max(1, math.ceil(delta / h) - 1)
        offs = np.arange(1, kmax + 1) * h
        ys = space.wrap(np.concatenate([x - offs[::-1], x + offs]))
    ys = ys[(space.metric(ys, x) < delta) & (space.metric(ys, x) > 0)]
    ys = np.unique(ys)
    if len(ys) > samples:
        ys = ys[np.linspace(0, len(ys) - 1, samples).round().astype(int)]
    return ys


def delta_ladder(space: GridSpace, eps: float) -> list:
    """eps, eps/2, ... down to a final rung of two cell diameters."""
    floor = 2 * space.cell_diameter
    out = []
    d = eps
    while d > floor:
        out.append(d)
        d /= 2
    out.append(floor)
    return out


def classify_point(
    sys: IfsSystem,
    x,
    eps: float,
    max_len: int,
    neighborhood_samples: int = 32,
    beam: int = 4096,
) -> PointVerdict:
    """Equicontinuity (resolution-bounded) or sensitivity (witnessed) of the point x.

    For each delta on a halving ladder, grid points within delta of x are
    tested; the first delta whose samples all stay eps-close under every
    searched word is returned. Otherwise the witness for the final rung
    (two cell diameters) certifies sensitivity at x.
    """
    space = sys.space
    if eps <= 4 * space.cell_diameter:
        raise ValueError("eps must exceed four cell diameters")
    witness = None
    for delta in delta_ladder(space, eps):
        ys = neighbors_within(space, x, delta, neighborhood_samples)
        if space.kind is SpaceKind.SHIFT and len(ys) == 0:
            continue
        pts = np.concatenate([[x], ys]).astype(ys.dtype if space.kind is SpaceKind.SHIFT else float)
        sep = lambda im: space.metric(im[:, 1:], im[:, :1]).max(axis=1)
        witness = None
        for words, images in word_search(sys, pts, max_len, beam, sep):
            d = space.metric(images[:, 1:], images[:, :1])
            hit = np.argwhere(d >= eps)
            if len(hit):
                k, i = hit[0]
                witness = PointWitness(words[k], ys[i].item(), float(d[k, i]), delta)
                break
        if witness is None:
            return PointVerdict(x, eps, delta, None, ys)
    return PointVerdict(x, eps, None, witness, None)


@dataclass
class SensitivityReport:
    eps: float
    sensitive: bool
    min_open_diameter: float
    radius: float
    centers: np.ndarray
    diameters: np.ndarray


def _ball_samples(space: GridSpace, c, radius: float) -> np.ndarray:
    if space.kind is SpaceKind.SHIFT:
        free = max(1, int(math.floor(space.resolution + math.log2(radius))))
        c = int(c)
        return np.array([c] + [c ^ (1 << i) for i in range(free)], dtype=np.int64)
    h = space.cell_diameter
    k = int(math.floor(radius / h))
    return space.wrap(c + np.array([-k, 0, k]) * h)


def sensitivity_probe(
    sys: IfsSystem,
    eps: float,
    max_len: int,
    radius: float | None = None,
    num_balls: int = 64,
    beam: int = 256,
) -> SensitivityReport:
    """Lower bounds on the d_Phi-diameter of small balls spread over X.

    The system is reported sensitive at ``eps`` when every probed ball has a
    pair separated by at least ``eps`` under some word. ``radius`` defaults to
    the smallest usable ball: four cells on the 1-D grids, and the cylinder
    one level above the cells on the shift space.
    """
    space = sys.space
    if radius is None:
        radius = 4 * space.cell_diameter if space.kind is not SpaceKind.SHIFT else 2 * space.cell_diameter
    centers = net_points(space, space.diameter / num_balls)
    if space.kind is not SpaceKind.INTERVAL:
        centers = centers[: num_balls]
    diam = np.zeros(len(centers))
    for b, c in enumerate(centers):
        pts = _ball_samples(space, c, radius)
        i, j = np.triu_indices(len(pts), 1)

        def spread(im):
            return space.metric(im[:, i], im[:, j]).max(axis=1)

        best = 0.0
        for _, images in word_search(sys, pts, max_len, beam, spread):
            best = max(best, float(spread(images).max()))
            if best >= eps:
                break
        diam[b] = best
    return SensitivityReport(eps, bool((diam >= eps).all()), float(diam.min()), radius, centers, diam)


def hyperspace_consistency(sys: IfsSystem, verdict: PointVerdict, horizon: int) -> tuple:
    """Singleton hyperspace pairs ({x}, {y}) for the y's that certified an equicontinuous verdict.

    Returns ``(max d_F, number of pairs with d_F >= eps + 2 cell diameters)``.
    """
    space = sys.space
    if not verdict.equicontinuous or verdict.ys is None or len(verdict.ys) == 0:
        return 0.0, 0
    a = np.zeros((len(verdict.ys), space.size), dtype=bool)
    b = np.zeros_like(a)
    a[:, space.index_of(verdict.x)] = True
    b[np.arange(len(verdict.ys)), space.index_of(verdict.ys)] = True
    sup, _, _ = d_F_batch(sys, a, b, horizon)
    bad = int(np.sum(sup >= verdict.eps + 2 * space.cell_diameter))
    return float(sup.max()), bad
