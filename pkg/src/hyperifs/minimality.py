"""Forward-minimality certificates and a constructive convergence-time bound.

The bound follows the funnel argument: every point is sent into a trapping
neighborhood U of an attracting fixed point by some word of length <= k_U,
U contracts into B(p, delta) after n0 iterations of the attracting
generator, and B(p, delta) is carried into each ball B(y_i, eps/2) of a net
by a word of length <= s_eps. Hence every singleton orbit meets every net
ball from step k_U + n0 + s_eps on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .maps import (
    IfsSystem,
    MapSpec,
    Word,
    image_mask,
    preimage_mask,
    image_of_word,
    transfer_matrix,
    push,
)
from .spaces import CompactSet, GridSpace, SpaceKind, net_points


@dataclass
class AttractingFixedPoint:
    generator_index: int
    p: float
    U: CompactSet
    delta: float
    contraction_time: int
    multiplier: float

    def to_dict(self) -> dict:
        return {
            "generator_index": self.generator_index,
            "p": self.p,
            "U": self.U.to_json(),
            "delta": self.delta,
            "contraction_time": self.contraction_time,
            "multiplier": self.multiplier,
        }


@dataclass
class CoverCertificate:
    words: list
    target_set: CompactSet
    k_U: int
    covered_fraction: float

    @property
    def complete(self) -> bool:
        return self.covered_fraction == 1.0


def _iterate_mask(m: MapSpec, space: GridSpace, mask: np.ndarray, n: int) -> np.ndarray:
    for _ in range(n):
        mask = image_mask(m, space, mask)
    return mask


def _interior(space: GridSpace, mask: np.ndarray) -> np.ndarray:
    """Cells of the mask whose grid neighbors all lie in the mask."""
    out = mask.copy()
    if space.kind is SpaceKind.CIRCLE:
        out &= np.roll(mask, 1) & np.roll(mask, -1)
    else:
        out[1:] &= mask[:-1]
        out[:-1] &= mask[1:]
    return out


def _subset(a: np.ndarray, b: np.ndarray) -> bool:
    return not np.any(a & ~b)


def find_attracting_fixed_point(
    m: MapSpec,
    space: GridSpace,
    generator_index: int = 0,
    max_radius: float | None = None,
    max_steps: int = 100_000,
) -> AttractingFixedPoint | None:
    """Locate an attracting fixed point of ``m`` and a trapping ball U around it.

    Cells with phi(c) in c are refined by iterating from their centers. U is
    the largest ball (up to ``max_radius``, default a quarter of the
    diameter) grown cell by cell while phi(U) stays in the grid interior of
    U. ``delta`` is the largest radius with phi(B(p, delta)) in B(p, delta),
    and ``contraction_time`` the least n with phi^n(U) inside B(p, 4 cells).
    """
    if space.kind is SpaceKind.SHIFT:
        raise ValueError("fixed-point search is for the interval and the circle")
    h = space.cell_diameter
    if max_radius is None:
        max_radius = space.diameter / 4
    x = space.centers
    near = space.metric(m.evaluate(x, space), x) <= h / 2
    pts = x[near].astype(float)
    for _ in range(20_000):
        nxt = m.evaluate(pts, space)
        if np.all(space.metric(nxt, pts) < 1e-15):
            break
        pts = nxt
    nodes = space.centers[space.index_of(pts)]
    snap = space.metric(m.evaluate(nodes, space), nodes) <= space.metric(m.evaluate(pts, space), pts)
    pts = np.where(snap, nodes, pts)
    candidates = []
    for p in np.unique(pts):
        p = float(p)
        if space.metric(m.evaluate(np.array([p]), space)[0], p) > 1e-12:
            continue
        eps = 1e-7
        probe = space.wrap(np.array([p - eps, p + eps]))
        mult = float(space.metric(*m.evaluate(probe, space)) / space.metric(*probe))
        if mult < 1 and all(space.metric(p, c) > h / 2 for c, _ in candidates):
            candidates.append((p, mult))
    for p, mult in candidates:
        best = None
        k = 2
        while k * h <= max_radius + 1e-12:
            U = space.ball(p, k * h)
            if _subset(image_mask(m, space, U.mask), _interior(space, U.mask)):
                best = U
            elif best is not None:
                break
            k += 1
        if best is None:
            continue
        radius = float(space.metric(best.points, p).max())
        delta = None
        for j in range(int(round(radius / h)), 0, -1):
            B = space.ball(p, j * h).mask
            if _subset(image_mask(m, space, B), B):
                delta = j * h
                break
        if delta is None:
            continue
        target = space.ball(p, 4 * h).mask
        mask = best.mask
        for n in range(max_steps + 1):
            if _subset(mask, target):
                return AttractingFixedPoint(generator_index, p, best, delta, n, mult)
            mask = image_mask(m, space, mask)
    return None


def find_attracting_fixed_points(sys: IfsSystem, **kwargs) -> list:
    out = []
    for i, g in enumerate(sys.generators):
        afp = find_attracting_fixed_point(g, sys.space, i, **kwargs)
        if afp is not None:
            out.append(afp)
    return out


# breadth-first word search ----------------------------------------------------

def _dedupe_rows(masks: np.ndarray, seen: set) -> np.ndarray:
    keep = np.zeros(len(masks), dtype=bool)
    packed = np.packbits(masks, axis=-1)
    for i, row in enumerate(packed):
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            keep[i] = True
    return keep


def _word_bfs(sys: IfsSystem, start: np.ndarray, max_len: int, beam: int, backward: bool):
    """Yield ``(words, masks)`` level by level.

    Forward search composes images (``j o w``); backward search composes
    inner preimages (``w o j``): cells whose whole grid image lies in the
    mask, so every true point of such a cell is mapped into it. Masks already produced by a shorter or
    lexicographically earlier word are dropped, empty masks are dropped, and
    at most ``beam`` masks (smallest first when pushing forward, largest first
    when pulling back) are expanded per level.
    """
    space = sys.space
    mats = [transfer_matrix(g, space) if backward else transfer_matrix(g, space).T.tocsr()
            for g in sys.generators]
    seen: set = set()
    words: list = [()]
    masks = start[None, :]
    for _ in range(max_len):
        new_words, new_masks = [], []
        for j, mat in enumerate(mats):
            nxt = ~push(mat, ~masks) if backward else push(mat, masks)
            new_masks.append(nxt)
            if backward:
                new_words.append([w + (j,) for w in words])
            else:
                new_words.append([(j,) + w for w in words])
        # interleave so that the order is frontier-major, generator-minor
        stacked = np.stack(new_masks, axis=1).reshape(-1, space.size)
        flat_words = [new_words[j][i] for i in range(len(words)) for j in range(len(mats))]
        nonempty = stacked.any(axis=1)
        stacked, flat_words = stacked[nonempty], [w for w, k in zip(flat_words, nonempty) if k]
        keep = _dedupe_rows(stacked, seen)
        stacked = stacked[keep]
        flat_words = [w for w, k in zip(flat_words, keep) if k]
        if not flat_words:
            return
        yield [Word(w) for w in flat_words], stacked
        if len(flat_words) > beam:
            sizes = stacked.sum(axis=1)
            order = np.argsort(-sizes if backward else sizes, kind="stable")[:beam]
            order.sort()
            stacked = stacked[order]
            flat_words = [flat_words[i] for i in order]
        words, masks = flat_words, stacked


def find_preimage_cover(sys: IfsSystem, U: CompactSet, max_len: int, beam: int = 2048) -> CoverCertificate:
    """Greedy cover of X by preimages of U under words found breadth first.

    A full cover (every cell reaches U through some word) is the consequence
    of forward minimality that the convergence bound needs. Redundant words
    are pruned from a full cover, so removing any word breaks it.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    space = sys.space
    covered = np.zeros(space.size, dtype=bool)
    chosen: list = []
    pre: list = []
    for words, masks in _word_bfs(sys, U.mask, max_len, beam, backward=True):
        for w, m in zip(words, masks):
            if np.any(m & ~covered):
                chosen.append(w)
                pre.append(m)
                covered |= m
                if covered.all():
                    break
        if covered.all():
            break
    if covered.all():
        chosen, pre = _prune(chosen, pre)
    k_U = max((len(w) for w in chosen), default=0)
    return CoverCertificate(chosen, U, k_U, float(covered.mean()))


def _prune(words, masks):
    keep = list(range(len(words)))
    for i in reversed(range(len(words))):
        rest = [k for k in keep if k != i]
        if rest and np.logical_or.reduce([masks[k] for k in rest]).all():
            keep = rest
    return [words[k] for k in keep], [masks[k] for k in keep]


def inner_preimage(sys: IfsSystem, w: Word, mask: np.ndarray) -> np.ndarray:
    """Cells whose grid image under ``w`` lies entirely inside ``mask``."""
    for i in w.indices:
        mask = ~preimage_mask(sys.generators[i], sys.space, ~mask)
    return mask


def cover_fraction(sys: IfsSystem, words, U: CompactSet) -> float:
    covered = np.zeros(sys.space.size, dtype=bool)
    for w in words:
        covered |= inner_preimage(sys, w, U.mask)
    return float(covered.mean())


def cover_is_sound(sys: IfsSystem, cert: CoverCertificate, samples: int | None = None, seed: int = 0) -> bool:
    """Cross-check by forward images: each cell claimed by a word is carried inside U."""
    rng = np.random.default_rng(seed)
    for w in cert.words:
        cells = np.flatnonzero(inner_preimage(sys, w, cert.target_set.mask))
        if len(cells) == 0:
            return False
        if samples is not None and len(cells) > samples:
            cells = rng.choice(cells, samples, replace=False)
        for c in cells:
            img = image_of_word(w, sys, sys.space.from_indices([c]))
            if not img.issubset(cert.target_set):
                return False
    return True


# minimality probe ---------------------------------------------------------------

@dataclass
class MinimalityProbe:
    minimal_up_to_resolution: bool
    failing_ball: CompactSet | None
    certificates: list = field(default_factory=list)


def minimality_probe(
    sys: IfsSystem,
    ball_radius: float,
    max_len: int,
    trials: int | None = None,
    beam: int = 2048,
) -> MinimalityProbe:
    """Full preimage covers for every ball of a ``ball_radius/2``-net.

    ``trials`` caps the number of ball centers (evenly spaced); by default the
    whole net is used.
    """
    space = sys.space
    if ball_radius <= 2 * space.cell_diameter:
        raise ValueError("ball_radius must exceed two cell diameters")
    centers = net_points(space, ball_radius / 2)
    if trials is not None and trials < len(centers):
        centers = centers[np.linspace(0, len(centers) - 1, trials).round().astype(int)]
    certs = []
    for c in centers:
        ball = space.ball(c, ball_radius)
        cert = find_preimage_cover(sys, ball, max_len, beam)
        certs.append(cert)
        if not cert.complete:
            return MinimalityProbe(False, ball, certs)
    return MinimalityProbe(True, None, certs)


# constructive convergence bound --------------------------------------------------

@dataclass
class ConvergenceBound:
    eps: float
    found: bool
    N: int | None
    k_U: int
    n0: int
    s_eps: int
    delta: float
    funnel_words: list
    net: np.ndarray
    cover: CoverCertificate | None
    afp: AttractingFixedPoint | None
    reason: str = ""


def contraction_steps(m: MapSpec, space: GridSpace, U: np.ndarray, target: np.ndarray, limit: int) -> int | None:
    mask = U
    for n in range(limit + 1):
        if _subset(mask, target):
            return n
        mask = image_mask(m, space, mask)
    return None


def find_funnel_words(sys: IfsSystem, start: np.ndarray, targets: np.ndarray, max_len: int, beam: int = 2048):
    """For each target mask, the first word (breadth first) whose image of ``start`` lies inside it."""
    found: list = [None] * len(targets)
    outside = (~targets).astype(np.float32)
    pending = np.arange(len(targets))
    for words, masks in _word_bfs(sys, start, max_len, beam, backward=False):
        hits = (outside[pending] @ masks.T.astype(np.float32)) == 0
        for row, t in enumerate(pending):
            cols = np.flatnonzero(hits[row])
            if len(cols):
                found[t] = words[cols[0]]
        pending = np.array([t for t in pending if found[t] is None], dtype=int)
        if len(pending) == 0:
            break
    return found


def convergence_time_bound(
    sys: IfsSystem,
    afp: AttractingFixedPoint,
    eps: float,
    max_len: int,
    beam: int = 2048,
) -> ConvergenceBound:
    """N = k_U + n0 + s_eps with d_H(F^j(x), X) < eps for every x and j >= N."""
    space = sys.space
    h = space.cell_diameter
    if eps >= space.diameter:
        return ConvergenceBound(eps, True, 0, 0, 0, 0, 0.0, [], np.array([]), None, afp, "eps exceeds the diameter")
    if eps <= 4 * h:
        raise ValueError("eps must exceed four cell diameters")
    cover = find_preimage_cover(sys, afp.U, max_len, beam)
    if not cover.complete:
        return ConvergenceBound(eps, False, None, cover.k_U, 0, 0, 0.0, [], np.array([]), cover, afp,
                                "no full preimage cover of U within max_len")
    m = sys.generators[afp.generator_index]
    net = net_points(space, eps / 2)
    targets = np.array([space.ball(y, eps / 2 - 1e-9).mask for y in net])
    delta = afp.delta
    while delta >= 2 * h:
        ball = space.ball(afp.p, delta).mask
        n0 = contraction_steps(m, space, afp.U.mask, ball, 100_000)
        if n0 is not None:
            words = find_funnel_words(sys, ball, targets, max_len, beam)
            if all(w is not None for w in words):
                s_eps = max(len(w) for w in words)
                N = cover.k_U + n0 + s_eps
                return ConvergenceBound(eps, True, N, cover.k_U, n0, s_eps, delta, words, net, cover, afp)
        delta /= 2
    return ConvergenceBound(eps, False, None, cover.k_U, 0, 0, 0.0, [], net, cover, afp,
                            "no funnel words within max_len")


# certificates -----------------------------------------------------------------

def certificate_dict(sys: IfsSystem, bound: ConvergenceBound) -> dict:
    afp = bound.afp
    return {
        "format": "hyperifs-certificate/1",
        "system": sys.to_config(),
        "eps": bound.eps,
        "found": bound.found,
        "N": bound.N,
        "k_U": bound.k_U,
        "n0": bound.n0,
        "s_eps": bound.s_eps,
        "generator_index": afp.generator_index,
        "p": afp.p,
        "U_radius": _radius_of(sys.space, afp),
        "delta": bound.delta,
        "cover_words": [list(w.indices) for w in bound.cover.words] if bound.cover else [],
        "net": [float(y) if sys.space.kind is not SpaceKind.SHIFT else int(y) for y in bound.net],
        "funnel_words": [list(w.indices) for w in bound.funnel_words],
    }


def _radius_of(space: GridSpace, afp: AttractingFixedPoint) -> float:
    return float(space.metric(afp.U.points, afp.p).max())


@dataclass
class CertificateCheck:
    ok: bool
    checks: dict


def verify_certificate(cert: dict, resolution: int | None = None, slack: float = 0.0) -> CertificateCheck:
    """Recompute every claim of a certificate from its stored words.

    The geometric objects (U, B(p, delta), the net balls) are rasterized
    afresh at ``resolution``. ``slack`` enlarges U and the target balls by that
    distance to absorb re-rasterization at a different resolution.
    """
    from .corpus import build_system

    sys = build_system(cert["system"], resolution)
    space = sys.space
    m = sys.generators[cert["generator_index"]]
    p = cert["p"]
    eps = cert["eps"]
    U = space.ball(p, cert["U_radius"])
    U_slack = space.ball(p, cert["U_radius"] + slack)
    ball = space.ball(p, cert["delta"])
    checks = {}
    checks["trapping"] = _subset(image_mask(m, space, U.mask), U.mask)
    checks["cover"] = cover_fraction(sys, [Word(w) for w in cert["cover_words"]], U_slack) == 1.0
    checks["k_U"] = max((len(w) for w in cert["cover_words"]), default=0) <= cert["k_U"]
    n = contraction_steps(m, space, U.mask, space.ball(p, cert["delta"] + slack).mask, cert["n0"])
    checks["n0"] = n is not None
    net = np.asarray(cert["net"])
    if space.kind is not SpaceKind.SHIFT:
        gaps = np.diff(np.sort(net))
        if space.kind is SpaceKind.CIRCLE:
            gaps = np.append(gaps, 1 - net.max() + net.min())
        else:
            gaps = np.concatenate([gaps, [2 * net.min(), 2 * (1 - net.max())]])
        checks["net"] = bool(gaps.max() <= eps / 2 + 1e-9)
    funnel_ok = len(cert["funnel_words"]) == len(net)
    for y, w in zip(net, cert["funnel_words"]):
        img = image_of_word(Word(w), sys, ball)
        target = space.ball(y, eps / 2 - 1e-9 + slack)
        funnel_ok &= img.issubset(target)
    checks["funnel"] = bool(funnel_ok)
    checks["s_eps"] = max((len(w) for w in cert["funnel_words"]), default=0) <= cert["s_eps"]
    checks["N"] = cert["N"] == cert["k_U"] + cert["n0"] + cert["s_eps"]
    return CertificateCheck(all(checks.values()), checks)
