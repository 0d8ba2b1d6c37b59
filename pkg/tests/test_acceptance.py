"""Acceptance suite: one test per criterion, tagged so the run ends with a PASS/FAIL table."""
import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from hyperifs.corpus import load_system
from hyperifs.hutchinson import (
    attractor_convergence,
    d_F_batch,
    hyperspace_equicontinuity_probe,
    iterate,
    uniform_convergence_index,
)
from hyperifs.minimality import (
    certificate_dict,
    convergence_time_bound,
    find_attracting_fixed_points,
    minimality_probe,
    verify_certificate,
)
from hyperifs.pointwise import classify_point, d_phi_estimate, hyperspace_consistency
from hyperifs.shadowing import (
    delta_schedule,
    finite_shadowing_search,
    generate_pseudo_orbit,
    infinite_shadowing_test,
    random_seed_set,
    tracking_errors,
)
from hyperifs.spaces import (
    CompactSet,
    GridSpace,
    hausdorff_bruteforce,
    hausdorff_distance,
    hausdorff_masks,
    random_mask,
)
from hyperifs.symbolic import verify_prepend_equicontinuous, verify_shift_sensitive

criterion = pytest.mark.criterion
DESK_SYSTEMS = ["circle_ns_rot", "phi_interval"]


def elapsed(t0):
    return time.perf_counter() - t0


@pytest.fixture(scope="module")
def bounds():
    """Constructive bound N at eps = 0.05 per desk system, computed once."""
    out = {}
    for name in DESK_SYSTEMS:
        sys = load_system(name)
        afp = find_attracting_fixed_points(sys)[0]
        out[name] = (sys, convergence_time_bound(sys, afp, 0.05, 24))
    return out


@pytest.fixture(scope="module")
def hitting_times(bounds):
    """First hits of 20 singleton and 5 fat seeds, horizon 4N."""
    out = {}
    for name, (sys, bound) in bounds.items():
        space = sys.space
        rng = np.random.default_rng(2024)
        seeds = [space.singleton(x) for x in rng.random(20)]
        for _ in range(5):
            centers = rng.random(3)
            seeds.append(space.ball(centers[0], 0.02) | space.ball(centers[1], 0.05) | space.ball(centers[2], 0.1))
        t0 = time.perf_counter()
        rep = attractor_convergence(sys, space.full(), seeds, 0.05, 4 * bound.N)
        out[name] = (rep, elapsed(t0))
    return out


@criterion(1, "distance-transform d_H equals brute force on 200 pairs per space kind")
def test_c01_hausdorff_oracle_equivalence():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    mismatches = 0
    for space in (GridSpace.interval(2**8), GridSpace.circle(2**8), GridSpace.shift(8)):
        for _ in range(200):
            a = CompactSet(space, random_mask(space, rng))
            b = CompactSet(space, random_mask(space, rng))
            mismatches += hausdorff_distance(a, b) != hausdorff_bruteforce(a, b)
    assert mismatches == 0
    assert elapsed(t0) < 5.0


def _dyadic_gap_to_unit_interval(j):
    # exact oracle: F^j({0}) = {k / 2^j}; its Hausdorff distance to [0, 1]
    # is the larger of the half-gaps and the uncovered right end
    pts = sorted({Fraction(0)})
    for _ in range(j):
        pts = sorted({p / 2 for p in pts} | {p / 2 + Fraction(1, 2) for p in pts})
    gaps = [(b - a) / 2 for a, b in zip(pts, pts[1:])]
    return max(gaps + [pts[0], 1 - pts[-1]])


@criterion(2, "dyadic convergence on psi_interval, first hit N = 7 at eps = 2^-6")
def test_c02_dyadic_convergence():
    oracle = [_dyadic_gap_to_unit_interval(j) for j in range(1, 11)]
    assert oracle == [Fraction(1, 2**j) for j in range(1, 11)]
    t0 = time.perf_counter()
    psi = load_system("psi_interval", 2**12)
    space = psi.space
    orbit = iterate(psi, space.singleton(0.0), 10)
    measured = [hausdorff_distance(orbit[j], space.full()) for j in range(1, 11)]
    rep = attractor_convergence(psi, space.full(), [space.singleton(0.0)], 2.0**-6, 20)
    took = elapsed(t0)
    for m, exact in zip(measured, oracle):
        assert abs(m - float(exact)) <= 2 * space.cell_diameter
    assert rep.first_hits == [7]
    assert took < 1.0


@criterion(3, "every seed reaches X within the constructive bound and stays to 4N")
@pytest.mark.parametrize("name", DESK_SYSTEMS)
def test_c03_phase_space_is_an_attractor(name, bounds, hitting_times):
    _, bound = bounds[name]
    rep, took = hitting_times[name]
    assert bound.found
    assert len(rep.seeds) == 25
    assert rep.converged
    assert all(h <= bound.N for h in rep.first_hits)
    assert took < 30.0


@criterion(4, "bound dominates measured hitting times; certificate re-verifies at 1x and 2x resolution")
@pytest.mark.parametrize("name", DESK_SYSTEMS)
def test_c04_bound_soundness(name, bounds, hitting_times):
    sys, bound = bounds[name]
    rep, _ = hitting_times[name]
    assert bound.N >= max(rep.first_hits)
    # the sharpest possible bound is the uniform index over all singletons
    assert bound.N >= uniform_convergence_index(sys, 0.05, 4 * bound.N)
    cert = certificate_dict(sys, bound)
    assert verify_certificate(cert).ok
    doubled = verify_certificate(cert, resolution=2 * sys.space.resolution, slack=sys.space.cell_diameter)
    assert doubled.ok, doubled.checks


@criterion(5, "hyperspace equicontinuity delta found at eps 0.05; inverse shift witness at eps 0.5")
@pytest.mark.parametrize("name", DESK_SYSTEMS + ["shift2_inverse"])
def test_c05_hyperspace_equicontinuity(name, bounds):
    t0 = time.perf_counter()
    if name == "shift2_inverse":
        sys = load_system(name)
        probe = hyperspace_equicontinuity_probe(sys, 0.5, 100, 64, seed=5)
        assert probe.delta_found is None
        w = probe.witness_pairs[0]
        assert hausdorff_distance(w.a, w.b) == w.initial_distance < w.delta
        assert w.d_F >= 0.5
    else:
        sys, bound = bounds[name]
        probe = hyperspace_equicontinuity_probe(sys, 0.05, 100, 4 * bound.N, seed=5)
        assert probe.delta_found is not None and probe.delta_found > 0
        delta, tested, violations = probe.ladder[-1]
        assert delta == probe.delta_found and violations == 0 and tested >= 90
    assert elapsed(t0) < 60.0


@criterion(6, "points classified equicontinuous give equicontinuous singleton pairs (100-point sweep)")
def test_c06_pointwise_to_hyperspace_consistency():
    names = ["psi_interval", "phi_interval", "circle_ns_rot", "rotation_golden", "contraction_f1"]
    classified, counterexamples = 0, 0
    for name in names:
        sys = load_system(name)
        space = sys.space
        eps = 0.1
        for x in np.linspace(0, 1, 20, endpoint=False) + 0.025:
            x = space.centers[space.index_of(x)]
            v = classify_point(sys, x, eps, 24, 16, beam=512)
            if not v.equicontinuous:
                continue
            classified += 1
            worst, bad = hyperspace_consistency(sys, v, 64)
            counterexamples += bad
    print(f"criterion 6: {classified} equicontinuous points of 100, {counterexamples} counterexamples")
    assert classified > 0
    assert counterexamples == 0


@criterion(7, "50 random pseudo-orbits of length 500 are all 0.1-shadowed")
@pytest.mark.parametrize("name", DESK_SYSTEMS)
def test_c07_shadowing(name):
    t0 = time.perf_counter()
    sys = load_system(name)
    eps, length = 0.1, 500
    sched = delta_schedule(sys, eps, length)
    assert sched.delta is not None
    rng = np.random.default_rng(7)
    kinds = ("dilate", "erode", "jitter", "adversarial")
    worst, failures = 0.0, []
    for t in range(50):
        po = generate_pseudo_orbit(sys, random_seed_set(sys.space, rng), length, sched.delta, kinds[t % 4], rng=rng)
        rep = infinite_shadowing_test(sys, po, eps, rng=t)
        worst = max(worst, rep.max_tracking_error)
        if not rep.shadowed:
            failures.append((t, rep.reason))
    print(f"criterion 7 [{name}]: delta={sched.delta}, worst tracking error {worst:.4g}")
    assert failures == []
    assert worst < 0.1
    assert elapsed(t0) < 120.0


@criterion(8, "contraction shadowing: error of Y = X0 at most 2 delta + 4 cells")
@pytest.mark.parametrize("delta", [0.02, 0.01, 0.005])
def test_c08_contraction_tracking_bound(delta):
    psi = load_system("psi_interval")
    h = psi.space.cell_diameter
    rng = np.random.default_rng(int(delta * 1e4))
    kinds = ("dilate", "erode", "jitter", "adversarial")
    ratios = []
    for t in range(20):
        po = generate_pseudo_orbit(psi, random_seed_set(psi.space, rng), 40, delta, kinds[t % 4], rng=rng)
        err = tracking_errors(psi, po.masks[0], po.masks).max()
        ratios.append(err / (2 * delta + 4 * h))
    assert max(ratios) <= 1.0


@criterion(9, "symbolic examples are exact: delta = eps with ratio 1/2; sensitivity constant 1")
def test_c09_symbolic_exactness():
    t0 = time.perf_counter()
    equi = verify_prepend_equicontinuous(8, 0.25)
    sens = verify_shift_sensitive(8)
    took = elapsed(t0)
    assert equi.holds and equi.delta == equi.eps == 0.25
    assert equi.max_ratio == 0.5 and equi.exact_halving
    assert sens.sensitivity_constant == 1.0
    cylinders = {p for k in range(8) for p in itertools.product((1, 2), repeat=k)}
    assert {w.prefix for w in sens.witnesses} == cylinders
    assert took < 1.0


@criterion(10, "negative controls: one contraction is not minimal; drifting rotation is not shadowed")
def test_c10_negative_controls():
    f1 = load_system("contraction_f1")
    probe = minimality_probe(f1, 0.1, 12)
    assert probe.minimal_up_to_resolution is False
    rot = load_system("rotation_golden")
    po = generate_pseudo_orbit(rot, rot.space.singleton(0.1), 500, 0.005, "drift")
    rep = infinite_shadowing_test(rot, po, 0.02)
    assert not rep.shadowed
    # no nearby seed tracks even a short stretch of the drift
    assert finite_shadowing_search(rot, po, 0.02, 40) is None


@criterion(11, "d_H, certified d_Phi and tail-certified d_F are symmetric and satisfy the triangle inequality")
def test_c11_metric_axioms():
    rng = np.random.default_rng(11)
    n = 1000
    # d_H, every space kind
    for space in (GridSpace.interval(128), GridSpace.circle(128), GridSpace.shift(7)):
        a, b, c = (np.array([random_mask(space, rng) for _ in range(n)]) for _ in range(3))
        ab, ba = hausdorff_masks(space, a, b), hausdorff_masks(space, b, a)
        bc, ac = hausdorff_masks(space, b, c), hausdorff_masks(space, a, c)
        assert np.array_equal(ab, ba)
        assert not np.any(ac > ab + bc + 1e-12)

    # d_Phi on systems where the estimate is certified
    for name in ("psi_interval", "rotation_golden", "shift2"):
        sys = load_system(name)
        space = sys.space
        if space.kind.value == "shift":
            pts = rng.integers(0, space.size, (n, 3))
        else:
            pts = rng.random((n, 3))
        violations = 0
        for x, y, z in pts:
            exy, eyx = d_phi_estimate(sys, x, y, 4), d_phi_estimate(sys, y, x, 4)
            eyz, exz = d_phi_estimate(sys, y, z, 4), d_phi_estimate(sys, x, z, 4)
            assert exy.certified_sup and eyz.certified_sup and exz.certified_sup
            violations += exy.lower != eyx.lower
            violations += exz.lower > exy.lower + eyz.lower + 1e-12
        assert violations == 0, name

    # d_F: orbits reach X exactly inside the horizon, so the finite sup is the full sup
    for name in ("psi_interval", "circle_ns_rot"):
        sys = load_system(name, 256)
        space = sys.space
        a, b, c = (np.array([random_mask(space, rng) for _ in range(n)]) for _ in range(3))
        ab, _, tab = d_F_batch(sys, a, b, 64)
        ba, _, _ = d_F_batch(sys, b, a, 64)
        bc, _, tbc = d_F_batch(sys, b, c, 64)
        ac, _, tac = d_F_batch(sys, a, c, 64)
        assert not (tab.any() or tbc.any() or tac.any()), "orbits did not reach X within the horizon"
        assert np.array_equal(ab, ba)
        assert not np.any(ac > ab + bc + 1e-12)
