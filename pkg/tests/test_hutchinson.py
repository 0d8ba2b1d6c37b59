from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperifs.corpus import load_system
from hyperifs.hutchinson import (
    attractor_convergence,
    d_F_batch,
    d_F_estimate,
    hutchinson_step,
    hyperspace_equicontinuity_probe,
    invariance_defect,
    iterate,
    sample_close_pairs,
    step_masks,
    uniform_convergence_index,
)
from hyperifs.spaces import CompactSet, GridSpace, hausdorff_distance, random_mask


def dyadic_orbit_of_zero(j):
    """F^j({0}) for x/2 and x/2 + 1/2, by exact enumeration of all length-j words."""
    pts = {Fraction(0)}
    for _ in range(j):
        pts = {p / 2 for p in pts} | {p / 2 + Fraction(1, 2) for p in pts}
    return pts


def test_dyadic_orbit_matches_exact_enumeration(systems):
    psi = systems("psi_interval")
    space = psi.space
    orbit = iterate(psi, space.singleton(0.0), 12)
    for j, a in enumerate(orbit.sets):
        exact = dyadic_orbit_of_zero(j)
        assert exact == {Fraction(k, 2**j) for k in range(2**j)}
        assert a == space.from_points([float(p) for p in exact])
        assert hausdorff_distance(a, space.full()) == 2.0**-j


def test_iterate_and_step(systems):
    psi = systems("psi_interval", 64)
    orbit = iterate(psi, psi.space.singleton(0.5), 3)
    assert len(orbit) == 4 and orbit.horizon == 3
    assert orbit[1] == hutchinson_step(psi, orbit[0])
    assert orbit.last == orbit[3]
    with pytest.raises(ValueError):
        iterate(psi, psi.space.full(), -1)


@pytest.mark.parametrize("name", ["psi_interval", "phi_interval", "circle_ns_rot", "shift2"])
def test_whole_space_is_invariant(systems, name):
    sys = systems(name)
    assert invariance_defect(sys, sys.space.full()) == (0.0, 0.0)


@pytest.mark.parametrize("name", ["phi_interval", "circle_quasisym", "shift2_inverse"])
@given(seed=st.integers(0, 2**31))
def test_operator_preserves_unions_and_inclusions(systems, name, seed):
    sys = systems(name, 6 if name.startswith("shift") else 64)
    rng = np.random.default_rng(seed)
    a, b = random_mask(sys.space, rng), random_mask(sys.space, rng)
    fa, fb, fab = step_masks(sys, a), step_masks(sys, b), step_masks(sys, a | b)
    assert np.array_equal(fab, fa | fb)
    assert not (fa & ~fab).any()


@pytest.mark.parametrize("eps,expected", [(0.1, 4), (0.05, 5), (0.025, 6), (0.0125, 7)])
def test_uniform_convergence_index_for_halving_maps(systems, eps, expected):
    # worst singleton is an endpoint: d_H(F^j{0}, [0,1]) = 2^-j
    psi = systems("psi_interval", 256)
    assert uniform_convergence_index(psi, eps, 16) == expected


def test_uniform_convergence_index_fails_for_a_rotation(systems):
    rot = systems("rotation_golden", 256)
    assert uniform_convergence_index(rot, 0.05, 20) is None


def test_attractor_convergence_first_hits(systems):
    psi = systems("psi_interval")
    rep = attractor_convergence(psi, psi.space.full(), [psi.space.singleton(0.0)], 2.0**-6, 20)
    assert rep.first_hits == [7]
    assert rep.converged
    with pytest.raises(ValueError):
        attractor_convergence(psi, psi.space.full(), [psi.space.full()], psi.space.cell_diameter, 5)


def test_non_convergence_is_reported(systems):
    f1 = systems("contraction_f1", 256)
    rep = attractor_convergence(f1, f1.space.full(), [f1.space.singleton(0.5)], 0.1, 30)
    assert not rep.converged and rep.first_hits == [None]


# d_F --------------------------------------------------------------------------

@given(seed=st.integers(0, 2**31))
def test_d_F_is_a_metric_on_samples(systems, seed):
    sys = systems("circle_ns_rot", 64)
    rng = np.random.default_rng(seed)
    a, b, c = (random_mask(sys.space, rng) for _ in range(3))
    ab, _, _ = d_F_batch(sys, a, b, 20)
    ba, _, _ = d_F_batch(sys, b, a, 20)
    bc, _, _ = d_F_batch(sys, b, c, 20)
    ac, _, _ = d_F_batch(sys, a, c, 20)
    assert ab[0] == ba[0]
    assert ac[0] <= ab[0] + bc[0] + 1e-12
    assert ab[0] >= hausdorff_distance(CompactSet(sys.space, a), CompactSet(sys.space, b))


def test_d_F_estimate_tail(systems):
    psi = systems("psi_interval", 256)
    a, b = psi.space.singleton(0.0), psi.space.singleton(1.0)
    est = d_F_estimate(psi, a, b, 20, eps=0.1)
    assert est.sup == 1.0 and est.argmax_index == 0
    assert est.tail_bound_valid
    assert d_F_estimate(psi, a, a, 5).sup == 0.0
    with pytest.raises(ValueError):
        d_F_estimate(psi, a, b, 0)


def test_close_pairs_are_close(systems, rng):
    space = GridSpace.circle(256)
    a, b, d0 = sample_close_pairs(space, 0.05, 40, rng)
    assert len(a) > 0 and np.all(d0 < 0.05)


def test_equicontinuity_probe_contracting_system(systems):
    psi = systems("psi_interval", 256)
    probe = hyperspace_equicontinuity_probe(psi, 0.05, 60, 40, seed=1)
    assert probe.delta_found == 0.05
    assert probe.ladder[0][2] == 0


def test_equicontinuity_probe_finds_shift_witness(systems):
    inv = systems("shift2_inverse", 8)
    probe = hyperspace_equicontinuity_probe(inv, 0.5, 60, 16, seed=1)
    assert probe.delta_found is None
    w = probe.witness_pairs[0]
    assert w.initial_distance < w.delta and w.d_F >= 0.5
    with pytest.raises(ValueError):
        hyperspace_equicontinuity_probe(inv, 4 * inv.space.cell_diameter, 10, 4)
