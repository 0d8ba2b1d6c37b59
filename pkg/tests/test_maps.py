import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperifs.maps import (
    IfsSystem,
    MapSpec,
    NorthSouth,
    PiecewiseLinear,
    Rotation,
    Shift,
    SymbolPrepend,
    Word,
    enumerate_words,
    eval_word,
    image_mask,
    image_of_set,
    image_of_word,
    preimage_of_set,
    preimage_of_word,
    transfer_matrix,
)
from hyperifs.spaces import GridSpace, SpaceMismatchError

INTERVAL = GridSpace.interval(256)
CIRCLE = GridSpace.circle(256)
SHIFT = GridSpace.shift(8)
TENT = PiecewiseLinear((0.0, 0.5, 1.0), (0.0, 1.0, 0.0))
HALF = PiecewiseLinear((0.0, 1.0), (0.0, 0.5))
MAPS = [
    (HALF, INTERVAL),
    (TENT, INTERVAL),
    (Rotation(0.3819660112501051), CIRCLE),
    (NorthSouth(0.0, 0.3), CIRCLE),
    (NorthSouth(0.1, 0.3, inverse=True), CIRCLE),
    (SymbolPrepend(2), SHIFT),
    (Shift(), SHIFT),
]
MAP_IDS = ["half", "tent", "rotation", "north_south", "north_south_inv", "prepend", "shift"]


@pytest.mark.parametrize("m,space", MAPS, ids=MAP_IDS)
@given(seed=st.integers(0, 2**32 - 1))
def test_grid_image_encloses_the_true_image(m, space, seed):
    rng = np.random.default_rng(seed)
    mat = transfer_matrix(m, space).tocsr()
    if space.kind.value == "shift":
        x = rng.integers(0, space.size, 50)
        cells = x
        img = m.evaluate(x, space)
    else:
        cells = rng.integers(0, space.size, 50)
        # any point of the cell's neighbourhood (half a cell either side of the node)
        x = space.wrap(space.centers[cells] + (rng.random(50) - 0.5) * space.cell_diameter)
        img = m.evaluate(x, space)
    targets = space.index_of(img)
    for c, t in zip(cells, targets):
        row = mat.getrow(int(c)).indices
        assert t in row


@pytest.mark.parametrize("m,space", MAPS, ids=MAP_IDS)
def test_preimage_is_dual_to_image(m, space):
    a = space.ball(m.evaluate(space.centers[space.size // 3], space), 0.1)
    pre = preimage_of_set(m, a)
    img = image_mask(m, space, pre.mask)
    assert (img & a.mask).any()
    # every cell whose image meets a is in the preimage
    singles = np.eye(space.size, dtype=bool)
    hits = (image_mask(m, space, singles) & a.mask).any(axis=1)
    assert np.array_equal(hits, pre.mask)


def test_dyadic_points_stay_exact():
    s = GridSpace.interval(16)
    f2 = PiecewiseLinear((0.0, 1.0), (0.5, 1.0))
    assert list(image_of_set(HALF, s.singleton(0.5)).indices) == [4]
    assert list(image_of_set(f2, s.singleton(1.0)).indices) == [16]


def test_rotation_by_zero_is_identity():
    mat = transfer_matrix(Rotation(0.0), CIRCLE)
    assert np.array_equal(mat.toarray(), np.eye(CIRCLE.size))


def test_north_south_poles_and_inverse():
    g = NorthSouth(0.2, 0.3)
    gi = NorthSouth(0.2, 0.3, inverse=True)
    assert g.evaluate(0.2) == pytest.approx(0.2)
    assert g.evaluate(g.q) == pytest.approx(g.q)
    assert g.derivative(0.2) == pytest.approx(0.7)
    assert g.derivative(g.q) == pytest.approx(1.3)
    y = np.linspace(0, 1, 101)
    assert np.allclose(CIRCLE.metric(g.evaluate(gi.evaluate(y)), y), 0, atol=1e-12)
    with pytest.raises(ValueError):
        NorthSouth(0.0, 1.5)


@pytest.mark.parametrize("m,space", MAPS[:5], ids=MAP_IDS[:5])
def test_lipschitz_bounds_hold_on_samples(m, space, rng):
    x = rng.random(500)
    y = space.wrap(x + (rng.random(500) - 0.5) * 0.01)
    lhs = space.metric(m.evaluate(x, space), m.evaluate(y, space))
    assert np.all(lhs <= m.lipschitz_bound * space.metric(x, y) + 1e-12)


def test_prepend_halves_distance():
    m = SymbolPrepend(1)
    a, b = SHIFT.encode([1, 2]), SHIFT.encode([1, 1])
    assert SHIFT.metric(m.evaluate(a, SHIFT), m.evaluate(b, SHIFT)) == SHIFT.metric(a, b) / 2
    assert SHIFT.decode(m.evaluate(SHIFT.encode([2, 2]), SHIFT))[:3] == (1, 2, 2)


def test_shift_grid_image_has_both_completions():
    img = image_of_set(Shift(), SHIFT.singleton(SHIFT.encode([1, 2, 1])))
    words = {SHIFT.decode(i) for i in img.indices}
    assert len(words) == 2
    assert {w[-1] for w in words} == {1, 2}
    assert all(w[:2] == (2, 1) for w in words)


def test_piecewise_linear_validation():
    with pytest.raises(ValueError):
        PiecewiseLinear((0.0, 0.5), (0.0, 1.0))
    with pytest.raises(ValueError):
        PiecewiseLinear((0.0, 1.0), (0.0, 1.5))
    assert TENT.lipschitz_bound == 2.0
    assert HALF.local_lipschitz(0.3, 0.01) == 0.5


def test_domain_mismatch():
    with pytest.raises(SpaceMismatchError):
        IfsSystem(CIRCLE, (HALF,))
    with pytest.raises(SpaceMismatchError):
        transfer_matrix(Rotation(0.1), INTERVAL)


def test_map_dict_roundtrip():
    for m, _ in MAPS:
        d = m.to_dict()
        assert "domain" not in d and "exact" not in d
        assert MapSpec.from_dict(d) == m
    with pytest.raises(ValueError):
        MapSpec.from_dict({"kind": "nope"})


# words ----------------------------------------------------------------------

def test_word_basics():
    w = Word((1, 0))
    assert len(w) == 2 and w.length == 2
    assert str(w) == "f2of1"
    assert Word((0,)) @ Word((1,)) == Word((0, 1))
    with pytest.raises(ValueError):
        Word(())
    with pytest.raises(ValueError):
        Word((-1,))
    assert [w.indices for w in enumerate_words(2, 2)] == [(0,), (1,), (0, 0), (0, 1), (1, 0), (1, 1)]


@given(a=st.lists(st.integers(0, 2), min_size=1, max_size=6), b=st.lists(st.integers(0, 2), min_size=1, max_size=6),
       x=st.floats(0, 1))
def test_word_composition(a, b, x):
    sys = IfsSystem(INTERVAL, (HALF, PiecewiseLinear((0.0, 1.0), (0.5, 1.0)), TENT))
    wa, wb = Word(a), Word(b)
    assert eval_word(wa @ wb, sys, x) == pytest.approx(eval_word(wa, sys, eval_word(wb, sys, x)))


def test_word_images_and_errors():
    sys = IfsSystem(INTERVAL, (HALF, PiecewiseLinear((0.0, 1.0), (0.5, 1.0))))
    # f1 o f2 ([0,1]) = [1/4, 1/2]
    img = image_of_word(Word((0, 1)), sys, INTERVAL.full())
    assert img.points.min() == 0.25 and img.points.max() == 0.5
    pre = preimage_of_word(Word((0, 1)), sys, img)
    assert pre.is_full()
    assert preimage_of_word(Word((0,)), sys, INTERVAL.singleton(1.0)) is None
    with pytest.raises(IndexError):
        eval_word(Word((2,)), sys, 0.0)


def test_system_config_roundtrip():
    sys = IfsSystem(CIRCLE, (NorthSouth(), Rotation(0.25)), "demo")
    again = IfsSystem.from_config(sys.to_config())
    assert again == sys and again.name == "demo"
    assert sys.with_resolution(128).space.resolution == 128
    assert len(sys.subsystem([1])) == 1
    op = sys.operator
    assert op.shape == (CIRCLE.size, CIRCLE.size)
    assert set(np.unique(op.data)) == {1.0}
    with pytest.raises(ValueError):
        IfsSystem(CIRCLE, ())
    assert math.isclose(NorthSouth().lipschitz_bound, 1.3)
