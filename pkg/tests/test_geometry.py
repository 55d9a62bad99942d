from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from baryloc.geometry import (
    batch_cm_det,
    cayley_menger_bidet,
    cayley_menger_bidet_from_table,
    cayley_menger_det,
    degeneracy_scale,
    is_degenerate,
    signed_volume,
    squared_distance,
    squared_distance_table,
)

TRI = [(0, 0), (1, 0), (0, 1)]
TRI_SWAPPED = [(0, 0), (0, 1), (1, 0)]


def _det_volume(ps):
    # oracle: explicit difference-vector determinant
    ps = np.asarray(ps, float)
    return np.linalg.det((ps[1:] - ps[0]).T) / factorial(ps.shape[1])


# squared_distance

@pytest.mark.parametrize("a, b, expected", [
    ((0, 0), (0, 0), 0.0),
    ((0, 0), (3, 4), 25.0),
    ((1, 2, 3), (4, 6, 3), 25.0),
])
def test_squared_distance_examples(a, b, expected):
    assert squared_distance(a, b) == expected


def test_squared_distance_dimension_mismatch():
    with pytest.raises(ValueError):
        squared_distance((0, 0), (0, 0, 0))


def test_squared_distance_table_matches_pairwise(rng):
    xs, ys = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
    t = squared_distance_table(xs, ys)
    for i in range(4):
        for j in range(5):
            assert t[i, j] == pytest.approx(squared_distance(xs[i], ys[j]), rel=1e-12)
    self_t = squared_distance_table(xs)
    assert np.all(np.diag(self_t) == 0) and np.allclose(self_t, self_t.T)


# signed_volume

def test_signed_volume_examples():
    assert signed_volume(TRI) == pytest.approx(0.5)
    assert signed_volume(TRI_SWAPPED) == pytest.approx(-0.5)
    assert signed_volume([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]) == pytest.approx(1 / 6)


def test_signed_volume_wrong_count():
    with pytest.raises(ValueError):
        signed_volume([(0, 0), (1, 0)])


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_signed_volume_matches_difference_oracle(rng, n):
    for _ in range(20):
        ps = rng.uniform(-10, 10, size=(n + 1, n))
        assert signed_volume(ps) == pytest.approx(_det_volume(ps), rel=1e-9, abs=1e-12)


# Cayley-Menger

def test_bidet_examples():
    assert cayley_menger_bidet(TRI, TRI) == pytest.approx(1.0)
    assert cayley_menger_bidet(TRI, TRI_SWAPPED) == pytest.approx(-1.0)
    assert cayley_menger_bidet(TRI, [(0, 0), (0, 0), (1, 1)]) == pytest.approx(0.0, abs=1e-12)


def test_det_examples():
    assert cayley_menger_det(TRI) == pytest.approx(1.0)
    assert cayley_menger_det([(0, 0), (1, 1), (2, 2)]) == pytest.approx(0.0, abs=1e-12)
    regular = [(0, 0), (1, 0), (0.5, np.sqrt(3) / 2)]
    assert cayley_menger_det(regular) == pytest.approx(4 * (np.sqrt(3) / 4) ** 2)
    assert cayley_menger_det(regular) == pytest.approx(0.75)


def test_bidet_size_mismatch():
    with pytest.raises(ValueError):
        cayley_menger_bidet(TRI, [(0, 0), (1, 0)])
    with pytest.raises(ValueError):
        cayley_menger_bidet_from_table(np.ones((3, 4)))


def test_missing_distance_entry():
    table = squared_distance_table(TRI)
    table[0, 2] = np.nan
    with pytest.raises(ValueError):
        cayley_menger_bidet_from_table(table)


def test_batch_matches_single(rng):
    tables = np.array([squared_distance_table(rng.normal(size=(4, 3))) for _ in range(10)])
    single = [cayley_menger_bidet_from_table(t) for t in tables]
    assert np.allclose(batch_cm_det(tables), single, rtol=1e-10)
    assert batch_cm_det(np.zeros((0, 4, 4))).shape == (0,)


def test_degeneracy_is_scale_free(rng):
    ps = rng.normal(size=(4, 3))
    ps[3] = 0.5 * (ps[0] + ps[1]) + 1e-7 * rng.normal(size=3)  # nearly flat
    for s in (1e-3, 1.0, 1e3):
        table = squared_distance_table(ps * s)
        d = cayley_menger_bidet_from_table(table)
        assert is_degenerate(d, table)
        assert degeneracy_scale(table) == pytest.approx(table.max() ** 3)
    good = squared_distance_table(np.vstack([np.zeros(3), np.eye(3)]) * 1e3)
    assert not is_degenerate(cayley_menger_bidet_from_table(good), good)


# properties

def point_sets(n):
    return arrays(np.float64, (n + 1, n), elements=st.floats(-10, 10, allow_nan=False))


@st.composite
def pair(draw):
    n = draw(st.integers(1, 4))
    return draw(point_sets(n)), draw(point_sets(n))


@given(pair())
def test_bidet_is_product_of_volumes(xy):
    X, Y = xy
    n = X.shape[1]
    d = cayley_menger_bidet(X, Y)
    expected = factorial(n) ** 2 * signed_volume(X) * signed_volume(Y)
    # tolerance follows the magnitude of the table entries the determinant is built from
    scale = max(1.0, squared_distance_table(X, Y).max()) ** n
    assert abs(d - expected) <= 1e-8 * (1 + abs(d)) + 1e-12 * scale


@given(pair())
def test_bidet_symmetric(xy):
    X, Y = xy
    a, b = cayley_menger_bidet(X, Y), cayley_menger_bidet(Y, X)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


@given(st.integers(1, 4).flatmap(point_sets))
def test_det_nonnegative(X):
    n = X.shape[1]
    scale = max(1.0, squared_distance_table(X).max()) ** n
    assert cayley_menger_det(X) >= -1e-9 * scale


@given(pair(), st.data())
def test_swap_negates(xy, data):
    X, Y = xy
    n = X.shape[1]
    i, j = data.draw(st.sampled_from([(a, b) for a in range(n + 1) for b in range(a + 1, n + 1)]))
    Xs = X.copy()
    Xs[[i, j]] = Xs[[j, i]]
    assert signed_volume(Xs) == pytest.approx(-signed_volume(X), rel=1e-9, abs=1e-9)
    scale = max(1.0, squared_distance_table(X, Y).max()) ** n
    assert cayley_menger_bidet(Xs, Y) == pytest.approx(-cayley_menger_bidet(X, Y), abs=1e-9 * scale)


@given(pair(), arrays(np.float64, 4, elements=st.floats(-50, 50)))
def test_translation_invariance(xy, shift):
    X, Y = xy
    n = X.shape[1]
    t = shift[:n]
    scale = max(1.0, squared_distance_table(X, Y).max()) ** n
    assert cayley_menger_bidet(X + t, Y + t) == pytest.approx(cayley_menger_bidet(X, Y), rel=1e-9, abs=1e-9 * scale)
    assert cayley_menger_det(X + t) == pytest.approx(cayley_menger_det(X), rel=1e-9, abs=1e-9 * scale)
