import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import CUTS, ORACLE
from genbaker import BakerMap, DomainError, ExpandingMap, linear, symmetric_power


# -- examples ---------------------------------------------------------------------
def test_forward_examples(baker_const, baker_lin):
    assert baker_const.forward(0.3, 0.4) == pytest.approx((0.6, 0.2), abs=1e-12)
    assert baker_const.forward(0.7, 0.4) == pytest.approx((0.4, 0.7), abs=1e-12)
    assert baker_lin.forward(0.375, 1.0) == pytest.approx((0.5, 0.5), abs=1e-12)


def test_forward_lands_on_the_correct_side_of_the_graph(baker_lin, rng):
    x, y = rng.uniform(0, 1, 2000), rng.uniform(0, 1, 2000)
    fx, gy = baker_lin.forward(x, y)
    below = gy <= linear().phi(fx) + 1e-15
    np.testing.assert_array_equal(below[x <= 0.5], True)
    np.testing.assert_array_equal((gy >= linear().phi(fx) - 1e-15)[x > 0.5], True)
    assert np.all((fx >= 0) & (fx < 1) & (gy >= 0) & (gy <= 1))


def test_iterate_examples(baker_const, baker_lin):
    assert baker_lin.iterate(0.3, 0.7, 0) == (0.3, 0.7)
    assert baker_const.iterate(0.3, 0.4, 2) == pytest.approx((0.2, 0.6), abs=1e-12)
    x0 = ORACLE["linear"]["x0"]
    assert baker_lin.iterate(x0, 0.0, 2)[0] == pytest.approx(x0, abs=2 * baker_lin.factor_.root_tol)


def test_jacobian_examples(baker_const, baker_lin):
    np.testing.assert_allclose(baker_const.jacobian(0.3, 0.4), [[2, 0], [0, 0.5]], atol=1e-12)
    np.testing.assert_allclose(baker_lin.jacobian(0.375, 0.2), [[2, 0], [-0.4, 0.5]], atol=1e-11)
    with pytest.raises(DomainError):
        baker_lin.jacobian(0.5, 0.3)


def test_fibre_contraction_examples(baker_const, baker_lin):
    assert baker_const.fibre_contraction(0.77, 3) == pytest.approx(0.125)
    assert baker_lin.fibre_contraction(0.375, 1) == pytest.approx(0.5, abs=1e-12)
    # an orbit that lingers near the neutral point barely contracts
    assert baker_lin.fibre_contraction(1e-6, 5) > 0.999


def test_orbit_rows(baker_const):
    rows = baker_const.orbit(0.3, 0.4, 2)
    np.testing.assert_allclose(rows, [[0, 0.3, 0.4, 1.0], [1, 0.6, 0.2, 0.5], [2, 0.2, 0.6, 0.25]], atol=1e-12)


# -- invariants -------------------------------------------------------------------
@pytest.mark.parametrize("name", [k for k, c in CUTS.items() if min(c().alpha, c().alpha_prime) >= 1])
def test_jacobian_determinant(name, rng):
    B = BakerMap(ExpandingMap(CUTS[name]()))
    x, y = rng.uniform(1e-6, 1 - 1e-6, 1000), rng.uniform(1e-6, 1 - 1e-6, 1000)
    x = x[np.abs(x - B.factor_.a) > 1e-9]
    det = np.linalg.det(B.jacobian(x, y[: x.size]))
    assert np.max(np.abs(det - 1)) <= 1e-10


def test_jacobian_determinant_sub_unit_exponent(rng):
    B = BakerMap(ExpandingMap(symmetric_power(0.5)))
    x, y = rng.uniform(0, 1, 3000), rng.uniform(0, 1, 3000)
    fx = B.factor_.forward(x)
    keep = (np.abs(x - 0.5) > 1e-9) & (x > 0) & (fx > 1e-6) & (fx < 1 - 1e-6)
    det = np.linalg.det(B.jacobian(x[keep], y[keep]))
    assert np.max(np.abs(det - 1)) <= 1e-10


def test_area_preservation_histogram(baker_lin):
    rng = np.random.default_rng(2024)
    n = 10 ** 6
    x, y = baker_lin.forward(rng.uniform(0, 1, n), rng.uniform(0, 1, n))
    counts, _, _ = np.histogram2d(x, y, bins=32, range=[[0, 1], [0, 1]])
    p = 1 / 1024
    se = np.sqrt(n * p * (1 - p))
    assert np.max(np.abs(counts - n * p)) <= 5 * se


def test_semi_conjugacy_bitwise(emap, rng):
    B = BakerMap(emap)
    x, y = rng.uniform(0, 1, 200), rng.uniform(0, 1, 200)
    for n in (1, 7, 30):
        np.testing.assert_array_equal(B.iterate(x, y, n)[0], emap.orbit(x, n)[n])


def test_fibre_contraction_consistency(baker_lin, rng):
    x = rng.uniform(0, 1, 100)
    for n in (1, 10, 50):
        top = baker_lin.iterate(x, np.ones_like(x), n)[1]
        bottom = baker_lin.iterate(x, np.zeros_like(x), n)[1]
        assert np.max(np.abs(top - bottom - baker_lin.fibre_contraction(x, n))) <= 1e-10


def test_iterate_matches_g_recursion(baker_lin, rng):
    # g_n = phi~(f^{n-1} x) g_{n-1} + [f^{n-1} x > a] (1 - phi~(f^{n-1} x))
    cut, emap = linear(), baker_lin.factor_
    x, y = rng.uniform(0, 1, 300), rng.uniform(0, 1, 300)
    xs, g = x.copy(), y.copy()
    for _ in range(20):
        fx = emap.forward(xs)
        right = xs > emap.a
        contr = np.where(right, 1 - cut.phi(fx), cut.phi(fx))
        g = contr * g + np.where(right, cut.phi(fx), 0.0)
        xs = fx
    gx, gy = baker_lin.iterate(x, y, 20)
    np.testing.assert_allclose(gy, g, atol=1e-10)
    np.testing.assert_array_equal(gx, xs)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(0, 1, exclude_max=True), y=st.floats(0, 1), dy=st.floats(1e-6, 1), n=st.integers(1, 20))
def test_property_fibres_map_increasingly(x, y, dy, n):
    B = BakerMap(ExpandingMap(linear()))
    y2 = min(1.0, y + dy)
    if y2 <= y:
        return
    lo, hi = B.iterate(x, y, n)[1], B.iterate(x, y2, n)[1]
    assert lo <= hi
    assert 0.0 <= lo <= 1.0 and 0.0 <= hi <= 1.0


# -- estimator protocol and inputs ---------------------------------------------------
def test_transform_and_validation(baker_const):
    X = np.array([[0.3, 0.4], [0.7, 0.4]])
    np.testing.assert_allclose(baker_const.fit_transform(X), [[0.6, 0.2], [0.4, 0.7]], atol=1e-12)
    with pytest.raises(ValueError):
        baker_const.transform(np.zeros((2, 3)))
    with pytest.raises(DomainError):
        baker_const.forward(1.0, 0.5)
    with pytest.raises(DomainError):
        baker_const.forward(0.5, 1.5)
    with pytest.raises(ValueError):
        baker_const.iterate(0.2, 0.2, -1)


def test_step_inplace_matches_forward(baker_lin, rng):
    x, y = rng.uniform(0, 1, 500), rng.uniform(0, 1, 500)
    ref = baker_lin.forward(x, y)
    baker_lin.step_inplace(x, y)
    np.testing.assert_array_equal(x, ref[0])
    np.testing.assert_array_equal(y, ref[1])
