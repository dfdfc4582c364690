import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from igamaxwell.splines import (
    KnotVector,
    TensorBasis,
    derived_knot_vector,
    eval_basis,
    eval_basis_grid,
    greville_points,
    make_open_uniform,
    reduce_to_multiplier_degree,
)


def spline_value(kv, coeffs, x, der=0):
    first, ders = eval_basis(kv, x, der)
    return float(np.dot(ders[der], coeffs[first: first + kv.degree + 1]))


class TestMakeOpenUniform:
    def test_quadratic_three_elements(self):
        kv = make_open_uniform(2, 3, 1)
        assert kv.n == 5
        np.testing.assert_allclose(
            kv.array, [0, 0, 0, 1 / 3, 2 / 3, 1, 1, 1], atol=1e-15
        )

    def test_single_linear_element(self):
        kv = make_open_uniform(1, 1, 0)
        np.testing.assert_allclose(kv.array, [0, 0, 1, 1])
        assert kv.n == 2

    def test_cubic_c0(self):
        kv = make_open_uniform(3, 2, 0)
        assert kv.n == 7  # n_el*(p-r) + r + 1
        assert list(kv.multiplicities) == [4, 3, 4]
        np.testing.assert_allclose(kv.breakpoints, [0, 0.5, 1])

    def test_dimension_formula(self):
        for p in range(1, 5):
            for r in range(p):
                for n_el in (1, 2, 5):
                    kv = make_open_uniform(p, n_el, r)
                    assert kv.n == n_el * (p - r) + r + 1

    def test_rejects_bad_regularity(self):
        with pytest.raises(ValueError):
            make_open_uniform(2, 3, 2)
        with pytest.raises(ValueError):
            make_open_uniform(2, 0, 1)


class TestEvalBasis:
    def test_hat_functions(self):
        kv = KnotVector(1, (0, 0, 0.5, 1, 1))
        first, ders = eval_basis(kv, 0.25)
        np.testing.assert_allclose(ders[0], [0.5, 0.5])
        assert first == 0

    @pytest.mark.parametrize(
        "p,n_el,r", [(1, 4, 0), (2, 3, 1), (3, 5, 2), (3, 2, 0), (4, 3, 1)]
    )
    def test_partition_of_unity(self, p, n_el, r):
        kv = make_open_uniform(p, n_el, r)
        rng = np.random.default_rng(17)
        xs = np.concatenate([rng.uniform(0, 1, 1000), [0.0, 1.0], kv.breakpoints])
        for x in xs:
            _, ders = eval_basis(kv, x, der=min(p, 2))
            assert abs(ders[0].sum() - 1.0) <= 1e-13
            assert np.all(ders[0] >= -1e-14)
            assert abs(ders[1].sum()) <= 1e-10

    def test_quadratic_vs_piecewise_polynomial_oracle(self):
        # Independent oracle: symbolic piecewise polynomials from the
        # divided-difference definition, via sympy's bspline_basis_set.
        sympy = pytest.importorskip("sympy")
        x = sympy.Symbol("x")
        kv = make_open_uniform(2, 3, 1)
        basis = sympy.functions.special.bsplines.bspline_basis_set(
            2, [sympy.Rational(k) for k in (0, 0, 0, "1/3", "2/3", 1, 1, 1)], x
        )
        for xi in (1 / 3, 0.1, 0.5, 0.77, 0.999):
            first, ders = eval_basis(kv, xi)
            vals = np.zeros(kv.n)
            vals[first: first + 3] = ders[0]
            ref = [float(b.subs(x, sympy.Float(xi, 30))) for b in basis]
            np.testing.assert_allclose(vals, ref, atol=1e-12)

    def test_local_support(self):
        kv = make_open_uniform(3, 5, 2)
        arr = kv.array
        p = kv.degree
        for i in range(kv.n):
            lo, hi = arr[i], arr[i + p + 1]
            for x in np.linspace(0, 1, 101):
                first, ders = eval_basis(kv, x)
                if i < first or i > first + p:
                    continue
                v = ders[0][i - first]
                if x < lo - 1e-12 or x > hi + 1e-12:
                    assert abs(v) < 1e-14

    def test_derivative_vs_finite_differences(self):
        rng = np.random.default_rng(3)
        for p, n_el, r in [(2, 4, 1), (3, 3, 0), (4, 5, 3)]:
            kv = make_open_uniform(p, n_el, r)
            coeffs = rng.standard_normal(kv.n)
            eps = 1e-6
            for x in rng.uniform(2 * eps, 1 - 2 * eps, 30):
                # keep the stencil inside one element
                cell = np.searchsorted(kv.breakpoints, x) - 1
                lo, hi = kv.breakpoints[cell], kv.breakpoints[cell + 1]
                if x - eps < lo or x + eps > hi:
                    continue
                d = spline_value(kv, coeffs, x, der=1)
                fd = (
                    spline_value(kv, coeffs, x + eps)
                    - spline_value(kv, coeffs, x - eps)
                ) / (2 * eps)
                assert abs(d - fd) <= 1e-6 * max(1.0, abs(d))

    def test_constant_spline_derivative_zero(self):
        kv = make_open_uniform(3, 4, 2)
        coeffs = np.ones(kv.n)
        for x in np.linspace(0, 1, 23):
            assert abs(spline_value(kv, coeffs, x, der=1)) < 1e-11

    def test_rejects_outside_domain(self):
        kv = make_open_uniform(2, 2, 1)
        with pytest.raises(ValueError):
            eval_basis(kv, 1.5)
        with pytest.raises(ValueError):
            eval_basis(kv, -0.1)

    def test_grid_eval_matches_pointwise(self):
        kv = make_open_uniform(3, 4, 1)
        xs = np.linspace(0, 1, 17)
        firsts, ders = eval_basis_grid(kv, xs, der=1)
        for i, x in enumerate(xs):
            f, d = eval_basis(kv, x, der=1)
            assert firsts[i] == f
            np.testing.assert_allclose(ders[i], d)


class TestDerivedKnotVector:
    def test_bezier(self):
        kv = KnotVector(2, (0, 0, 0, 1, 1, 1))
        dkv = derived_knot_vector(kv)
        assert dkv.degree == 1
        np.testing.assert_allclose(dkv.array, [0, 0, 1, 1])

    def test_preserves_interior(self):
        kv = make_open_uniform(2, 3, 1)
        dkv = derived_knot_vector(kv)
        assert dkv.n == kv.n - 1
        np.testing.assert_allclose(dkv.breakpoints, kv.breakpoints)

    def test_twice(self):
        kv = make_open_uniform(3, 4, 2)
        dd = derived_knot_vector(derived_knot_vector(kv))
        assert dd.degree == 1
        np.testing.assert_allclose(dd.breakpoints, kv.breakpoints)
        assert list(dd.multiplicities[1:-1]) == list(kv.multiplicities[1:-1])

    def test_rejects_degree_zero(self):
        kv = KnotVector(0, (0, 1))
        with pytest.raises(ValueError):
            derived_knot_vector(kv)


class TestReduceToMultiplierDegree:
    def test_bezier(self):
        kv = KnotVector(2, (0, 0, 0, 1, 1, 1))
        red = reduce_to_multiplier_degree(kv, 1)
        np.testing.assert_allclose(red.array, [0, 0, 1, 1])

    def test_quartic(self):
        kv = make_open_uniform(4, 2, 3)
        red = reduce_to_multiplier_degree(kv, 3)
        assert red.degree == 3
        assert list(red.multiplicities) == [4, 1, 4]

    def test_rejects_violating_interior_multiplicity(self):
        kv = make_open_uniform(2, 2, 0)  # interior multiplicity 2
        with pytest.raises(ValueError, match="0.5"):
            reduce_to_multiplier_degree(kv, 1)

    def test_commutes_with_derivation(self):
        kv = make_open_uniform(4, 3, 2)
        a = derived_knot_vector(reduce_to_multiplier_degree(kv, 3))
        b = reduce_to_multiplier_degree(derived_knot_vector(kv), 2)
        np.testing.assert_allclose(a.array, b.array)
        assert a.degree == b.degree


class TestGreville:
    def test_linear(self):
        kv = KnotVector(1, (0, 0, 1, 1))
        np.testing.assert_allclose(greville_points(kv), [0, 1])

    def test_quadratic_uniform(self):
        kv = make_open_uniform(2, 3, 1)
        np.testing.assert_allclose(
            greville_points(kv), [0, 1 / 6, 1 / 2, 5 / 6, 1], atol=1e-15
        )

    @pytest.mark.parametrize("p,n_el,r", [(2, 4, 1), (3, 3, 2), (4, 2, 0)])
    def test_endpoints(self, p, n_el, r):
        g = greville_points(make_open_uniform(p, n_el, r))
        assert g[0] == 0.0 and abs(g[-1] - 1.0) < 1e-15
        assert np.all(np.diff(g) > 0)


class TestTensorBasis:
    def test_dimension(self):
        tb = TensorBasis(
            (make_open_uniform(2, 3, 1), make_open_uniform(2, 2, 1), make_open_uniform(1, 2, 0))
        )
        assert tb.N == 5 * 4 * 3

    def test_lexicographic_order_direction_one_fastest(self):
        tb = TensorBasis((make_open_uniform(1, 2, 0), make_open_uniform(1, 3, 0)))
        n1 = tb.shape[0]
        assert tb.ravel((1, 0)) == 1
        assert tb.ravel((0, 1)) == n1
        assert tb.ravel((2, 3)) == 2 + 3 * n1


@settings(max_examples=40, deadline=None)
@given(
    p=st.integers(1, 4),
    n_el=st.integers(1, 6),
    x=st.floats(0.0, 1.0),
    data=st.data(),
)
def test_partition_of_unity_property(p, n_el, x, data):
    r = data.draw(st.integers(0, p - 1))
    kv = make_open_uniform(p, n_el, r)
    _, ders = eval_basis(kv, x, der=1)
    assert abs(ders[0].sum() - 1.0) <= 1e-13
    assert abs(ders[1].sum()) <= 1e-9
