import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uniqcert import findiff
from uniqcert.errors import DomainError, GridTooSmallError, OrderError
from uniqcert.grid import Axis, MultiIndex, SampledField


class TestStencilWeights:
    def test_first_derivative_accuracy_2(self):
        st_ = findiff.central_stencil(1, 2)
        assert st_.offsets == (-1, 0, 1)
        assert st_.weights == (-0.5, 0.0, 0.5)

    def test_second_derivative_accuracy_2(self):
        st_ = findiff.central_stencil(2, 2)
        assert st_.weights == (1.0, -2.0, 1.0)

    def test_first_derivative_accuracy_4(self):
        st_ = findiff.central_stencil(1, 4)
        assert np.allclose(st_.weights, (1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12))

    def test_unsupported_orders(self):
        with pytest.raises(OrderError):
            findiff.central_stencil(5, 2)
        with pytest.raises(OrderError):
            findiff.central_stencil(1, 3)

    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    @pytest.mark.parametrize("p", findiff.SUPPORTED_ACCURACIES)
    def test_moment_conditions(self, d, p):
        # sum_i w_i o_i^j must equal d! at j=d and 0 at every other j < width
        st_ = findiff.central_stencil(d, p)
        offs = np.array(st_.offsets, dtype=float)
        w = np.array(st_.weights)
        for j in range(len(offs)):
            target = float(math.factorial(d)) if j == d else 0.0
            scale = max(1.0, float(np.dot(np.abs(w), np.abs(offs) ** j)))
            assert abs(np.dot(w, offs**j) - target) < 1e-12 * scale

    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("p", [2, 4, 6])
    def test_shifted_stencil_moments(self, d, p):
        r = (findiff.stencil_points(d, p) - 1) // 2
        for shift in (-r, -1, 1, r):
            st_ = findiff.shifted_stencil(d, p, shift)
            offs = np.array(st_.offsets, dtype=float)
            w = np.array(st_.weights)
            for j in range(len(offs)):
                target = float(math.factorial(d)) if j == d else 0.0
                scale = max(1.0, float(np.dot(np.abs(w), np.abs(offs) ** j)))
                assert abs(np.dot(w, offs**j) - target) < 1e-12 * scale

    def test_shift_limit(self):
        with pytest.raises(OrderError):
            findiff.shifted_stencil(1, 2, 5)


def poly_field(coeff_t, coeff_x, nt=20, nx=24):
    axes = (Axis("t", 0.0, 0.1, nt), Axis("x", -1.0, 0.05, nx))
    tt, xx = np.meshgrid(axes[0].coords(), axes[1].coords(), indexing="ij")
    vals = np.zeros_like(tt)
    for i, a in enumerate(coeff_t):
        for j, b in enumerate(coeff_x):
            vals += a * b * tt**i * xx**j
    return SampledField(axes=axes, values=vals, label="poly")


class TestPolynomialExactness:
    @pytest.mark.parametrize("boundary", ["trim", "one_sided"])
    def test_exact_on_low_degree(self, boundary):
        # a stencil of accuracy p differentiates polynomials of degree < d+p exactly
        f = poly_field([1.0, 2.0, -0.5, 0.25], [3.0, -1.0, 0.5])
        num = findiff.differentiate(f, MultiIndex(1, (1,)), 4, boundary=boundary)
        tt, xx = np.meshgrid(num.axes[0].coords(), num.axes[1].coords(), indexing="ij")
        # d/dt d/dx of the tensor polynomial above
        exact = (2.0 - 1.0 * tt + 0.75 * tt**2) * (-1.0 + 1.0 * xx)
        assert np.max(np.abs(num.values - exact)) < 1e-9

    @settings(max_examples=20, deadline=None)
    @given(
        d=st.integers(1, 3),
        p=st.sampled_from([2, 4, 6]),
        coeffs=st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4),
    )
    def test_1d_monomial_property(self, d, p, coeffs):
        # apply the stencil along one axis of a 1-d polynomial sample;
        # exactness holds for polynomial degree <= d + p - 1
        coeffs = coeffs[-(d + p):]
        n = findiff.stencil_points(d, p) + 6
        axes = (Axis("t", 0.0, 1.0, 2), Axis("x", 0.0, 0.25, n))
        xx = axes[1].coords()
        vals = np.polyval(coeffs, xx)[None, :].repeat(2, axis=0)
        f = SampledField(axes=axes, values=vals)
        num = findiff.differentiate(f, MultiIndex(0, (d,)), p)
        deriv = np.polyder(np.poly1d(coeffs), d)
        exact = deriv(num.axes[1].coords())
        assert np.max(np.abs(num.values[0] - exact)) < 1e-8


class TestDifferentiate:
    def test_trim_shrinks_axes(self):
        f = poly_field([1.0, 1.0], [1.0, 1.0, 1.0])
        num = findiff.differentiate(f, MultiIndex(0, (1,)), 4)
        r = findiff.trim_margin(1, 4)
        assert num.shape == (f.shape[0], f.shape[1] - 2 * r)
        assert num.axes[1].start == pytest.approx(f.axes[1].coord(r))

    def test_one_sided_keeps_shape(self):
        f = poly_field([1.0, 1.0], [1.0, 1.0, 1.0])
        num = findiff.differentiate(f, MultiIndex(0, (1,)), 4, boundary="one_sided")
        assert num.shape == f.shape

    def test_modes_agree_on_interior(self):
        f = poly_field([1.0, 0.3, 0.1], [0.5, -0.2, 0.7, 0.05])
        trim = findiff.differentiate(f, MultiIndex(0, (2,)), 4)
        full = findiff.differentiate(f, MultiIndex(0, (2,)), 4, boundary="one_sided")
        r = findiff.trim_margin(2, 4)
        assert np.allclose(full.values[:, r:-r], trim.values, atol=1e-9)

    def test_label_suffix(self):
        f = poly_field([1.0, 1.0], [1.0, 1.0])
        num = findiff.differentiate(f, MultiIndex(1, (2,)), 2)
        assert num.label == "poly_txx"

    def test_grid_too_small(self):
        f = poly_field([1.0], [1.0, 1.0], nt=2, nx=5)
        with pytest.raises(GridTooSmallError):
            findiff.differentiate(f, MultiIndex(0, (1,)), 8)

    def test_zero_index_is_identity(self):
        f = poly_field([1.0, 2.0], [1.0, -1.0])
        num = findiff.differentiate(f, MultiIndex(0, (0,)), 4)
        assert num == f


class TestErrorBound:
    def test_formula(self):
        rep = findiff.error_bound(1e-16, 1 / 30, np.exp(10))
        assert rep.bound_value == pytest.approx(1e-16 * 30 + np.exp(10) / (900 * 6))

    def test_domain_checks(self):
        with pytest.raises(DomainError):
            findiff.error_bound(1e-16, 0.0, 1.0)
        with pytest.raises(DomainError):
            findiff.error_bound(-1.0, 0.1, 1.0)
