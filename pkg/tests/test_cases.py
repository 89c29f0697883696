import numpy as np
import pytest

from uniqcert import cases, findiff
from uniqcert.errors import OrderError, ParameterError, UnknownCaseError
from uniqcert.grid import MultiIndex

U = MultiIndex(0, (0,))
UT = MultiIndex(1, (0,))
UX = MultiIndex(0, (1,))
UXXX = MultiIndex(0, (3,))


class TestRegistry:
    def test_six_cases(self):
        assert cases.case_names() == [
            "arcsin_sech",
            "kdv_soliton",
            "linear_growth",
            "reciprocal",
            "sine_wave",
            "transport_exp",
        ]

    def test_unknown_case(self):
        with pytest.raises(UnknownCaseError):
            cases.make_case("nope", {})

    def test_missing_parameter(self):
        with pytest.raises(ParameterError):
            cases.make_case("transport_exp", {})

    def test_unexpected_parameter(self):
        with pytest.raises(ParameterError):
            cases.make_case("reciprocal", {"a": 1.0})


class TestValues:
    def test_transport_at_origin(self):
        case = cases.make_case("transport_exp", {"a": 3.0})
        assert case.value_fn(0.0, 0.0) == pytest.approx(1.0)

    def test_reciprocal_time_derivative(self):
        case = cases.make_case("reciprocal", {})
        assert case.derivative_fn(UT, 1.0, 1.0) == pytest.approx(-0.25)

    def test_kdv_at_origin(self):
        # the soliton branch that satisfies both governing equations below
        # has a trough, not a crest, at the origin
        case = cases.make_case("kdv_soliton", {"a": 0.0, "c": 1.0})
        assert case.value_fn(0.0, 0.0) == pytest.approx(-0.5)

    def test_sine_spatial_derivative(self):
        case = cases.make_case("sine_wave", {})
        assert case.derivative_fn(UX, 0.0, 0.0) == pytest.approx(1.0)

    def test_zero_index_matches_value_fn(self):
        for name, params in [
            ("transport_exp", {"a": 2.0}),
            ("kdv_soliton", {"a": 1.0, "c": 2.0}),
            ("arcsin_sech", {}),
        ]:
            case = cases.make_case(name, params)
            t = np.linspace(*case.domain[0], 7)
            x = np.linspace(*case.domain[1], 9)
            tt, xx = np.meshgrid(t, x, indexing="ij")
            assert np.array_equal(case.derivative_fn(U, tt, xx), case.value_fn(tt, xx))


class TestGoverningEquations:
    def test_kdv_satisfies_both_pdes(self):
        c = 1.0
        case = cases.make_case("kdv_soliton", {"a": 0.0, "c": c})
        fld = cases.sample(case, (40, 60))
        tt, xx = np.meshgrid(fld.axes[0].coords(), fld.axes[1].coords(), indexing="ij")
        u = case.value_fn(tt, xx)
        ut = case.derivative_fn(UT, tt, xx)
        ux = case.derivative_fn(UX, tt, xx)
        uxxx = case.derivative_fn(UXXX, tt, xx)
        assert np.max(np.abs(ut - (6 * u * ux - uxxx))) < 1e-10
        assert np.max(np.abs(ut + c * ux)) < 1e-10

    def test_arcsin_sech_equation(self):
        case = cases.make_case("arcsin_sech", {})
        t = np.linspace(1.0, 5.0, 30)
        x = np.linspace(1.0, 5.0, 30)
        tt, xx = np.meshgrid(t, x, indexing="ij")
        ut = case.derivative_fn(UT, tt, xx)
        ux = case.derivative_fn(UX, tt, xx)
        u = case.value_fn(tt, xx)
        assert np.max(np.abs(ut - (ux - (u / ux) * np.sin(ux)))) < 1e-10


class TestSampling:
    def test_default_grid_shape(self):
        fld = cases.sample(cases.make_case("transport_exp", {"a": 3.0}))
        assert fld.shape == (200, 300)
        assert fld.axes[0].start == 0.0
        assert fld.axes[0].coord(199) == pytest.approx(10.0)

    def test_tiny_grid(self):
        fld = cases.sample(cases.make_case("reciprocal", {}), (2, 2))
        assert fld.shape == (2, 2)
        assert fld.values[0, 0] == pytest.approx(0.5)

    def test_sample_matches_value_fn(self):
        case = cases.make_case("kdv_soliton", {"a": 0.0, "c": 1.0})
        fld = cases.sample(case, (13, 17))
        tt, xx = np.meshgrid(fld.axes[0].coords(), fld.axes[1].coords(), indexing="ij")
        assert np.max(np.abs(fld.values - case.value_fn(tt, xx))) == 0.0

    def test_order_cap(self):
        case = cases.make_case("sine_wave", {})
        with pytest.raises(OrderError):
            cases.exact_derivative_field(case, MultiIndex(3, (2,)), (10, 10))


class TestFiniteDifferenceConsistency:
    @pytest.mark.parametrize(
        "name,params",
        [
            ("sine_wave", {}),
            ("reciprocal", {}),
            ("kdv_soliton", {"a": 0.0, "c": 1.0}),
        ],
    )
    @pytest.mark.parametrize("idx", [UX, UT, MultiIndex(0, (2,))])
    def test_convergence_rate(self, name, params, idx):
        # halve h three times and check the empirical order of the accuracy-2
        # central difference against the exact oracle
        case = cases.make_case(name, params)
        errs, hs = [], []
        for n in (40, 80, 160):
            fld = cases.sample(case, (n, n))
            num = findiff.differentiate(fld, idx, 2)
            tt, xx = np.meshgrid(num.axes[0].coords(), num.axes[1].coords(), indexing="ij")
            exact = case.derivative_fn(idx, tt, xx)
            errs.append(np.max(np.abs(num.values - exact)))
            hs.append(fld.axes[0].step)
        rate = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert rate >= 1.5  # nominal rate 2, allow half an order of slack
