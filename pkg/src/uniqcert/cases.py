"""Closed-form experiment functions with exact derivative oracles.

Six registered cases, each a known solution of at least one PDE of the
form u_t = F(u, u_x, ...).  Derivatives are produced symbolically and
compiled to vectorized evaluators, which keeps the oracle independent of
the finite-difference machinery it is used to validate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .errors import OrderError, ParameterError, UnknownCaseError
from .grid import Axis, MultiIndex, SampledField

MAX_TOTAL_ORDER = 4

_t, _x = sp.symbols("t x", real=True)


def _sech_impl(z):
    # 2e^{-|z|}/(1+e^{-2|z|}): never overflows, unlike 1/cosh for large z.
    a = np.exp(-np.abs(z))
    return 2.0 * a / (1.0 + a * a)


_LAMBDIFY_MODULES = [{"sech": _sech_impl}, "numpy"]


@dataclass(frozen=True)
class AnalyticCase:
    """A closed-form u(t, x) with exact derivatives up to total order 4."""

    name: str
    parameters: dict
    domain: tuple[tuple[float, float], ...]
    default_counts: tuple[int, ...]
    expr: sp.Expr
    _fns: dict = field(default_factory=dict, repr=False, compare=False)

    def _fn(self, idx: MultiIndex):
        key = (idx.time_order, idx.space_orders)
        if key not in self._fns:
            if idx.total > MAX_TOTAL_ORDER:
                raise OrderError(
                    f"derivative of total order {idx.total} exceeds supported maximum {MAX_TOTAL_ORDER}"
                )
            alpha = idx.space_orders[0] if idx.space_orders else 0
            d = sp.diff(self.expr, _t, idx.time_order, _x, alpha)
            self._fns[key] = sp.lambdify((_t, _x), d, modules=_LAMBDIFY_MODULES)
        return self._fns[key]

    def value_fn(self, t, x):
        return np.broadcast_to(self._fn(MultiIndex(0, (0,)))(t, x), np.broadcast_shapes(np.shape(t), np.shape(x))).astype(float)

    def derivative_fn(self, idx: MultiIndex, t, x):
        out = self._fn(idx)(t, x)
        return np.broadcast_to(out, np.broadcast_shapes(np.shape(t), np.shape(x))).astype(float)


# name -> (required parameter names, domain, expression builder)
# KdV note: the 1-soliton that solves both u_t = 6 u u_x - u_xxx and the
# one-way wave equation u_t = -c u_x is -c/2 sech^2(sqrt(c)/2 (x - c t - a));
# the positive-sech^2 profile solves the opposite-sign convention instead.
_REGISTRY = {
    "transport_exp": (
        ("a",),
        ((0.0, 10.0), (0.0, 10.0)),
        lambda p: sp.exp(_x - p["a"] * _t),
    ),
    "linear_growth": (
        ("a", "b"),
        ((0.0, 10.0), (0.0, 10.0)),
        lambda p: (_x + p["b"] * _t) * sp.exp(p["a"] * _t),
    ),
    "kdv_soliton": (
        ("a", "c"),
        ((0.0, 10.0), (0.0, 10.0)),
        lambda p: -(sp.Rational(1, 2) * p["c"])
        * sp.sech(sp.sqrt(sp.nsimplify(p["c"])) / 2 * (_x - p["c"] * _t - p["a"])) ** 2,
    ),
    "reciprocal": (
        (),
        ((1.0, 5.0), (1.0, 5.0)),
        lambda p: 1 / (_t + _x),
    ),
    "sine_wave": (
        (),
        ((0.0, 5.0), (0.0, 5.0)),
        lambda p: sp.sin(_x + _t),
    ),
    "arcsin_sech": (
        (),
        ((1.0, 5.0), (1.0, 5.0)),
        lambda p: (_x + _t) * sp.asin(sp.sech(_t)),
    ),
}

DEFAULT_COUNTS = (200, 300)


def case_names() -> list[str]:
    return sorted(_REGISTRY)


def make_case(name: str, parameters: dict | None = None) -> AnalyticCase:
    """Instantiate a registered case with its parameters fully bound."""
    if name not in _REGISTRY:
        raise UnknownCaseError(f"unknown case {name!r}; known: {', '.join(case_names())}")
    required, domain, builder = _REGISTRY[name]
    params = dict(parameters or {})
    missing = [k for k in required if k not in params]
    if missing:
        raise ParameterError(f"case {name!r} missing parameters: {', '.join(missing)}")
    extra = [k for k in params if k not in required]
    if extra:
        raise ParameterError(f"case {name!r} got unexpected parameters: {', '.join(extra)}")
    params = {k: float(v) for k, v in params.items()}
    expr = sp.simplify(builder({k: sp.nsimplify(v, rational=True) for k, v in params.items()}))
    return AnalyticCase(
        name=name,
        parameters=params,
        domain=domain,
        default_counts=DEFAULT_COUNTS,
        expr=expr,
    )


def _axes(case: AnalyticCase, counts) -> tuple[Axis, ...]:
    counts = tuple(int(c) for c in counts)
    if len(counts) != len(case.domain):
        raise ParameterError(
            f"case {case.name!r} needs {len(case.domain)} counts, got {len(counts)}"
        )
    if any(c < 2 for c in counts):
        raise ParameterError("each axis needs at least 2 samples")
    names = ("t", "x")
    return tuple(
        Axis(names[i], start, (end - start) / (counts[i] - 1), counts[i])
        for i, (start, end) in enumerate(case.domain)
    )


def sample(case: AnalyticCase, counts=None) -> SampledField:
    """Evaluate the case on its default grid (paper protocol: 200 x 300)."""
    counts = counts or case.default_counts
    axes = _axes(case, counts)
    tt, xx = np.meshgrid(axes[0].coords(), axes[1].coords(), indexing="ij")
    return SampledField(axes=axes, values=case.value_fn(tt, xx), label=case.name)


def exact_derivative_field(case: AnalyticCase, idx: MultiIndex, counts=None) -> SampledField:
    """Pointwise-exact derivative of the case on the same grid as ``sample``."""
    if idx.total > MAX_TOTAL_ORDER:
        raise OrderError(f"total derivative order {idx.total} > {MAX_TOTAL_ORDER}")
    counts = counts or case.default_counts
    axes = _axes(case, counts)
    tt, xx = np.meshgrid(axes[0].coords(), axes[1].coords(), indexing="ij")
    label = f"{case.name}:d{idx.time_order}t_d{idx.space_orders[0] if idx.space_orders else 0}x"
    return SampledField(axes=axes, values=case.derivative_fn(idx, tt, xx), label=label)
