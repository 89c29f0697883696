"""Arbitrary-accuracy finite-difference stencils and grid differentiation.

Stencil weights are obtained by exact rational Gaussian elimination on
the moment (Vandermonde) system, so the weights themselves carry no
conditioning noise; they are converted to floats only at the end.

``differentiate`` supports two boundary policies:

* ``"trim"``     - interior-only output; the result lives on the subgrid
  where the full central stencil fits (axes carry trimmed start/count).
* ``"one_sided"``- output on the full grid; points within a half-width
  of an edge use shifted stencils of the same accuracy order.

Trimming is the right policy when the error of an individual derivative
matters (convergence studies, the deterministic error bound).  The rank
pipeline deliberately uses the one-sided closure: for solutions whose
derivative columns are exactly proportional to u on a uniform grid
(e.g. pure exponentials), central differences alone leave the feature
matrix exactly rank-deficient at every accuracy order and no singular
value decay is observable; the boundary truncation error restores the
order-dependent perturbation the decay test relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import DomainError, GridTooSmallError, OrderError
from .grid import MultiIndex, SampledField

SUPPORTED_ACCURACIES = (2, 4, 6, 8, 10)
MAX_DERIVATIVE_ORDER = 4


@dataclass(frozen=True)
class Stencil:
    """Finite-difference weights on integer offsets (to be scaled by h^-order)."""

    derivative_order: int
    accuracy_order: int
    offsets: tuple[int, ...]
    weights: tuple[float, ...]

    @property
    def half_width(self) -> int:
        return max(-min(self.offsets), max(self.offsets))


@dataclass(frozen=True)
class ErrorBoundReport:
    """Deterministic worst-case bound eps/h + h^2/6 * M for the 3-point first derivative."""

    eps: float
    h: float
    third_derivative_bound: float
    bound_value: float


def _solve_moment_system(offsets: tuple[int, ...], derivative_order: int) -> tuple[Fraction, ...]:
    """Exact-rational solve of sum_i w_i o_i^j = d! * delta_{jd}, j = 0..n-1."""
    n = len(offsets)
    a = [[Fraction(o) ** j for o in offsets] for j in range(n)]
    b = [Fraction(factorial(derivative_order)) if j == derivative_order else Fraction(0) for j in range(n)]
    # Gaussian elimination with partial pivoting over the rationals.
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        if a[piv][col] == 0:
            raise OrderError(f"singular moment system for offsets {offsets}")
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        b[col] *= inv
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [rv - f * cv for rv, cv in zip(a[r], a[col])]
                b[r] -= f * b[col]
    return tuple(b)


def stencil_points(derivative_order: int, accuracy_order: int) -> int:
    """Width (number of points) of the central stencil for the given orders."""
    return 2 * ((derivative_order + 1) // 2) - 1 + accuracy_order


@lru_cache(maxsize=None)
def central_stencil(derivative_order: int, accuracy_order: int) -> Stencil:
    """Symmetric central stencil satisfying all moment conditions exactly."""
    if derivative_order < 1 or derivative_order > MAX_DERIVATIVE_ORDER:
        raise OrderError(f"derivative order {derivative_order} unsupported (1..{MAX_DERIVATIVE_ORDER})")
    if accuracy_order not in SUPPORTED_ACCURACIES:
        raise OrderError(f"accuracy order {accuracy_order} unsupported, use one of {SUPPORTED_ACCURACIES}")
    n = stencil_points(derivative_order, accuracy_order)
    r = (n - 1) // 2
    offsets = tuple(range(-r, r + 1))
    weights = _solve_moment_system(offsets, derivative_order)
    return Stencil(derivative_order, accuracy_order, offsets, tuple(float(w) for w in weights))


@lru_cache(maxsize=None)
def shifted_stencil(derivative_order: int, accuracy_order: int, shift: int) -> Stencil:
    """Stencil on the central point set shifted by `shift` (boundary closure).

    A generic n-point stencil for the d-th derivative has accuracy n - d,
    which for the point counts used here is >= the requested order.
    """
    n = stencil_points(derivative_order, accuracy_order)
    r = (n - 1) // 2
    if abs(shift) > r:
        raise OrderError(f"shift {shift} exceeds half-width {r}")
    offsets = tuple(range(-r + shift, r + shift + 1))
    weights = _solve_moment_system(offsets, derivative_order)
    return Stencil(derivative_order, accuracy_order, offsets, tuple(float(w) for w in weights))


def _apply_axis_trim(values: np.ndarray, axis: int, st: Stencil, h: float) -> np.ndarray:
    a = np.moveaxis(values, axis, -1)
    n = a.shape[-1]
    r = st.half_width
    width = len(st.offsets)
    if n < width:
        raise GridTooSmallError(f"axis has {n} points, stencil needs {width}")
    out_len = n - 2 * r
    out = np.zeros(a.shape[:-1] + (out_len,))
    for k, w in enumerate(st.weights):
        if w != 0.0:
            out += w * a[..., k : k + out_len]
    out /= h ** st.derivative_order
    return np.moveaxis(out, -1, axis)


def _apply_axis_one_sided(values: np.ndarray, axis: int, d: int, p: int, h: float) -> np.ndarray:
    st = central_stencil(d, p)
    a = np.moveaxis(values, axis, -1)
    n = a.shape[-1]
    r = st.half_width
    width = len(st.offsets)
    if n < width:
        raise GridTooSmallError(f"axis has {n} points, stencil needs {width}")
    out = np.zeros_like(a)
    interior = n - 2 * r
    for k, w in enumerate(st.weights):
        if w != 0.0:
            out[..., r : r + interior] += w * a[..., k : k + interior]
    for i in range(r):
        left = shifted_stencil(d, p, r - i)
        out[..., i] = sum(
            w * a[..., i + o] for w, o in zip(left.weights, left.offsets) if w != 0.0
        )
        right = shifted_stencil(d, p, -(r - i))
        out[..., n - 1 - i] = sum(
            w * a[..., n - 1 - i + o] for w, o in zip(right.weights, right.offsets) if w != 0.0
        )
    out /= h ** d
    return np.moveaxis(out, -1, axis)


def trim_margin(derivative_order: int, accuracy_order: int) -> int:
    """Samples lost at each end of an axis when trimming for this stencil."""
    if derivative_order == 0:
        return 0
    return (stencil_points(derivative_order, accuracy_order) - 1) // 2


def differentiate(
    field: SampledField,
    idx: MultiIndex,
    accuracy_order: int,
    boundary: str = "trim",
) -> SampledField:
    """Mixed partial of a gridded field, applied axis by axis (time axis first)."""
    if boundary not in ("trim", "one_sided"):
        raise ValueError(f"unknown boundary policy {boundary!r}")
    orders = idx.per_axis(field.ndim)
    if any(d > MAX_DERIVATIVE_ORDER for d in orders):
        raise OrderError(f"per-axis derivative order above {MAX_DERIVATIVE_ORDER} unsupported")
    values = field.values
    axes = list(field.axes)
    for ax_i, d in enumerate(orders):
        if d == 0:
            continue
        if boundary == "trim":
            st = central_stencil(d, accuracy_order)
            values = _apply_axis_trim(values, ax_i, st, axes[ax_i].step)
            axes[ax_i] = axes[ax_i].trimmed(st.half_width)
        else:
            values = _apply_axis_one_sided(values, ax_i, d, accuracy_order, axes[ax_i].step)
    suffix = "t" * idx.time_order + "".join(
        ax.name * o for ax, o in zip(field.axes[1:], idx.space_orders)
    )
    label = f"{field.label}_{suffix}" if suffix else field.label
    return SampledField(axes=tuple(axes), values=values, label=label)


def error_bound(eps: float, h: float, third_derivative_bound: float) -> ErrorBoundReport:
    """Worst-case error of the central 3-point first derivative: eps/h + h^2 M / 6."""
    if not h > 0:
        raise DomainError(f"grid spacing must be positive, got {h}")
    if eps < 0 or third_derivative_bound < 0:
        raise DomainError("eps and the third-derivative bound must be non-negative")
    value = eps / h + h * h * third_derivative_bound / 6.0
    return ErrorBoundReport(eps, h, third_derivative_bound, value)
