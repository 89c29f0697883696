"""Feature matrices whose numerical rank decides uniqueness.

A feature input is either a derivative of u (a ``MultiIndex``; the zero
index is u itself) or a grid coordinate (``Coordinate``).  Supported
libraries: LINEAR (the inputs as-is), MONOMIAL (all monomials of the
inputs up to a degree, graded-lex), and CUSTOM (single-input elementwise
maps from a fixed vocabulary appended after the base columns).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from . import findiff
from .errors import FeatureEvaluationError, FormatError, GridTooSmallError, ValidationError
from .grid import Axis, MultiIndex, SampledField

# Column whose norm falls below this fraction of the largest column norm is
# treated as identically zero under normalization.  Without the guard,
# normalizing a column that is pure rounding noise (e.g. u_xx of a function
# linear in x) would inflate the noise to unit norm and destroy the rank
# deficiency the column carries.
ZERO_COLUMN_RTOL = 1e-10

CUSTOM_OPS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "log": np.log,
    "recip": lambda c: 1.0 / c,
}


@dataclass(frozen=True)
class Coordinate:
    """Projection onto one grid coordinate (axis 0 is time)."""

    axis: int = 0


FeatureInput = MultiIndex | Coordinate


@dataclass(frozen=True)
class CustomTerm:
    """Elementwise map over one named input column, e.g. ('sin(u_x)', 'sin', 'u_x')."""

    label: str
    op: str
    input_label: str
    power: int | None = None  # for op == "pow"


@dataclass(frozen=True)
class FeatureSpec:
    kind: str  # "linear" | "monomial" | "custom"
    inputs: tuple[FeatureInput, ...]
    degree: int = 1
    custom_terms: tuple[CustomTerm, ...] = ()
    include_constant: bool | None = None  # None: off for linear/custom, on for monomial

    def __post_init__(self):
        if self.kind not in ("linear", "monomial", "custom"):
            raise ValidationError(f"unknown feature kind {self.kind!r}")
        if not self.inputs:
            raise ValidationError("feature spec needs at least one input")
        if len(set(self.inputs)) != len(self.inputs):
            raise ValidationError("feature inputs must be pairwise distinct")
        if self.kind == "monomial" and self.degree < 1:
            raise ValidationError("monomial degree must be >= 1")
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "custom_terms", tuple(self.custom_terms))

    @property
    def constant_included(self) -> bool:
        if self.include_constant is None:
            return self.kind == "monomial"
        return self.include_constant

    def column_count(self) -> int:
        k = len(self.inputs)
        n = k + len(self.custom_terms)
        if self.kind == "monomial":
            n = math.comb(k + self.degree, self.degree) - 1 + len(self.custom_terms)
        if self.constant_included:
            n += 1
        return n


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Labeled columns evaluated on a common grid, raw values always retained."""

    raw: np.ndarray  # N_points x k, un-normalized
    labels: tuple[str, ...]
    axes: tuple[Axis, ...]  # grid the rows enumerate, row-major
    column_norms: np.ndarray
    normalized: bool
    zero_columns: tuple[int, ...] = ()

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=float)
        if not np.all(np.isfinite(raw)):
            raise ValidationError("feature matrix contains non-finite entries")
        raw.setflags(write=False)
        object.__setattr__(self, "raw", raw)
        norms = np.asarray(self.column_norms, dtype=float)
        norms.setflags(write=False)
        object.__setattr__(self, "column_norms", norms)

    @property
    def shape(self) -> tuple[int, int]:
        return self.raw.shape

    def working(self) -> np.ndarray:
        """The matrix rank computations operate on (normalized view if requested)."""
        if not self.normalized:
            return self.raw
        out = self.raw.copy()
        for j in range(out.shape[1]):
            if j in self.zero_columns:
                out[:, j] = 0.0
            elif self.column_norms[j] > 0:
                out[:, j] /= self.column_norms[j]
        return out

    def point_coords(self) -> np.ndarray:
        """Row index -> grid coordinates, shape (N_points, ndim)."""
        grids = np.meshgrid(*(ax.coords() for ax in self.axes), indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1)


def input_label(inp: FeatureInput, axes: tuple[Axis, ...] | None = None) -> str:
    if isinstance(inp, Coordinate):
        if axes is not None and inp.axis < len(axes):
            return axes[inp.axis].name
        return "t" if inp.axis == 0 else f"x{inp.axis}"
    suffix = "t" * inp.time_order
    for i, o in enumerate(inp.space_orders):
        name = axes[i + 1].name if axes is not None and i + 1 < len(axes) else ("x" if i == 0 else f"x{i + 1}")
        suffix += name * o
    return f"u_{suffix}" if suffix else "u"


def parse_input_token(token: str, ndim: int = 2) -> FeatureInput:
    """Parse tokens like 'u', 'u_x', 'u_txx', 't', 'x' into feature inputs."""
    token = token.strip()
    if token == "t":
        return Coordinate(0)
    if token == "x":
        return Coordinate(1)
    if token.startswith("x") and token[1:].isdigit():
        return Coordinate(int(token[1:]))
    if token == "u":
        return MultiIndex(0, (0,) * (ndim - 1))
    if token.startswith("u_"):
        suffix = token[2:]
        n = 0
        alpha = [0] * (ndim - 1)
        for ch in suffix:
            if ch == "t":
                n += 1
            elif ch == "x":
                alpha[0] += 1
            else:
                raise FormatError(f"bad derivative token {token!r}")
        return MultiIndex(n, tuple(alpha))
    raise FormatError(f"unrecognized feature input {token!r}")


def parse_spec(text: str, ndim: int = 2) -> FeatureSpec:
    """Parse the serialized form, e.g. 'kind=monomial; inputs=u,u_x; degree=2; constant=true'."""
    fields = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise FormatError(f"bad feature spec fragment {part!r}")
        key, _, val = part.partition("=")
        fields[key.strip().lower()] = val.strip()
    kind = fields.get("kind", "linear").lower()
    if "inputs" not in fields:
        raise FormatError("feature spec needs inputs=...")
    inputs = tuple(parse_input_token(tok, ndim) for tok in fields["inputs"].split(","))
    degree = int(fields.get("degree", "1"))
    const = fields.get("constant")
    include_constant = None if const is None else const.lower() in ("1", "true", "yes", "on")
    custom_terms = []
    if "custom" in fields:
        for term in fields["custom"].split(","):
            term = term.strip()
            if "(" not in term or not term.endswith(")"):
                raise FormatError(f"bad custom term {term!r}, expected op(input)")
            op, _, rest = term.partition("(")
            arg = rest[:-1].strip()
            op = op.strip().lower()
            if op.startswith("pow") and op[3:].isdigit():
                custom_terms.append(CustomTerm(term, "pow", arg, int(op[3:])))
            elif op in CUSTOM_OPS:
                custom_terms.append(CustomTerm(term, op, arg))
            else:
                raise FormatError(f"unknown custom op {op!r}")
    return FeatureSpec(kind=kind, inputs=inputs, degree=degree,
                       custom_terms=tuple(custom_terms), include_constant=include_constant)


def render_spec(spec: FeatureSpec) -> str:
    parts = [f"kind={spec.kind}", "inputs=" + ",".join(input_label(i) for i in spec.inputs)]
    if spec.kind == "monomial":
        parts.append(f"degree={spec.degree}")
    if spec.include_constant is not None:
        parts.append(f"constant={'true' if spec.include_constant else 'false'}")
    if spec.custom_terms:
        parts.append("custom=" + ",".join(t.label for t in spec.custom_terms))
    return "; ".join(parts)


def common_trim_margins(
    inputs: tuple[FeatureInput, ...], ndim: int, accuracy_order: int, extra_order: int = 0
) -> tuple[int, ...]:
    """Per-axis trim so every requested derivative (plus `extra_order` more) fits."""
    margins = [0] * ndim
    for inp in inputs:
        if isinstance(inp, Coordinate):
            continue
        orders = inp.per_axis(ndim)
        for ax, d in enumerate(orders):
            need = d + extra_order
            if need:
                margins[ax] = max(margins[ax], findiff.trim_margin(need, accuracy_order))
    if extra_order:
        for ax in range(ndim):
            margins[ax] = max(margins[ax], findiff.trim_margin(extra_order, accuracy_order))
    return tuple(margins)


def _slice_to_margins(values: np.ndarray, own: tuple[int, ...], target: tuple[int, ...]) -> np.ndarray:
    slices = []
    for o, t in zip(own, target):
        d = t - o
        if d < 0:
            raise ValueError("target margins smaller than field margins")
        slices.append(slice(d, values.shape[len(slices)] - d if d else None))
    return values[tuple(slices)]


def input_columns(
    field: SampledField,
    inputs: tuple[FeatureInput, ...],
    accuracy_order: int,
    boundary: str = "one_sided",
    trim_margins: tuple[int, ...] | None = None,
) -> tuple[np.ndarray, tuple[Axis, ...]]:
    """Evaluate the raw input columns on a common grid.

    Returns (columns array N x k, axes of the common grid).  With
    ``boundary="trim"`` the common grid is the intersection of the valid
    interiors (or the explicit ``trim_margins``, e.g. those of a larger
    stencil, so several accuracy orders can share one point set).
    """
    ndim = field.ndim
    if boundary == "trim":
        margins = trim_margins or common_trim_margins(inputs, ndim, accuracy_order)
    else:
        margins = (0,) * ndim
    axes = tuple(ax.trimmed(m) for ax, m in zip(field.axes, margins))
    if any(ax.count < 1 for ax in axes):
        raise GridTooSmallError("grid too small for requested stencils")
    cols = []
    for inp in inputs:
        if isinstance(inp, Coordinate):
            coords = np.meshgrid(*(ax.coords() for ax in axes), indexing="ij")
            cols.append(coords[inp.axis].reshape(-1))
            continue
        if inp.total == 0:
            vals = field.values
            own = (0,) * ndim
        else:
            der = findiff.differentiate(field, inp, accuracy_order, boundary=boundary)
            vals = der.values
            own = tuple(
                f_ax.count - d_ax.count and (f_ax.count - d_ax.count) // 2
                for f_ax, d_ax in zip(field.axes, der.axes)
            )
        cols.append(_slice_to_margins(vals, own, margins).reshape(-1))
    return np.stack(cols, axis=1), axes


def _monomial_columns(base: np.ndarray, labels: list[str], degree: int):
    k = base.shape[1]
    cols, mono_labels = [], []
    for d in range(2, degree + 1):
        for combo in combinations_with_replacement(range(k), d):
            col = np.prod(base[:, combo], axis=1)
            counts = {}
            for i in combo:
                counts[i] = counts.get(i, 0) + 1
            label = "*".join(
                labels[i] + (f"^{c}" if c > 1 else "") for i, c in sorted(counts.items())
            )
            cols.append(col)
            mono_labels.append(label)
    return cols, mono_labels


def build(
    field: SampledField,
    spec: FeatureSpec,
    accuracy_order: int,
    normalize: bool = True,
    boundary: str = "one_sided",
    trim_margins: tuple[int, ...] | None = None,
) -> FeatureMatrix:
    """Evaluate the feature library of `spec` on the field's common grid."""
    base, axes = input_columns(field, spec.inputs, accuracy_order, boundary, trim_margins)
    labels = [input_label(i, field.axes) for i in spec.inputs]
    cols = [base[:, j] for j in range(base.shape[1])]
    all_labels = list(labels)
    if spec.constant_included:
        cols.append(np.ones(base.shape[0]))
        all_labels.append("1")
    if spec.kind == "monomial":
        mono, mono_labels = _monomial_columns(base, labels, spec.degree)
        cols.extend(mono)
        all_labels.extend(mono_labels)
    for term in spec.custom_terms:
        if term.input_label not in labels:
            raise FeatureEvaluationError(
                f"custom term {term.label!r} refers to unknown input {term.input_label!r}",
                label=term.label,
            )
        src = base[:, labels.index(term.input_label)]
        with np.errstate(all="ignore"):
            if term.op == "pow":
                col = src ** term.power
            else:
                col = CUSTOM_OPS[term.op](src)
        if not np.all(np.isfinite(col)):
            bad = int(np.argmax(~np.isfinite(col)))
            point = tuple(float(c) for c in matrix_point(axes, bad))
            raise FeatureEvaluationError(
                f"custom term {term.label!r} produced a non-finite value at grid point {point}",
                label=term.label,
                point=point,
            )
        cols.append(col)
        all_labels.append(term.label)
    return matrix_from_columns(all_labels, cols, axes, normalize=normalize)


def matrix_point(axes: tuple[Axis, ...], row: int) -> tuple[float, ...]:
    shape = tuple(ax.count for ax in axes)
    idx = np.unravel_index(row, shape)
    return tuple(ax.coord(i) for ax, i in zip(axes, idx))


def matrix_from_columns(labels, columns, axes, normalize: bool = True) -> FeatureMatrix:
    """Assemble a FeatureMatrix from pre-computed raw columns (also the test hook)."""
    raw = np.stack([np.asarray(c, dtype=float).reshape(-1) for c in columns], axis=1)
    norms = np.linalg.norm(raw, axis=0)
    zero = ()
    if normalize:
        ref = norms.max() if norms.size else 0.0
        zero = tuple(int(j) for j, n in enumerate(norms) if n <= ZERO_COLUMN_RTOL * ref)
    return FeatureMatrix(
        raw=raw,
        labels=tuple(labels),
        axes=tuple(axes),
        column_norms=norms,
        normalized=normalize,
        zero_columns=zero,
    )
