"""Regularly gridded scalar fields and their CSV ingestion/export.

The grid CSV format is:

    # axes: t:<start>:<step>:<count>, x:<start>:<step>:<count>[, ...]
    # label: <text>
    i_t,i_x1,...,value

with one data row per grid point in row-major order and values printed
with 17 significant digits so round-trips are bit exact.  Additional
``# key: value`` comment lines are ignored on ingestion.

A second, header-less format with coordinate columns ``t,x1,...,value``
is also accepted; axes are inferred from the sorted unique coordinates
and must be uniformly spaced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FormatError,
    IncompleteGridError,
    IoError,
    NonUniformGridError,
    ValidationError,
)

# Relative tolerance for declaring coordinate spacing uniform.
UNIFORM_RTOL = 1e-12


@dataclass(frozen=True)
class Axis:
    """One uniformly spaced sampling axis: coordinate of index i is start + i*step."""

    name: str
    start: float
    step: float
    count: int

    def __post_init__(self):
        if not (self.step > 0):
            raise ValidationError(f"axis {self.name!r}: step must be positive, got {self.step}")
        if self.count < 2:
            raise ValidationError(f"axis {self.name!r}: count must be >= 2, got {self.count}")

    def coords(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    def coord(self, i: int) -> float:
        return self.start + i * self.step

    def trimmed(self, left: int, right: int | None = None) -> "Axis":
        """Axis with `left`/`right` samples removed from each end."""
        if right is None:
            right = left
        count = self.count - left - right
        return Axis(self.name, self.start + left * self.step, self.step, count)


@dataclass(frozen=True, eq=False)
class SampledField:
    """Values of a scalar function on a regular grid.

    The first axis is time, the remaining axes are spatial.  Immutable
    after construction; the value tensor is marked read-only.
    """

    axes: tuple[Axis, ...]
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != tuple(ax.count for ax in self.axes):
            raise ValidationError(
                f"value tensor shape {vals.shape} does not match axis counts "
                f"{tuple(ax.count for ax in self.axes)}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValidationError("field contains non-finite values")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "axes", tuple(self.axes))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return len(self.axes)

    def coordinate_grids(self) -> list[np.ndarray]:
        """Dense coordinate arrays, one per axis, each of the field's shape."""
        return list(np.meshgrid(*(ax.coords() for ax in self.axes), indexing="ij"))

    def __eq__(self, other):
        if not isinstance(other, SampledField):
            return NotImplemented
        return (
            self.axes == other.axes
            and self.label == other.label
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.axes, self.label, self.values.tobytes()))


@dataclass(frozen=True)
class MultiIndex:
    """Derivative specification: n-th time derivative and spatial orders alpha."""

    time_order: int = 0
    space_orders: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.time_order < 0 or any(a < 0 for a in self.space_orders):
            raise ValidationError("derivative orders must be non-negative")
        object.__setattr__(self, "space_orders", tuple(int(a) for a in self.space_orders))

    @property
    def total(self) -> int:
        return self.time_order + sum(self.space_orders)

    def per_axis(self, ndim: int) -> tuple[int, ...]:
        """Orders padded/matched to an (ndim)-dimensional field, time axis first."""
        alpha = self.space_orders + (0,) * (ndim - 1 - len(self.space_orders))
        if len(alpha) != ndim - 1:
            raise ValidationError(
                f"multi-index has {len(self.space_orders)} spatial orders, field has {ndim - 1} spatial axes"
            )
        return (self.time_order, *alpha)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def export_csv(field: SampledField, path) -> None:
    """Write `field` in the grid CSV format (bit-exact round-trip)."""
    axes_desc = ", ".join(
        f"{ax.name}:{_fmt(ax.start)}:{_fmt(ax.step)}:{ax.count}" for ax in field.axes
    )
    lines = [f"# axes: {axes_desc}", f"# label: {field.label}"]
    flat = field.values.reshape(-1)
    for idx, v in zip(np.ndindex(field.shape), flat):
        lines.append(",".join(str(i) for i in idx) + "," + _fmt(v))
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _parse_axes_header(text: str) -> tuple[Axis, ...]:
    axes = []
    for part in text.split(","):
        part = part.strip()
        toks = part.split(":")
        if len(toks) != 4:
            raise FormatError(f"bad axis descriptor {part!r}")
        name, start, step, count = toks
        try:
            axes.append(Axis(name.strip(), float(start), float(step), int(count)))
        except ValueError as exc:
            raise FormatError(f"bad axis descriptor {part!r}: {exc}") from exc
    if not axes:
        raise FormatError("empty axes header")
    return tuple(axes)


def ingest_csv(path) -> SampledField:
    """Read a grid CSV file (either the index format or the coordinate format)."""
    try:
        with open(path) as fh:
            raw_lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    axes = None
    label = ""
    data_lines = []
    for line in raw_lines:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("axes:"):
                axes = _parse_axes_header(body[len("axes:"):])
            elif body.startswith("label:"):
                label = body[len("label:"):].strip()
            # other comment lines (e.g. "# manifest: ...") are ignored
            continue
        data_lines.append(line)

    if not data_lines:
        raise FormatError(f"{path}: no data rows")

    if axes is not None:
        return _ingest_indexed(data_lines, axes, label, path)
    return _ingest_coordinates(data_lines, label, path)


def _ingest_indexed(data_lines, axes, label, path) -> SampledField:
    shape = tuple(ax.count for ax in axes)
    values = np.full(shape, np.nan)
    ndim = len(axes)
    for line in data_lines:
        toks = line.split(",")
        if len(toks) != ndim + 1:
            raise FormatError(f"{path}: expected {ndim + 1} columns, got {len(toks)}: {line!r}")
        try:
            idx = tuple(int(t) for t in toks[:-1])
            val = float(toks[-1])
        except ValueError as exc:
            raise FormatError(f"{path}: bad data row {line!r}: {exc}") from exc
        if any(i < 0 or i >= n for i, n in zip(idx, shape)):
            raise FormatError(f"{path}: index {idx} outside grid shape {shape}")
        values[idx] = val
    if np.any(np.isnan(values)):
        missing = int(np.isnan(values).sum())
        raise IncompleteGridError(f"{path}: {missing} grid cells missing")
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"{path}: non-finite values in grid")
    return SampledField(axes=axes, values=values, label=label)


def _uniform_axis(name: str, coords: np.ndarray, path) -> Axis:
    if len(coords) < 2:
        raise IncompleteGridError(f"{path}: axis {name!r} has fewer than 2 distinct coordinates")
    steps = np.diff(coords)
    step = float(np.mean(steps))
    scale = max(abs(coords[0]), abs(coords[-1]), abs(step))
    if np.max(np.abs(steps - step)) > UNIFORM_RTOL * max(scale, 1.0) + 1e-300:
        raise NonUniformGridError(
            f"{path}: axis {name!r} spacing is not uniform (rel tol {UNIFORM_RTOL})"
        )
    return Axis(name, float(coords[0]), step, len(coords))


def _ingest_coordinates(data_lines, label, path) -> SampledField:
    first = data_lines[0].split(",")
    names = None
    start_row = 0
    try:
        [float(t) for t in first]
    except ValueError:
        names = [t.strip() for t in first[:-1]]
        start_row = 1
    rows = []
    for line in data_lines[start_row:]:
        toks = line.split(",")
        try:
            rows.append([float(t) for t in toks])
        except ValueError as exc:
            raise FormatError(f"{path}: bad data row {line!r}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    width = len(rows[0])
    if width < 2 or any(len(r) != width for r in rows):
        raise FormatError(f"{path}: inconsistent column counts")
    ndim = width - 1
    if names is None:
        names = ["t"] + [f"x{i}" if ndim > 2 else "x" for i in range(1, ndim)]
    arr = np.asarray(rows)
    axes = []
    for d in range(ndim):
        coords = np.unique(arr[:, d])
        axes.append(_uniform_axis(names[d], coords, path))
    shape = tuple(ax.count for ax in axes)
    if math.prod(shape) != len(rows):
        raise IncompleteGridError(
            f"{path}: {len(rows)} rows for grid of {math.prod(shape)} points"
        )
    values = np.full(shape, np.nan)
    for r in arr:
        idx = tuple(
            int(round((r[d] - axes[d].start) / axes[d].step)) for d in range(ndim)
        )
        values[idx] = r[-1]
    if np.any(np.isnan(values)):
        raise IncompleteGridError(f"{path}: grid has missing cells")
    return SampledField(axes=tuple(axes), values=values, label=label)
