"""Per-point Jacobian rank of the feature map with respect to (t, x).

For features g = (u_alpha1, ..., u_alphak) the Jacobian J_g(t,x) is the
k x (m+1) matrix of first derivatives of each feature with respect to
every grid coordinate.  Full rank k at a single point already certifies
uniqueness within the analytic class, so the test records the smallest
singular value of J_g at every selected point, computed twice: once with
low-accuracy stencils and once with high-accuracy ones.  A genuine rank
deficiency reveals itself as a collapse of sigma_min between the two
accuracy levels (the truncation error was propping the rank up).

Jacobian entries are obtained by differentiating the numerically
computed feature fields once more along each axis, at the same accuracy,
rather than by requesting the higher-order mixed derivative of u
directly; the error characteristics of the two-stage route are what the
collapse diagnostics are calibrated against.  All stencils here are
interior-only: both accuracy levels are evaluated on the common interior
where the widest high-accuracy stencil fits, so the point sets are
identical and per-point comparisons are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import findiff
from .errors import SelectorError, ValidationError
from .grid import Axis, MultiIndex, SampledField

DEFAULT_DROP_FACTOR = 1e3
DEFAULT_FLOOR = 1e-9
# fraction of points that must be solidly non-collapsed for a
# somewhere-full-rank call, and the per-point significance level
FULL_RANK_POINT_FRACTION = 0.01
SIGNIFICANT_RATIO = 1e-3

FULL_RANK_SOMEWHERE = "FULL_RANK_SOMEWHERE"
NOWHERE_FULL_RANK = "NOWHERE_FULL_RANK"
MIXED_INCONCLUSIVE = "MIXED_INCONCLUSIVE"


@dataclass(frozen=True)
class JacobianMap:
    """sigma_min of the k x (m+1) Jacobian at each selected point, two accuracies."""

    points: np.ndarray  # (N, m+1) coordinates
    sigma_min_low: np.ndarray
    sigma_min_high: np.ndarray
    sigma_max_high: np.ndarray  # per-point largest singular value, high accuracy
    d1: int
    d2: int
    k: int
    ambient_dim: int
    grid_shape: tuple[int, ...] = ()  # selected-point lattice, () if strided/ragged
    axes: tuple[Axis, ...] = ()
    requested_orders: tuple[int, int] = (0, 0)  # before even rounding

    def __post_init__(self):
        n = len(self.points)
        if not (len(self.sigma_min_low) == len(self.sigma_min_high) == len(self.sigma_max_high) == n):
            raise ValidationError("jacobian map arrays must have equal length")
        if np.any(self.sigma_min_low < 0) or np.any(self.sigma_min_high < 0):
            raise ValidationError("singular values must be non-negative")

    @property
    def rounded(self) -> bool:
        return self.requested_orders != (self.d1, self.d2)


def _round_even(d: int) -> int:
    if d < 2:
        raise ValidationError(f"accuracy order must be >= 2, got {d}")
    return d if d % 2 == 0 else d + 1


def _feature_gradient_fields(field: SampledField, inputs, accuracy: int):
    """Differentiate each feature once more along each axis (trim mode)."""
    grads = {}
    for i, idx in enumerate(inputs):
        base = field if idx.total == 0 else findiff.differentiate(field, idx, accuracy)
        for ax in range(field.ndim):
            bump = [0] * field.ndim
            bump[ax] = 1
            one_more = MultiIndex(bump[0], tuple(bump[1:]))
            grads[(i, ax)] = findiff.differentiate(base, one_more, accuracy)
    return grads


def _margins_for(inputs, ndim: int, accuracy: int) -> tuple[int, ...]:
    """Per-axis interior margin covering every Jacobian entry at this accuracy."""
    extra = findiff.trim_margin(1, accuracy)
    margins = []
    for ax in range(ndim):
        m = 0
        for idx in inputs:
            o = idx.per_axis(ndim)[ax]
            m = max(m, findiff.trim_margin(o, accuracy) + extra)
        margins.append(m)
    return tuple(margins)


def _slice_entry(entry: SampledField, field: SampledField, margins) -> np.ndarray:
    slices = []
    for f_ax, e_ax, m in zip(field.axes, entry.axes, margins):
        own = (f_ax.count - e_ax.count) // 2
        d = m - own
        slices.append(slice(d, e_ax.count - d if d else None))
    return entry.values[tuple(slices)]


def jrc(
    field: SampledField,
    inputs: tuple[MultiIndex, ...],
    d1: int = 2,
    d2: int = 8,
    stride: int = 1,
) -> JacobianMap:
    """Per-point sigma_min of the feature Jacobian at accuracies d1 and d2.

    Odd orders are rounded up to the next even value (central stencils
    only exist at even accuracy); the requested pair is recorded.
    """
    requested = (d1, d2)
    d1, d2 = _round_even(d1), _round_even(d2)
    if not d1 < d2:
        raise ValidationError(f"need d1 < d2 after rounding, got {d1}, {d2}")
    if stride < 1:
        raise SelectorError(f"stride must be a positive integer, got {stride}")
    inputs = tuple(inputs)
    if not inputs:
        raise ValidationError("jrc needs at least one feature input")
    k, ndim = len(inputs), field.ndim

    # both accuracy levels share the high-order interior
    margins = _margins_for(inputs, ndim, d2)
    sel = tuple(slice(m, ax.count - m, stride) for m, ax in zip(margins, field.axes))
    sel_axes = tuple(
        Axis(ax.name, ax.coord(m), ax.step * stride, len(range(m, ax.count - m, stride)))
        for m, ax in zip(margins, field.axes)
    )
    shape = tuple(ax.count for ax in sel_axes)
    if any(n < 1 for n in shape):
        raise SelectorError("selector produced an empty point set")

    jac = {}
    for accuracy in (d1, d2):
        grads = _feature_gradient_fields(field, inputs, accuracy)
        entries = np.empty(shape + (k, ndim))
        for (i, ax), entry in grads.items():
            full = _slice_entry(entry, field, margins)
            entries[..., i, ax] = full[tuple(slice(None, None, stride) for _ in range(ndim))]
        jac[accuracy] = entries.reshape(-1, k, ndim)

    s_low = np.linalg.svd(jac[d1], compute_uv=False)
    s_high = np.linalg.svd(jac[d2], compute_uv=False)
    grids = np.meshgrid(*(ax.coords() for ax in sel_axes), indexing="ij")
    points = np.stack([g.reshape(-1) for g in grids], axis=1)
    return JacobianMap(
        points=points,
        sigma_min_low=s_low[:, -1],
        sigma_min_high=s_high[:, -1],
        sigma_max_high=s_high[:, 0],
        d1=d1,
        d2=d2,
        k=k,
        ambient_dim=ndim,
        grid_shape=shape,
        axes=sel_axes,
        requested_orders=requested,
    )


@dataclass(frozen=True)
class MapClassification:
    label: str
    collapsed_fraction: float
    solid_fraction: float  # non-collapsed and significant vs per-point sigma_max
    drop_factor: float
    floor: float


def classify_map(
    jmap: JacobianMap,
    drop_factor: float = DEFAULT_DROP_FACTOR,
    floor: float = DEFAULT_FLOOR,
) -> MapClassification:
    """Collapse rule per point, then an overall label.

    A point is collapsed when the high-accuracy sigma_min fell by more
    than `drop_factor` relative to the low-accuracy one, or sits below
    `floor` relative to that point's largest singular value.  Nowhere
    full rank means every point collapsed; somewhere full rank needs a
    solid (significant, non-collapsed) fraction of at least 1%.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        collapsed = (jmap.sigma_min_high <= jmap.sigma_min_low / drop_factor) | (
            jmap.sigma_min_high <= floor * jmap.sigma_max_high
        )
    significant = jmap.sigma_min_high >= SIGNIFICANT_RATIO * jmap.sigma_max_high
    solid = ~collapsed & significant
    n = len(collapsed)
    collapsed_fraction = float(collapsed.sum()) / n
    solid_fraction = float(solid.sum()) / n
    if collapsed_fraction == 1.0:
        label = NOWHERE_FULL_RANK
    elif solid_fraction >= FULL_RANK_POINT_FRACTION:
        label = FULL_RANK_SOMEWHERE
    else:
        label = MIXED_INCONCLUSIVE
    return MapClassification(label, collapsed_fraction, solid_fraction, drop_factor, floor)


def heatmap_rows(jmap: JacobianMap) -> list[tuple[float, ...]]:
    """Rows (t, x, ..., sigma_low, sigma_high, ratio) with ratio = low/high."""
    rows = []
    for p, lo, hi in zip(jmap.points, jmap.sigma_min_low, jmap.sigma_min_high):
        ratio = float(lo / hi) if hi > 0 else float("inf")
        rows.append((*(float(v) for v in p), float(lo), float(hi), ratio))
    return rows


def write_heatmap_csv(jmap: JacobianMap, path) -> None:
    names = [ax.name for ax in jmap.axes] if jmap.axes else [f"x{i}" for i in range(jmap.ambient_dim)]
    header = ",".join(names + ["sigma_low", "sigma_high", "ratio"])
    lines = [header]
    for row in heatmap_rows(jmap):
        lines.append(",".join(format(v, ".10g") for v in row))
    from .errors import IoError

    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
