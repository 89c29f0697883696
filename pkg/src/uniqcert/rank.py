"""Numerical rank tests on feature matrices.

Two tests operate on the smallest singular value of the (normalized)
feature matrix:

* ``franco``: single accuracy order, sigma_min against an absolute
  threshold delta (default 1e-6 of the largest singular value).
* ``sfranco``: sigma_min tracked across increasing difference-accuracy
  orders 2, 4, ..., d.  An exact functional relation among the features
  makes the series decay roughly like the truncation error, i.e.
  exponentially in the order; an essentially full-rank library keeps it
  flat.  ``diagnose_decay`` turns the series into a boolean.

``annihilator`` extracts the candidate relation as the right singular
vector of the smallest singular value, rescaled back to raw-column
coordinates when the matrix was normalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import features
from .errors import ShapeError, ValidationError
from .features import FeatureMatrix, FeatureSpec
from .grid import SampledField

# sigma_min(order d) <= DECAY_FLOOR_RATIO * max over orders, together with a
# log-linear slope <= DECAY_SLOPE_MAX per accuracy order, counts as decay.
DECAY_SLOPE_MAX = -1.0
DECAY_FLOOR_RATIO = 1e-4
DEFAULT_DELTA_RATIO = 1e-6
# sigma_min below this fraction of sigma_max is floating point zero: the
# matrix is rank deficient at working precision and no slope fit applies
MACHINE_ZERO_RATIO = 1e-12


@dataclass(frozen=True)
class RankReport:
    """Single-order rank test result."""

    sigma_min: float
    sigma_max: float
    delta: float
    full_rank: bool
    shape: tuple[int, int]
    accuracy_order: int


@dataclass(frozen=True)
class SingularSpectrumSeries:
    """sigma_min as a function of difference accuracy order."""

    orders: tuple[int, ...]
    sigma_min: tuple[float, ...]
    sigma_max: tuple[float, ...]
    labels: tuple[str, ...]
    shape: tuple[int, int]

    def __post_init__(self):
        if len(self.orders) != len(self.sigma_min):
            raise ValidationError("orders and sigma_min must have the same length")


@dataclass(frozen=True)
class DecayDiagnosis:
    decaying: bool
    slope: float
    floor_ratio: float
    notes: str = ""


@dataclass(frozen=True)
class Annihilator:
    """Unit-norm coefficient vector c with feature_matrix @ c ~ 0."""

    labels: tuple[str, ...]
    coefficients: tuple[float, ...]
    residual: float  # ||raw @ c|| / sqrt(N), rows of the raw matrix

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.coefficients))


def singular_values(mat: FeatureMatrix) -> np.ndarray:
    m = mat.working()
    if m.shape[0] < m.shape[1]:
        raise ShapeError(
            f"matrix has {m.shape[0]} rows for {m.shape[1]} features; "
            "rank deficiency would be an artifact of the shape"
        )
    return np.linalg.svd(m, compute_uv=False)


def sigma_min(mat: FeatureMatrix) -> float:
    return float(singular_values(mat)[-1])


def franco(
    field: SampledField,
    spec: FeatureSpec,
    accuracy_order: int = 8,
    delta: float | None = None,
    normalize: bool = True,
    boundary: str = "one_sided",
) -> RankReport:
    """Single-order rank certificate: full rank iff sigma_min > delta."""
    mat = features.build(field, spec, accuracy_order, normalize=normalize, boundary=boundary)
    s = singular_values(mat)
    smax, smin = float(s[0]), float(s[-1])
    if delta is None:
        delta = DEFAULT_DELTA_RATIO * smax
    return RankReport(
        sigma_min=smin,
        sigma_max=smax,
        delta=float(delta),
        full_rank=smin > delta,
        shape=mat.shape,
        accuracy_order=accuracy_order,
    )


def sfranco(
    field: SampledField,
    spec: FeatureSpec,
    max_accuracy_order: int = 8,
    normalize: bool = True,
    boundary: str = "one_sided",
    return_matrices: bool = False,
):
    """sigma_min across accuracy orders 2, 4, ..., max_accuracy_order.

    With ``boundary="one_sided"`` every order is evaluated on the full
    grid, so the point set is identical across the series.  With
    ``boundary="trim"`` all orders are trimmed to the margins of the
    widest stencil for the same reason.
    """
    if max_accuracy_order < 2 or max_accuracy_order % 2:
        raise ValidationError("max accuracy order must be an even integer >= 2")
    orders = tuple(range(2, max_accuracy_order + 1, 2))
    margins = None
    if boundary == "trim":
        margins = features.common_trim_margins(spec.inputs, field.ndim, max_accuracy_order)
    smins, smaxes, mats = [], [], []
    labels, shape = (), (0, 0)
    for p in orders:
        mat = features.build(
            field, spec, p, normalize=normalize, boundary=boundary, trim_margins=margins
        )
        s = singular_values(mat)
        smins.append(float(s[-1]))
        smaxes.append(float(s[0]))
        labels, shape = mat.labels, mat.shape
        if return_matrices:
            mats.append(mat)
    series = SingularSpectrumSeries(
        orders=orders,
        sigma_min=tuple(smins),
        sigma_max=tuple(smaxes),
        labels=labels,
        shape=shape,
    )
    if return_matrices:
        return series, mats
    return series


def diagnose_decay(
    series: SingularSpectrumSeries,
    slope_threshold: float = DECAY_SLOPE_MAX,
    floor_threshold: float = DECAY_FLOOR_RATIO,
) -> DecayDiagnosis:
    """Decide whether sigma_min decays with the accuracy order.

    Decay requires both a log-linear slope <= slope_threshold per unit of
    accuracy order and a final value <= floor_threshold of the series
    maximum.  An exact zero anywhere short-circuits to decaying (the
    relation holds to machine precision already).
    """
    s = np.asarray(series.sigma_min, dtype=float)
    smax = np.asarray(series.sigma_max, dtype=float)
    if np.any(s <= MACHINE_ZERO_RATIO * smax):
        return DecayDiagnosis(
            True, float("-inf"), 0.0, notes="singular value at floating point zero"
        )
    if len(s) < 3:
        return DecayDiagnosis(
            False, 0.0, float(s[-1] / s.max()), notes="need at least 3 orders to fit a slope"
        )
    slope = float(np.polyfit(series.orders, np.log(s), 1)[0])
    floor_ratio = float(s[-1] / s.max())
    decaying = slope <= slope_threshold and floor_ratio <= floor_threshold
    return DecayDiagnosis(decaying, slope, floor_ratio)


def annihilator(mat: FeatureMatrix) -> Annihilator:
    """Relation candidate: right singular vector of the smallest singular value.

    Coefficients apply to the raw (un-normalized) columns and are scaled
    to unit Euclidean norm, with the first non-zero entry made positive.
    """
    m = mat.working()
    if m.shape[0] < m.shape[1]:
        raise ShapeError("need at least as many rows as features")
    _, _, vt = np.linalg.svd(m, full_matrices=False)
    c = vt[-1].copy()
    if mat.normalized:
        for j in range(len(c)):
            if j in mat.zero_columns:
                # zeroed column: coefficient applies to a numerically zero
                # feature, keep it as-is (it annihilates trivially)
                continue
            if mat.column_norms[j] > 0:
                c[j] /= mat.column_norms[j]
    n = np.linalg.norm(c)
    if n == 0:
        raise ValidationError("degenerate annihilator")
    c /= n
    nz = np.nonzero(np.abs(c) > 1e-14)[0]
    if nz.size and c[nz[0]] < 0:
        c = -c
    residual = float(np.linalg.norm(mat.raw @ c) / np.sqrt(mat.shape[0]))
    return Annihilator(labels=mat.labels, coefficients=tuple(float(v) for v in c), residual=residual)
