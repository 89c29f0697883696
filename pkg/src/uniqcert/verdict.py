"""Class-by-class uniqueness decision engine.

Given samples of u, a feature list g = (g_1, ..., g_k) and an assumed
function class for the right-hand side F, decide whether F is uniquely
determined on the data.  Routing per class:

* LINEAR      - singular value decay of the linear feature matrix is an
                equivalence: decay means a nontrivial linear annihilator
                exists, so F is not unique; a flat series means the
                features are linearly independent on the data and F is
                the unique linear candidate.
* POLYNOMIAL  - a full-rank feature Jacobian at one point is sufficient
                for uniqueness in the whole analytic class and hence for
                polynomials; otherwise the monomial library up to the
                declared degree is rank-tested, which decides uniqueness
                among polynomials of that degree.  If there are more
                features than coordinates and the features are asserted
                algebraic, they are automatically dependent and F is
                never unique.
* ALGEBRAIC   - same routing; with the algebraicity assertion the
                Jacobian test becomes an equivalence rather than a
                sufficiency, so a nowhere-full-rank map downgrades to
                NON_UNIQUE (flagged as numerical evidence).
* ANALYTIC    - Jacobian test only; full rank somewhere proves
                uniqueness, anything else is INCONCLUSIVE for the full
                class (an optional fallback library can still certify
                non-uniqueness within its declared span).
* SMOOTH_CP   - uniqueness would require knowing that the feature image
                is dense, which finitely many samples cannot establish:
                UNDECIDABLE_FROM_SAMPLES.

A structural shortcut: the feature list (t, u, u_t) under LINEAR is the
general non-autonomous second-order linear ODE; any solution of one such
equation solves infinitely many, so the verdict is NON_UNIQUE without
looking at the data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import features, jacobian, rank
from .errors import ConfigError, ValidationError
from .features import Coordinate, FeatureSpec
from .grid import MultiIndex, SampledField

LINEAR = "LINEAR"
POLYNOMIAL = "POLYNOMIAL"
ALGEBRAIC = "ALGEBRAIC"
ANALYTIC = "ANALYTIC"
SMOOTH_CP = "SMOOTH_CP"
CLASSES = (LINEAR, POLYNOMIAL, ALGEBRAIC, ANALYTIC, SMOOTH_CP)

UNIQUE = "UNIQUE"
NON_UNIQUE = "NON_UNIQUE"
INCONCLUSIVE = "INCONCLUSIVE"
UNDECIDABLE_FROM_SAMPLES = "UNDECIDABLE_FROM_SAMPLES"
NOT_APPLICABLE = "NOT_APPLICABLE"

EXIT_CODES = {
    UNIQUE: 0,
    NON_UNIQUE: 10,
    INCONCLUSIVE: 20,
    UNDECIDABLE_FROM_SAMPLES: 30,
    NOT_APPLICABLE: 40,
}


@dataclass(frozen=True)
class FunctionClassAssumption:
    klass: str
    inputs: tuple
    degree: int | None = None  # required for POLYNOMIAL, optional bound for ALGEBRAIC
    u_is_algebraic: bool = False  # explicit user assertion, never inferred

    def __post_init__(self):
        if self.klass not in CLASSES:
            raise ValidationError(f"unknown function class {self.klass!r}")
        if self.klass == POLYNOMIAL and (self.degree is None or self.degree < 1):
            raise ValidationError("POLYNOMIAL class needs a degree >= 1")
        object.__setattr__(self, "inputs", tuple(self.inputs))


@dataclass(frozen=True)
class CertifyConfig:
    max_accuracy_order: int = 8
    d1: int = 2
    d2: int = 8
    slope_threshold: float = rank.DECAY_SLOPE_MAX
    floor_threshold: float = rank.DECAY_FLOOR_RATIO
    drop_factor: float = jacobian.DEFAULT_DROP_FACTOR
    jacobian_floor: float = jacobian.DEFAULT_FLOOR
    residual_floor: float = 1e-4  # relative annihilator residual required for NON_UNIQUE
    normalize: bool = True
    boundary: str = "one_sided"
    stride: int = 4
    fallback_spec: FeatureSpec | None = None  # optional library for the ANALYTIC fallback

    def thresholds(self) -> dict:
        return {
            "max_accuracy_order": self.max_accuracy_order,
            "d1": self.d1,
            "d2": self.d2,
            "slope_threshold": self.slope_threshold,
            "floor_threshold": self.floor_threshold,
            "drop_factor": self.drop_factor,
            "jacobian_floor": self.jacobian_floor,
            "residual_floor": self.residual_floor,
            "normalize": self.normalize,
            "boundary": self.boundary,
            "stride": self.stride,
        }


@dataclass(frozen=True)
class UniquenessVerdict:
    outcome: str
    assumption: FunctionClassAssumption
    rule_fired: str
    thresholds_used: dict
    series: rank.SingularSpectrumSeries | None = None
    diagnosis: rank.DecayDiagnosis | None = None
    jacobian_map: jacobian.JacobianMap | None = None
    classification: jacobian.MapClassification | None = None
    annihilator: rank.Annihilator | None = None
    notes: tuple[str, ...] = ()

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.outcome]


def _is_structural_ode(assumption: FunctionClassAssumption) -> bool:
    """Feature list (t, u, u_t): the general 2nd-order linear ODE shape."""
    if assumption.klass != LINEAR or len(assumption.inputs) != 3:
        return False
    wanted = {Coordinate(0), MultiIndex(0, (0,)), MultiIndex(0, ())}
    got = set()
    for inp in assumption.inputs:
        if isinstance(inp, MultiIndex) and inp.time_order == 0 and sum(inp.space_orders) == 0:
            got.add(MultiIndex(0, (0,)))
        elif isinstance(inp, MultiIndex) and inp.time_order == 1 and sum(inp.space_orders) == 0:
            got.add(MultiIndex(0, ()))  # stand-in key for u_t
        else:
            got.add(inp)
    return got == wanted


def _relative_residual(ann: rank.Annihilator, mat: features.FeatureMatrix) -> float:
    """||raw @ c|| relative to the largest raw column norm (cancellation quality)."""
    ref = float(mat.column_norms.max()) if mat.column_norms.size else 0.0
    if ref == 0.0:
        return 0.0
    c = np.array(ann.coefficients)
    return float(np.linalg.norm(mat.raw @ c) / ref)


def _derivative_inputs_only(inputs) -> bool:
    return all(isinstance(i, MultiIndex) for i in inputs)


def _run_sfranco(field, spec, config):
    series, mats = rank.sfranco(
        field,
        spec,
        config.max_accuracy_order,
        normalize=config.normalize,
        boundary=config.boundary,
        return_matrices=True,
    )
    diag = rank.diagnose_decay(series, config.slope_threshold, config.floor_threshold)
    return series, diag, mats[-1]


def _non_unique_with_annihilator(assumption, config, series, diag, mat, rule, extra_notes=()):
    ann = rank.annihilator(mat)
    rel = _relative_residual(ann, mat)
    notes = tuple(extra_notes)
    if rel > config.residual_floor:
        # decay diagnosed but the candidate relation does not actually
        # cancel on the data; refuse the non-uniqueness claim
        return UniquenessVerdict(
            outcome=INCONCLUSIVE,
            assumption=assumption,
            rule_fired="decay-without-certified-annihilator",
            thresholds_used=config.thresholds(),
            series=series,
            diagnosis=diag,
            annihilator=ann,
            notes=notes + (f"annihilator relative residual {rel:.3e} above floor {config.residual_floor:.1e}",),
        )
    return UniquenessVerdict(
        outcome=NON_UNIQUE,
        assumption=assumption,
        rule_fired=rule,
        thresholds_used=config.thresholds(),
        series=series,
        diagnosis=diag,
        annihilator=ann,
        notes=notes,
    )


def _run_jrc(field, assumption, config):
    jmap = jacobian.jrc(field, tuple(assumption.inputs), config.d1, config.d2, stride=config.stride)
    cls = jacobian.classify_map(jmap, config.drop_factor, config.jacobian_floor)
    return jmap, cls


def certify(
    field: SampledField,
    assumption: FunctionClassAssumption,
    config: CertifyConfig | None = None,
) -> UniquenessVerdict:
    config = config or CertifyConfig()
    k = len(assumption.inputs)
    ambient = field.ndim

    if assumption.klass == SMOOTH_CP:
        return UniquenessVerdict(
            outcome=UNDECIDABLE_FROM_SAMPLES,
            assumption=assumption,
            rule_fired="image-density-not-observable",
            thresholds_used=config.thresholds(),
            notes=(
                "uniqueness over a C^p class hinges on density of the feature image, "
                "which finitely many samples can neither establish nor refute",
            ),
        )

    if _is_structural_ode(assumption):
        return UniquenessVerdict(
            outcome=NON_UNIQUE,
            assumption=assumption,
            rule_fired="second-order-linear-ode-structure",
            thresholds_used=config.thresholds(),
            notes=(
                "features (t, u, u_t) span the general non-autonomous second-order "
                "linear ODE; every solution of one such equation solves infinitely many",
            ),
        )

    if assumption.klass == LINEAR:
        spec = FeatureSpec("linear", assumption.inputs)
        series, diag, mat = _run_sfranco(field, spec, config)
        if diag.decaying:
            return _non_unique_with_annihilator(
                assumption, config, series, diag, mat, rule="linear-dependence-decay"
            )
        return UniquenessVerdict(
            outcome=UNIQUE,
            assumption=assumption,
            rule_fired="linear-independence-flat-series",
            thresholds_used=config.thresholds(),
            series=series,
            diagnosis=diag,
        )

    if assumption.klass in (POLYNOMIAL, ALGEBRAIC):
        notes = []
        if k <= ambient and _derivative_inputs_only(assumption.inputs):
            jmap, cls = _run_jrc(field, assumption, config)
            if cls.label == jacobian.FULL_RANK_SOMEWHERE:
                return UniquenessVerdict(
                    outcome=UNIQUE,
                    assumption=assumption,
                    rule_fired="jacobian-full-rank-somewhere",
                    thresholds_used=config.thresholds(),
                    jacobian_map=jmap,
                    classification=cls,
                    notes=("full-rank Jacobian certifies uniqueness in the whole analytic class, "
                           "which contains the assumed class",),
                )
            if (
                assumption.klass == ALGEBRAIC
                and assumption.u_is_algebraic
                and cls.label == jacobian.NOWHERE_FULL_RANK
            ):
                return UniquenessVerdict(
                    outcome=NON_UNIQUE,
                    assumption=assumption,
                    rule_fired="jacobian-collapse-equivalence",
                    thresholds_used=config.thresholds(),
                    jacobian_map=jmap,
                    classification=cls,
                    notes=("for algebraic features the Jacobian criterion is an equivalence; "
                           "numerical evidence only: finite precision cannot prove exact rank deficiency",),
                )
            notes.append(f"jacobian map classified {cls.label}, falling through to the matrix test")
        elif k > ambient and assumption.u_is_algebraic:
            return UniquenessVerdict(
                outcome=NON_UNIQUE,
                assumption=assumption,
                rule_fired="more-algebraic-features-than-coordinates",
                thresholds_used=config.thresholds(),
                notes=(f"{k} algebraic features of {ambient} coordinates are always "
                       "algebraically dependent",),
            )
        degree = assumption.degree
        if degree is None:
            raise ConfigError(
                "ALGEBRAIC certification without an algebraicity assertion needs a degree "
                "bound for the polynomial-relation search"
            )
        spec = FeatureSpec("monomial", assumption.inputs, degree=degree)
        series, diag, mat = _run_sfranco(field, spec, config)
        extra = tuple(notes)
        if assumption.klass == ALGEBRAIC:
            extra = extra + ("polynomial relations of bounded degree witness algebraic dependence; "
                             f"search bounded at degree {degree}",)
        if diag.decaying:
            return _non_unique_with_annihilator(
                assumption, config, series, diag, mat,
                rule="polynomial-relation-decay", extra_notes=extra,
            )
        return UniquenessVerdict(
            outcome=UNIQUE,
            assumption=assumption,
            rule_fired="monomial-independence-flat-series",
            thresholds_used=config.thresholds(),
            series=series,
            diagnosis=diag,
            notes=extra + (f"unique among polynomial right-hand sides of degree <= {degree}",),
        )

    # ANALYTIC
    if k <= ambient and _derivative_inputs_only(assumption.inputs):
        jmap, cls = _run_jrc(field, assumption, config)
        if cls.label == jacobian.FULL_RANK_SOMEWHERE:
            return UniquenessVerdict(
                outcome=UNIQUE,
                assumption=assumption,
                rule_fired="jacobian-full-rank-somewhere",
                thresholds_used=config.thresholds(),
                jacobian_map=jmap,
                classification=cls,
            )
        base_notes = (f"jacobian map classified {cls.label}; full rank somewhere is only "
                      "a sufficient condition, its failure proves nothing for the full analytic class",)
    else:
        jmap = cls = None
        base_notes = (f"{k} features of {ambient} coordinates: the Jacobian criterion "
                      "cannot certify uniqueness (rank is at most the coordinate count)",)

    if config.fallback_spec is not None:
        series, diag, mat = _run_sfranco(field, config.fallback_spec, config)
        if diag.decaying:
            v = _non_unique_with_annihilator(
                assumption, config, series, diag, mat,
                rule="feature-span-relation-decay",
                extra_notes=base_notes + ("non-uniqueness holds within the declared feature span "
                                          "only, not for the full analytic class",),
            )
            return UniquenessVerdict(
                outcome=v.outcome,
                assumption=assumption,
                rule_fired=v.rule_fired,
                thresholds_used=v.thresholds_used,
                series=v.series,
                diagnosis=v.diagnosis,
                jacobian_map=jmap,
                classification=cls,
                annihilator=v.annihilator,
                notes=v.notes,
            )
        base_notes = base_notes + ("declared fallback library shows no relation either",)
    return UniquenessVerdict(
        outcome=INCONCLUSIVE,
        assumption=assumption,
        rule_fired="analytic-sufficiency-not-met",
        thresholds_used=config.thresholds(),
        jacobian_map=jmap,
        classification=cls,
        notes=base_notes,
    )


def render_equation(ann: rank.Annihilator, tol: float = 1e-6) -> str:
    terms = []
    for label, c in zip(ann.labels, ann.coefficients):
        if abs(c) <= tol:
            continue
        sign = "-" if c < 0 else ("+" if terms else "")
        mag = abs(c)
        body = label if abs(mag - 1.0) < 1e-12 else f"{mag:.4g}*{label}"
        terms.append(f"{sign} {body}" if terms else f"{sign}{body}")
    return " ".join(terms) + " = 0" if terms else "0 = 0"


def key_value_block(v: UniquenessVerdict) -> str:
    lines = [
        f"outcome={v.outcome}",
        f"exit_code={v.exit_code}",
        f"class={v.assumption.klass}",
        f"rule_fired={v.rule_fired}",
        f"inputs={','.join(features.input_label(i) for i in v.assumption.inputs)}",
    ]
    if v.assumption.degree is not None:
        lines.append(f"degree={v.assumption.degree}")
    lines.append(f"u_is_algebraic={str(v.assumption.u_is_algebraic).lower()}")
    for key, val in sorted(v.thresholds_used.items()):
        lines.append(f"threshold.{key}={val}")
    if v.series is not None:
        lines.append("sigma_min.orders=" + ",".join(str(o) for o in v.series.orders))
        lines.append("sigma_min.values=" + ",".join(format(s, ".6e") for s in v.series.sigma_min))
    if v.diagnosis is not None:
        lines.append(f"decay.diagnosed={str(v.diagnosis.decaying).lower()}")
        lines.append(f"decay.slope={v.diagnosis.slope:.6g}")
        lines.append(f"decay.floor_ratio={v.diagnosis.floor_ratio:.6e}")
    if v.classification is not None:
        lines.append(f"jacobian.classification={v.classification.label}")
        lines.append(f"jacobian.collapsed_fraction={v.classification.collapsed_fraction:.4f}")
        lines.append(f"jacobian.solid_fraction={v.classification.solid_fraction:.4f}")
    if v.jacobian_map is not None:
        lines.append(f"jacobian.d1={v.jacobian_map.d1}")
        lines.append(f"jacobian.d2={v.jacobian_map.d2}")
        lines.append(f"jacobian.points={len(v.jacobian_map.points)}")
    if v.annihilator is not None:
        lines.append("annihilator.labels=" + ",".join(v.annihilator.labels))
        lines.append("annihilator.coefficients=" + ",".join(format(c, ".6e") for c in v.annihilator.coefficients))
        lines.append(f"annihilator.residual={v.annihilator.residual:.6e}")
        lines.append(f"annihilator.equation={render_equation(v.annihilator)}")
    for i, note in enumerate(v.notes):
        lines.append(f"note.{i}={note}")
    return "\n".join(lines)


def report(v: UniquenessVerdict) -> str:
    head = [
        f"verdict: {v.outcome}",
        f"function class: {v.assumption.klass}"
        + (f" (degree <= {v.assumption.degree})" if v.assumption.degree is not None else ""),
        "features: " + ", ".join(features.input_label(i) for i in v.assumption.inputs),
        f"decided by: {v.rule_fired}",
    ]
    body = []
    if v.diagnosis is not None:
        body.append(
            f"  singular value series {['%.3e' % s for s in v.series.sigma_min]} over orders "
            f"{list(v.series.orders)}; slope {v.diagnosis.slope:.2f}, decay={v.diagnosis.decaying}"
        )
    if v.classification is not None:
        body.append(
            f"  jacobian ({v.jacobian_map.d1} vs {v.jacobian_map.d2}): {v.classification.label}, "
            f"collapsed at {100 * v.classification.collapsed_fraction:.1f}% of "
            f"{len(v.jacobian_map.points)} points"
        )
    if v.annihilator is not None:
        body.append(f"  relation: {render_equation(v.annihilator)}  (residual {v.annihilator.residual:.2e})")
    for note in v.notes:
        body.append(f"  note: {note}")
    return "\n".join(head + body)
