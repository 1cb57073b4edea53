"""Scenario files: flat TOML with explicit units and no tolerance defaults.

A scenario bundles the algebraic data, the chart/mesh, solver settings,
path families and every tolerance used by the verification suite.  Sections
required by a subcommand must be present: missing keys are schema errors,
reported clause by clause (exit code 2 in the CLI).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

if sys.version_info >= (3, 11):  # pragma: no cover
    import tomllib
else:
    import tomli as tomllib

from .bundle import (
    NEGATIVE_FLAG,
    POSITIVE_FLAG,
    TRIVIAL_FLAG,
    CoeffSpec,
    CyclicHiggsData,
    PunctureData,
    check_assumption_A,
)
from .hitchin import (
    BoundaryData,
    ExactRadialFields,
    HiggsCoefficients,
    RadialMesh,
    boundary_from_fuchsian,
    boundary_from_model_metric,
)

__all__ = ["ScenarioError", "PreconditionError", "Scenario", "load_scenario"]

_FLAGS = {POSITIVE_FLAG, NEGATIVE_FLAG, TRIVIAL_FLAG}
_BOUNDARY_SOURCES = ("fuchsian", "model-metric", "constants", "closed-form")
_REQUIRED_TOLERANCES = ("membership", "conservation", "flow_grad", "bound")


class ScenarioError(ValueError):
    """Schema violation in a scenario file (CLI exit code 2)."""


class PreconditionError(ValueError):
    """Valid file, but a module precondition fails (CLI exit code 3)."""


def _need(table: dict, key: str, where: str):
    if key not in table:
        raise ScenarioError(f"missing key [{where}] {key}")
    return table[key]


def _parse_zeta(raw, where: str) -> Fraction:
    try:
        if isinstance(raw, str):
            return Fraction(raw)
        if isinstance(raw, int):
            return Fraction(raw)
        return Fraction(str(raw))
    except (ValueError, ZeroDivisionError):
        raise ScenarioError(f"[{where}] zeta {raw!r} is not a rational number") from None


@dataclass(frozen=True)
class PathSpec:
    base_r: float
    segment_ends: tuple
    steps_per_segment: int
    trace_r_out: float
    trace_r_in: float
    trace_steps: int
    conservation_steps: int
    conservation_r_end: float


@dataclass(frozen=True)
class Scenario:
    name: str
    chart: str
    seed: int
    data: CyclicHiggsData
    gamma_is_zero: bool
    mesh: RadialMesh | None
    coeffs: HiggsCoefficients | None
    newton_tol: float | None
    max_iter: int | None
    boundary_source: str | None
    boundary_puncture: int | None
    boundary_values: tuple | None
    paths: PathSpec | None
    n_section_samples: int
    tolerances: dict

    @property
    def exact_fields(self) -> bool:
        return self.boundary_source == "closed-form"

    def boundary(self) -> BoundaryData:
        if self.mesh is None or self.boundary_source is None:
            raise PreconditionError("scenario has no mesh/boundary sections")
        src = self.boundary_source
        if src == "fuchsian" or src == "closed-form":
            return boundary_from_fuchsian(self.mesh, self.coeffs.b.const)
        if src == "model-metric":
            h2a, h1a = boundary_from_model_metric(
                self.data, self.boundary_puncture, self.mesh.r_min
            )
            h2b, h1b = boundary_from_model_metric(
                self.data, self.boundary_puncture, self.mesh.r_max
            )
            return BoundaryData(h2a, h1a, h2b, h1b, "model-metric")
        return BoundaryData(*self.boundary_values, "constants")

    def closed_form_fields(self) -> ExactRadialFields:
        if not self.exact_fields:
            raise PreconditionError("scenario does not use closed-form fields")
        return ExactRadialFields.fuchsian(self.coeffs.b.const)

    def require_solver_sections(self):
        missing = [
            name
            for name, val in (
                ("mesh", self.mesh),
                ("coefficients", self.coeffs),
                ("solver", self.newton_tol),
                ("boundary", self.boundary_source),
            )
            if val is None
        ]
        if missing:
            raise ScenarioError(
                "scenario lacks sections required here: " + ", ".join(missing)
            )

    def require_paths(self):
        self.require_solver_sections()
        if self.paths is None:
            raise ScenarioError("scenario lacks the [paths] section required here")


def _validate_pole_orders(data: CyclicHiggsData, chart: str):
    """Weight rule for the coefficient pole orders on a cusp chart."""
    if chart != "cusp" or not data.punctures:
        return
    for p in data.punctures:
        delta = p.delta
        if delta > 0 and data.beta_coeff.power < 1 and data.beta_coeff.const != 0:
            raise ScenarioError(
                f"puncture {p.id}: positive weight requires beta = O(z) dz/z"
            )
        if delta < 0 and data.gamma_coeff.power < 1 and data.gamma_coeff.const != 0:
            raise ScenarioError(
                f"puncture {p.id}: negative weight requires gamma = O(z) dz/z"
            )


def load_scenario(path) -> Scenario:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"scenario file does not parse: {exc}") from None

    meta = _need(raw, "scenario", "file root")
    name = str(_need(meta, "name", "scenario"))
    chart = _need(meta, "chart", "scenario")
    if chart not in ("disk", "cusp", "none"):
        raise ScenarioError(f"[scenario] chart must be disk, cusp or none, got {chart!r}")
    seed = int(meta.get("seed", 0))

    btab = _need(raw, "bundle", "file root")
    genus = int(_need(btab, "genus", "bundle"))
    deg_l1 = int(_need(btab, "deg_L1", "bundle"))
    punctures = []
    for i, ptab in enumerate(btab.get("punctures", [])):
        where = f"bundle.punctures[{i}]"
        zeta = _parse_zeta(_need(ptab, "zeta", where), where)
        flag = _need(ptab, "flag", where)
        if flag not in _FLAGS:
            raise ScenarioError(f"[{where}] unknown flag variant {flag!r}")
        if not 0 <= abs(zeta) < Fraction(1, 2):
            raise ScenarioError(
                f"[{where}] weight {zeta} outside [0, 1/2) after normalization"
            )
        if zeta < 0:
            flag = NEGATIVE_FLAG if flag == POSITIVE_FLAG else POSITIVE_FLAG
            zeta = -zeta
        punctures.append(PunctureData(int(_need(ptab, "id", where)), zeta, flag))

    ctab = raw.get("coefficients")
    if ctab is not None:
        b = CoeffSpec(complex(_need(ctab, "b_const", "coefficients")),
                      int(_need(ctab, "b_power", "coefficients")))
        c = CoeffSpec(complex(_need(ctab, "c_const", "coefficients")),
                      int(_need(ctab, "c_power", "coefficients")))
    else:
        b, c = CoeffSpec(1.0, 0), CoeffSpec(0.0, 0)

    try:
        data = CyclicHiggsData(
            genus=genus, deg_L1=deg_l1, punctures=tuple(punctures),
            beta_coeff=b, gamma_coeff=c,
        )
    except Exception as exc:
        raise ScenarioError(f"[bundle] invalid data: {exc}") from None
    ok, problems = check_assumption_A(data)
    if not ok:
        raise ScenarioError("[bundle] assumption A fails: " + "; ".join(problems))
    _validate_pole_orders(data, chart)

    mesh = coeffs = None
    newton_tol = max_iter = None
    boundary_source = boundary_puncture = boundary_values = None
    paths = None

    mtab = raw.get("mesh")
    if mtab is not None:
        if chart == "none":
            raise ScenarioError("[mesh] present but [scenario] chart is none")
        try:
            mesh = RadialMesh.build(
                chart,
                float(_need(mtab, "r_min", "mesh")),
                float(_need(mtab, "r_max", "mesh")),
                int(_need(mtab, "n", "mesh")),
            )
        except Exception as exc:
            raise ScenarioError(f"[mesh] invalid: {exc}") from None
        coeffs = HiggsCoefficients(b, c, chart)

    stab = raw.get("solver")
    if stab is not None:
        newton_tol = float(_need(stab, "newton_tol", "solver"))
        max_iter = int(_need(stab, "max_iter", "solver"))
        if newton_tol <= 0:
            raise ScenarioError("[solver] newton_tol must be positive")

    btab2 = raw.get("boundary")
    if btab2 is not None:
        boundary_source = _need(btab2, "source", "boundary")
        if boundary_source not in _BOUNDARY_SOURCES:
            raise ScenarioError(
                f"[boundary] source must be one of {_BOUNDARY_SOURCES}"
            )
        if boundary_source == "model-metric":
            boundary_puncture = int(_need(btab2, "puncture", "boundary"))
            data.puncture(boundary_puncture)
            if data.puncture(boundary_puncture).zeta == 0:
                raise PreconditionError(
                    "model-metric boundary needs a non-zero weight puncture"
                )
        if boundary_source == "constants":
            vals = _need(btab2, "values", "boundary")
            if len(vals) != 4 or any(float(v) <= 0 for v in vals):
                raise ScenarioError(
                    "[boundary] values must be four positive numbers"
                )
            boundary_values = tuple(float(v) for v in vals)
        if boundary_source == "closed-form" and (
            chart != "disk" or not c.is_zero
        ):
            raise ScenarioError(
                "[boundary] closed-form fields exist only on disk charts with "
                "gamma = 0"
            )

    ptab = raw.get("paths")
    if ptab is not None:
        ends = tuple(float(v) for v in _need(ptab, "segment_ends", "paths"))
        if any(b2 <= a2 for a2, b2 in zip(ends, ends[1:])):
            raise ScenarioError("[paths] segment_ends must increase strictly")
        paths = PathSpec(
            base_r=float(_need(ptab, "base_r", "paths")),
            segment_ends=ends,
            steps_per_segment=int(_need(ptab, "steps_per_segment", "paths")),
            trace_r_out=float(_need(ptab, "trace_r_out", "paths")),
            trace_r_in=float(_need(ptab, "trace_r_in", "paths")),
            trace_steps=int(_need(ptab, "trace_steps", "paths")),
            conservation_steps=int(ptab.get("conservation_steps", 20000)),
            conservation_r_end=float(ptab.get("conservation_r_end", ends[-1])),
        )

    dtab = raw.get("domination", {})
    n_samples = int(dtab.get("n_section_samples", 10000))

    ttab = raw.get("tolerances")
    needs_tols = mtab is not None
    tolerances = {}
    if ttab is None and needs_tols:
        raise ScenarioError("[tolerances] section is required (no defaults)")
    if ttab is not None:
        for key in _REQUIRED_TOLERANCES:
            tolerances[key] = float(_need(ttab, key, "tolerances"))
            if tolerances[key] <= 0:
                raise ScenarioError(f"[tolerances] {key} must be positive")

    return Scenario(
        name=name,
        chart=chart,
        seed=seed,
        data=data,
        gamma_is_zero=c.is_zero,
        mesh=mesh,
        coeffs=coeffs,
        newton_tol=newton_tol,
        max_iter=max_iter,
        boundary_source=boundary_source,
        boundary_puncture=boundary_puncture,
        boundary_values=boundary_values,
        paths=paths,
        n_section_samples=n_samples,
        tolerances=tolerances,
    )


def apply_overrides(scenario: Scenario, overrides: dict, refine: int, seed):
    """CLI adjustments: tolerance overrides, mesh refinement, seed override."""
    tols = dict(scenario.tolerances)
    newton = scenario.newton_tol
    for key, val in overrides.items():
        if key == "newton_tol":
            newton = float(val)
        elif key in tols:
            tols[key] = float(val)
        else:
            raise ScenarioError(f"unknown tolerance override {key!r}")
    mesh = scenario.mesh
    paths = scenario.paths
    if refine != 1:
        if mesh is not None:
            mesh = mesh.refine(refine)
        if paths is not None:
            paths = PathSpec(
                base_r=paths.base_r,
                segment_ends=paths.segment_ends,
                steps_per_segment=paths.steps_per_segment * refine,
                trace_r_out=paths.trace_r_out,
                trace_r_in=paths.trace_r_in,
                trace_steps=paths.trace_steps * refine,
                conservation_steps=paths.conservation_steps * refine,
                conservation_r_end=paths.conservation_r_end,
            )
    return Scenario(
        name=scenario.name,
        chart=scenario.chart,
        seed=scenario.seed if seed is None else int(seed),
        data=scenario.data,
        gamma_is_zero=scenario.gamma_is_zero,
        mesh=mesh,
        coeffs=scenario.coeffs,
        newton_tol=newton,
        max_iter=scenario.max_iter,
        boundary_source=scenario.boundary_source,
        boundary_puncture=scenario.boundary_puncture,
        boundary_values=scenario.boundary_values,
        paths=paths,
        n_section_samples=scenario.n_section_samples,
        tolerances=tols,
    )
