"""
Scenario files: the versioned JSON (or YAML) description of one run.

A scenario names an array (explicitly or via the ``fda``/``phased`` shorthands),
a sampling grid and the per-command experiment settings. Shorthands are expanded
into a full :class:`~stbeam.signal_model.ArrayConfig` before validation, and the
expanded form is what the run manifest records.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from stbeam.constants import (
    DEFAULT_CARRIER_HZ,
    DEFAULT_DELTA_F_HZ,
    DEFAULT_FDHM_S,
    DEFAULT_N_ELEMENTS,
    SCHEMA_VERSION,
)
from stbeam.errors import ConfigValidationError, ScenarioError, Violation
from stbeam.field_engine import SPEED_OF_LIGHT, DelayModel, PatternGrid, linear_axis
from stbeam.metrics import RegionSpec
from stbeam.signal_model import (
    ArrayConfig,
    CWEnvelope,
    ElementExcitation,
    EnvelopeSpec,
    half_wavelength,
    make_array,
    make_linear_fda,
    make_steered_phased_array,
)

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


class AxisSpec(_Section):
    """One grid axis: either ``{min, max, step}`` or an explicit ``{values}`` list."""

    min: Optional[float] = None
    max: Optional[float] = None
    step: Optional[float] = None
    values: Optional[List[float]] = None

    @model_validator(mode="after")
    def _one_form(self) -> "AxisSpec":
        ranged = (self.min, self.max, self.step)
        if self.values is not None:
            if any(v is not None for v in ranged):
                raise ValueError("give either values or min/max/step, not both")
            if not self.values:
                raise ValueError("values must not be empty")
        elif any(v is None for v in ranged):
            raise ValueError("min, max and step are all required when values is not given")
        elif not self.step > 0:
            raise ValueError("step must be > 0")
        return self

    def resolve(self) -> np.ndarray:
        if self.values is not None:
            return np.array(self.values, dtype=float)
        return linear_axis(self.min, self.max, self.step)


class GridSpec(_Section):
    """Sampling grid; angles are given in degrees and converted to radians."""

    ranges: AxisSpec = Field(description="Range axis, meters")
    angles: AxisSpec = Field(description="Angle axis from broadside, degrees")
    times: AxisSpec = Field(description="Time axis, seconds")

    def to_grid(self) -> PatternGrid:
        return PatternGrid(self.ranges.resolve(), np.deg2rad(self.angles.resolve()), self.times.resolve())


# ---------------------------------------------------------------------------
# Arrays
# ---------------------------------------------------------------------------


class FdaArraySpec(_Section):
    """Linear-offset FDA shorthand: element n radiates at carrier + n * delta_f."""

    kind: Literal["fda"]
    n_elements: int = DEFAULT_N_ELEMENTS
    spacing: Optional[float] = Field(default=None, description="Meters; half a wavelength when omitted")
    carrier: float = Field(description="Carrier frequency, Hz")
    delta_f: float = Field(default=DEFAULT_DELTA_F_HZ, description="Per-element frequency increment, Hz")
    envelope: EnvelopeSpec = Field(default_factory=CWEnvelope)
    offset_coupling: bool = True
    range_spreading: bool = False

    def build(self) -> ArrayConfig:
        spacing = self.spacing if self.spacing is not None else half_wavelength(self.carrier)
        config = make_linear_fda(self.n_elements, spacing, self.carrier, self.delta_f, self.envelope)
        return config.model_copy(
            update={"offset_coupling": self.offset_coupling, "range_spreading": self.range_spreading}
        )


class PhasedArraySpec(_Section):
    """Phase-steered array at a single frequency."""

    kind: Literal["phased"]
    n_elements: int = DEFAULT_N_ELEMENTS
    spacing: Optional[float] = Field(default=None, description="Meters; half a wavelength when omitted")
    carrier: float = Field(description="Carrier frequency, Hz")
    steer_angle_deg: float = 0.0
    envelope: EnvelopeSpec = Field(default_factory=CWEnvelope)
    range_spreading: bool = False

    def build(self) -> ArrayConfig:
        spacing = self.spacing if self.spacing is not None else half_wavelength(self.carrier)
        config = make_steered_phased_array(
            self.n_elements, spacing, self.carrier, math.radians(self.steer_angle_deg), self.envelope
        )
        return config.model_copy(update={"range_spreading": self.range_spreading})


class ExplicitArraySpec(_Section):
    """Per-element excitations given one by one."""

    kind: Literal["explicit"]
    spacing: float
    carrier: float
    elements: List[ElementExcitation]
    offset_coupling: bool = True
    range_spreading: bool = False

    def build(self) -> ArrayConfig:
        return make_array(
            self.spacing,
            self.carrier,
            self.elements,
            offset_coupling=self.offset_coupling,
            range_spreading=self.range_spreading,
        )


ArraySpec = Annotated[Union[FdaArraySpec, PhasedArraySpec, ExplicitArraySpec], Field(discriminator="kind")]


# ---------------------------------------------------------------------------
# Metric requests and experiment settings
# ---------------------------------------------------------------------------


class BceTarget(_Section):
    name: str
    range_m: Tuple[float, float]
    angle_deg: Tuple[float, float]
    time_index: int = 0
    jacobian: bool = False

    def to_region(self) -> RegionSpec:
        return RegionSpec(self.range_m, (math.radians(self.angle_deg[0]), math.radians(self.angle_deg[1])))


class FwhmCut(_Section):
    angle_deg: float = 0.0
    time_index: int = 0


class InvarianceSpec(_Section):
    """Randomized shift-law check plus the fixed-location time-variance probe."""

    samples: int = Field(default=200, ge=1, description="Random (point, t) samples")
    dt_count: int = Field(default=4, ge=1, description="Random shifts per sample")
    dt_max_s: float = Field(default=1e-5, gt=0, le=1e-5, description="Shifts are drawn from [-dt_max, dt_max]")
    range_m: Tuple[float, float] = (5000.0, 50000.0)
    angle_deg: Tuple[float, float] = (-80.0, 80.0)
    time_s: Tuple[float, float] = (0.0, 1e-4)
    tolerance: float = Field(default=1e-12, gt=0)
    swing_threshold_db: float = 3.0
    focus_range_m: float = Field(default=10000.0, gt=0)
    focus_angle_deg: float = 0.0
    probe_samples: int = Field(default=2000, ge=2)
    probe_span_s: float = Field(default=1e-4, gt=0, description="Probe span when the array has no offsets")

    @model_validator(mode="after")
    def _sampling_box(self) -> "InvarianceSpec":
        # keeps every snapped sample and its shifted copy exactly representable
        if not 0 < self.range_m[0] <= self.range_m[1] <= 60000.0:
            raise ValueError("range_m must satisfy 0 < min <= max <= 60000")
        if self.range_m[0] <= SPEED_OF_LIGHT * self.dt_max_s:
            raise ValueError("range_m min must exceed c * dt_max_s so shifted samples keep a positive range")
        if not 0 <= self.time_s[0] <= self.time_s[1] <= 1e-4:
            raise ValueError("time_s must satisfy 0 <= min <= max <= 1e-4")
        if not -90.0 < self.angle_deg[0] <= self.angle_deg[1] < 90.0:
            raise ValueError("angle_deg must lie strictly inside (-90, 90)")
        return self


class Fig1Spec(_Section):
    """FDA vs pulsed phased array comparison at a common instant and range window."""

    fdhm_s: float = Field(default=DEFAULT_FDHM_S, gt=0)
    rect_duration_s: float = Field(default=DEFAULT_FDHM_S, gt=0)
    window_center_m: float = Field(default=30000.0, gt=0)
    window_half_width_m: float = Field(default=15000.0, gt=0)
    range_step_m: float = Field(default=5.0, gt=0)
    angles: AxisSpec = Field(default_factory=lambda: AxisSpec(min=-10.0, max=10.0, step=1.0))
    cut_angle_deg: float = 0.0
    cut_time_s: Optional[float] = Field(default=None, description="Defaults to window_center_m / c")
    bce_angle_half_width_deg: float = Field(default=3.0, gt=0)
    bce_widths_m: List[float] = Field(default_factory=lambda: [500.0, 1000.0, 2000.0, 5000.0, 10000.0, 20000.0])
    bce_box_width_m: Optional[float] = Field(default=None, description="Defaults to c * fdhm")
    bce_center_offsets_m: List[float] = Field(default_factory=lambda: [-10000.0, -5000.0, -2500.0, 0.0, 2500.0, 5000.0, 10000.0])
    bce_time_offsets_s: List[float] = Field(default_factory=lambda: [0.0, 5e-6, 10e-6, 20e-6])

    @field_validator("bce_time_offsets_s")
    @classmethod
    def _offsets(cls, v: List[float]) -> List[float]:
        if 0.0 not in v:
            raise ValueError("bce_time_offsets_s must include 0")
        if len(set(v)) != len(v):
            raise ValueError("bce_time_offsets_s must not repeat")
        return v

    @model_validator(mode="after")
    def _window(self) -> "Fig1Spec":
        if self.window_half_width_m >= self.window_center_m:
            raise ValueError("window_half_width_m must be smaller than window_center_m")
        return self


class SweepSpec(_Section):
    """Angle drift of the peak during a switched dwell, per on-time."""

    durations_s: List[float] = Field(default_factory=lambda: [1e-6, 2e-6, 5e-6, 10e-6, 20e-6, 40e-6])
    duty: float = Field(default=0.1, gt=0, le=1)
    samples: int = Field(default=41, ge=2)
    focus_range_m: float = Field(default=30000.0, gt=0)
    angles: AxisSpec = Field(default_factory=lambda: AxisSpec(min=-89.0, max=89.0, step=0.1))

    @field_validator("durations_s")
    @classmethod
    def _positive(cls, v: List[float]) -> List[float]:
        if not v or any(d <= 0 for d in v):
            raise ValueError("durations_s must be a non-empty list of positive durations")
        return v


class TrackingSpec(_Section):
    sweep: Optional[SweepSpec] = None


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------


class ScenarioConfig(_Section):
    """A complete scenario file."""

    schema_version: int
    name: str = "scenario"
    array: ArraySpec
    grid: Optional[GridSpec] = None
    model: DelayModel = DelayModel.FAR_FIELD
    seed: int = Field(default=0, ge=0, lt=2**64)
    output_prefix: str = "stbeam_out"
    bce_targets: List[BceTarget] = Field(default_factory=list)
    fwhm_cuts: List[FwhmCut] = Field(default_factory=list)
    invariance: InvarianceSpec = Field(default_factory=InvarianceSpec)
    fig1: Fig1Spec = Field(default_factory=Fig1Spec)
    tracking: TrackingSpec = Field(default_factory=TrackingSpec)

    @field_validator("schema_version")
    @classmethod
    def _supported(cls, v: int) -> int:
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}; this version reads {SCHEMA_VERSION}")
        return v

    def build_array(self) -> ArrayConfig:
        return self.array.build()

    def build_grid(self) -> PatternGrid:
        if self.grid is None:
            raise ScenarioError(self.name, ["grid: this command needs a grid section"])
        return self.grid.to_grid()

    def expanded(self) -> Dict[str, Any]:
        """Scenario with the array shorthand replaced by the full element list, for the manifest.

        The output prefix is left out: where results go does not change them.
        """
        data = self.model_dump(mode="json", exclude={"output_prefix"})
        data["array"] = self.build_array().model_dump(mode="json")
        return data


def default_scenario() -> ScenarioConfig:
    """The 19-element FDA with the built-in defaults and no grid."""
    return ScenarioConfig(
        schema_version=SCHEMA_VERSION,
        name="default",
        array=FdaArraySpec(kind="fda", carrier=DEFAULT_CARRIER_HZ),
    )


def _prefixed(prefix: str, violations: List[Violation]) -> List[str]:
    return [f"{prefix}.{v.path}: {v.message}" for v in violations]


def _parse_text(path: Path, text: str) -> Any:
    if path.suffix.lower() in (".yaml", ".yml"):
        try:
            return yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            where = f"line {mark.line + 1} column {mark.column + 1}: " if mark is not None else ""
            raise ScenarioError(str(path), [f"{where}{getattr(e, 'problem', None) or e}"]) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(str(path), [f"line {e.lineno} column {e.colno}: {e.msg}"]) from e


def parse_scenario(data: Any, source: str = "<scenario>") -> ScenarioConfig:
    """Validate a decoded scenario document and expand its array and grid eagerly."""
    if not isinstance(data, dict):
        raise ScenarioError(source, ["top level must be an object"])
    try:
        scenario = ScenarioConfig.model_validate(data)
    except ValidationError as e:
        diagnostics = [
            f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        ]
        raise ScenarioError(source, diagnostics) from e

    try:
        scenario.build_array()
    except ConfigValidationError as e:
        raise ScenarioError(source, _prefixed("array", e.violations)) from e
    if scenario.grid is not None:
        try:
            scenario.build_grid()
        except ConfigValidationError as e:
            raise ScenarioError(source, _prefixed("grid", e.violations)) from e
    return scenario


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    """Read, parse and validate a scenario file.

    Raises:
        ScenarioError: with line (syntax) or field (schema) diagnostics.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(str(path), [f"cannot read file: {e.strerror or e}"]) from e
    scenario = parse_scenario(_parse_text(path, text), str(path))
    logger.info("Loaded scenario %r from %s", scenario.name, path)
    return scenario
