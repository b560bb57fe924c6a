"""
Signal model: arrays, element excitations and baseband envelopes.

All models are frozen pydantic models so a configuration can be hashed,
serialized into a run manifest and shared between threads freely.
Construction only checks types; physical invariants are reported by
:func:`validate` and enforced by the constructors in this module.
"""

from __future__ import annotations

import logging
import math
from typing import Annotated, List, Literal, Sequence, Tuple, Union, overload

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from stbeam.errors import ConfigValidationError, Violation

logger = logging.getLogger(__name__)

_FOUR_LN2 = 4.0 * math.log(2.0)


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# ---------------------------------------------------------------------------
# Envelopes
# ---------------------------------------------------------------------------


class CWEnvelope(_Frozen):
    """Continuous wave: unit envelope at all times."""

    kind: Literal["cw"] = "cw"

    def violations(self, path: str = "envelope") -> List[Violation]:
        return []


class GaussianEnvelope(_Frozen):
    """Gaussian magnitude envelope, parameterized by its full duration at half maximum."""

    kind: Literal["gaussian"] = "gaussian"
    fdhm: float = Field(description="Full duration at half maximum of the magnitude envelope, seconds")
    center: float = Field(default=0.0, description="Instant of the envelope peak, seconds")

    def violations(self, path: str = "envelope") -> List[Violation]:
        out = []
        if not (math.isfinite(self.fdhm) and self.fdhm > 0):
            out.append(Violation(f"{path}.fdhm", "fdhm must be > 0"))
        if not math.isfinite(self.center):
            out.append(Violation(f"{path}.center", "center must be finite"))
        return out


class RectEnvelope(_Frozen):
    """Rectangular pulse on the half-open support [start, start + duration)."""

    kind: Literal["rect"] = "rect"
    duration: float = Field(description="Pulse duration, seconds")
    start: float = Field(default=0.0, description="Leading edge, seconds")

    def violations(self, path: str = "envelope") -> List[Violation]:
        out = []
        if not (math.isfinite(self.duration) and self.duration > 0):
            out.append(Violation(f"{path}.duration", "duration must be > 0"))
        if not math.isfinite(self.start):
            out.append(Violation(f"{path}.start", "start must be finite"))
        return out


class PeriodicSwitchEnvelope(_Frozen):
    """Periodic on/off switching, the generic model of a time-modulated array element."""

    kind: Literal["switch"] = "switch"
    period: float = Field(description="Switching period, seconds")
    duty: float = Field(description="Fraction of each period the element is on, in (0, 1]")
    offset: float = Field(default=0.0, description="Start of the first on-window, seconds")

    def violations(self, path: str = "envelope") -> List[Violation]:
        out = []
        if not (math.isfinite(self.period) and self.period > 0):
            out.append(Violation(f"{path}.period", "period must be > 0"))
        if not (0.0 < self.duty <= 1.0):
            out.append(Violation(f"{path}.duty", "duty must be in (0, 1]"))
        if not math.isfinite(self.offset):
            out.append(Violation(f"{path}.offset", "offset must be finite"))
        return out


EnvelopeSpec = Annotated[
    Union[CWEnvelope, GaussianEnvelope, RectEnvelope, PeriodicSwitchEnvelope],
    Field(discriminator="kind"),
]


@overload
def envelope_value(spec: EnvelopeSpec, t: float) -> float: ...


@overload
def envelope_value(spec: EnvelopeSpec, t: np.ndarray) -> np.ndarray: ...


def envelope_value(spec, t):
    """Evaluate a baseband magnitude envelope at time(s) ``t``.

    Accepts a scalar or an ndarray and returns the same shape. Values lie in [0, 1].

    Raises:
        ConfigValidationError: if the envelope parameters are invalid.
    """
    problems = spec.violations()
    if problems:
        raise ConfigValidationError(problems)
    arr = np.asarray(t, dtype=float)
    out = _envelope_array(spec, arr)
    if np.ndim(t) == 0:
        return float(out)
    return out


def _envelope_array(spec, t: np.ndarray) -> np.ndarray:
    """Unchecked vectorized envelope evaluation; the field engine calls this per element."""
    if isinstance(spec, CWEnvelope):
        return np.ones_like(t)
    if isinstance(spec, GaussianEnvelope):
        x = (t - spec.center) / spec.fdhm
        return np.exp(-_FOUR_LN2 * x * x)
    if isinstance(spec, RectEnvelope):
        return ((t >= spec.start) & (t < spec.start + spec.duration)).astype(float)
    if isinstance(spec, PeriodicSwitchEnvelope):
        cycles = (t - spec.offset) / spec.period
        frac = cycles - np.floor(cycles)
        # tiny negative cycles round up to exactly 1.0
        frac = np.where(frac >= 1.0, 0.0, frac)
        return (frac < spec.duty).astype(float)
    raise TypeError(f"Unknown envelope type: {type(spec).__name__}")


# ---------------------------------------------------------------------------
# Elements and arrays
# ---------------------------------------------------------------------------


class ElementExcitation(_Frozen):
    """Excitation of one isotropic element."""

    amplitude: float = Field(default=1.0, description="Dimensionless amplitude weight, >= 0")
    phase: float = Field(default=0.0, description="Phase weight, radians")
    freq_offset: float = Field(default=0.0, description="Frequency offset from the carrier, Hz")
    envelope: EnvelopeSpec = Field(default_factory=CWEnvelope)


class ArrayConfig(_Frozen):
    """A uniform linear array: element n sits at x_n = n * spacing on the array axis."""

    n_elements: int = Field(description="Number of elements N")
    spacing: float = Field(description="Inter-element spacing d, meters")
    carrier: float = Field(description="Carrier frequency f0, Hz")
    elements: Tuple[ElementExcitation, ...] = Field(description="Per-element excitations, index order")
    offset_coupling: bool = Field(
        default=True,
        description="Keep the 2*pi*df_n*x_n*sin(theta)/c term; disable only to compare against the Dirichlet oracle",
    )
    range_spreading: bool = Field(default=False, description="Apply a 1/r_n amplitude factor per element")

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.n_elements, dtype=float) * self.spacing

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([e.amplitude for e in self.elements], dtype=float)

    @property
    def freq_offsets(self) -> np.ndarray:
        return np.array([e.freq_offset for e in self.elements], dtype=float)

    @property
    def total_amplitude(self) -> float:
        return float(sum(e.amplitude for e in self.elements))

    @property
    def aperture(self) -> float:
        return (self.n_elements - 1) * self.spacing

    @property
    def has_offsets(self) -> bool:
        return any(e.freq_offset != 0.0 for e in self.elements)

    def with_envelope(self, envelope: EnvelopeSpec) -> "ArrayConfig":
        """Return a copy with every element driven by ``envelope``."""
        elements = tuple(e.model_copy(update={"envelope": envelope}) for e in self.elements)
        return self.model_copy(update={"elements": elements})


def validate(config: ArrayConfig) -> List[Violation]:
    """Return every violated invariant of ``config``; an empty list means the config is valid."""
    out: List[Violation] = []
    if config.n_elements < 1:
        out.append(Violation("n_elements", "n_elements must be >= 1"))
    if not (math.isfinite(config.spacing) and config.spacing > 0):
        out.append(Violation("spacing", "spacing must be > 0"))
    if not (math.isfinite(config.carrier) and config.carrier > 0):
        out.append(Violation("carrier", "carrier must be > 0"))
    if len(config.elements) != config.n_elements:
        out.append(
            Violation(
                "elements",
                f"length mismatch: n_elements is {config.n_elements} but {len(config.elements)} elements given",
            )
        )
    for n, element in enumerate(config.elements):
        path = f"elements[{n}]"
        if not (math.isfinite(element.amplitude) and element.amplitude >= 0):
            out.append(Violation(f"{path}.amplitude", "amplitude must be finite and >= 0"))
        if not math.isfinite(element.phase):
            out.append(Violation(f"{path}.phase", "phase must be finite"))
        if not math.isfinite(element.freq_offset):
            out.append(Violation(f"{path}.freq_offset", "freq_offset must be finite"))
        elif math.isfinite(config.carrier) and config.carrier > 0 and abs(element.freq_offset) >= config.carrier:
            out.append(Violation(f"{path}.freq_offset", "|freq_offset| must be < carrier"))
        out.extend(element.envelope.violations(f"{path}.envelope"))
    return out


def ensure_valid(config: ArrayConfig) -> ArrayConfig:
    """Return ``config`` unchanged, or raise ConfigValidationError listing every violation."""
    problems = validate(config)
    if problems:
        raise ConfigValidationError(problems)
    return config


def make_array(
    spacing: float,
    carrier: float,
    elements: Sequence[ElementExcitation],
    *,
    offset_coupling: bool = True,
    range_spreading: bool = False,
) -> ArrayConfig:
    """Build and validate an array from explicit per-element excitations."""
    config = ArrayConfig(
        n_elements=len(elements),
        spacing=spacing,
        carrier=carrier,
        elements=tuple(elements),
        offset_coupling=offset_coupling,
        range_spreading=range_spreading,
    )
    return ensure_valid(config)


def make_linear_fda(
    n: int,
    spacing: float,
    carrier: float,
    delta_f: float,
    envelope: EnvelopeSpec | None = None,
) -> ArrayConfig:
    """Standard linear-offset FDA: element n radiates at f0 + n * delta_f, unit amplitude, zero phase."""
    envelope = envelope if envelope is not None else CWEnvelope()
    elements = tuple(
        ElementExcitation(amplitude=1.0, phase=0.0, freq_offset=n_i * delta_f, envelope=envelope)
        for n_i in range(max(n, 0))
    )
    config = ArrayConfig(n_elements=n, spacing=spacing, carrier=carrier, elements=elements)
    logger.debug("Built linear FDA: N=%d d=%g f0=%g df=%g", n, spacing, carrier, delta_f)
    return ensure_valid(config)


def make_steered_phased_array(
    n: int,
    spacing: float,
    carrier: float,
    steer_angle: float,
    envelope: EnvelopeSpec | None = None,
) -> ArrayConfig:
    """Phased array at a common frequency, phase-steered so the CW array factor peaks at ``steer_angle``."""
    from stbeam.field_engine import SPEED_OF_LIGHT

    if not abs(steer_angle) < math.pi / 2:
        raise ConfigValidationError([Violation("steer_angle", "|steer_angle| must be < pi/2")])
    envelope = envelope if envelope is not None else CWEnvelope()
    sin_steer = math.sin(steer_angle)
    elements = tuple(
        ElementExcitation(
            amplitude=1.0,
            phase=-2.0 * math.pi * carrier * n_i * spacing * sin_steer / SPEED_OF_LIGHT,
            freq_offset=0.0,
            envelope=envelope,
        )
        for n_i in range(max(n, 0))
    )
    config = ArrayConfig(n_elements=n, spacing=spacing, carrier=carrier, elements=elements)
    logger.debug("Built phased array: N=%d d=%g f0=%g steer=%g rad", n, spacing, carrier, steer_angle)
    return ensure_valid(config)


def half_wavelength(carrier: float) -> float:
    """d = lambda / 2 for the given carrier."""
    from stbeam.field_engine import SPEED_OF_LIGHT

    return SPEED_OF_LIGHT / carrier / 2.0
