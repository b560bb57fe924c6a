"""
Field engine: element delays, instantaneous fields and pattern cubes.

The instantaneous field of an array of isotropic elements at (r, theta, t) is

    B = sum_n a_n * g_n(t - r_n/c) * exp(j * (2*pi*(f0 + df_n)*(t - r_n/c) + phi_n))

summed in ascending element order. Internally the sum is evaluated relative to the
carrier phase at the array origin, exp(j*2*pi*f0*(t - r/c)), which is common to all
elements: the retarded time then only enters through t - r/c and the per-element
path difference r - r_n, so magnitudes do not pick up rounding from the ~1e6 rad
carrier phase.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from stbeam.errors import ConfigValidationError, DomainError, Violation
from stbeam.signal_model import ArrayConfig, _envelope_array, ensure_valid

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0
"""Speed of light in vacuum, m/s (exact)."""

_TWO_PI = 2.0 * math.pi


class DelayModel(str, Enum):
    """How element ranges r_n are computed from (r, theta)."""

    FAR_FIELD = "farfield"
    EXACT_SPHERICAL = "exact"


@dataclass(frozen=True)
class ObservationPoint:
    """A point in the plane of the array: range from the array origin and angle from broadside."""

    range: float
    angle: float

    def __post_init__(self):
        if not (math.isfinite(self.range) and self.range >= 0):
            raise DomainError(f"Observation range must be finite and >= 0, got {self.range!r}")
        if not (math.isfinite(self.angle) and abs(self.angle) < math.pi / 2):
            raise DomainError(f"Observation angle must lie strictly inside (-pi/2, pi/2), got {self.angle!r}")


def _as_axis(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PatternGrid:
    """Sampling axes of a pattern cube. Any axis may hold a single sample."""

    range_axis: np.ndarray
    angle_axis: np.ndarray
    time_axis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "range_axis", _as_axis(self.range_axis))
        object.__setattr__(self, "angle_axis", _as_axis(self.angle_axis))
        object.__setattr__(self, "time_axis", _as_axis(self.time_axis))
        problems = []
        for name in ("range_axis", "angle_axis", "time_axis"):
            axis = getattr(self, name)
            if axis.size == 0:
                problems.append(Violation(name, "axis must not be empty"))
            elif not np.all(np.isfinite(axis)):
                problems.append(Violation(name, "axis values must be finite"))
            elif axis.size > 1 and not np.all(np.diff(axis) > 0):
                problems.append(Violation(name, "axis must be strictly increasing"))
        if self.range_axis.size and np.any(self.range_axis < 0):
            problems.append(Violation("range_axis", "ranges must be >= 0"))
        if self.angle_axis.size and np.any(np.abs(self.angle_axis) >= math.pi / 2):
            problems.append(Violation("angle_axis", "angles must lie strictly inside (-pi/2, pi/2)"))
        if problems:
            raise ConfigValidationError(problems)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.range_axis.size, self.angle_axis.size, self.time_axis.size)

    def shifted(self, dt: float) -> "PatternGrid":
        """The grid seen dt later by a pattern moving outward at c: ranges + c*dt, times + dt."""
        return PatternGrid(self.range_axis + SPEED_OF_LIGHT * dt, self.angle_axis, self.time_axis + dt)

    def same_axes(self, other: "PatternGrid") -> bool:
        return (
            np.array_equal(self.range_axis, other.range_axis)
            and np.array_equal(self.angle_axis, other.angle_axis)
            and np.array_equal(self.time_axis, other.time_axis)
        )


@dataclass(frozen=True)
class PatternCube:
    """Magnitudes sampled on a grid, indexed [range][angle][time]."""

    grid: PatternGrid
    magnitudes: np.ndarray
    config_digest: str = ""
    fields: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        mags = np.array(self.magnitudes, dtype=float)
        mags.setflags(write=False)
        object.__setattr__(self, "magnitudes", mags)
        problems = []
        if mags.shape != self.grid.shape:
            problems.append(Violation("magnitudes", f"shape {mags.shape} does not match grid {self.grid.shape}"))
        elif not np.all(np.isfinite(mags)) or np.any(mags < 0):
            problems.append(Violation("magnitudes", "magnitudes must be finite and >= 0"))
        if self.fields is not None and np.shape(self.fields) != self.grid.shape:
            problems.append(Violation("fields", "complex field shape does not match grid"))
        if problems:
            raise ConfigValidationError(problems)

    def range_cut(self, angle_index: int, time_index: int) -> np.ndarray:
        return self.magnitudes[:, angle_index, time_index]


def linear_axis(start: float, stop: float, step: float) -> np.ndarray:
    """Samples start, start + step, ... up to and including stop (within 1e-9 of a step)."""
    if not step > 0:
        raise ConfigValidationError([Violation("step", "step must be > 0")])
    if stop < start:
        raise ConfigValidationError([Violation("max", "max must be >= min")])
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count, dtype=float)


def config_digest(config: ArrayConfig, model: DelayModel) -> str:
    """Stable identifier of an (array, delay model) pair."""
    payload = json.dumps(
        {"array": config.model_dump(mode="json"), "model": DelayModel(model).value},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Element geometry
# ---------------------------------------------------------------------------


def element_range(point: ObservationPoint, element_index: int, config: ArrayConfig, model: DelayModel) -> float:
    """Distance from element ``element_index`` to ``point`` under the chosen delay model."""
    if not 0 <= element_index < config.n_elements:
        raise IndexError(f"element_index {element_index} out of range (0-{config.n_elements - 1})")
    x_n = element_index * config.spacing
    sin_theta = math.sin(point.angle)
    if DelayModel(model) is DelayModel.FAR_FIELD:
        r_n = point.range - x_n * sin_theta
        if r_n <= 0:
            raise DomainError(
                f"Far-field range {r_n!r} <= 0 at r={point.range!r}: the point is inside or behind the aperture; "
                "use the ExactSpherical delay model"
            )
        return r_n
    return math.sqrt(max(point.range**2 + x_n**2 - 2.0 * point.range * x_n * sin_theta, 0.0))


def _path_difference(r: np.ndarray, x_n: float, sin_theta: np.ndarray, model: DelayModel) -> Tuple[np.ndarray, np.ndarray]:
    """Return (r - r_n, r_n) for one element, vectorized over points."""
    if model is DelayModel.FAR_FIELD:
        delta = x_n * sin_theta
        r_n = r - delta
        if np.any(r_n <= 0):
            raise DomainError(
                "Far-field range <= 0 for an element: observation point inside or behind the aperture; "
                "use the ExactSpherical delay model"
            )
        return delta, r_n
    r_n = np.sqrt(np.maximum(r * r + x_n * x_n - 2.0 * r * x_n * sin_theta, 0.0))
    # r - r_n written without cancellation
    numer = 2.0 * r * x_n * sin_theta - x_n * x_n
    denom = r + r_n
    delta = np.divide(numer, denom, out=np.zeros_like(numer), where=denom > 0)
    return delta, r_n


def _carrier_referenced_sum(
    config: ArrayConfig,
    r: np.ndarray,
    sin_theta: np.ndarray,
    t: np.ndarray,
    model: DelayModel,
) -> Tuple[np.ndarray, np.ndarray]:
    """Element sum divided by the origin carrier phasor; returns (sum, t - r/c)."""
    u = (SPEED_OF_LIGHT * t - r) / SPEED_OF_LIGHT
    acc = np.zeros(np.broadcast(r, sin_theta, t).shape, dtype=complex)
    f0 = config.carrier
    for n, element in enumerate(config.elements):
        if element.amplitude == 0.0:
            continue
        delta, r_n = _path_difference(r, n * config.spacing, sin_theta, model)
        tau = u + delta / SPEED_OF_LIGHT
        cycles = f0 * delta / SPEED_OF_LIGHT
        if config.offset_coupling:
            cycles = cycles + element.freq_offset * tau
        else:
            cycles = cycles + element.freq_offset * u
        amplitude = element.amplitude * _envelope_array(element.envelope, tau)
        if config.range_spreading:
            if np.any(r_n <= 0):
                raise DomainError("Range spreading requested at an element position (r_n = 0)")
            amplitude = amplitude / r_n
        acc = acc + amplitude * np.exp(1j * (_TWO_PI * cycles + element.phase))
    return acc, u


def field_magnitudes(
    config: ArrayConfig,
    ranges,
    angles,
    times,
    model: DelayModel = DelayModel.FAR_FIELD,
) -> np.ndarray:
    """|B| for broadcastable arrays of ranges (m), angles (rad) and times (s)."""
    r, theta, t = np.broadcast_arrays(
        np.asarray(ranges, dtype=float), np.asarray(angles, dtype=float), np.asarray(times, dtype=float)
    )
    acc, _ = _carrier_referenced_sum(config, r, np.sin(theta), t, DelayModel(model))
    return np.abs(acc)


def instantaneous_field(
    config: ArrayConfig,
    point: ObservationPoint,
    t: float,
    model: DelayModel = DelayModel.FAR_FIELD,
) -> complex:
    """Complex RF field (carrier included) at ``point`` and time ``t``."""
    ensure_valid(config)
    acc, u = _carrier_referenced_sum(
        config,
        np.array(point.range, dtype=float),
        np.array(math.sin(point.angle), dtype=float),
        np.array(t, dtype=float),
        DelayModel(model),
    )
    carrier = np.exp(1j * _TWO_PI * config.carrier * u)
    return complex(acc * carrier)


# ---------------------------------------------------------------------------
# Closed-form oracle
# ---------------------------------------------------------------------------


def closed_form_fda_magnitude(n_elements: int, psi):
    """|sin(N*pi*psi) / sin(pi*psi)|, equal to N at integer psi.

    Valid for a uniform, zero-phase CW FDA with offset coupling disabled, where
    psi = df * (t - r/c) + f0 * d * sin(theta) / c.
    """
    if n_elements < 1:
        raise ValueError(f"n_elements must be >= 1, got {n_elements}")
    psi_arr = np.asarray(psi, dtype=float)
    # the kernel magnitude has period 1 in psi; reduce first so the sines stay accurate
    frac = psi_arr - np.round(psi_arr)
    numer = np.sin(n_elements * math.pi * frac)
    denom = np.sin(math.pi * frac)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(numer / denom)
    out = np.where(denom == 0.0, float(n_elements), ratio)
    if np.ndim(psi) == 0:
        return float(out)
    return out


def dirichlet_psi(delta_f: float, carrier: float, spacing: float, r, theta, t):
    """psi = df * (t - r/c) + f0 * d * sin(theta) / c for the closed-form oracle."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    u = (SPEED_OF_LIGHT * t - r) / SPEED_OF_LIGHT
    return delta_f * u + carrier * spacing * np.sin(theta) / SPEED_OF_LIGHT


# ---------------------------------------------------------------------------
# Pattern cubes
# ---------------------------------------------------------------------------


def resolve_threads(threads: int) -> int:
    """0 means one worker per CPU."""
    if threads < 0:
        raise ValueError(f"threads must be >= 0, got {threads}")
    return threads or (os.cpu_count() or 1)


def evaluate_cube(
    config: ArrayConfig,
    grid: PatternGrid,
    model: DelayModel = DelayModel.FAR_FIELD,
    *,
    threads: int = 1,
    keep_fields: bool = False,
) -> PatternCube:
    """Sample |B| on every (range, angle, time) of ``grid``.

    Work is split into contiguous blocks of the range axis; each point's element sum
    runs in the same fixed order whatever the split, so the result is bit-identical
    for any ``threads``.
    """
    ensure_valid(config)
    model = DelayModel(model)
    workers = min(resolve_threads(threads), grid.range_axis.size)
    sin_angles = np.sin(grid.angle_axis)
    blocks = np.array_split(np.arange(grid.range_axis.size), workers)

    def run(block: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        r, s, t = np.meshgrid(grid.range_axis[block], sin_angles, grid.time_axis, indexing="ij")
        return _carrier_referenced_sum(config, r, s, t, model)

    logger.debug("Evaluating cube %s with %d worker(s), model=%s", grid.shape, workers, model.value)
    if workers == 1:
        parts = [run(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))

    acc = np.concatenate([p[0] for p in parts], axis=0)
    fields = None
    if keep_fields:
        u = np.concatenate([p[1] for p in parts], axis=0)
        fields = acc * np.exp(1j * _TWO_PI * config.carrier * u)
    return PatternCube(grid=grid, magnitudes=np.abs(acc), config_digest=config_digest(config, model), fields=fields)


def shifted_point(point: ObservationPoint, dt: float) -> ObservationPoint:
    """The point a far-field pattern feature reaches dt later: (r + c*dt, theta)."""
    new_range = point.range + SPEED_OF_LIGHT * dt
    if new_range < 0:
        raise DomainError(f"Shifted range {new_range!r} is negative (r={point.range!r}, dt={dt!r})")
    return ObservationPoint(new_range, point.angle)
