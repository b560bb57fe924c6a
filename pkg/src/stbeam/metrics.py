"""
Metrics over pattern cubes: beam collection efficiency, range-cut width and
sidelobe level, peak tracking, and the time-range invariance checks.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import find_peaks

from stbeam.errors import ConfigValidationError, DomainError, MeasurementError, Violation
from stbeam.field_engine import (
    SPEED_OF_LIGHT,
    DelayModel,
    ObservationPoint,
    PatternCube,
    PatternGrid,
    closed_form_fda_magnitude,
    evaluate_cube,
    field_magnitudes,
)
from stbeam.signal_model import (
    ArrayConfig,
    CWEnvelope,
    GaussianEnvelope,
    PeriodicSwitchEnvelope,
    RectEnvelope,
    ensure_valid,
)

logger = logging.getLogger(__name__)

DEVIATION_FLOOR = 1e-30
FLAT_TOLERANCE = 1e-9
_PLATEAU_TOLERANCE = 1e-12


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _is_flat(values: np.ndarray) -> bool:
    """True when a cut or slice varies by no more than rounding noise."""
    peak = float(np.max(values))
    return float(np.max(values) - np.min(values)) <= FLAT_TOLERANCE * max(peak, DEVIATION_FLOOR)


def _trapezoid_weights(axis: np.ndarray, full_size: int) -> np.ndarray:
    """Trapezoid weights of a sub-axis; a singleton grid axis integrates as a point sample."""
    if full_size == 1:
        return np.ones(1)
    if axis.size == 1:
        return np.zeros(1)
    steps = np.diff(axis)
    weights = np.zeros(axis.size)
    weights[:-1] += steps / 2.0
    weights[1:] += steps / 2.0
    return weights


def _peak_plateau(values: np.ndarray) -> Tuple[int, int]:
    """Index bounds of the run of samples equal (to rounding) to the first global maximum."""
    top = int(np.argmax(values))
    level = values[top] * (1.0 - _PLATEAU_TOLERANCE)
    lo = top
    while lo > 0 and values[lo - 1] >= level:
        lo -= 1
    hi = top
    while hi < values.size - 1 and values[hi + 1] >= level:
        hi += 1
    return lo, hi


def _checked_cut(cube: PatternCube, angle_index: int, time_index: int) -> np.ndarray:
    n_r, n_a, n_t = cube.grid.shape
    if not 0 <= angle_index < n_a:
        raise MeasurementError(f"angle_index {angle_index} out of range (0-{n_a - 1})")
    if not 0 <= time_index < n_t:
        raise MeasurementError(f"time_index {time_index} out of range (0-{n_t - 1})")
    if n_r < 3:
        raise MeasurementError("A range cut needs at least 3 range samples")
    return cube.range_cut(angle_index, time_index)


def _interior_peak(values: np.ndarray) -> Tuple[int, int]:
    lo, hi = _peak_plateau(values)
    if lo == 0 or hi == values.size - 1:
        raise MeasurementError("Peak of the range cut lies at the grid boundary; widen the range window")
    return lo, hi


# ---------------------------------------------------------------------------
# Beam collection efficiency
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionSpec:
    """Target region of a BCE measurement. Intervals are closed; angles in radians."""

    range_interval: Tuple[float, float]
    angle_interval: Tuple[float, float]

    def __post_init__(self):
        problems = []
        if not self.range_interval[0] <= self.range_interval[1]:
            problems.append(Violation("range_interval", "lower bound must be <= upper bound"))
        if not self.angle_interval[0] <= self.angle_interval[1]:
            problems.append(Violation("angle_interval", "lower bound must be <= upper bound"))
        if problems:
            raise ConfigValidationError(problems)

    @classmethod
    def full(cls, grid: PatternGrid) -> "RegionSpec":
        return cls(
            (float(grid.range_axis[0]), float(grid.range_axis[-1])),
            (float(grid.angle_axis[0]), float(grid.angle_axis[-1])),
        )

    @classmethod
    def centered(cls, center_range: float, width: float, angle_interval: Tuple[float, float]) -> "RegionSpec":
        return cls((center_range - width / 2.0, center_range + width / 2.0), angle_interval)

    def index_box(self, grid: PatternGrid) -> Tuple[slice, slice]:
        """Contiguous index ranges of the grid samples inside the region."""
        r_idx = np.flatnonzero((grid.range_axis >= self.range_interval[0]) & (grid.range_axis <= self.range_interval[1]))
        a_idx = np.flatnonzero((grid.angle_axis >= self.angle_interval[0]) & (grid.angle_axis <= self.angle_interval[1]))
        if r_idx.size == 0 or a_idx.size == 0:
            raise MeasurementError(f"Target region {self} does not intersect the grid")
        return slice(int(r_idx[0]), int(r_idx[-1]) + 1), slice(int(a_idx[0]), int(a_idx[-1]) + 1)


def bce(cube: PatternCube, time_index: int, target: RegionSpec, *, jacobian: bool = False) -> float:
    """Fraction of the |B|^2 integral over the (range, angle) slice that falls inside ``target``.

    Both integrals use trapezoidal weights; the target integral runs over the grid
    samples inside the region. With ``jacobian`` the polar area element r*dr*dtheta is used.
    """
    n_t = cube.grid.shape[2]
    if not 0 <= time_index < n_t:
        raise MeasurementError(f"time_index {time_index} out of range (0-{n_t - 1})")
    grid = cube.grid
    energy = cube.magnitudes[:, :, time_index] ** 2
    r_box, a_box = target.index_box(grid)

    def integral(r_sel: slice, a_sel: slice) -> float:
        ranges = grid.range_axis[r_sel]
        w_r = _trapezoid_weights(ranges, grid.range_axis.size)
        w_a = _trapezoid_weights(grid.angle_axis[a_sel], grid.angle_axis.size)
        if jacobian:
            w_r = w_r * ranges
        return float(w_r @ energy[r_sel, a_sel] @ w_a)

    total = integral(slice(None), slice(None))
    if total <= 0.0:
        raise MeasurementError(f"BCE is undefined: the slice at time index {time_index} carries no energy")
    return min(integral(r_box, a_box) / total, 1.0)


# ---------------------------------------------------------------------------
# Range-cut width and sidelobes
# ---------------------------------------------------------------------------


def fwhm_of_cut(axis: np.ndarray, values: np.ndarray) -> float:
    """Full width at half maximum of a sampled cut, crossings found by linear interpolation."""
    lo, hi = _interior_peak(values)
    half = values[lo] / 2.0

    left = lo
    while left > 0 and values[left] > half:
        left -= 1
    right = hi
    while right < values.size - 1 and values[right] > half:
        right += 1
    if values[left] > half or values[right] > half:
        raise MeasurementError("No half-maximum crossing on one side of the peak; widen the range window")

    def crossing(i_out: int, i_in: int) -> float:
        v_out, v_in = values[i_out], values[i_in]
        frac = (half - v_out) / (v_in - v_out)
        return float(axis[i_out] + frac * (axis[i_in] - axis[i_out]))

    return crossing(right, right - 1) - crossing(left, left + 1)


def fwhm_range(cube: PatternCube, angle_index: int, time_index: int) -> float:
    """FWHM in meters of the range cut at (angle_index, time_index)."""
    return fwhm_of_cut(cube.grid.range_axis, _checked_cut(cube, angle_index, time_index))


def sidelobe_level_of_cut(values: np.ndarray) -> Optional[float]:
    """Highest sidelobe relative to the peak in dB, or None when the cut has no sidelobes."""
    if _is_flat(values):
        return None
    lo, hi = _interior_peak(values)
    # mainlobe: down to the first local minimum on each side
    left = lo
    while left > 0 and values[left - 1] <= values[left]:
        left -= 1
    right = hi
    while right < values.size - 1 and values[right + 1] <= values[right]:
        right += 1
    peaks, _ = find_peaks(values)
    outside = peaks[(peaks < left) | (peaks > right)]
    if outside.size == 0:
        return None
    return float(20.0 * np.log10(np.max(values[outside]) / values[lo]))


def sidelobe_level(cube: PatternCube, angle_index: int, time_index: int) -> Optional[float]:
    """Sidelobe level of the range cut at (angle_index, time_index); None is the "no sidelobes" verdict."""
    return sidelobe_level_of_cut(_checked_cut(cube, angle_index, time_index))


def dirichlet_first_sidelobe_db(n_elements: int) -> Optional[float]:
    """First sidelobe of the N-element Dirichlet kernel in dB; None for N < 3."""
    if n_elements < 3:
        return None
    result = minimize_scalar(
        lambda psi: -closed_form_fda_magnitude(n_elements, psi),
        bounds=(1.0 / n_elements, 2.0 / n_elements),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(20.0 * math.log10(-result.fun / n_elements))


# ---------------------------------------------------------------------------
# Peak tracking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeakTrack:
    """Per-time global peak of a cube plus the fitted outward speed."""

    times: np.ndarray
    peak_ranges: np.ndarray
    peak_angles: np.ndarray
    peak_magnitudes: np.ndarray
    fitted_speed: float
    angle_drift: float
    degenerate: bool = False

    @property
    def speed_over_c(self) -> float:
        return self.fitted_speed / SPEED_OF_LIGHT

    def __len__(self) -> int:
        return int(self.times.size)


def fit_speed(times: np.ndarray, ranges: np.ndarray) -> float:
    """Least-squares slope of range against time; exactly 0 for a constant range series."""
    t_dev = times - times.mean()
    return float(np.sum(t_dev * (ranges - ranges[0])) / np.sum(t_dev * t_dev))


def track_cube_peak(cube: PatternCube) -> PeakTrack:
    """Track the (range, angle) argmax of every time slice of ``cube``.

    Ties go to the smallest range, then the smallest angle. A flat slice has no
    meaningful peak: its position is NaN and it is left out of the speed fit and
    the angle drift. The track is degenerate when fewer than two slices peak.
    """
    grid = cube.grid
    n_r, n_a, n_t = grid.shape
    if n_t < 2:
        raise MeasurementError("Peak tracking needs at least 2 time samples")

    r_idx = np.zeros(n_t, dtype=int)
    a_idx = np.zeros(n_t, dtype=int)
    flat = np.zeros(n_t, dtype=bool)
    for k in range(n_t):
        plane = cube.magnitudes[:, :, k]
        if _is_flat(plane):
            flat[k] = True
            continue
        i, j = np.unravel_index(int(np.argmax(plane)), plane.shape)
        if n_r > 1 and i in (0, n_r - 1):
            raise MeasurementError(
                f"Peak at t={grid.time_axis[k]:.6g} s sits on the range boundary "
                f"({grid.range_axis[i]:.6g} m); widen the range window"
            )
        if n_a > 1 and j in (0, n_a - 1):
            raise MeasurementError(
                f"Peak at t={grid.time_axis[k]:.6g} s sits on the angle boundary "
                f"({math.degrees(grid.angle_axis[j]):.6g} deg); widen the angle window"
            )
        r_idx[k], a_idx[k] = i, j

    times = grid.time_axis
    peaked = ~flat
    ranges = np.where(peaked, grid.range_axis[r_idx], np.nan)
    angles = np.where(peaked, grid.angle_axis[a_idx], np.nan)
    magnitudes = cube.magnitudes[r_idx, a_idx, np.arange(n_t)]
    degenerate = int(peaked.sum()) < 2
    if degenerate:
        speed, drift = 0.0, 0.0
    else:
        speed = fit_speed(times[peaked], ranges[peaked])
        drift = float(np.max(np.abs(angles[peaked] - np.median(angles[peaked]))))
    return PeakTrack(
        times=times,
        peak_ranges=ranges,
        peak_angles=angles,
        peak_magnitudes=magnitudes,
        fitted_speed=speed,
        angle_drift=drift,
        degenerate=degenerate,
    )


def track_peak(
    config: ArrayConfig,
    grid: PatternGrid,
    model: DelayModel = DelayModel.FAR_FIELD,
    *,
    threads: int = 1,
) -> PeakTrack:
    """Evaluate ``grid`` and track its peak over time."""
    if grid.time_axis.size < 2:
        raise MeasurementError("Peak tracking needs at least 2 time samples")
    track = track_cube_peak(evaluate_cube(config, grid, model, threads=threads))
    logger.info("Tracked %d instants: fitted speed %.9g m/s (%.6f c)", len(track), track.fitted_speed, track.speed_over_c)
    return track


@dataclass(frozen=True)
class AngleDriftPoint:
    duration: float
    angle_drift: float
    first_angle: float
    last_angle: float


def angle_drift_sweep(
    config: ArrayConfig,
    focus_range: float,
    angles: Sequence[float],
    durations: Sequence[float],
    *,
    duty: float = 0.1,
    samples: int = 41,
    model: DelayModel = DelayModel.FAR_FIELD,
    threads: int = 1,
) -> List[AngleDriftPoint]:
    """Peak-angle drift at a fixed range while the elements are switched on, per on-time.

    Every element envelope is replaced by a periodic switch whose on-window lasts
    ``duration`` (period ``duration / duty``); the peak angle is tracked at
    ``focus_range`` across the first on-window as it sweeps past that range.
    """
    if samples < 2:
        raise MeasurementError("The angle-drift sweep needs at least 2 samples per dwell")
    out = []
    for duration in durations:
        switched = config.with_envelope(PeriodicSwitchEnvelope(period=duration / duty, duty=duty, offset=0.0))
        ensure_valid(switched)
        times = focus_range / SPEED_OF_LIGHT + np.linspace(0.05 * duration, 0.95 * duration, samples)
        grid = PatternGrid([focus_range], angles, times)
        track = track_cube_peak(evaluate_cube(switched, grid, model, threads=threads))
        out.append(
            AngleDriftPoint(
                duration=float(duration),
                angle_drift=track.angle_drift,
                first_angle=float(track.peak_angles[0]),
                last_angle=float(track.peak_angles[-1]),
            )
        )
        logger.debug("Dwell %.3g s: angle drift %.4g deg", duration, math.degrees(track.angle_drift))
    return out


# ---------------------------------------------------------------------------
# Time-range invariance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvarianceReport:
    """Largest relative deviation from the time-range shift law and where it occurred."""

    max_relative_deviation: float
    witness_point: ObservationPoint
    witness_time: float
    witness_dt: float
    samples_checked: int
    max_abs_deviation: float = 0.0

    @property
    def witness(self) -> Tuple[ObservationPoint, float, float]:
        return (self.witness_point, self.witness_time, self.witness_dt)


def check_time_range_invariance(
    config: ArrayConfig,
    sample_points: Sequence[Tuple[ObservationPoint, float]],
    dt_list: Sequence[float],
    model: DelayModel = DelayModel.FAR_FIELD,
) -> InvarianceReport:
    """Compare |B(r + c*dt, theta, t + dt)| with |B(r, theta, t)| for every sample and every dt.

    The witness is the first maximum in sample order, then dt order.
    """
    if not sample_points or not dt_list:
        raise MeasurementError("Invariance check needs at least one sample point and one dt")
    ensure_valid(config)
    model = DelayModel(model)
    r = np.array([p.range for p, _ in sample_points], dtype=float)[:, None]
    theta = np.array([p.angle for p, _ in sample_points], dtype=float)[:, None]
    t = np.array([t for _, t in sample_points], dtype=float)[:, None]
    dts = np.array(dt_list, dtype=float)[None, :]

    shifted_r = r + SPEED_OF_LIGHT * dts
    if np.any(shifted_r < 0):
        raise DomainError("A shifted sample has negative range; use smaller or positive dt values")

    base = field_magnitudes(config, r, theta, t, model)
    moved = field_magnitudes(config, shifted_r, theta, t + dts, model)
    abs_dev = np.abs(moved - base)
    rel_dev = abs_dev / np.maximum(base, DEVIATION_FLOOR)

    flat_index = int(np.argmax(rel_dev))
    i, k = np.unravel_index(flat_index, rel_dev.shape)
    point, t_i = sample_points[i]
    report = InvarianceReport(
        max_relative_deviation=float(rel_dev[i, k]),
        witness_point=point,
        witness_time=float(t_i),
        witness_dt=float(dt_list[k]),
        samples_checked=int(rel_dev.size),
        max_abs_deviation=float(np.max(abs_dev)),
    )
    logger.debug("Invariance check over %d samples: max deviation %.3e", report.samples_checked, report.max_relative_deviation)
    return report


def doubled_range_samples(
    sample_points: Sequence[Tuple[ObservationPoint, float]],
    dt_list: Sequence[float],
) -> Tuple[List[Tuple[ObservationPoint, float]], List[float]]:
    """The same samples with every distance doubled, c*dt included, at unchanged t - r/c."""
    doubled = [(ObservationPoint(2.0 * p.range, p.angle), t + p.range / SPEED_OF_LIGHT) for p, t in sample_points]
    return doubled, [2.0 * dt for dt in dt_list]


@dataclass(frozen=True)
class SwingReport:
    """Variation of |B| at one fixed point over a time span."""

    point: ObservationPoint
    t_start: float
    span: float
    max_magnitude: float
    min_magnitude: float

    @property
    def swing_db(self) -> float:
        if self.max_magnitude <= 0.0:
            return 0.0
        if self.max_magnitude - self.min_magnitude <= FLAT_TOLERANCE * self.max_magnitude:
            return 0.0
        return float(20.0 * math.log10(self.max_magnitude / max(self.min_magnitude, DEVIATION_FLOOR)))


def fixed_point_swing(
    config: ArrayConfig,
    point: ObservationPoint,
    t_start: float,
    span: float,
    samples: int = 1000,
    model: DelayModel = DelayModel.FAR_FIELD,
) -> SwingReport:
    """Sample |B| at ``point`` over [t_start, t_start + span) and report its extremes."""
    if samples < 2 or not span > 0:
        raise MeasurementError("Fixed-point probe needs span > 0 and at least 2 samples")
    ensure_valid(config)
    times = t_start + span * np.arange(samples, dtype=float) / samples
    mags = field_magnitudes(config, point.range, point.angle, times, model)
    return SwingReport(point, float(t_start), float(span), float(mags.max()), float(mags.min()))


def probe_span(config: ArrayConfig, fallback: float) -> float:
    """One offset period 1/min|df_n| over the nonzero offsets, or ``fallback`` without offsets."""
    offsets = np.abs(config.freq_offsets)
    offsets = offsets[offsets > 0]
    if offsets.size == 0:
        return fallback
    return float(1.0 / offsets.min())


def envelope_reference(config: ArrayConfig) -> float:
    """Emission instant that characterizes the first element's envelope (peak, pulse middle, switch-on)."""
    envelope = config.elements[0].envelope
    if isinstance(envelope, GaussianEnvelope):
        return envelope.center
    if isinstance(envelope, RectEnvelope):
        return envelope.start + envelope.duration / 2.0
    if isinstance(envelope, PeriodicSwitchEnvelope):
        return envelope.offset + envelope.duty * envelope.period / 2.0
    assert isinstance(envelope, CWEnvelope)
    return 0.0


# ---------------------------------------------------------------------------
# Cube comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PatternDiff:
    max_abs_diff: float
    rms_diff: float


def compare_patterns(a: PatternCube, b: PatternCube) -> PatternDiff:
    """Elementwise max and RMS magnitude difference of two cubes on identical grids."""
    if not a.grid.same_axes(b.grid):
        raise MeasurementError("Cannot compare patterns sampled on different grids")
    diff = np.abs(a.magnitudes - b.magnitudes)
    return PatternDiff(max_abs_diff=float(diff.max()), rms_diff=float(np.sqrt(np.mean(diff * diff))))
