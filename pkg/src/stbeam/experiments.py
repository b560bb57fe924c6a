"""
Canned experiments behind the CLI commands.

Each experiment takes a validated :class:`~stbeam.scenario.ScenarioConfig`, runs
the engine and metrics, and returns both the structured results (for console
summaries and tests) and the pandas frames that become the output CSVs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from stbeam.field_engine import (
    SPEED_OF_LIGHT,
    DelayModel,
    ObservationPoint,
    PatternCube,
    PatternGrid,
    evaluate_cube,
    linear_axis,
)
from stbeam.metrics import (
    AngleDriftPoint,
    InvarianceReport,
    PeakTrack,
    RegionSpec,
    SwingReport,
    angle_drift_sweep,
    bce,
    check_time_range_invariance,
    doubled_range_samples,
    envelope_reference,
    fixed_point_swing,
    fwhm_range,
    probe_span,
    sidelobe_level,
    track_peak,
)
from stbeam.scenario import ScenarioConfig
from stbeam.signal_model import (
    ArrayConfig,
    GaussianEnvelope,
    RectEnvelope,
    make_steered_phased_array,
)
from stbeam.util import snap_dyadic, to_db

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_DEGENERATE = 4


def _nearest_index(axis: np.ndarray, value: float) -> int:
    return int(np.argmin(np.abs(axis - value)))


def _verdict(level_db: Optional[float]) -> str:
    return "none" if level_db is None else "present"


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


@dataclass
class SimulationResult:
    cube: PatternCube
    cube_frame: pd.DataFrame
    metrics_frame: pd.DataFrame


def cube_frame(cube: PatternCube) -> pd.DataFrame:
    """One row per grid point in [range][angle][time] order."""
    grid = cube.grid
    r, a, t = np.meshgrid(grid.range_axis, grid.angle_axis, grid.time_axis, indexing="ij")
    mags = cube.magnitudes.reshape(-1)
    return pd.DataFrame(
        {
            "range_m": r.reshape(-1),
            "angle_deg": np.rad2deg(a.reshape(-1)),
            "time_s": t.reshape(-1),
            "magnitude": mags,
            "magnitude_db": to_db(mags, float(mags.max())),
        }
    )


def run_simulation(scenario: ScenarioConfig, *, threads: int = 1) -> SimulationResult:
    """Evaluate the scenario grid and the requested BCE targets and range cuts."""
    config = scenario.build_array()
    grid = scenario.build_grid()
    cube = evaluate_cube(config, grid, scenario.model, threads=threads)

    rows: List[Dict[str, object]] = []
    for target in scenario.bce_targets:
        value = bce(cube, target.time_index, target.to_region(), jacobian=target.jacobian)
        rows.append(
            {
                "metric": "bce",
                "name": target.name,
                "time_s": float(grid.time_axis[target.time_index]),
                "angle_deg": np.nan,
                "bce": value,
                "fwhm_m": np.nan,
                "sidelobe_db": np.nan,
                "sidelobe_verdict": "",
            }
        )
    for cut in scenario.fwhm_cuts:
        j = _nearest_index(grid.angle_axis, math.radians(cut.angle_deg))
        level = sidelobe_level(cube, j, cut.time_index)
        rows.append(
            {
                "metric": "range_cut",
                "name": f"angle_{cut.angle_deg:g}_deg",
                "time_s": float(grid.time_axis[cut.time_index]) if cut.time_index < grid.shape[2] else np.nan,
                "angle_deg": float(np.rad2deg(grid.angle_axis[j])),
                "bce": np.nan,
                "fwhm_m": fwhm_range(cube, j, cut.time_index),
                "sidelobe_db": np.nan if level is None else level,
                "sidelobe_verdict": _verdict(level),
            }
        )
    metrics = pd.DataFrame(
        rows,
        columns=["metric", "name", "time_s", "angle_deg", "bce", "fwhm_m", "sidelobe_db", "sidelobe_verdict"],
    )
    return SimulationResult(cube=cube, cube_frame=cube_frame(cube), metrics_frame=metrics)


# ---------------------------------------------------------------------------
# compare-fig1
# ---------------------------------------------------------------------------

FIG1_PATTERNS = ("fda", "gaussian_phased", "rect_phased")


@dataclass
class CutSummary:
    pattern: str
    fwhm_m: float
    sidelobe_db: Optional[float]
    bce_box: float
    peak_magnitude: float


@dataclass
class Fig1Result:
    cut_time_s: float
    fdhm_s: float
    rect_duration_s: float
    box_width_m: float
    cuts: Dict[str, pd.DataFrame]
    summaries: List[CutSummary]
    summary_frame: pd.DataFrame
    bce_frame: pd.DataFrame

    def summary(self, pattern: str) -> CutSummary:
        return next(s for s in self.summaries if s.pattern == pattern)


def fig1_arrays(fda: ArrayConfig, fdhm: float, rect_duration: float) -> Dict[str, ArrayConfig]:
    """The FDA and its two broadside phased-array comparators, pulses peaking at t - r/c = 0."""
    n, d, f0 = fda.n_elements, fda.spacing, fda.carrier
    return {
        "fda": fda,
        "gaussian_phased": make_steered_phased_array(n, d, f0, 0.0, GaussianEnvelope(fdhm=fdhm, center=0.0)),
        "rect_phased": make_steered_phased_array(
            n, d, f0, 0.0, RectEnvelope(duration=rect_duration, start=-rect_duration / 2.0)
        ),
    }


def compare_fig1(
    scenario: ScenarioConfig,
    *,
    threads: int = 1,
    fdhm: Optional[float] = None,
    rect_duration: Optional[float] = None,
) -> Fig1Result:
    """Range cuts and BCE of the FDA against Gaussian- and rect-pulsed phased arrays.

    All three patterns are sampled at the same instants on the same range window.
    The default instant is the one at which the pulse peaks reach the window center.
    """
    spec = scenario.fig1
    fdhm = fdhm if fdhm is not None else spec.fdhm_s
    rect_duration = rect_duration if rect_duration is not None else spec.rect_duration_s
    center = spec.window_center_m
    t0 = spec.cut_time_s if spec.cut_time_s is not None else center / SPEED_OF_LIGHT
    box_width = spec.bce_box_width_m if spec.bce_box_width_m is not None else SPEED_OF_LIGHT * fdhm

    offsets = sorted(spec.bce_time_offsets_s)
    grid = PatternGrid(
        linear_axis(center - spec.window_half_width_m, center + spec.window_half_width_m, spec.range_step_m),
        np.deg2rad(spec.angles.resolve()),
        t0 + np.array(offsets),
    )
    k0 = offsets.index(0.0)
    j0 = _nearest_index(grid.angle_axis, math.radians(spec.cut_angle_deg))
    half_angle = math.radians(spec.bce_angle_half_width_deg)
    angle_box = (-half_angle, half_angle)

    arrays = fig1_arrays(scenario.build_array(), fdhm, rect_duration)
    cubes = {name: evaluate_cube(cfg, grid, scenario.model, threads=threads) for name, cfg in arrays.items()}

    cuts: Dict[str, pd.DataFrame] = {}
    summaries: List[CutSummary] = []
    for name in FIG1_PATTERNS:
        cube = cubes[name]
        cut = cube.range_cut(j0, k0)
        peak = float(cut.max())
        cuts[name] = pd.DataFrame(
            {
                "range_m": grid.range_axis,
                "magnitude": cut,
                "magnitude_norm": cut / peak if peak > 0 else np.zeros_like(cut),
                "magnitude_db": to_db(cut, peak),
            }
        )
        summaries.append(
            CutSummary(
                pattern=name,
                fwhm_m=fwhm_range(cube, j0, k0),
                sidelobe_db=sidelobe_level(cube, j0, k0),
                bce_box=bce(cube, k0, RegionSpec.centered(center, box_width, angle_box)),
                peak_magnitude=peak,
            )
        )
        logger.info("Comparison %s cut: FWHM %.2f m", name, summaries[-1].fwhm_m)

    summary_frame = pd.DataFrame(
        {
            "pattern": [s.pattern for s in summaries],
            "fwhm_m": [s.fwhm_m for s in summaries],
            "sidelobe_db": [np.nan if s.sidelobe_db is None else s.sidelobe_db for s in summaries],
            "sidelobe_verdict": [_verdict(s.sidelobe_db) for s in summaries],
            "peak_magnitude": [s.peak_magnitude for s in summaries],
            "bce_box": [s.bce_box for s in summaries],
            "box_width_m": [box_width] * len(summaries),
            "cut_time_s": [float(grid.time_axis[k0])] * len(summaries),
        }
    )

    # (parameterization, width, center, time index)
    boxes: List[Tuple[str, float, float, int]] = []
    boxes += [("width", w, center, k0) for w in spec.bce_widths_m]
    boxes += [("center", box_width, center + off, k0) for off in spec.bce_center_offsets_m]
    boxes += [("time", box_width, center, k) for k in range(len(offsets))]
    records = []
    for kind, width, box_center, k in boxes:
        region = RegionSpec.centered(box_center, width, angle_box)
        record = {
            "parameterization": kind,
            "target_width_m": width,
            "target_center_m": box_center,
            "time_s": float(grid.time_axis[k]),
        }
        for name in FIG1_PATTERNS:
            record[f"bce_{name}"] = bce(cubes[name], k, region)
        records.append(record)

    return Fig1Result(
        cut_time_s=float(grid.time_axis[k0]),
        fdhm_s=fdhm,
        rect_duration_s=rect_duration,
        box_width_m=box_width,
        cuts=cuts,
        summaries=summaries,
        summary_frame=summary_frame,
        bce_frame=pd.DataFrame(records),
    )


# ---------------------------------------------------------------------------
# check-invariance
# ---------------------------------------------------------------------------


@dataclass
class InvarianceOutcome:
    report: InvarianceReport
    swing: SwingReport
    exit_code: int
    shift_law_holds: bool
    doubled: Optional[InvarianceReport] = None
    frame: pd.DataFrame = field(default_factory=pd.DataFrame)
    probe_frame: pd.DataFrame = field(default_factory=pd.DataFrame)


def invariance_samples(scenario: ScenarioConfig) -> Tuple[List[Tuple[ObservationPoint, float]], List[float]]:
    """Seeded random (point, t) samples and shifts, snapped to a dyadic grid."""
    spec = scenario.invariance
    rng = np.random.default_rng(scenario.seed)
    ranges = snap_dyadic(rng.uniform(spec.range_m[0], spec.range_m[1], spec.samples))
    angles = np.deg2rad(rng.uniform(spec.angle_deg[0], spec.angle_deg[1], spec.samples))
    times = snap_dyadic(rng.uniform(spec.time_s[0], spec.time_s[1], spec.samples))
    dts = snap_dyadic(rng.uniform(-spec.dt_max_s, spec.dt_max_s, spec.dt_count))
    samples = [(ObservationPoint(float(r), float(a)), float(t)) for r, a, t in zip(ranges, angles, times)]
    return samples, [float(dt) for dt in dts]


def _report_row(check: str, model: DelayModel, report: InvarianceReport, tolerance: float) -> Dict[str, object]:
    return {
        "check": check,
        "model": model.value,
        "samples_checked": report.samples_checked,
        "max_relative_deviation": report.max_relative_deviation,
        "max_abs_deviation": report.max_abs_deviation,
        "tolerance": tolerance,
        "witness_range_m": report.witness_point.range,
        "witness_angle_deg": math.degrees(report.witness_point.angle),
        "witness_time_s": report.witness_time,
        "witness_dt_s": report.witness_dt,
    }


def check_invariance(scenario: ScenarioConfig) -> InvarianceOutcome:
    """Randomized shift-law check plus the fixed-location time-variance probe.

    Exit code 1 when the shift law fails (far field: deviation above tolerance;
    exact model: above tolerance and no decrease at doubled ranges), otherwise 0
    when |B| at the focus point swings by more than the threshold and 4 when it
    does not.
    """
    spec = scenario.invariance
    model = DelayModel(scenario.model)
    config = scenario.build_array()
    if config.range_spreading:
        logger.warning("Range spreading disabled for the shift-law check; 1/r decay is not shift invariant")
        config = config.model_copy(update={"range_spreading": False})

    samples, dts = invariance_samples(scenario)
    report = check_time_range_invariance(config, samples, dts, model)
    rows = [_report_row("shift_law", model, report, spec.tolerance)]
    doubled = None
    if model is DelayModel.FAR_FIELD:
        holds = report.max_relative_deviation <= spec.tolerance
    else:
        doubled = check_time_range_invariance(config, *doubled_range_samples(samples, dts), model)
        rows.append(_report_row("shift_law_doubled_ranges", model, doubled, spec.tolerance))
        # an exactly invariant pattern has nothing left to shrink at 2r
        holds = (
            report.max_relative_deviation <= spec.tolerance
            or doubled.max_abs_deviation < report.max_abs_deviation
        )

    span = probe_span(config, spec.probe_span_s)
    focus = ObservationPoint(spec.focus_range_m, math.radians(spec.focus_angle_deg))
    t_start = focus.range / SPEED_OF_LIGHT + envelope_reference(config) - span / 2.0
    swing = fixed_point_swing(config, focus, t_start, span, spec.probe_samples, model)

    if not holds:
        code = EXIT_VIOLATED
    elif swing.swing_db > spec.swing_threshold_db:
        code = EXIT_OK
    else:
        code = EXIT_DEGENERATE
    logger.info("Invariance verdict %d: deviation %.3e, swing %.2f dB", code, report.max_relative_deviation, swing.swing_db)

    probe = pd.DataFrame(
        [
            {
                "focus_range_m": focus.range,
                "focus_angle_deg": spec.focus_angle_deg,
                "t_start_s": swing.t_start,
                "span_s": swing.span,
                "samples": spec.probe_samples,
                "max_magnitude": swing.max_magnitude,
                "min_magnitude": swing.min_magnitude,
                "swing_db": swing.swing_db,
                "threshold_db": spec.swing_threshold_db,
            }
        ]
    )
    return InvarianceOutcome(
        report=report,
        swing=swing,
        exit_code=code,
        shift_law_holds=holds,
        doubled=doubled,
        frame=pd.DataFrame(rows),
        probe_frame=probe,
    )


# ---------------------------------------------------------------------------
# track-peak
# ---------------------------------------------------------------------------


@dataclass
class TrackOutcome:
    track: PeakTrack
    sweep: List[AngleDriftPoint]
    exit_code: int
    track_frame: pd.DataFrame
    summary_frame: pd.DataFrame
    sweep_frame: Optional[pd.DataFrame] = None


def run_tracking(scenario: ScenarioConfig, *, threads: int = 1) -> TrackOutcome:
    """Track the pattern peak on the scenario grid, plus the optional switched-dwell sweep."""
    config = scenario.build_array()
    track = track_peak(config, scenario.build_grid(), scenario.model, threads=threads)

    sweep: List[AngleDriftPoint] = []
    sweep_frame = None
    if scenario.tracking.sweep is not None:
        s = scenario.tracking.sweep
        sweep = angle_drift_sweep(
            config,
            s.focus_range_m,
            np.deg2rad(s.angles.resolve()),
            s.durations_s,
            duty=s.duty,
            samples=s.samples,
            model=scenario.model,
            threads=threads,
        )
        sweep_frame = pd.DataFrame(
            {
                "duration_s": [p.duration for p in sweep],
                "angle_drift_deg": [math.degrees(p.angle_drift) for p in sweep],
                "first_peak_angle_deg": [math.degrees(p.first_angle) for p in sweep],
                "last_peak_angle_deg": [math.degrees(p.last_angle) for p in sweep],
            }
        )

    track_frame = pd.DataFrame(
        {
            "time_s": track.times,
            "peak_range_m": track.peak_ranges,
            "peak_angle_deg": np.rad2deg(track.peak_angles),
            "peak_magnitude": track.peak_magnitudes,
        }
    )
    summary_frame = pd.DataFrame(
        [
            {
                "fitted_speed_m_per_s": track.fitted_speed,
                "fitted_speed_over_c": track.speed_over_c,
                "angle_drift_deg": math.degrees(track.angle_drift),
                "degenerate": track.degenerate,
            }
        ]
    )
    return TrackOutcome(
        track=track,
        sweep=sweep,
        exit_code=EXIT_DEGENERATE if track.degenerate else EXIT_OK,
        track_frame=track_frame,
        summary_frame=summary_frame,
        sweep_frame=sweep_frame,
    )
