"""
Track-peak command: follows the pattern peak through time and fits its outward speed.
"""

import math
from typing import Optional

import click

from stbeam.cli import Stbeam, handle_errors, pass_stbeam, scenario_options


@click.command(name="track-peak", help="Track the (range, angle) peak over the time axis and fit its speed")
@scenario_options
@pass_stbeam
@click.pass_context
@handle_errors
def track_peak(
    ctx: click.Context,
    stbeam: Stbeam,
    config_path: str,
    out: Optional[str],
    seed: Optional[int],
    model: Optional[str],
    threads: int,
):
    from stbeam.experiments import run_tracking

    scenario = stbeam.load(config_path, out=out, seed=seed, model=model)
    outcome = run_tracking(scenario, threads=threads)

    writer = stbeam.writer(scenario)
    writer.write_csv("track.csv", outcome.track_frame)
    writer.write_csv("track_summary.csv", outcome.summary_frame)
    if outcome.sweep_frame is not None:
        writer.write_csv("angle_drift_sweep.csv", outcome.sweep_frame)
    writer.write_manifest(stbeam.manifest("track-peak", scenario))

    track = outcome.track
    rows = [
        ("instants", str(len(track))),
        ("fitted speed", f"{track.fitted_speed:.9g} m/s"),
        ("fitted speed / c", f"{track.speed_over_c:.6f}"),
        ("angle drift", f"{math.degrees(track.angle_drift):.4f} deg"),
    ]
    if track.degenerate:
        rows.append(("degenerate", "flat pattern, no peak to track"))
    for point in outcome.sweep:
        rows.append((f"drift @ dwell {point.duration * 1e6:g} us", f"{math.degrees(point.angle_drift):.3f} deg"))
    stbeam.table(f"track-peak: {scenario.name}", rows)
    ctx.exit(outcome.exit_code)
