"""
Simulate command: evaluates a scenario grid and writes the cube as CSV.
"""

from typing import Optional

import click

from stbeam.cli import Stbeam, handle_errors, pass_stbeam, scenario_options
from stbeam.field_engine import DelayModel
from stbeam.util import format_db, format_meters


@click.command(name="simulate", help="Evaluate |B| on the scenario grid and write one CSV row per grid point")
@scenario_options
@pass_stbeam
@handle_errors
def simulate(
    stbeam: Stbeam,
    config_path: str,
    out: Optional[str],
    seed: Optional[int],
    model: Optional[str],
    threads: int,
):
    from stbeam.experiments import run_simulation

    scenario = stbeam.load(config_path, out=out, seed=seed, model=model)
    result = run_simulation(scenario, threads=threads)

    writer = stbeam.writer(scenario)
    writer.write_csv("cube.csv", result.cube_frame)
    writer.write_csv("metrics.csv", result.metrics_frame)
    writer.write_manifest(stbeam.manifest("simulate", scenario), {"grid_shape": list(result.cube.grid.shape)})

    n_r, n_a, n_t = result.cube.grid.shape
    rows = [
        ("grid (range x angle x time)", f"{n_r} x {n_a} x {n_t}"),
        ("peak magnitude", f"{result.cube.magnitudes.max():.6g}"),
        ("model", DelayModel(scenario.model).value),
    ]
    for _, row in result.metrics_frame.iterrows():
        if row["metric"] == "bce":
            rows.append((f"BCE {row['name']}", f"{row['bce']:.6f}"))
        else:
            level = None if row["sidelobe_verdict"] == "none" else float(row["sidelobe_db"])
            rows.append((f"FWHM {row['name']}", format_meters(float(row["fwhm_m"]))))
            rows.append((f"sidelobe {row['name']}", format_db(level)))
    stbeam.table(f"simulate: {scenario.name}", rows)
    stbeam.output(f"Wrote {len(writer.written) + 1} file(s) with prefix [bold]{scenario.output_prefix}[/bold]")
