"""
Stbeam CLI Module

The main entrance of the stbeam application
"""

import functools
import logging
import sys
from typing import Any, Callable, Optional

import click
from rich.console import Console
from rich.table import Table

from stbeam import __version__, commands
from stbeam.artifacts import ArtifactWriter, RunManifest, scenario_digest
from stbeam.errors import ConfigValidationError, DomainError, MeasurementError, ScenarioError
from stbeam.field_engine import DelayModel
from stbeam.logging_config import configure_logging
from stbeam.scenario import ScenarioConfig, load_scenario
from stbeam.util import default_log_level

logger = logging.getLogger(__name__)

EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3


class Stbeam:
    """
    The global App: console output plus scenario loading shared by all commands.
    """

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()
        self.error_console = Console(stderr=True)

    def output(self, *args, **kwargs) -> None:
        """Centralized output method. All CLI display should go through this."""
        self.console.print(*args, **kwargs)

    def error(self, message: str) -> None:
        self.error_console.print(f"[bold red]error:[/bold red] {message}", highlight=False)

    def load(
        self,
        config_path: str,
        out: Optional[str] = None,
        seed: Optional[int] = None,
        model: Optional[str] = None,
    ) -> ScenarioConfig:
        """Load a scenario and apply the command-line overrides."""
        scenario = load_scenario(config_path)
        update: dict[str, Any] = {}
        if out is not None:
            update["output_prefix"] = out
        if seed is not None:
            update["seed"] = seed
        if model is not None:
            update["model"] = DelayModel(model)
        return scenario.model_copy(update=update) if update else scenario

    def writer(self, scenario: ScenarioConfig) -> ArtifactWriter:
        return ArtifactWriter(scenario.output_prefix)

    def manifest(self, command: str, scenario: ScenarioConfig) -> RunManifest:
        model = DelayModel(scenario.model).value
        return RunManifest(
            tool_version=__version__,
            command=command,
            scenario=scenario.name,
            config_digest=scenario_digest(scenario.expanded(), model),
            model=model,
            seed=scenario.seed,
        )

    def table(self, title: str, rows: list[tuple[str, str]]) -> None:
        table = Table(title=title, title_justify="left")
        table.add_column("Quantity", style="cyan")
        table.add_column("Value", style="green", justify="right")
        for name, value in rows:
            table.add_row(name, value)
        self.output(table)


pass_stbeam = click.make_pass_decorator(Stbeam)


def scenario_options(fn: Callable) -> Callable:
    """Options shared by every scenario-driven command."""
    fn = click.option(
        "--threads",
        type=click.IntRange(min=0),
        default=1,
        show_default=True,
        help="Worker threads for cube evaluation (0 = one per CPU); never changes output bytes",
    )(fn)
    fn = click.option(
        "--model",
        type=click.Choice([m.value for m in DelayModel]),
        default=None,
        help="Delay model, overrides the scenario",
    )(fn)
    fn = click.option(
        "--seed", type=click.IntRange(min=0, max=2**64 - 1), default=None, help="Random seed, overrides the scenario"
    )(fn)
    fn = click.option("--out", "out", type=str, default=None, help="Output path prefix, overrides the scenario")(fn)
    fn = click.option(
        "--config",
        "config_path",
        required=True,
        type=click.Path(dir_okay=False),
        help="Scenario file (JSON, or YAML)",
    )(fn)
    return fn


def handle_errors(fn: Callable) -> Callable:
    """Map stbeam errors to exit codes: 2 for configuration, 3 for runtime domain/measurement."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        app = ctx.find_object(Stbeam) or Stbeam()
        try:
            return fn(*args, **kwargs)
        except ScenarioError as e:
            app.error(f"invalid scenario {e.source}")
            for line in e.diagnostics:
                app.error(f"  {line}")
            ctx.exit(EXIT_CONFIG_ERROR)
        except ConfigValidationError as e:
            app.error("invalid configuration")
            for v in e.violations:
                app.error(f"  {v}")
            ctx.exit(EXIT_CONFIG_ERROR)
        except (DomainError, MeasurementError) as e:
            app.error(str(e))
            ctx.exit(EXIT_RUNTIME_ERROR)

    return wrapper


@click.group()
@click.version_option(version=__version__, prog_name="stbeam")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
    help="Log level (default: $STBEAM_LOG_LEVEL or WARNING)",
)
@click.option("--log-file", type=click.Path(dir_okay=False), default=None, help="Write logs to a rotating file")
@click.pass_context
def stbeam_cli(ctx: click.Context, log_level: Optional[str], log_file: Optional[str]):
    """
    Stbeam: instantaneous space-time beampatterns of linear arrays
    """
    configure_logging(log_level or default_log_level(), log_file)
    if ctx.obj is None:
        ctx.obj = Stbeam()


def loads_commands():
    commands.loads_commands(stbeam_cli)


def stbeam_main(*args, **kwargs):
    # loading all click commands before calling the group
    loads_commands()
    # standalone_mode=False so ctx.exit codes propagate as the process exit code
    try:
        rc = stbeam_cli(standalone_mode=False)
    except click.ClickException as e:
        e.show()
        sys.exit(e.exit_code)
    except (KeyboardInterrupt, click.Abort):
        sys.exit(130)
    sys.exit(rc or 0)
