import importlib
import logging
import os
from typing import Callable, List, Optional

import click

logger = logging.getLogger(__name__)


def loads_commands(group: click.Group) -> None:
    current_dir = os.path.dirname(os.path.abspath(__file__))
    _load_commands_from_dir(
        current_dir,
        group,
        package_name="stbeam.commands",
        filter_fn=lambda f_name: f_name != "__init__.py",
    )


def _load_commands_from_dir(
    commands_dir: str,
    group: click.Group,
    package_name: Optional[str] = None,
    filter_fn: Optional[Callable[[str], bool]] = None,
) -> None:
    # sorted so the command table does not depend on directory order
    for filename in sorted(os.listdir(commands_dir)):
        if not filename.endswith(".py"):
            continue
        if filter_fn is not None and not filter_fn(filename):
            continue
        cmd_name = filename[:-3]
        module_name = f"{package_name}.{cmd_name}" if package_name is not None else cmd_name
        module = importlib.import_module(module_name)
        cli_obj = getattr(module, cmd_name, None)
        if isinstance(cli_obj, click.Command):
            logger.debug("Loaded command %s from %s", cli_obj.name, module_name)
            group.add_command(cli_obj)


def list_commands_names(group: click.Group) -> List[str]:
    return [name for name, _ in group.commands.items()]
