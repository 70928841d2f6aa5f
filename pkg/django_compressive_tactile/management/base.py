"""
Shared plumbing of the tactile management commands.

Every command declares its settings as ``ConfigOption`` entries. Each becomes
a long flag named after its config key (``ns_thr`` -> ``--ns-thr``), and the
resolved ``RunConfig`` layers command defaults, any ``--config`` file and the
flags, in that order.
"""
from __future__ import annotations

import sys
from functools import partial
from typing import Any, NamedTuple

import numpy as np
from django.core.management.base import BaseCommand, CommandError
from django.utils import timezone

from django_compressive_tactile.config import RunConfig
from django_compressive_tactile.exceptions import ConfigError, NumericError, TactileError
from django_compressive_tactile.worker import memory_usage_mb

USAGE_EXIT = 1
DATA_EXIT = 2
NUMERIC_EXIT = 3


class ConfigOption(NamedTuple):
    section: str
    key: str
    type: Any = str
    default: Any = None
    help: str = ""
    action: str | None = None

    @property
    def flag(self) -> str:
        return "--" + self.key.replace("_", "-")

    @property
    def dest(self) -> str:
        return f"{self.section}.{self.key}"


def _usage_error(parser, message):
    if parser.called_from_command_line:
        parser.print_usage(sys.stderr)
        parser.exit(USAGE_EXIT, f"{parser.prog}: error: {message}\n")
    raise CommandError(f"Error: {message}", returncode=USAGE_EXIT)


class TactileCommand(BaseCommand):
    """
    Base class of the tactile commands.

    Subclasses list ``config_options`` and implement ``run(config, options)``.
    Library errors become ``CommandError`` with exit code 1 for configuration
    problems, 2 for data problems and 3 for numeric failures.
    """

    config_options: tuple[ConfigOption, ...] = ()

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.error = partial(_usage_error, parser)
        return parser

    def add_arguments(self, parser):
        parser.add_argument("--config", help="INI file of settings; flags override it.")
        for option in self.config_options:
            if option.action:
                parser.add_argument(option.flag, dest=option.dest, action=option.action, help=option.help)
            else:
                parser.add_argument(
                    option.flag, dest=option.dest, type=option.type, default=None, help=option.help
                )

    def defaults(self) -> dict[str, dict[str, Any]]:
        sections: dict[str, dict[str, Any]] = {}
        for option in self.config_options:
            if option.default is not None:
                sections.setdefault(option.section, {})[option.key] = option.default
        return sections

    def overrides(self, options: dict) -> dict[str, dict[str, Any]]:
        sections: dict[str, dict[str, Any]] = {}
        for option in self.config_options:
            value = options.get(option.dest)
            if value is None or (option.action == "store_true" and value is False):
                continue
            sections.setdefault(option.section, {})[option.key] = value
        return sections

    def pre_config_files(self, options: dict) -> list[str]:
        """Files read after the defaults and before ``--config``."""
        return []

    def resolve_config(self, options: dict) -> RunConfig:
        config = RunConfig(self.defaults())
        for path in self.pre_config_files(options):
            config.read(path)
        if options.get("config"):
            config.read(options["config"])
        config.update(self.overrides(options))
        return config

    def heartbeat(self, message: str) -> None:
        self.stdout.write(f"{timezone.now()}: [RAM Usage: {memory_usage_mb()} MB] {message}")

    def handle(self, *args, **options):
        try:
            config = self.resolve_config(options)
            self.run(config, options)
        except ConfigError as e:
            raise CommandError(str(e), returncode=USAGE_EXIT) from e
        except (NumericError, np.linalg.LinAlgError, FloatingPointError) as e:
            raise CommandError(f"Numeric failure: {e}", returncode=NUMERIC_EXIT) from e
        except (TactileError, OSError, ValueError) as e:
            raise CommandError(str(e), returncode=DATA_EXIT) from e

    def run(self, config: RunConfig, options: dict) -> None:
        raise NotImplementedError("subclasses of TactileCommand must provide a run() method")
