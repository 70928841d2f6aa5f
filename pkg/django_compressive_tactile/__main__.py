"""
Command-line entry point: ``python -m django_compressive_tactile <command> [options]``.

Boots minimal Django settings unless ``DJANGO_SETTINGS_MODULE`` is set, and
accepts hyphenated command names (``train-dict`` runs ``train_dict``).
"""
import os
import sys

import django
from django.conf import settings
from django.core.management import execute_from_command_line

COMMANDS = ("train_dict", "gen_dict", "simulate", "sample", "reconstruct", "classify", "bench", "metrics")


def main(argv=None):
    argv = list(sys.argv if argv is None else argv)
    if not os.environ.get("DJANGO_SETTINGS_MODULE") and not settings.configured:
        settings.configure(
            INSTALLED_APPS=["django_compressive_tactile"],
            USE_TZ=True,
        )
        django.setup()
    if len(argv) > 1 and argv[1].replace("-", "_") in COMMANDS:
        argv[1] = argv[1].replace("-", "_")
    argv[0] = "python -m django_compressive_tactile"
    execute_from_command_line(argv)


if __name__ == "__main__":
    main()
