from django_compressive_tactile.dictionary import overcomplete_dct, overcomplete_haar
from django_compressive_tactile.exceptions import ConfigError
from django_compressive_tactile.formats import write_dictionary
from django_compressive_tactile.management.base import ConfigOption, TactileCommand


class Command(TactileCommand):
    help = "Generates an analytic overcomplete DCT or Haar patch dictionary."

    config_options = (
        ConfigOption("io", "output", help="Destination .tdl dictionary."),
        ConfigOption("dictionary", "kind", default="dct", help="dct or haar."),
        ConfigOption("dictionary", "patch_rows", int, 8),
        ConfigOption("dictionary", "patch_cols", int, 8),
        ConfigOption("dictionary", "atom_count", int, 256, "DCT atoms; a perfect square."),
        ConfigOption("dictionary", "shift_step", int, 8, "Haar translation step at the patch scale."),
        ConfigOption("dictionary", "max_level", int, help="Haar scaling level (default: log2 side)."),
    )

    def run(self, config, options):
        output = config.get("io", "output")
        kind = config.get("dictionary", "kind").strip().lower()
        patch_rows = config.get_int("dictionary", "patch_rows")
        patch_cols = config.get_int("dictionary", "patch_cols")
        if kind == "dct":
            dictionary = overcomplete_dct(
                patch_rows, patch_cols, config.get_int("dictionary", "atom_count")
            )
        elif kind == "haar":
            dictionary = overcomplete_haar(
                patch_rows,
                patch_cols,
                config.get_int("dictionary", "shift_step"),
                config.get_int("dictionary", "max_level", None),
            )
        else:
            raise ConfigError(f"Unknown dictionary kind '{kind}'; use dct or haar.")
        write_dictionary(output, dictionary)
        config.echo(output)
        self.stdout.write(
            self.style.SUCCESS(f"Wrote {dictionary.atom_count} {kind} atoms to {output}")
        )
