from django_compressive_tactile.bench import Campaign, run_campaign
from django_compressive_tactile.config import reconstruction_params
from django_compressive_tactile.dictionary import overcomplete_dct
from django_compressive_tactile.formats import read_dictionary
from django_compressive_tactile.management.base import ConfigOption, TactileCommand


class Command(TactileCommand):
    help = "Runs a benchmark campaign and writes its CSV tables."

    config_options = (
        ConfigOption("io", "output", help="Directory receiving the CSV tables."),
        ConfigOption("io", "dictionary", help=".tdl dictionary (default: 256-atom overcomplete DCT)."),
        ConfigOption("campaign", "m_values", help="Comma-separated measurement levels."),
        ConfigOption("campaign", "schemes", help="Comma-separated schemes."),
        ConfigOption("campaign", "rows", int),
        ConfigOption("campaign", "cols", int),
        ConfigOption("campaign", "seed", int),
        ConfigOption("campaign", "support_frames", int),
        ConfigOption("campaign", "trials_per_class", int),
        ConfigOption("campaign", "phases", int),
        ConfigOption("campaign", "contact_us", int),
        ConfigOption("campaign", "windows_ms", help="Comma-separated rapid windows."),
        ConfigOption("campaign", "rapid_trials_per_class", int),
        ConfigOption("campaign", "threads", int),
    )

    def run(self, config, options):
        output = config.get("io", "output")
        campaign = Campaign.from_config(config)
        params = reconstruction_params(config)
        path = config.get("io", "dictionary", None)
        if path:
            dictionary = read_dictionary(path)
        else:
            dictionary = overcomplete_dct(params.patch_rows, params.patch_cols, 256)
        self.heartbeat(
            f"Campaign: M={list(campaign.m_values)}, schemes="
            f"{[s.label for s in campaign.schemes]}"
        )
        run_campaign(campaign, dictionary, output, params, progress=self.heartbeat)
        config.echo(output, directory=True)
        self.stdout.write(self.style.SUCCESS(f"Campaign tables written to {output}"))
