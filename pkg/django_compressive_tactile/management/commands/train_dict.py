from django_compressive_tactile import signals
from django_compressive_tactile.bench import write_csv
from django_compressive_tactile.dictionary import extract_patches, ksvd_train, prune_coherent
from django_compressive_tactile.formats import read_frame_stream, write_dictionary
from django_compressive_tactile.management.base import ConfigOption, TactileCommand

LOG_FIELDS = ["iteration", "mean_residual", "atoms_replaced"]


class Command(TactileCommand):
    help = "Learns a patch dictionary with K-SVD from recorded frame streams."

    config_options = (
        ConfigOption("io", "input", help="Comma-separated .tfr training streams.", action="append"),
        ConfigOption("io", "output", help="Destination .tdl dictionary."),
        ConfigOption("io", "log", help="Training-log CSV (default: <output>.log.csv)."),
        ConfigOption("patches", "patch_rows", int, 8),
        ConfigOption("patches", "patch_cols", int, 8),
        ConfigOption("patches", "count", int, 1492, "Patches to extract."),
        ConfigOption("patches", "min_active", int, 15),
        ConfigOption("patches", "active_thr", float, help="Default: 2% of full scale."),
        ConfigOption("patches", "prune", help="Drop coherent patches (true/false).", default=True),
        ConfigOption("patches", "mu_max", float, help="Coherence bound used when pruning."),
        ConfigOption("training", "atom_count", int, 100),
        ConfigOption("training", "sparsity", int, 13),
        ConfigOption("training", "iterations", int, 10),
        ConfigOption("training", "seed", int, 0),
        ConfigOption("training", "threads", int),
    )

    def run(self, config, options):
        inputs = config.get_list("io", "input")
        output = config.get("io", "output")
        log_path = config.get("io", "log", None) or output + ".log.csv"
        frames = []
        for path in inputs:
            frames.extend(read_frame_stream(path))
        self.heartbeat(f"Loaded {len(frames)} frames from {len(inputs)} streams")

        patches = extract_patches(
            frames,
            config.get_int("patches", "patch_rows"),
            config.get_int("patches", "patch_cols"),
            config.get_int("patches", "count"),
            min_active=config.get_int("patches", "min_active"),
            active_thr=config.get_float("patches", "active_thr", None),
            seed=config.get_int("training", "seed"),
        )
        if config.get_bool("patches", "prune"):
            patches = prune_coherent(patches, config.get_float("patches", "mu_max", None))
        self.heartbeat(f"Training on {len(patches)} patches")

        log_rows = []

        def record(sender, iteration, mean_residual, atoms_replaced, **kwargs):
            log_rows.append([iteration, float(mean_residual), atoms_replaced])
            self.heartbeat(
                f"Iteration {iteration}: mean residual {mean_residual:.6g}, "
                f"{atoms_replaced} atoms replaced"
            )

        signals.training_iteration.connect(record, weak=False)
        try:
            dictionary = ksvd_train(
                patches,
                config.get_int("training", "atom_count"),
                config.get_int("training", "sparsity"),
                iterations=config.get_int("training", "iterations"),
                seed=config.get_int("training", "seed"),
                threads=config.get_int("training", "threads", None),
            )
        finally:
            signals.training_iteration.disconnect(record)

        write_dictionary(output, dictionary)
        write_csv(log_path, LOG_FIELDS, log_rows)
        config.echo(output)
        self.stdout.write(
            self.style.SUCCESS(
                f"Wrote {dictionary.atom_count} atoms of {dictionary.patch_rows}x"
                f"{dictionary.patch_cols} to {output}"
            )
        )
