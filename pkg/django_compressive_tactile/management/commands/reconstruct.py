import time

from django_compressive_tactile.analytics import support_accuracy, support_iou
from django_compressive_tactile.bench import write_csv
from django_compressive_tactile.config import reconstruction_params
from django_compressive_tactile.core import replay_source
from django_compressive_tactile.formats import (
    FrameDtype,
    read_dictionary,
    read_frame_stream,
    read_measurement_stream,
    write_frame_stream,
)
from django_compressive_tactile.management.base import ConfigOption, TactileCommand
from django_compressive_tactile.reconstruction import interpolate_baseline, reconstruct_frame


class Command(TactileCommand):
    help = "Reconstructs full frames from a .tms measurement stream."

    config_options = (
        ConfigOption("io", "input", help="Source .tms measurement stream."),
        ConfigOption("io", "dictionary", help=".tdl patch dictionary."),
        ConfigOption("io", "output", help="Destination .tfr stream."),
        ConfigOption("io", "stats", help="Per-frame statistics CSV (default: <output>.stats.csv)."),
        ConfigOption("io", "truth", help="Ground-truth .tfr stream for support metrics."),
        ConfigOption(
            "reconstruction", "baseline", action="store_true",
            help="Use the interpolation baseline instead of the dictionary.",
        ),
        ConfigOption("reconstruction", "patch_rows", int),
        ConfigOption("reconstruction", "patch_cols", int),
        ConfigOption("reconstruction", "overlap", int),
        ConfigOption("reconstruction", "sparsity_fraction", float),
        ConfigOption("reconstruction", "min_patch_measurements", int),
        ConfigOption("reconstruction", "nonneg_clamp", help="true or false."),
        ConfigOption("reconstruction", "residual_rtol", float),
        ConfigOption("reconstruction", "threads", int),
        ConfigOption(
            "reconstruction", "record_timing", action="store_true",
            help="Add per-frame wall-clock time to the statistics.",
        ),
    )

    def run(self, config, options):
        sets = read_measurement_stream(config.get("io", "input"))
        output = config.get("io", "output")
        stats_path = config.get("io", "stats", None) or output + ".stats.csv"
        baseline = config.get_bool("reconstruction", "baseline", False)
        record_timing = config.get_bool("reconstruction", "record_timing", False)
        params = reconstruction_params(config)
        threads = config.get_int("reconstruction", "threads", None)
        dictionary = None if baseline else read_dictionary(config.get("io", "dictionary"))

        truth_path = config.get("io", "truth", None)
        truth_frames = read_frame_stream(truth_path) if truth_path else []
        truth_source = replay_source(truth_frames) if truth_frames else None

        fields = ["frame_index", "timestamp_us", "m", "total_force"]
        if truth_source:
            fields += ["support_accuracy", "support_iou"]
        if record_timing:
            fields.append("elapsed_us")

        frames, rows = [], []
        for number, meas in enumerate(sets):
            started = time.perf_counter()
            if baseline:
                frame = interpolate_baseline(meas, nonneg_clamp=params.nonneg_clamp)
            else:
                frame = reconstruct_frame(meas, dictionary, params, threads)
            elapsed_us = (time.perf_counter() - started) * 1e6
            frames.append(frame)
            row = [meas.frame_index, frame.timestamp_us, meas.m, frame.total_force]
            if truth_source:
                if len(truth_frames) == len(sets):
                    truth = truth_frames[number]
                else:
                    truth = truth_source.frame_at(frame.timestamp_us)
                row += [support_accuracy(frame, truth), support_iou(frame, truth)]
            if record_timing:
                row.append(elapsed_us)
            rows.append(row)
            if number and number % 100 == 0:
                self.heartbeat(f"Reconstructed {number} of {len(sets)} frames")

        write_frame_stream(output, frames, FrameDtype.FLOAT32)
        write_csv(stats_path, fields, rows)
        config.echo(output)
        method = "interpolation" if baseline else "dictionary"
        self.stdout.write(self.style.SUCCESS(f"Reconstructed {len(frames)} frames ({method}) to {output}"))
