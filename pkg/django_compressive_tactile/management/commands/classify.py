from pathlib import Path

from django_compressive_tactile.bench import write_csv
from django_compressive_tactile.classification import (
    NO_CONTACT_LABEL,
    build_src_library,
    rapid_classify,
    src_classify,
)
from django_compressive_tactile.config import read_scene, sampling_config
from django_compressive_tactile.core import replay_source
from django_compressive_tactile.exceptions import ConfigError
from django_compressive_tactile.formats import (
    read_frame_stream,
    read_measurement_stream,
    read_src_library,
    write_src_library,
)
from django_compressive_tactile.management.base import ConfigOption, TactileCommand
from django_compressive_tactile.management.commands.sample import SAMPLING_OPTIONS


def labeled_inputs(entries):
    """Split ``label=path`` entries; entries without a label get an empty one."""
    pairs = []
    for entry in entries:
        label, sep, path = entry.partition("=")
        pairs.append((label.strip(), path.strip()) if sep else ("", entry.strip()))
    return pairs


def confusion_rows(truths, predictions, labels):
    true_labels = list(dict.fromkeys(t for t in truths if t))
    columns = list(labels) + [NO_CONTACT_LABEL]
    counts = {(t, p): 0 for t in true_labels for p in columns}
    for truth, predicted in zip(truths, predictions):
        if truth:
            counts[truth, predicted] += 1
    return ["true_label"] + columns, [[t] + [counts[t, p] for p in columns] for t in true_labels]


class Command(TactileCommand):
    help = "Classifies measurement streams against an SRC library, or builds the library."

    config_options = SAMPLING_OPTIONS + (
        ConfigOption(
            "io", "input", action="append",
            help="Input as label=path (repeatable); .tms to classify, .tfr/.ini for a library or rapid mode.",
        ),
        ConfigOption("io", "library", help=".tsrc library."),
        ConfigOption("io", "output", help="Predictions CSV, or the .tsrc written by --build-library."),
        ConfigOption("io", "confusion", help="Confusion-matrix CSV (default: <output>.confusion.csv)."),
        ConfigOption("classify", "build_library", action="store_true"),
        ConfigOption("classify", "rapid", action="store_true"),
        ConfigOption("classify", "window_ms", float, 20.0),
        ConfigOption("classify", "sparsity", int),
        ConfigOption("classify", "contact_thr", float),
        ConfigOption("library", "frames_per_class", int),
        ConfigOption("library", "pressure_quantile", float, 0.0),
    )

    def run(self, config, options):
        inputs = labeled_inputs(config.get_list("io", "input"))
        output = config.get("io", "output")
        if config.get_bool("classify", "build_library", False):
            self.build_library(config, inputs, output)
        elif config.get_bool("classify", "rapid", False):
            self.classify_rapid(config, inputs, output)
        else:
            self.classify_sets(config, inputs, output)
        config.echo(output)

    def build_library(self, config, inputs, output):
        if any(not label for label, _ in inputs):
            raise ConfigError("Library inputs must be given as label=path.")
        streams = {}
        for label, path in inputs:
            streams.setdefault(label, []).extend(read_frame_stream(path))
        library = build_src_library(
            streams,
            config.get_int("library", "frames_per_class", None),
            config.get_float("library", "pressure_quantile"),
        )
        write_src_library(output, library)
        self.stdout.write(
            self.style.SUCCESS(
                f"Wrote {library.entry_count} exemplars of {library.class_count} classes to {output}"
            )
        )

    def classify_sets(self, config, inputs, output):
        library = read_src_library(config.get("io", "library"))
        sparsity = config.get_int("classify", "sparsity", None)
        contact_thr = config.get_float("classify", "contact_thr", None)
        fields = ["true_label", "source", "frame_index", "predicted_label", "no_contact"]
        fields += [f"residual_{label}" for label in library.class_labels]
        rows, truths, predictions = [], [], []
        for label, path in inputs:
            for meas in read_measurement_stream(path):
                result = src_classify(meas, library, sparsity, contact_thr)
                rows.append(
                    [label, Path(path).name, meas.frame_index, result.label, int(result.no_contact)]
                    + list(result.residuals)
                )
                truths.append(label)
                predictions.append(result.label)
        write_csv(output, fields, rows)
        self.write_confusion(config, output, truths, predictions, library.class_labels)

    def classify_rapid(self, config, inputs, output):
        library = read_src_library(config.get("io", "library"))
        cfg = sampling_config(config)
        window_ms = config.get_float("classify", "window_ms")
        fields = [
            "true_label", "source", "contact_us", "frame_index", "frames_in_window", "predicted_label",
        ]
        rows, truths, predictions = [], [], []
        for label, path in inputs:
            if path.endswith(".tfr"):
                source = replay_source(read_frame_stream(path))
            else:
                source = read_scene(path)
            result = rapid_classify(
                source,
                library,
                cfg,
                window_ms,
                config.get_float("classify", "contact_thr", None),
                config.get_int("classify", "sparsity", None),
            )
            rows.append(
                [label, Path(path).name, result.contact_us, result.frame_index,
                 result.frames_in_window, result.label]
            )
            truths.append(label)
            predictions.append(result.label)
        write_csv(output, fields, rows)
        self.write_confusion(config, output, truths, predictions, library.class_labels)

    def write_confusion(self, config, output, truths, predictions, labels):
        path = config.get("io", "confusion", None) or output + ".confusion.csv"
        fields, rows = confusion_rows(truths, predictions, labels)
        write_csv(path, fields, rows)
        labeled = [(t, p) for t, p in zip(truths, predictions) if t]
        if labeled:
            correct = sum(1 for t, p in labeled if t == p)
            self.stdout.write(f"Accuracy: {correct}/{len(labeled)} ({correct / len(labeled):.2%})")
        self.stdout.write(self.style.SUCCESS(f"Wrote {len(predictions)} predictions to {output}"))
