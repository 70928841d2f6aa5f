import math

from django_compressive_tactile import analytics
from django_compressive_tactile.bench import write_csv
from django_compressive_tactile.core import replay_source
from django_compressive_tactile.exceptions import InsufficientDataError
from django_compressive_tactile.formats import read_frame_stream, read_measurement_stream
from django_compressive_tactile.management.base import ConfigOption, TactileCommand

SUMMARY_FIELDS = ["metric", "value"]


class Command(TactileCommand):
    help = "Computes COP, contact, force and support metrics of a .tfr or .tms stream."

    config_options = (
        ConfigOption("io", "input", help=".tfr frames or .tms measurement stream."),
        ConfigOption("io", "truth", help="Ground-truth .tfr stream (frames input only)."),
        ConfigOption("io", "output", help="Per-frame metrics CSV."),
        ConfigOption("io", "summary", help="Summary CSV (default: <output>.summary.csv)."),
        ConfigOption("metrics", "support_thr", float, help="Support threshold (default: 10% of max)."),
        ConfigOption("metrics", "contact_thr", float, help="Contact threshold (default: 2% of full scale)."),
    )

    def run(self, config, options):
        path = config.get("io", "input")
        output = config.get("io", "output")
        summary_path = config.get("io", "summary", None) or output + ".summary.csv"
        contact_thr = config.get_float("metrics", "contact_thr", None)
        if path.endswith(".tms"):
            items = read_measurement_stream(path)
            rows, summary = self.measurement_metrics(items, contact_thr)
            fields = ["frame_index", "timestamp_us", "total_force", "cop_row", "cop_col"]
        else:
            items = read_frame_stream(path)
            rows, summary, fields = self.frame_metrics(items, config, contact_thr)
        if len(items) > 1:
            summary.append(["force_smoothness", analytics.force_smoothness(items)])
        summary.append(["ricochet_angle_deg", self.angle(rows)])
        write_csv(output, fields, rows)
        write_csv(summary_path, SUMMARY_FIELDS, summary)
        config.echo(output)
        self.stdout.write(self.style.SUCCESS(f"Wrote metrics of {len(items)} frames to {output}"))

    @staticmethod
    def _cop(cop):
        return [cop.row, cop.col] if cop else ["", ""]

    def measurement_metrics(self, sets, contact_thr):
        rows = []
        for meas in sets:
            cop = analytics.cop_from_measurements(meas) if meas.total_force > 0 else None
            start = meas.start_us if meas.m else ""
            rows.append([meas.frame_index, start, meas.total_force] + self._cop(cop))
        summary = [
            ["frames", len(sets)],
            ["detected_frames", analytics.detected_frame_count(sets, contact_thr)],
        ]
        return rows, summary

    def frame_metrics(self, frames, config, contact_thr):
        truth_path = config.get("io", "truth", None)
        truth_frames = read_frame_stream(truth_path) if truth_path else []
        truth_source = replay_source(truth_frames) if truth_frames else None
        support_thr = config.get_float("metrics", "support_thr", None)
        fields = ["frame_index", "timestamp_us", "total_force", "cop_row", "cop_col", "outline_pixels"]
        if truth_source:
            fields += ["support_accuracy", "support_iou"]
        rows, accuracies, ious = [], [], []
        for index, frame in enumerate(frames):
            cop = analytics.center_of_pressure(frame) if frame.total_force > 0 else None
            row = [index, frame.timestamp_us, frame.total_force] + self._cop(cop)
            row.append(len(analytics.outline(frame)) if frame.total_force > 0 else 0)
            if truth_source:
                truth = (
                    truth_frames[index]
                    if len(truth_frames) == len(frames)
                    else truth_source.frame_at(frame.timestamp_us)
                )
                accuracies.append(analytics.support_accuracy(frame, truth, support_thr))
                ious.append(analytics.support_iou(frame, truth, support_thr))
                row += [accuracies[-1], ious[-1]]
            rows.append(row)
        summary = [
            ["frames", len(frames)],
            ["contact_frames", analytics.contact_frame_count(frames, contact_thr)],
        ]
        if accuracies:
            summary.append(["mean_support_accuracy", sum(accuracies) / len(accuracies)])
            summary.append(["mean_support_iou", sum(ious) / len(ious)])
        return rows, summary, fields

    @staticmethod
    def angle(rows):
        cops = [
            analytics.CopSample(row[1], row[3], row[4], row[2]) for row in rows if row[3] != ""
        ]
        try:
            return analytics.ricochet_angle(cops)
        except InsufficientDataError:
            return math.nan
