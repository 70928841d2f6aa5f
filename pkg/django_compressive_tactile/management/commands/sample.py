import logging

from django_compressive_tactile.config import sampling_config, scene_from_config
from django_compressive_tactile.core import Scheme
from django_compressive_tactile.formats import read_frame_stream, write_measurement_stream
from django_compressive_tactile.management.base import ConfigOption, TactileCommand
from django_compressive_tactile.management.commands.simulate import SCENE_OPTIONS, scene_files
from django_compressive_tactile.sampling import frame_rate, sample_recorded, sample_stream

logger = logging.getLogger(__name__)

SAMPLING_OPTIONS = (
    ConfigOption("sampling", "scheme", help="uniform, random, binary or full_raster."),
    ConfigOption("sampling", "m", int, help="Measurements per frame."),
    ConfigOption("sampling", "ns_thr", float, help="Binary neighbor-search threshold."),
    ConfigOption("sampling", "seed", int, 0),
    ConfigOption("sampling", "uniform_phase", int, 0),
    ConfigOption("sampling", "sample_rate_hz", float),
)


class Command(TactileCommand):
    help = "Subsamples a scene or a recorded .tfr stream into a .tms measurement stream."

    config_options = SCENE_OPTIONS + SAMPLING_OPTIONS + (
        ConfigOption("io", "input", help="Recorded .tfr stream (instead of a scene)."),
        ConfigOption("io", "output", help="Destination .tms stream."),
        ConfigOption("stream", "start_us", int, 0),
        ConfigOption("stream", "max_frames", int),
    )

    def pre_config_files(self, options):
        return scene_files(options)

    def run(self, config, options):
        output = config.get("io", "output")
        cfg = sampling_config(config)
        recorded = config.get("io", "input", None)
        if recorded:
            frames = read_frame_stream(recorded)
            sets = sample_recorded(frames, cfg)
            size = frames[0].rows * frames[0].cols if frames else cfg.m
        else:
            source = scene_from_config(config)
            sets = list(
                sample_stream(
                    source,
                    cfg,
                    config.get_int("stream", "start_us"),
                    config.get_int("stream", "max_frames", None),
                )
            )
            size = source.rows * source.cols
        count = write_measurement_stream(output, sets)
        config.echo(output)
        reads = cfg.m if cfg.scheme != Scheme.FULL_RASTER else size
        fps = frame_rate(reads, cfg.sample_rate_hz)
        truncated = sum(1 for meas in sets if meas.truncated)
        logger.info("%s sampling at M=%d runs at %.2f FPS", cfg.scheme.label, reads, fps)
        self.stdout.write(
            f"{cfg.scheme.label} M={reads}: {fps:.2f} FPS, {count} frames, {truncated} truncated"
        )
        self.stdout.write(self.style.SUCCESS(f"Wrote {count} measurement sets to {output}"))
