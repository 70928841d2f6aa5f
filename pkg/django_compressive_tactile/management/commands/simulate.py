from django_compressive_tactile.config import scene_from_config
from django_compressive_tactile.formats import FrameDtype, write_frame_stream
from django_compressive_tactile.management.base import ConfigOption, TactileCommand
from django_compressive_tactile.simulator import render_frames

SCENE_OPTIONS = (
    ConfigOption("io", "scene", help="Scene description file ([scene], [motion], [sensor])."),
    ConfigOption("scene", "shape"),
    ConfigOption("scene", "center_row", float),
    ConfigOption("scene", "center_col", float),
    ConfigOption("scene", "scale", float),
    ConfigOption("scene", "peak_pressure", float),
    ConfigOption("scene", "edge_softness", float),
    ConfigOption("motion", "kind", help="static_indent, bounce or ricochet."),
    ConfigOption("motion", "contact_us", int),
    ConfigOption("motion", "t0_us", int),
    ConfigOption("motion", "ramp_us", int),
    ConfigOption("motion", "speed_px_per_ms", float),
    ConfigOption("sensor", "rows", int),
    ConfigOption("sensor", "cols", int),
    ConfigOption("sensor", "duration_us", int),
    ConfigOption("sensor", "noise", float),
)


def scene_files(options):
    return [options["io.scene"]] if options.get("io.scene") else []


class Command(TactileCommand):
    help = "Renders a synthetic scene to a full-frame .tfr stream."

    config_options = SCENE_OPTIONS + (
        ConfigOption("io", "output", help="Destination .tfr stream."),
        ConfigOption("render", "interval_us", int, 1000, "Time between rendered frames."),
        ConfigOption("render", "start_us", int, 0),
        ConfigOption("render", "dtype", help="uint16 or float32 (default: inferred)."),
    )

    def pre_config_files(self, options):
        return scene_files(options)

    def run(self, config, options):
        output = config.get("io", "output")
        source = scene_from_config(config)
        frames = render_frames(
            source, config.get_int("render", "interval_us"), config.get_int("render", "start_us")
        )
        dtype = config.get("render", "dtype", None)
        write_frame_stream(output, frames, FrameDtype.parse(dtype) if dtype else None)
        config.echo(output)
        self.stdout.write(self.style.SUCCESS(f"Rendered {len(frames)} frames to {output}"))
