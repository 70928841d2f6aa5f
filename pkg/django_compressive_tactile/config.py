"""
Plain-text run configuration.

A run is described by an INI file (``[section]`` headers and ``key = value``
lines). ``RunConfig.load`` layers command defaults, then the file, then
command-line flags; the resolved result is echoed next to every output so a
run can be repeated exactly.

Scene files use the same format with ``[scene]``, ``[motion]`` and
``[sensor]`` sections::

    [scene]
    shape = disk
    center_row = 15.5
    center_col = 15.5
    scale = 5

    [motion]
    kind = bounce
    contact_us = 8700

    [sensor]
    rows = 32
    cols = 32
"""
from __future__ import annotations

import configparser
import io
import logging
from pathlib import Path
from typing import Any, Mapping

from django_compressive_tactile.core import Scheme
from django_compressive_tactile.exceptions import ConfigError
from django_compressive_tactile.reconstruction import ReconstructionParams
from django_compressive_tactile.sampling import SamplingConfig
from django_compressive_tactile.simulator import (
    MotionProfile,
    Phantom,
    SceneSource,
    ShapeKind,
    scene_source,
)

logger = logging.getLogger(__name__)

_MISSING = object()
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def format_value(value: Any) -> str:
    """Text form of a config value; floats keep full precision."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Scheme):
        return value.name.lower()
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(item) for item in value)
    return str(value)


class RunConfig:
    """
    Sectioned key/value settings of one command invocation.

    Keys keep their case; values are stored as text and converted by the
    typed getters, which raise ConfigError naming the offending key.
    """

    def __init__(self, sections: Mapping[str, Mapping[str, Any]] | None = None):
        self._parser = configparser.ConfigParser(interpolation=None)
        self._parser.optionxform = str
        if sections:
            self.update(sections)

    @classmethod
    def load(
        cls,
        path: str | Path | None = None,
        defaults: Mapping[str, Mapping[str, Any]] | None = None,
        overrides: Mapping[str, Mapping[str, Any]] | None = None,
    ) -> "RunConfig":
        """Resolve ``defaults < file at path < overrides``; ``None`` overrides are ignored."""
        config = cls(defaults)
        if path:
            config.read(path)
        if overrides:
            config.update(overrides)
        return config

    @classmethod
    def from_string(cls, text: str) -> "RunConfig":
        config = cls()
        config.read_string(text)
        return config

    def read(self, path: str | Path) -> None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file {path} does not exist.")
        self.read_string(path.read_text(encoding="utf-8"), source=str(path))

    def read_string(self, text: str, source: str = "<string>") -> None:
        try:
            self._parser.read_string(text, source=source)
        except configparser.Error as e:
            raise ConfigError(f"Malformed config {source}: {e}") from e

    def update(self, sections: Mapping[str, Mapping[str, Any]]) -> None:
        for section, values in sections.items():
            for key, value in values.items():
                if value is not None:
                    self.set(section, key, value)

    def set(self, section: str, key: str, value: Any) -> None:
        if not self._parser.has_section(section):
            self._parser.add_section(section)
        self._parser.set(section, key, format_value(value))

    def has(self, section: str, key: str) -> bool:
        return self._parser.has_option(section, key)

    def section(self, section: str) -> dict[str, str]:
        if not self._parser.has_section(section):
            return {}
        return dict(self._parser.items(section))

    def sections(self) -> list[str]:
        return self._parser.sections()

    def get(self, section: str, key: str, default: Any = _MISSING) -> str:
        if self.has(section, key):
            return self._parser.get(section, key)
        if default is _MISSING:
            raise ConfigError(f"Missing setting [{section}] {key}.")
        return default

    def _convert(self, section, key, default, convert, kind):
        raw = self.get(section, key, default)
        if raw is default or raw is None:
            return raw
        if isinstance(raw, str) and raw.strip() == "":
            if default is _MISSING:
                raise ConfigError(f"[{section}] {key} is empty.")
            return default
        try:
            return convert(raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"[{section}] {key} must be {kind}, got '{raw}'.") from e

    def get_int(self, section: str, key: str, default: Any = _MISSING) -> int:
        return self._convert(section, key, default, int, "an integer")

    def get_float(self, section: str, key: str, default: Any = _MISSING) -> float:
        return self._convert(section, key, default, float, "a number")

    def get_bool(self, section: str, key: str, default: Any = _MISSING) -> bool:
        def convert(raw):
            text = str(raw).strip().lower()
            if text in _TRUE:
                return True
            if text in _FALSE:
                return False
            raise ValueError(text)

        return self._convert(section, key, default, convert, "a boolean")

    def get_list(self, section: str, key: str, default: Any = _MISSING, item=str) -> list:
        def convert(raw):
            return [item(part.strip()) for part in str(raw).split(",") if part.strip()]

        raw = self.get(section, key, default)
        if raw is default:
            return raw
        try:
            return convert(raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"[{section}] {key} has an invalid entry in '{raw}'.") from e

    def dumps(self) -> str:
        buffer = io.StringIO()
        self._parser.write(buffer)
        return buffer.getvalue()

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps(), encoding="utf-8")
        return path

    def echo(self, output: str | Path, directory: bool = False) -> Path:
        """
        Write the resolved config beside ``output``.

        For a file output the echo is ``<output>.ini``; for a directory output
        it is ``<directory>/run.ini``.
        """
        output = Path(output)
        target = output / "run.ini" if directory else output.with_name(output.name + ".ini")
        logger.info("Echoing resolved config to %s", target)
        return self.write(target)

    def __repr__(self):
        return f"RunConfig({self.sections()})"


def sampling_config(config: RunConfig, section: str = "sampling") -> SamplingConfig:
    """SamplingConfig from ``[sampling]``: scheme, m, ns_thr, seed, uniform_phase, neighbor_order, sample_rate_hz."""
    neighbor_order = config.get_list(section, "neighbor_order", None)
    return SamplingConfig(
        scheme=Scheme.parse(config.get(section, "scheme")),
        m=config.get_int(section, "m"),
        ns_thr=config.get_float(section, "ns_thr", None),
        seed=config.get_int(section, "seed", 0),
        uniform_phase=config.get_int(section, "uniform_phase", 0),
        neighbor_order=tuple(neighbor_order) if neighbor_order else None,
        sample_rate_hz=config.get_float(section, "sample_rate_hz", None),
    )


def reconstruction_params(config: RunConfig, section: str = "reconstruction") -> ReconstructionParams:
    defaults = ReconstructionParams()
    return ReconstructionParams(
        patch_rows=config.get_int(section, "patch_rows", defaults.patch_rows),
        patch_cols=config.get_int(section, "patch_cols", defaults.patch_cols),
        overlap=config.get_int(section, "overlap", defaults.overlap),
        sparsity_fraction=config.get_float(section, "sparsity_fraction", defaults.sparsity_fraction),
        min_patch_measurements=config.get_int(
            section, "min_patch_measurements", defaults.min_patch_measurements
        ),
        nonneg_clamp=config.get_bool(section, "nonneg_clamp", defaults.nonneg_clamp),
        residual_rtol=config.get_float(section, "residual_rtol", defaults.residual_rtol),
    )


def _custom_mask(config: RunConfig):
    from django_compressive_tactile.formats import read_frame_stream

    path = config.get("scene", "mask_file", None)
    if not path:
        raise ConfigError("A custom scene needs [scene] mask_file.")
    frames = read_frame_stream(path)
    if not frames:
        raise ConfigError(f"Mask file {path} holds no frames.")
    return frames[0].values > 0


def phantom_from_config(config: RunConfig) -> Phantom:
    shape = ShapeKind.parse(config.get("scene", "shape"))
    return Phantom(
        shape=shape,
        center=(config.get_float("scene", "center_row"), config.get_float("scene", "center_col")),
        scale=config.get_float("scene", "scale"),
        peak_pressure=config.get_float("scene", "peak_pressure", 1000.0),
        edge_softness=config.get_float("scene", "edge_softness", 0.0),
        angle_deg=config.get_float("scene", "angle_deg", 0.0),
        thickness=config.get_float("scene", "thickness", None),
        mask=_custom_mask(config) if shape == ShapeKind.CUSTOM else None,
    )


def motion_from_config(config: RunConfig) -> MotionProfile:
    return MotionProfile(
        kind=config.get("motion", "kind", "static_indent"),
        contact_us=config.get_int("motion", "contact_us"),
        t0_us=config.get_int("motion", "t0_us", 0),
        ramp_us=config.get_int("motion", "ramp_us", 0),
        angle_deg=config.get_float("motion", "angle_deg", 0.0),
        speed_px_per_ms=config.get_float("motion", "speed_px_per_ms", 0.0),
    )


def scene_from_config(config: RunConfig) -> SceneSource:
    """Build the scene FrameSource described by ``[scene]``, ``[motion]`` and ``[sensor]``."""
    return scene_source(
        phantom_from_config(config),
        motion_from_config(config),
        rows=config.get_int("sensor", "rows", 32),
        cols=config.get_int("sensor", "cols", 32),
        duration_us=config.get_int("sensor", "duration_us", None),
        noise=config.get_float("sensor", "noise", 0.0),
        seed=config.get_int("sensor", "seed", 0),
    )


def read_scene(path: str | Path) -> SceneSource:
    return scene_from_config(RunConfig.load(path))
