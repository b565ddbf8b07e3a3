"""Declarative run configuration: an INI-style document with one section per
subsystem. Unknown sections or keys are rejected, and every physical
quantity carries its unit in the key name.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .camera import CaptureConfig, Homography, oblique_view
from .field import SamplingPlane, TransducerArray
from .optimize import OptimConfig
from .plant import PlantParams

__all__ = ["RunConfig", "load_config", "ConfigError", "DEFAULT_CONFIG_TEXT"]


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


_SCHEMA = {
    "array": {
        "grid_nx": int,
        "grid_ny": int,
        "pitch_mm": float,
        "radius_mm": float,
        "frequency_hz": float,
        "sound_speed_m_s": float,
        "ref_pressure_pa_m": float,
    },
    "plane": {
        "nx": int,
        "ny": int,
        "width_mm": float,
        "height_mm": float,
        "distance_mm": float,
    },
    "optimizer": {
        "steps": int,
        "learning_rate": float,
        "beta1": float,
        "beta2": float,
        "epsilon": float,
        "seed": int,
        "frames": int,
        "phase_levels": int,
    },
    "plant": {
        "coupling_m_per_pa2": float,
        "smoothing_mm": float,
        "refractive_index": float,
        "screen_distance_mm": float,
        "rays_per_cell": int,
        "mean_free": bool,
        "model": str,
        "surface_tension_n_m": float,
        "density_kg_m3": float,
    },
    "camera": {
        "obliquity": float,
        "noise_sigma": float,
        "background_offset": float,
        "seed": int,
        "homography_file": str,
    },
    "twin": {
        "steps": int,
        "learning_rate": float,
        "beta1": float,
        "beta2": float,
        "epsilon": float,
        "seed": int,
        "snapshot_every": int,
        "track_contrast": bool,
    },
    "metrics": {
        "mask_threshold": float,
        "circle_radius_mm": float,
        "separations_mm": str,
        "frame_counts": str,
    },
}

_DEFAULTS = {
    "array": {
        "grid_nx": 16,
        "grid_ny": 16,
        "pitch_mm": 10.0,
        "radius_mm": 5.0,
        "frequency_hz": 40000.0,
        "sound_speed_m_s": 346.0,
        "ref_pressure_pa_m": 1.0,
    },
    "plane": {
        "nx": 192,
        "ny": 192,
        "width_mm": 155.0,
        "height_mm": 155.0,
        "distance_mm": 200.0,
    },
    "optimizer": {
        "steps": 1000,
        "learning_rate": 0.05,
        "beta1": 0.9,
        "beta2": 0.999,
        "epsilon": 1e-8,
        "seed": 7,
        "frames": 1,
        "phase_levels": 32,
    },
    "plant": {
        "coupling_m_per_pa2": 1e-7,
        "smoothing_mm": 2.0,
        "refractive_index": 1.40,
        "screen_distance_mm": 100.0,
        "rays_per_cell": 2,
        "mean_free": False,
        "model": "gaussian",
        "surface_tension_n_m": 0.0205,
        "density_kg_m3": 975.0,
    },
    "camera": {
        "obliquity": 0.03,
        "noise_sigma": 0.0,
        "background_offset": 0.02,
        "seed": 0,
        "homography_file": "",
    },
    "twin": {
        "steps": 300,
        "learning_rate": 0.02,
        "beta1": 0.9,
        "beta2": 0.999,
        "epsilon": 1e-8,
        "seed": 0,
        "snapshot_every": 50,
        "track_contrast": False,
    },
    "metrics": {
        "mask_threshold": 0.5,
        "circle_radius_mm": 10.0,
        "separations_mm": "1, 0, -1, -2, -3, -4",
        "frame_counts": "1, 3, 9, 24",
    },
}


def _coerce(section: str, key: str, raw: str):
    kind = _SCHEMA[section][key]
    if kind is bool:
        low = raw.strip().lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"[{section}] {key}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc


@dataclass
class RunConfig:
    """Effective configuration for a pipeline run."""

    values: dict  # section -> key -> coerced value

    @classmethod
    def defaults(cls) -> "RunConfig":
        return cls({s: dict(kv) for s, kv in _DEFAULTS.items()})

    def override(self, section: str, key: str, value) -> None:
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown configuration key [{section}] {key}")
        self.values[section][key] = value

    def get(self, section: str, key: str):
        return self.values[section][key]

    # Builders for the domain objects -------------------------------------

    def array(self) -> TransducerArray:
        a = self.values["array"]
        return TransducerArray.grid(
            nx=a["grid_nx"],
            ny=a["grid_ny"],
            pitch=a["pitch_mm"] / 1000.0,
            radius=a["radius_mm"] / 1000.0,
            frequency=a["frequency_hz"],
            sound_speed=a["sound_speed_m_s"],
            ref_pressure=a["ref_pressure_pa_m"],
        )

    def plane(self) -> SamplingPlane:
        p = self.values["plane"]
        return SamplingPlane.default(
            nx=p["nx"],
            ny=p["ny"],
            width=p["width_mm"] / 1000.0,
            height=p["height_mm"] / 1000.0,
            distance=p["distance_mm"] / 1000.0,
        )

    def optimizer(self) -> OptimConfig:
        o = self.values["optimizer"]
        return OptimConfig(
            steps=o["steps"],
            learning_rate=o["learning_rate"],
            beta1=o["beta1"],
            beta2=o["beta2"],
            epsilon=o["epsilon"],
            seed=o["seed"],
        )

    def plant(self) -> PlantParams:
        p = self.values["plant"]
        return PlantParams(
            coupling=p["coupling_m_per_pa2"],
            smoothing=p["smoothing_mm"] / 1000.0,
            refractive_index=p["refractive_index"],
            screen_distance=p["screen_distance_mm"] / 1000.0,
            rays_per_cell=p["rays_per_cell"],
            mean_free=p["mean_free"],
            model=p["model"],
            surface_tension=p["surface_tension_n_m"],
            density=p["density_kg_m3"],
        )

    def camera(self) -> CaptureConfig:
        c = self.values["camera"]
        if c["homography_file"]:
            from .formats import read_homography

            h = read_homography(c["homography_file"])
        else:
            p = self.values["plane"]
            h = oblique_view((p["ny"], p["nx"]), c["obliquity"])
        return CaptureConfig(
            true_homography=h,
            noise_sigma=c["noise_sigma"],
            background_offset=c["background_offset"],
            seed=c["seed"],
        )

    def separations_m(self) -> tuple:
        raw = self.values["metrics"]["separations_mm"]
        return tuple(float(v) / 1000.0 for v in raw.replace(",", " ").split())

    def frame_counts(self) -> tuple:
        raw = self.values["metrics"]["frame_counts"]
        return tuple(int(v) for v in raw.replace(",", " ").split())

    def serialize(self) -> str:
        """Effective config as an INI document; re-running it reproduces the run."""
        lines = []
        for section in _SCHEMA:
            lines.append(f"[{section}]")
            for key, value in self.values[section].items():
                lines.append(f"{key} = {value}")
            lines.append("")
        return "\n".join(lines)


DEFAULT_CONFIG_TEXT = RunConfig.defaults().serialize()


def load_config(path=None, overrides=None) -> RunConfig:
    """Parse an INI config file over the defaults; unknown keys are errors.

    overrides is an iterable of (section, key, raw string value) applied last.
    """
    cfg = RunConfig.defaults()
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(Path(path))
        if not read:
            raise ConfigError(f"cannot read config file {path}")
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown configuration section [{section}]")
            for key, raw in parser[section].items():
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"unknown configuration key [{section}] {key}")
                cfg.values[section][key] = _coerce(section, key, raw)
    for section, key, raw in overrides or ():
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown configuration key [{section}] {key}")
        cfg.values[section][key] = _coerce(section, key, str(raw))
    return cfg
