"""Line-oriented experiment configuration files.

The format is ``key = value`` lines grouped under ``[section]`` headers::

    [run]
    dataset = sea
    alpha = 0.6

    [detector]
    tau = 0.05

Unknown sections or keys are errors, so a typo never silently falls back
to a default.
"""

from __future__ import annotations

import configparser
from pathlib import Path

# section -> key -> converter
SCHEMA = {
    "generate": {"gen": str, "seed": int, "length": int, "drift_at": str, "noise": float,
                 "features": int, "output": str},
    "run": {"dataset": str, "method": str, "alpha": float, "window": int, "seed": int,
            "length": int, "drift_at": str, "noise": float, "features": int, "kd": str,
            "baseline_budget": str, "tolerance": int, "stability_windows": int},
    "detector": {"tau": float, "phi": float, "delta": float, "statistic": str},
    "bench": {"methods": str, "budgets": str, "datasets": str, "seeds": str, "jobs": int},
    "output": {"dir": str},
}


class ConfigError(ValueError):
    """Malformed or unknown configuration entry."""


class ConfigReadError(ConfigError):
    """The configuration file could not be read at all."""


def load_config(path) -> dict:
    """Parse a config file into ``{section: {key: typed value}}``."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        with path.open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigReadError(f"cannot read config file {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    out = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        out[section] = {}
        for key, raw in parser.items(section):
            norm = key.strip().replace("-", "_")
            if norm not in SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            try:
                out[section][norm] = SCHEMA[section][norm](raw.strip())
            except ValueError:
                raise ConfigError(f"{path}: bad value {raw!r} for {key} in [{section}]") from None
    return out


def merge(file_values: dict, flag_values: dict) -> dict:
    """Flags win over file values; ``None`` flags mean "not given"."""
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    return merged
