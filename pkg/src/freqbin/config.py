"""Run configuration files.

A configuration file is INI-style text whose sections mirror the library
modules; each key names a command-line option with dashes replaced by
underscores::

    [modulation]
    n_max = 40

    [metrology]
    base_rate = 20
    noise_rate = 0.01
    seed = 7

Command-line flags override file values. Unknown sections or keys are
rejected.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

SECTIONS: dict[str, frozenset[str]] = {
    "modulation": frozenset({"n_max"}),
    "interference": frozenset({"d_max", "points", "amplitude_max", "samples", "tolerance"}),
    "scan": frozenset({"a", "b", "d"}),
    "bell": frozenset(
        {"resolution", "a0", "alpha0", "a1", "alpha1", "b0", "beta0", "b1", "beta1", "repeats"}
    ),
    "metrology": frozenset(
        {
            "base_rate",
            "noise_rate",
            "floor",
            "time",
            "ref_time",
            "seed",
            "detector",
            "singles_rate",
            "kind",
            "amplitude",
        }
    ),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Flat ``option -> raw string`` mapping read from a configuration file."""

    values: dict[str, str] = field(default_factory=dict)
    source: str | None = None

    @classmethod
    def from_text(cls, text: str, source: str | None = None) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
        parser.optionxform = str
        try:
            parser.read_string(text, source=source or "<config>")
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        values: dict[str, str] = {}
        for section in parser.sections():
            allowed = SECTIONS.get(section)
            if allowed is None:
                raise ConfigError(f"unknown section [{section}]")
            for key, value in parser.items(section):
                if key not in allowed:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
                values[key] = value
        return cls(values, source)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        return cls.from_text(text, str(path))
