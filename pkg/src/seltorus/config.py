"""Run configuration: a strict sectioned key-value file.

Example::

    [grid]
    n = 64

    [time]
    dt = 1e-4
    horizon = 0.1

    [noise]
    n = 9
    s = 3.0
    amplitude = 1.0
    seed = 12345

    [initial]
    preset = smooth_small
    # or:  snapshot = /path/to/state.snap

    [monitors]
    rho = 0.125
    epsilon1 = auto
    sample_stride = 10

    [output]
    directory = out
    snapshot_stride = 0

Unknown sections or keys are errors (fail-fast reproducibility); every
downstream positivity/parity constraint is re-validated at parse time.
``epsilon1 = auto`` selects half the inverse of the empirical localized
interpolation constant measured on the default corpus at run time.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

_SCHEMA = {
    "grid": {"n"},
    "time": {"dt", "horizon"},
    "noise": {"n", "s", "amplitude", "seed"},
    "initial": {"preset", "snapshot"},
    "monitors": {"rho", "epsilon1", "sample_stride"},
    "output": {"directory", "snapshot_stride"},
}


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass
class SimConfig:
    grid_n: int
    dt: float
    horizon: float
    noise_n: int = 0
    noise_s: float = 3.0
    noise_amplitude: float = 1.0
    seed: int = 0
    preset: str | None = "smooth_small"
    snapshot: str | None = None
    rho: float = 0.125
    epsilon1: float | str = "auto"
    sample_stride: int = 1
    out_dir: str = "out"
    snapshot_stride: int = 0

    def validate(self) -> "SimConfig":
        if self.grid_n < 8 or self.grid_n % 2 != 0:
            raise ConfigError(f"[grid] n must be even and >= 8, got {self.grid_n}")
        if self.dt <= 0:
            raise ConfigError(f"[time] dt must be positive, got {self.dt}")
        if self.horizon <= 0:
            raise ConfigError(f"[time] horizon must be positive, got {self.horizon}")
        if self.noise_n < 0:
            raise ConfigError(f"[noise] n must be >= 0, got {self.noise_n}")
        if self.noise_s < 0:
            raise ConfigError(f"[noise] s must be >= 0, got {self.noise_s}")
        if not (0 <= self.seed < 2 ** 64):
            raise ConfigError("[noise] seed must fit in 64 bits")
        if (self.preset is None) == (self.snapshot is None):
            raise ConfigError("[initial] needs exactly one of preset / snapshot")
        if self.rho <= 0:
            raise ConfigError(f"[monitors] rho must be positive, got {self.rho}")
        if self.rho < 1.0 / self.grid_n:
            raise ConfigError(
                f"[monitors] rho={self.rho} is smaller than one grid cell")
        if isinstance(self.epsilon1, str):
            if self.epsilon1 != "auto":
                raise ConfigError("[monitors] epsilon1 must be a number or 'auto'")
        elif self.epsilon1 <= 0:
            raise ConfigError("[monitors] epsilon1 must be positive")
        if self.sample_stride < 1:
            raise ConfigError("[monitors] sample_stride must be >= 1")
        if self.snapshot_stride < 0:
            raise ConfigError("[output] snapshot_stride must be >= 0")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


def _get(parser, section, key, conv, default=None, required=False):
    if parser.has_option(section, key):
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None
    if required:
        raise ConfigError(f"[{section}] missing required key {key!r}")
    return default


def _int(raw: str) -> int:
    return int(raw, 0)


def parse_config(path) -> SimConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    eps_raw = _get(parser, "monitors", "epsilon1", str, default="auto")
    epsilon1: float | str = eps_raw if eps_raw == "auto" else float(eps_raw)

    cfg = SimConfig(
        grid_n=_get(parser, "grid", "n", _int, required=True),
        dt=_get(parser, "time", "dt", float, required=True),
        horizon=_get(parser, "time", "horizon", float, required=True),
        noise_n=_get(parser, "noise", "n", _int, default=0),
        noise_s=_get(parser, "noise", "s", float, default=3.0),
        noise_amplitude=_get(parser, "noise", "amplitude", float, default=1.0),
        seed=_get(parser, "noise", "seed", _int, default=0),
        preset=_get(parser, "initial", "preset", str, default=None),
        snapshot=_get(parser, "initial", "snapshot", str, default=None),
        rho=_get(parser, "monitors", "rho", float, default=0.125),
        epsilon1=epsilon1,
        sample_stride=_get(parser, "monitors", "sample_stride", _int, default=1),
        out_dir=_get(parser, "output", "directory", str, default="out"),
        snapshot_stride=_get(parser, "output", "snapshot_stride", _int, default=0),
    )
    if cfg.preset is None and cfg.snapshot is None:
        cfg.preset = "smooth_small"
    return cfg.validate()
