"""Run configuration: INI-style file with sections, overridden by CLI flags.

Precedence, lowest to highest: built-in defaults, configuration file,
command-line flags.  The output root comes from --out, falling back to
the ECHOLAB_OUT_ROOT environment variable, then ./echolab-runs.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

OUTPUT_ROOT_ENV = "ECHOLAB_OUT_ROOT"


@dataclass
class RunConfig:
    # [model]
    J: float = 1.0
    V: float = 0.01
    error_mode: str = "incoherent"
    gamma_I: float = 0.0
    gamma_c: float = 0.0
    kappa: float = 0.866
    delta_O: float = 1.37
    delta_d: float | None = None       # default: 2*delta_O
    b: float = 1.0
    # [grid]
    n_list: tuple = (1, 2, 4)
    t_list: tuple = ()
    dt_target: float = 0.025
    # [solver]
    tol: float = 1e-7
    max_iter: int = 500
    mixing: float = 0.5
    accel: str = "anderson"
    # [oracle]
    N: int = 8
    realizations: int = 50
    trajectories: int = 20
    dt_trotter: float = 0.01
    # [fit]
    window_lo: float = 0.02
    window_hi: float = 0.98
    n_set: tuple = (1, 2, 4)
    # [io]
    out: str | None = None
    seed: int = 2024
    plot: bool = True

    sections: dict = field(default_factory=lambda: {
        "model": ("J", "V", "error_mode", "gamma_I", "gamma_c", "kappa",
                  "delta_O", "delta_d", "b"),
        "grid": ("n_list", "t_list", "dt_target"),
        "solver": ("tol", "max_iter", "mixing", "accel"),
        "oracle": ("N", "realizations", "trajectories", "dt_trotter"),
        "fit": ("window_lo", "window_hi", "n_set"),
        "io": ("out", "seed", "plot"),
    }, repr=False)

    def output_root(self) -> Path:
        if self.out:
            return Path(self.out)
        env = os.environ.get(OUTPUT_ROOT_ENV)
        return Path(env) if env else Path("echolab-runs")

    def manifest_lines(self):
        lines = []
        for section, keys in self.sections.items():
            lines.append(f"[{section}]")
            for key in keys:
                lines.append(f"{key} = {_render(getattr(self, key))}")
            lines.append("")
        return lines


def _render(value):
    if value is None:
        return ""
    if isinstance(value, (tuple, list)):
        return ",".join(_render(v) for v in value)
    return str(value)


def _parse_value(name: str, raw: str, current):
    raw = raw.strip()
    if name in ("n_list", "n_set"):
        return tuple(int(x) for x in raw.split(",") if x.strip())
    if name == "t_list":
        return tuple(float(x) for x in raw.split(",") if x.strip())
    if name == "plot":
        return raw.lower() in ("1", "true", "yes", "on")
    if name in ("error_mode", "accel", "out"):
        return raw or None if name == "out" else raw
    if name in ("max_iter", "N", "realizations", "trajectories", "seed"):
        return int(raw)
    if name == "delta_d":
        return float(raw) if raw else None
    return float(raw)


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    cfg = base or RunConfig()
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file {path} not found")
    known = {key: section for section, keys in cfg.sections.items() for key in keys}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in known:
                raise ValueError(f"unknown config key {key!r} in [{section}]")
            setattr(cfg, key, _parse_value(key, raw, getattr(cfg, key)))
    return cfg


def apply_overrides(cfg: RunConfig, args, names) -> RunConfig:
    """Copy non-None argparse attributes over the config."""
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    return cfg
