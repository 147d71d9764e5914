"""``key = value`` configuration files.

Recognised keys::

    grid.n             grid points per direction (even, >= 4)
    sweep.taus         comma-separated, strictly decreasing aspect ratios
    sweep.workers      parallel worker processes for the per-tau runs
    run.tau            aspect ratio for single Boussinesq runs
    time.T             final time
    time.dt            base time step
    time.record_every  base steps between records
    time.cfl_safety    safety factor in (0, 1]
    ic.seed            random seed for the initial data
    ic.decay           spectral amplitude decay exponent
    ic.cutoff          largest mode index in the initial data
    ic.amplitude       sup-norm of the initial v and rho
    ic.dir             directory with v1/v2/rho snapshots (instead of a seed)
    out.dir            output directory
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in text.replace(",", " ").split())


KEYS = {
    "grid.n": int,
    "sweep.taus": _floats,
    "sweep.workers": int,
    "run.tau": float,
    "time.T": float,
    "time.dt": float,
    "time.record_every": int,
    "time.cfl_safety": float,
    "ic.seed": int,
    "ic.decay": float,
    "ic.cutoff": int,
    "ic.amplitude": float,
    "ic.dir": str,
    "out.dir": str,
}

DEFAULTS = {
    "grid.n": 32,
    "sweep.taus": (0.2, 0.1, 0.05, 0.025),
    "sweep.workers": 1,
    "run.tau": 0.1,
    "time.T": 0.25,
    "time.dt": 1e-3,
    "time.record_every": 5,
    "time.cfl_safety": 0.5,
    "ic.seed": 0,
    "ic.decay": 4.0,
    "ic.cutoff": 8,
    "ic.amplitude": 1.0,
    "ic.dir": None,
    "out.dir": "out",
}


def convert(key: str, raw: str, where: str = ""):
    if key not in KEYS:
        raise ConfigError(f"{where}unknown key {key!r}")
    try:
        return KEYS[key](raw)
    except ValueError:
        raise ConfigError(f"{where}bad value {raw!r} for {key}") from None


def parse_config(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}: "
        if "=" not in line:
            raise ConfigError(f"{where}expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if not raw:
            raise ConfigError(f"{where}missing value for {key!r}")
        values[key] = convert(key, raw, where)
    return values


def load_config(path=None, overrides=()) -> dict:
    """Defaults, then the file (if any), then ``key=value`` overrides."""
    cfg = dict(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {p} not found")
        cfg.update(parse_config(p.read_text(), str(p)))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = (s.strip() for s in item.split("=", 1))
        cfg[key] = convert(key, raw, "override: ")
    return cfg
