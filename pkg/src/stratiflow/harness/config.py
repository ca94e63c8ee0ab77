"""Run configuration, presets and the key=value config file format."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

MODES = ("nonlinear", "linearized", "quasilinear")


@dataclass(frozen=True)
class RunConfig:
    m: int = 16
    dt: float = 5e-3
    t_end: float = 50.0
    epsilon: float = 1e-2
    k_energy: int = 2
    gamma: float = 5.0
    kappa: int = 16
    seed: int = 0
    spectrum_slope: float = 20.0
    output_every: int = 20
    mode: str = "nonlinear"
    checkpoint_every: int = 0
    # size of d_y rho_tilde(0) in H^{k_energy+1}[-1, 1]; 0 gives a zero mean profile
    mean_epsilon: float = 0.0
    # smallness required of the frozen weight in quasilinear runs
    weight_epsilon: float = 0.05
    blowup_cap: float = 1e6
    # reports are computed on a diagnostic grid this many times finer
    diag_refine: int = 4

    def __post_init__(self):
        # normalise types so equal configs serialise identically (0 vs 0.0)
        for f in fields(self):
            object.__setattr__(self, f.name, coerce(f.name, getattr(self, f.name)))
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be >= 0")
        if self.k_energy < 0 or self.kappa < 0:
            raise ValueError("energy orders must be non-negative")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def bootstrap_hypotheses(self) -> bool:
        return self.gamma > 4 and self.kappa >= 6 + 2 * self.gamma

    def replace(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: coerce(k, v) for k, v in d.items()})


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def coerce(key: str, value):
    kind = _TYPES[key]
    if kind in ("int", int):
        if isinstance(value, str):
            value = float(value) if any(c in value for c in ".eE") else int(value)
        if float(value) != int(value):
            raise ValueError(f"{key} must be an integer")
        return int(value)
    if kind in ("float", float):
        return float(value)
    return str(value)


PRESETS = {
    # the nonlinear stability experiment at desk scale
    "bootstrap": dict(mode="nonlinear", m=16, dt=5e-3, t_end=50.0, epsilon=1e-2, gamma=5.0,
                      kappa=16, spectrum_slope=20.0, output_every=20),
    # frozen-weight decay experiment
    "quasilinear": dict(mode="quasilinear", m=16, dt=0.5, t_end=50.0, epsilon=1.0, k_energy=2,
                        kappa=2, spectrum_slope=8.0, output_every=1, mean_epsilon=0.05,
                        weight_epsilon=0.05),
    # pure linear decay
    "linear": dict(mode="linearized", m=16, dt=5e-3, t_end=50.0, epsilon=1e-2, spectrum_slope=8.0,
                   output_every=100),
    # short run used to audit boundary traces and invariants
    "audit": dict(mode="nonlinear", m=8, dt=1e-2, t_end=1.0, epsilon=1e-1, kappa=4,
                  spectrum_slope=6.0, output_every=10),
}


def preset(name: str, **overrides) -> RunConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return RunConfig.from_dict({**PRESETS[name], **overrides})


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES and key != "preset":
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        out[key] = value.strip("\"'")
    return out


def load_config(path: str | Path, **overrides) -> RunConfig:
    values = parse_config_text(Path(path).read_text())
    name = values.pop("preset", None)
    base = dict(PRESETS[name]) if name else {}
    base.update(values)
    base.update(overrides)
    return RunConfig.from_dict(base)


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.to_dict().items())
