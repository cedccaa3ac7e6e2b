"""Experiment configurations: JSON-backed dataclasses with dotted-key overrides.

Each experiment owns a flat-ish config whose JSON echo doubles as a golden
fixture: re-running a command with its echoed config reproduces the outputs
byte-for-byte.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError


def _as_dict(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        out[f.name] = _as_dict(v) if dataclasses.is_dataclass(v) else v
    return out


def _from_dict(cls, data: dict):
    kwargs = {}
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown config key {key!r} for {cls.__name__}")
        ftype = fields[key].type
        sub = _DATACLASS_FIELDS.get((cls.__name__, key))
        kwargs[key] = _from_dict(sub, value) if sub else value
    return cls(**kwargs)


def apply_overrides(config, overrides: list[str]):
    """Apply --set key=value pairs (dotted keys, JSON-parsed values)."""
    data = _as_dict(config)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.strip().split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown config group {part!r} in {key!r}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown config key {key!r}")
        node[parts[-1]] = value
    return _from_dict(type(config), data)


@dataclass(frozen=True)
class ProtocolConfig:
    """Per-protocol synthesis options used by the sweep runners."""

    omega_floquet: float = 480.0
    eps_reg: float = 1e-6
    floquet_phase: float = 0.0
    ff_coeff_mode: str = "weak"
    chain_signs: str = "conjugate"


@dataclass(frozen=True)
class IntegrationConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    floquet_substeps: int = 40
    #: defect budget per propagation; tolerances are tightened with ramp
    #: duration to keep the accumulated defect under ``defect_target``
    defect_target: float = 1e-9


@dataclass(frozen=True)
class FidelitySweepConfig:
    omega_B: float = 3.0
    gamma_SB: float = 0.02
    lambda_i: float = -0.67
    lambda_f: float = 0.67
    fock: tuple = (3, 1)
    delta_lambda_frac: float = 0.05
    profile: str = "smoothstep"
    #: log-spaced speed grid in units of omega_B gamma_SB^2
    speed_min: float = 0.1
    speed_max: float = 1000.0
    speed_points: int = 12
    protocols: tuple = ("ua", "cd-exact", "rwff", "feff")
    #: the Floquet synthesis is regular only below this normalized speed
    feff_speed_max: float = 500.0
    feff_profile: str = "plateau"
    feff_delta_lambda_frac: float = 0.18
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)


@dataclass(frozen=True)
class FEConvergenceConfig:
    #: SI-figure convention omega_B^2 = 3
    omega_B: float = math.sqrt(3.0)
    gamma_SB: float = 0.02
    lambda_i: float = -0.67
    lambda_f: float = 0.67
    fock: tuple = (3, 1)
    speed: float = 500.0
    omegas: tuple = (60.0, 120.0, 240.0, 480.0, 960.0)
    delta_lambda_frac: float = 0.18
    profile: str = "plateau"
    floquet_phase: float = 2.356194490192345  # 3 pi / 4
    eps_reg: float = 1e-6
    chain_signs: str = "conjugate"
    ff_coeff_mode: str = "weak"
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)


@dataclass(frozen=True)
class ThermalizationConfig:
    n_bath: int = 100
    omega_B: float = math.sqrt(2.0)
    gamma_SB: float = 0.025
    gamma_BB: float = 0.025
    temperature: float = 1.0
    delta_lambda_frac: float = 0.2
    speed_min: float = 0.1
    speed_max: float = 1000.0
    speed_points: int = 12
    protocols: tuple = ("ua", "rwff")
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)


@dataclass(frozen=True)
class EngineSweepConfig:
    omega_C: float = 1.0
    omega_H: float = 2.0
    T_H: float = 100.0
    n_bath: int = 100
    gamma_SB: float = 0.02
    gamma_BB: float = 0.03
    r_values: tuple = (0.84, 0.96, 0.997)
    speed_min: float = 1.0
    speed_max: float = 100.0
    speed_points: int = 5
    protocols: tuple = ("ua", "rwff")
    relax_policy: str = "wait"
    n_warmup: int = 2
    delta_lambda_frac: float = 0.2
    ramp_profile: str = "smoothstep"
    margin: float = 0.0
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)


@dataclass(frozen=True)
class CollapseCheckConfig:
    omega_B: float = math.sqrt(5.0)
    lambda_i: float = -0.8
    lambda_f: float = 0.8
    fock: tuple = (3, 1)
    gammas: tuple = (0.1, 0.01)
    delta_lambda_frac: float = 0.05
    speed_min: float = 0.1
    speed_max: float = 30.0
    speed_points: int = 8
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)


_DATACLASS_FIELDS = {
    ("FidelitySweepConfig", "protocol"): ProtocolConfig,
    ("FidelitySweepConfig", "integration"): IntegrationConfig,
    ("FEConvergenceConfig", "integration"): IntegrationConfig,
    ("ThermalizationConfig", "protocol"): ProtocolConfig,
    ("ThermalizationConfig", "integration"): IntegrationConfig,
    ("EngineSweepConfig", "protocol"): ProtocolConfig,
    ("EngineSweepConfig", "integration"): IntegrationConfig,
    ("CollapseCheckConfig", "integration"): IntegrationConfig,
}

EXPERIMENTS = {
    "fidelity-sweep": FidelitySweepConfig,
    "fe-convergence": FEConvergenceConfig,
    "thermalization-sweep": ThermalizationConfig,
    "engine-sweep": EngineSweepConfig,
    "collapse-check": CollapseCheckConfig,
}


def load_config(kind: str, path: str | None = None, overrides=()):
    cls = EXPERIMENTS[kind]
    if path is None:
        cfg = cls()
    else:
        with open(path) as fh:
            data = json.load(fh)
        data.pop("experiment", None)
        # tuples arrive as lists from JSON
        for f in dataclasses.fields(cls):
            if f.type == "tuple" and f.name in data and isinstance(data[f.name], list):
                data[f.name] = tuple(data[f.name])
        cfg = _from_dict(cls, data)
    if overrides:
        cfg = apply_overrides(cfg, list(overrides))
        cfg = _retuple(cfg)
    return cfg


def _retuple(cfg):
    """JSON overrides may turn tuple fields into lists; normalize back."""
    changes = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, list):
            changes[f.name] = tuple(v)
    return dataclasses.replace(cfg, **changes) if changes else cfg


def config_echo(kind: str, cfg) -> dict:
    from . import __version__
    from .kernel import BACKEND

    return {"experiment": kind, "version": __version__, "backend": BACKEND,
            "config": _as_dict(cfg)}
