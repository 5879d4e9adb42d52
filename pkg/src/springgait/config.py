"""Experiment configuration and the flat key-value config file format.

Config files are plain text, one `key = value` per line, `#` comments.
Keys are dotted paths; values are parsed as bool/int/float/string. All
physical quantities are SI except spring stiffnesses, which carry an
explicit `_n_per_mm` suffix in their key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .params import (DEG, BipedParams, ReflexConstants, ReflexGains,
                     human_biped, robot_biped)
from .metabolics import MetabolicCoefficients
from .springs import ExperimentKind, SpringConfig


class ConfigError(ValueError):
    """Config file problem with file/line context."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = f"{path}:{line}: " if path and line else (f"{path}: " if path else "")
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line = line


def parse_kv_text(text: str, path: str | None = None) -> dict[str, object]:
    """Parse `key = value` lines into a flat dict."""
    out: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}",
                              path, lineno)
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if not key:
            raise ConfigError("empty key", path, lineno)
        out[key] = _parse_value(val)
    return out


def _parse_value(val: str) -> object:
    low = val.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(val)
    except ValueError:
        pass
    try:
        return float(val)
    except ValueError:
        pass
    return val


def load_kv(path: str | Path) -> dict[str, object]:
    p = Path(path)
    if not p.exists():
        raise ConfigError("file not found", str(p))
    return parse_kv_text(p.read_text(), str(p))


def dump_kv(values: dict[str, object], path: str | Path,
            header: str | None = None) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    if header:
        lines += [f"# {h}" for h in header.splitlines()]
    for k, v in values.items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = f"{v:.12g}"
        lines.append(f"{k} = {v}")
    p.write_text("\n".join(lines) + "\n")


# --- gains and springs as key-value files -----------------------------------

def gains_to_kv(g: ReflexGains) -> dict[str, object]:
    return {f"gain.{k}": getattr(g, k) for k in ReflexGains.ORDER}


def gains_from_kv(kv: dict[str, object], path: str | None = None) -> ReflexGains:
    vals = {}
    for k in ReflexGains.ORDER:
        key = f"gain.{k}"
        if key not in kv:
            raise ConfigError(f"missing key {key!r}", path)
        vals[k] = float(kv[key])
    return ReflexGains(**vals)


def springs_to_kv(configs: dict[str, SpringConfig]) -> dict[str, object]:
    out: dict[str, object] = {}
    for name, c in sorted(configs.items()):
        p = name.lower()
        out[f"spring.{p}.k_n_per_mm"] = c.k_n_per_mm
        out[f"spring.{p}.l0_m"] = c.l0
        out[f"spring.{p}.enabled_from_step"] = c.enabled_from_step
    return out


def springs_from_kv(kv: dict[str, object], path: str | None = None) -> dict[str, SpringConfig]:
    targets = sorted({k.split(".")[1] for k in kv if k.startswith("spring.")})
    out = {}
    for t in targets:
        try:
            cfg = SpringConfig(
                target=t.upper(),
                k_n_per_mm=float(kv[f"spring.{t}.k_n_per_mm"]),
                l0=float(kv[f"spring.{t}.l0_m"]),
                enabled_from_step=int(kv.get(f"spring.{t}.enabled_from_step", 3)),
            )
        except KeyError as exc:
            raise ConfigError(f"missing key {exc.args[0]!r} for spring {t!r}", path)
        cfg.validate()
        out[t.upper()] = cfg
    return out


def default_springs() -> dict[str, SpringConfig]:
    """Shipped replacement springs (regenerate with `springgait fit-springs`)."""
    return {
        "GAS": SpringConfig("GAS", 60.0, 0.440, 3),
        "SOL": SpringConfig("SOL", 200.0, 0.290, 3),
    }


# --- cost weights ------------------------------------------------------------

@dataclass(frozen=True)
class CostWeights:
    w1: float = 5e2    # metabolic energy
    w2: float = 10.0   # summed squared activations
    w3: float = 2.0    # GRF jerk
    w4: float = 2e4    # HAT acceleration
    w5: float = 10.0   # knee stop moments
    w6: float = 1e4    # ankle stop moments
    w7: float = 1e5    # early fall penalty
    grf_in_bodyweights: bool = True
    acc_in_g: bool = True


# --- initial state -----------------------------------------------------------

@dataclass(frozen=True)
class InitialPose:
    """Starting configuration: trailing stance leg, leading leg about to land."""

    pitch: float = 0.0
    vx: float = 1.3
    vy: float = 0.0
    pitch_vel: float = 0.0
    hip_l: float = 150.0 * DEG
    knee_l: float = 158.0 * DEG
    ankle_l: float = 90.0 * DEG
    hip_r: float = 171.0 * DEG
    knee_r: float = 168.0 * DEG
    ankle_r: float = 85.0 * DEG
    drop_clearance: float = 0.004   # m, initial penetration of the lowest point


@dataclass(frozen=True)
class SolverSettings:
    rtol: float = 1e-3
    atol: float = 1e-4
    max_step: float = 0.1
    min_step: float = 1e-9
    control_dt: float = 1e-3   # controller tick and log sampling interval
    max_crossings: int = 30


@dataclass(frozen=True)
class ExperimentConfig:
    kind: ExperimentKind = ExperimentKind.NMS_REF
    duration: float = 10.0
    seed: int = 0
    gains: ReflexGains = field(default_factory=ReflexGains)
    reflex: ReflexConstants = field(default_factory=ReflexConstants)
    springs: dict[str, SpringConfig] = field(default_factory=default_springs)
    weights: CostWeights = field(default_factory=CostWeights)
    metabolic: MetabolicCoefficients = field(default_factory=MetabolicCoefficients)
    solver: SolverSettings = field(default_factory=SolverSettings)
    init: InitialPose = field(default_factory=InitialPose)
    out_dir: str = "runs/out"

    def biped(self) -> BipedParams:
        if self.kind is ExperimentKind.ROBOT:
            return robot_biped()
        return human_biped()

    def validate(self) -> None:
        if self.duration < 0:
            raise ConfigError("duration must be non-negative")
        for c in self.springs.values():
            c.validate()


_EXPERIMENT_NAMES = {k.value: k for k in ExperimentKind}


def experiment_from_kv(kv: dict[str, object], path: str | None = None,
                       base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Build an ExperimentConfig from flat keys, leaving unset fields at defaults."""
    cfg = base or ExperimentConfig()
    known = set()

    def take(key, default):
        known.add(key)
        return kv.get(key, default)

    kind_name = str(take("experiment", cfg.kind.value)).lower()
    if kind_name not in _EXPERIMENT_NAMES:
        raise ConfigError(
            f"field 'experiment': unknown kind {kind_name!r} "
            f"(expected one of {sorted(_EXPERIMENT_NAMES)})", path)
    duration = float(take("duration", cfg.duration))
    if duration < 0:
        raise ConfigError("field 'duration': must be non-negative", path)
    seed = int(take("seed", cfg.seed))
    out_dir = str(take("out_dir", cfg.out_dir))

    gain_keys = {k for k in kv if k.startswith("gain.")}
    gains = cfg.gains
    if gain_keys:
        merged = gains_to_kv(cfg.gains) | {k: kv[k] for k in gain_keys}
        gains = gains_from_kv(merged, path)
        known |= gain_keys

    spring_keys = {k for k in kv if k.startswith("spring.")}
    springs = cfg.springs
    if spring_keys:
        springs = springs_from_kv({k: kv[k] for k in spring_keys}, path)
        known |= spring_keys

    weights = cfg.weights
    w_updates = {}
    for i in range(1, 8):
        key = f"weight.w{i}"
        if key in kv:
            w_updates[f"w{i}"] = float(kv[key])
            known.add(key)
    if w_updates:
        weights = replace(weights, **w_updates)

    solver = cfg.solver
    s_updates = {}
    for name in ("rtol", "atol", "max_step", "min_step", "control_dt"):
        key = f"solver.{name}"
        if key in kv:
            s_updates[name] = float(kv[key])
            known.add(key)
    if s_updates:
        solver = replace(solver, **s_updates)

    unknown = set(kv) - known
    if unknown:
        raise ConfigError(f"unknown field {sorted(unknown)[0]!r}", path)

    out = ExperimentConfig(
        kind=_EXPERIMENT_NAMES[kind_name],
        duration=duration,
        seed=seed,
        gains=gains,
        reflex=cfg.reflex,
        springs=springs,
        weights=weights,
        metabolic=cfg.metabolic,
        solver=solver,
        init=cfg.init,
        out_dir=out_dir,
    )
    out.validate()
    return out


def load_experiment(path: str | Path) -> ExperimentConfig:
    return experiment_from_kv(load_kv(path), str(path))
