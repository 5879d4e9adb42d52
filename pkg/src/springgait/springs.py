"""Linear spring replacement of the plantar flexor MTUs.

A replaced MTU is substituted by a unilateral linear spring acting along
the same path: F = k (l - l0) when stretched and engaged, zero otherwise.
Engagement latches when heel and ball are both on the ground, survives
heel-off while any contact persists, and drops the force to zero the
instant the foot leaves the ground. Replacements activate only after the
configured step count so the model starts in the reference configuration.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class DegenerateTraceError(ValueError):
    """Force-length trace has no usable length spread."""


class ExperimentKind(enum.Enum):
    NMS_REF = "nms_ref"
    NMS_1 = "nms_1"      # GAS replaced
    NMS_2 = "nms_2"      # SOL replaced
    NMS_3 = "nms_3"      # GAS and SOL replaced
    ROBOT = "robot"

    @property
    def replaced(self) -> tuple[str, ...]:
        return {
            ExperimentKind.NMS_REF: (),
            ExperimentKind.NMS_1: ("GAS",),
            ExperimentKind.NMS_2: ("SOL",),
            ExperimentKind.NMS_3: ("GAS", "SOL"),
            ExperimentKind.ROBOT: (),
        }[self]


@dataclass(frozen=True)
class SpringConfig:
    """Fitted replacement spring for one MTU."""

    target: str                 # "GAS" or "SOL"
    k_n_per_mm: float           # stiffness, N/mm (multiple of 10 after fitting)
    l0: float                   # resting length, m
    enabled_from_step: int = 3

    @property
    def k(self) -> float:
        """Stiffness in N/m."""
        return self.k_n_per_mm * 1000.0

    def validate(self) -> None:
        if self.k_n_per_mm <= 0 or self.l0 <= 0:
            raise ValueError("spring stiffness and resting length must be positive")


def round_to_ten(x: float) -> float:
    """Round half-up to the nearest multiple of ten."""
    return math.floor(x / 10.0 + 0.5) * 10.0


def ascending_segment(forces: np.ndarray, smooth_window: int = 21) -> tuple[int, int]:
    """Indices [start, end] of the longest monotonically rising force run.

    Force and length samples at 1 kHz carry small transients, so the run is
    found on a moving-average of the force; the same window must then be
    applied to the lengths so that affine force-length relations survive
    smoothing exactly.
    """
    n = len(forces)
    if n < 2:
        raise DegenerateTraceError("need at least two samples")
    f = smooth(forces, smooth_window)
    rising = np.diff(f) > 0.0
    best = (0, 0)
    start = 0
    for i, r in enumerate(rising):
        if not r:
            start = i + 1
        elif i + 1 - start > best[1] - best[0]:
            best = (start, i + 1)
    return best


def smooth(x: np.ndarray, window: int) -> np.ndarray:
    window = max(1, min(window, len(x)))
    if window == 1:
        return np.asarray(x, dtype=float)
    kernel = np.ones(window) / window
    pad = window // 2
    xp = np.pad(np.asarray(x, dtype=float), pad, mode="edge")
    return np.convolve(xp, kernel, mode="valid")[: len(x)]


def fit_spring(
    lengths: np.ndarray,
    forces: np.ndarray,
    target: str,
    enabled_from_step: int = 3,
    smooth_window: int = 21,
) -> SpringConfig:
    """Fit a linear spring to the ascending stance force-length slope.

    The raw stiffness is the secant between the minimum-force and
    maximum-force points of the ascending slope, rounded half-up to the
    next full ten N/mm; the resting length follows from the maximum-force
    point and the rounded stiffness.
    """
    lengths = np.asarray(lengths, dtype=float)
    forces = np.asarray(forces, dtype=float)
    if lengths.shape != forces.shape or lengths.ndim != 1:
        raise ValueError("lengths and forces must be equal-length 1D arrays")
    if len(lengths) < 2:
        raise DegenerateTraceError("need at least two samples")
    i0, i1 = ascending_segment(forces, smooth_window)
    if i1 <= i0:
        raise DegenerateTraceError("no ascending force segment found")
    ls = smooth(lengths, min(smooth_window, len(lengths)))
    fs = smooth(forces, min(smooth_window, len(forces)))
    l_lo, f_lo = ls[i0], fs[i0]
    l_hi, f_hi = ls[i1], fs[i1]
    dl = l_hi - l_lo
    if abs(dl) < 1e-12:
        raise DegenerateTraceError("zero length spread on the ascending slope")
    k_raw = (f_hi - f_lo) / dl  # N/m
    k_n_per_mm = round_to_ten(k_raw / 1000.0)
    if k_n_per_mm <= 0:
        raise DegenerateTraceError("non-positive fitted stiffness")
    l0 = l_hi - f_hi / (k_n_per_mm * 1000.0)
    return SpringConfig(target=target, k_n_per_mm=k_n_per_mm, l0=l0,
                        enabled_from_step=enabled_from_step)


def spring_force(length: float, cfg: SpringConfig, engaged: bool) -> float:
    """Unilateral spring force: cables cannot push and are slack when off."""
    if not engaged:
        return 0.0
    return max(0.0, cfg.k * (length - cfg.l0))


class EngagementLatch:
    """Per-leg loading rule of a replacement spring.

    Loading starts once heel and ball are both on the ground; it persists
    through heel-off while any contact remains and switches off the instant
    the whole foot leaves the ground.
    """

    def __init__(self) -> None:
        self.engaged = False

    def update(self, heel: bool, ball: bool) -> bool:
        if heel and ball:
            self.engaged = True
        elif not heel and not ball:
            self.engaged = False
        return self.engaged


@dataclass
class ReplacementState:
    """Runtime state of the spring replacements of one experiment."""

    kind: ExperimentKind
    configs: dict[str, SpringConfig]
    latches: dict[str, list[EngagementLatch]]
    active: bool = False

    @classmethod
    def for_experiment(cls, kind: ExperimentKind,
                       configs: dict[str, SpringConfig]) -> "ReplacementState":
        targets = kind.replaced
        for t in targets:
            if t not in configs:
                raise KeyError(f"experiment {kind.value} needs a spring config for {t}")
            configs[t].validate()
        return cls(
            kind=kind,
            configs={t: configs[t] for t in targets},
            latches={t: [EngagementLatch(), EngagementLatch()] for t in targets},
        )

    def enabled_from_step(self) -> int:
        if not self.configs:
            return 0
        return max(c.enabled_from_step for c in self.configs.values())

    def update_schedule(self, step_count: int) -> None:
        if self.configs and not self.active:
            self.active = step_count >= self.enabled_from_step()

    def update_engagement(self, contact_flags: np.ndarray) -> None:
        """contact_flags: (heel_l, ball_l, heel_r, ball_r) booleans."""
        for latches in self.latches.values():
            latches[0].update(bool(contact_flags[0]), bool(contact_flags[1]))
            latches[1].update(bool(contact_flags[2]), bool(contact_flags[3]))

    def replaces(self, muscle: str, when_active: bool = True) -> bool:
        return muscle in self.configs and (self.active or not when_active)

    def force(self, muscle: str, leg: int, l_mtu: float) -> float:
        if not self.active or muscle not in self.configs:
            return 0.0
        return spring_force(l_mtu, self.configs[muscle],
                            self.latches[muscle][leg].engaged)
