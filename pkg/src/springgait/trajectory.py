"""Time-sampled simulation log with a fixed CSV schema.

One column per channel, time first. Floats are written with enough digits
to round-trip exactly, so writing and re-reading a log reproduces the
in-memory arrays bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .params import MUSCLES

Q_NAMES = ("trunk_x", "trunk_y", "trunk_pitch",
           "hip_l", "knee_l", "ankle_l", "hip_r", "knee_r", "ankle_r")
JOINT_NAMES = ("hip_l", "knee_l", "ankle_l", "hip_r", "knee_r", "ankle_r")


def _muscle_channels(prefix: str) -> list[str]:
    return [f"{prefix}_{m.lower()}_{s}" for s in ("l", "r") for m in MUSCLES]


def build_channels() -> list[str]:
    ch = ["t"]
    ch += [f"q_{n}" for n in Q_NAMES]
    ch += [f"qd_{n}" for n in Q_NAMES]
    ch += [f"tau_{n}" for n in JOINT_NAMES]
    ch += [f"stop_{n}" for n in JOINT_NAMES]
    ch += ["grf_x_l", "grf_y_l", "grf_x_r", "grf_y_r"]
    ch += ["heel_l", "ball_l", "heel_r", "ball_r"]
    ch += _muscle_channels("act")
    ch += _muscle_channels("f")
    ch += _muscle_channels("lce")
    ch += _muscle_channels("vce")
    ch += _muscle_channels("lmtu")
    ch += _muscle_channels("stim")
    ch += ["p_met", "com_y", "step_count", "phase_l", "phase_r"]
    return ch


CHANNELS = build_channels()
_INDEX = {name: i for i, name in enumerate(CHANNELS)}


@dataclass
class TrajectoryLog:
    """Fixed-rate channel matrix plus termination metadata."""

    data: np.ndarray                      # (n_samples, n_channels)
    termination: str | None = None        # None = ran to full duration
    t_termination: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != len(CHANNELS):
            raise ValueError(f"log must have {len(CHANNELS)} channels")

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    @property
    def t_end(self) -> float:
        return float(self.data[-1, 0]) if len(self) else 0.0

    def col(self, name: str) -> np.ndarray:
        try:
            return self.data[:, _INDEX[name]]
        except KeyError:
            raise KeyError(f"unknown channel {name!r}") from None

    def cols(self, *names: str) -> np.ndarray:
        return self.data[:, [_INDEX[n] for n in names]]

    def contact_flags(self, leg: str) -> np.ndarray:
        """Boolean stance flags (heel or ball contact) for leg 'l' or 'r'."""
        return (self.col(f"heel_{leg}") > 0.5) | (self.col(f"ball_{leg}") > 0.5)

    def write_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = ",".join(CHANNELS)
        np.savetxt(path, self.data, fmt="%.17g", delimiter=",",
                   header=header, comments="")

    @classmethod
    def read_csv(cls, path: str | Path) -> "TrajectoryLog":
        path = Path(path)
        with open(path, "r") as fh:
            header = fh.readline().strip()
        names = header.split(",")
        if names != CHANNELS:
            raise ValueError(
                f"channel schema mismatch in {path}: first differing channel "
                f"{next((a for a, b in zip(names, CHANNELS) if a != b), 'column count')!r}"
            )
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data=data)


class LogBuilder:
    """Preallocated row-wise writer used by the simulation loop."""

    def __init__(self, n_rows_hint: int):
        self._data = np.zeros((max(n_rows_hint, 1), len(CHANNELS)))
        self._n = 0

    def append(self, row: np.ndarray) -> None:
        if self._n >= self._data.shape[0]:
            self._data = np.vstack([self._data, np.zeros_like(self._data)])
        self._data[self._n] = row
        self._n += 1

    def finish(self, termination: str | None, t_termination: float | None,
               meta: dict | None = None) -> TrajectoryLog:
        return TrajectoryLog(self._data[:self._n].copy(), termination,
                             t_termination, meta or {})


def channel_index(name: str) -> int:
    return _INDEX[name]
