"""Adaptive explicit integration with zero-crossing event location.

Embedded Bogacki-Shampine 3(2) pair with step-size control against mixed
absolute/relative tolerances, cubic Hermite dense output for locating sign
changes of event functions, and a chattering guard that aborts after too
many consecutive event-truncated steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

MAX_STEP_DEFAULT = 0.1
MIN_STEP_DEFAULT = 1e-9
RTOL_DEFAULT = 1e-3
ATOL_DEFAULT = 1e-4
MAX_CONSECUTIVE_CROSSINGS = 30


class IntegrationError(RuntimeError):
    """Step size underflow; carries the failure time."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t={t:.9f} s")
        self.t = t


class ChatteringError(RuntimeError):
    """Too many consecutive zero crossings without a clean step."""

    def __init__(self, t: float, count: int):
        super().__init__(f"{count} consecutive zero crossings at t={t:.9f} s")
        self.t = t


@dataclass(frozen=True)
class Event:
    """A located zero crossing of one event function."""

    t: float
    index: int
    direction: int  # +1 rising, -1 falling
    y: np.ndarray


@dataclass
class StepResult:
    t: float
    y: np.ndarray
    h_accepted: float
    events: list[Event] = field(default_factory=list)


def _hermite(t0, y0, f0, t1, y1, f1, t):
    """Cubic Hermite interpolant on [t0, t1]."""
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


class StepIntegrator:
    """Stateful stepper: keeps the adapted step size and the chattering count.

    rhs(t, y) -> ydot. event_fns is a sequence of scalar functions g(t, y);
    a step is truncated at the first sign change found, the crossing located
    by bisection on the dense output to within min_step.
    """

    def __init__(
        self,
        rhs: Callable[[float, np.ndarray], np.ndarray],
        rtol: float = RTOL_DEFAULT,
        atol: float = ATOL_DEFAULT,
        max_step: float = MAX_STEP_DEFAULT,
        min_step: float = MIN_STEP_DEFAULT,
        event_fns: Sequence[Callable[[float, np.ndarray], float]] = (),
        max_crossings: int = MAX_CONSECUTIVE_CROSSINGS,
    ):
        if rtol <= 0 or atol <= 0:
            raise ValueError("tolerances must be positive")
        self.rhs = rhs
        self.rtol = rtol
        self.atol = atol
        self.max_step = max_step
        self.min_step = min_step
        self.event_fns = list(event_fns)
        self.max_crossings = max_crossings
        self.h_next: float | None = None
        self._consecutive_crossings = 0
        self._f0: np.ndarray | None = None  # FSAL cache

    def reset_step_size(self) -> None:
        self.h_next = None
        self._f0 = None

    def _error_norm(self, err: np.ndarray, y0: np.ndarray, y1: np.ndarray) -> float:
        scale = self.atol + self.rtol * np.maximum(np.abs(y0), np.abs(y1))
        return float(np.sqrt(np.mean((err / scale) ** 2)))

    def step(self, t: float, y: np.ndarray, t_limit: float) -> StepResult:
        """Advance one accepted step, never past t_limit."""
        span = t_limit - t
        if span <= 0:
            return StepResult(t, y.copy(), 0.0)
        if self._f0 is None:
            self._f0 = self.rhs(t, y)
        f0 = self._f0
        h = self.h_next if self.h_next is not None else min(self.max_step, span)
        h = min(h, self.max_step, span)

        while True:
            if h < self.min_step:
                raise IntegrationError("step size underflow", t)
            k1 = f0
            k2 = self.rhs(t + 0.5 * h, y + 0.5 * h * k1)
            k3 = self.rhs(t + 0.75 * h, y + 0.75 * h * k2)
            y1 = y + h * (2.0 * k1 + 3.0 * k2 + 4.0 * k3) / 9.0
            t1 = t + h
            k4 = self.rhs(t1, y1)
            err = h * (-5.0 * k1 / 72.0 + k2 / 12.0 + k3 / 9.0 - k4 / 8.0)
            enorm = self._error_norm(err, y, y1)
            if enorm <= 1.0 or h <= self.min_step:
                break
            h = max(self.min_step, h * max(0.2, 0.9 * enorm ** (-1.0 / 3.0)))

        grow = 5.0 if enorm == 0.0 else min(5.0, max(0.2, 0.9 * enorm ** (-1.0 / 3.0)))
        self.h_next = min(self.max_step, h * grow)

        event = self._locate_event(t, y, f0, t1, y1, k4)
        if event is None:
            self._consecutive_crossings = 0
            self._f0 = k4
            return StepResult(t1, y1, h)

        self._consecutive_crossings += 1
        if self._consecutive_crossings > self.max_crossings:
            raise ChatteringError(event.t, self._consecutive_crossings)
        self._f0 = None  # state jumped to the event point, FSAL invalid
        return StepResult(event.t, event.y.copy(), event.t - t, [event])

    def _locate_event(self, t0, y0, f0, t1, y1, f1) -> Event | None:
        first: Event | None = None
        for idx, g in enumerate(self.event_fns):
            g0 = g(t0, y0)
            g1 = g(t1, y1)
            if g0 == 0.0:
                continue  # crossing already reported at the step start
            if g0 * g1 > 0.0:
                continue
            lo, hi = t0, t1
            glo = g0
            while hi - lo > max(self.min_step, 1e-14 * max(abs(t0), 1.0)):
                mid = 0.5 * (lo + hi)
                ym = _hermite(t0, y0, f0, t1, y1, f1, mid)
                gm = g(mid, ym)
                if glo * gm <= 0.0:
                    hi = mid
                else:
                    lo, glo = mid, gm
            te = hi
            ye = _hermite(t0, y0, f0, t1, y1, f1, te)
            ev = Event(te, idx, 1 if g1 > g0 else -1, ye)
            if first is None or ev.t < first.t:
                first = ev
        return first


def integrate_to(
    rhs,
    t0: float,
    y0: np.ndarray,
    t1: float,
    rtol: float = RTOL_DEFAULT,
    atol: float = ATOL_DEFAULT,
    max_step: float = MAX_STEP_DEFAULT,
    min_step: float = MIN_STEP_DEFAULT,
    event_fns: Sequence[Callable[[float, np.ndarray], float]] = (),
) -> tuple[float, np.ndarray, list[Event]]:
    """Integrate from t0 to t1, collecting events along the way."""
    stepper = StepIntegrator(rhs, rtol, atol, max_step, min_step, event_fns)
    t, y = t0, np.asarray(y0, dtype=float).copy()
    events: list[Event] = []
    while t < t1 - 1e-15:
        res = stepper.step(t, y, t1)
        t, y = res.t, res.y
        events.extend(res.events)
    return t, y, events
