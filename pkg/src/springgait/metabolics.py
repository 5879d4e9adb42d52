"""Per-muscle metabolic power model.

Structure: a basal rate plus, per muscle, activation/maintenance heat,
shortening/lengthening heat and the cost of positive mechanical work:

    P = basal + sum_m [ h_am(a) + h_sl(a, v_ce) + max(0, F (-v_ce)) / eff ] / m_body

Heats scale with the muscle mass estimated from F_max and l_opt through a
nominal specific tension and tissue density. The coefficients are
calibrated so the reference gait lands at the published whole-body rate;
they are configuration, not physiology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetabolicCoefficients:
    basal_w_per_kg: float = 1.2       # W per kg body mass
    act_maint_coeff: float = 40.0     # W per kg muscle at full activation
    act_exponent: float = 1.5
    shortening_coeff: float = 12.0    # W per kg muscle per l_opt/s shortening
    lengthening_coeff: float = 4.0    # W per kg muscle per l_opt/s lengthening
    work_efficiency: float = 0.45     # positive CE work divided by this
    specific_tension: float = 25e4    # N/m^2
    density: float = 1059.7           # kg/m^3

    def validate(self) -> None:
        vals = (self.basal_w_per_kg, self.act_maint_coeff, self.shortening_coeff,
                self.lengthening_coeff, self.work_efficiency)
        if any(v < 0 for v in vals) or self.work_efficiency == 0:
            raise ValueError("metabolic coefficients must be non-negative, efficiency positive")


def muscle_masses(f_max: np.ndarray, l_opt: np.ndarray,
                  coeff: MetabolicCoefficients) -> np.ndarray:
    return np.asarray(f_max) * np.asarray(l_opt) * coeff.density / coeff.specific_tension


def metabolic_rate(
    activation: np.ndarray,
    v_ce: np.ndarray,
    force: np.ndarray,
    f_max: np.ndarray,
    l_opt: np.ndarray,
    body_mass: float,
    coeff: MetabolicCoefficients = MetabolicCoefficients(),
    include: np.ndarray | None = None,
) -> float:
    """Whole-body metabolic rate in W per kg body mass.

    v_ce is the CE velocity in m/s (shortening negative). include masks
    muscles that still consume energy; spring-replaced MTUs are excluded.
    """
    a = np.clip(np.asarray(activation, dtype=float), 0.0, 1.0)
    v = np.asarray(v_ce, dtype=float)
    f = np.asarray(force, dtype=float)
    m_m = muscle_masses(f_max, l_opt, coeff)
    v_hat = v / np.asarray(l_opt)

    h_am = coeff.act_maint_coeff * a ** coeff.act_exponent
    h_sl = np.where(v_hat < 0.0,
                    coeff.shortening_coeff * (-v_hat) * a,
                    coeff.lengthening_coeff * v_hat * a)
    per_muscle = m_m * (h_am + h_sl) + np.maximum(0.0, f * (-v)) / coeff.work_efficiency
    if include is not None:
        per_muscle = per_muscle * np.asarray(include, dtype=float)
    return coeff.basal_w_per_kg + float(per_muscle.sum()) / body_mass


def stride_energy(times: np.ndarray, rates: np.ndarray,
                  i0: int, i1: int) -> float:
    """Time-averaged metabolic rate over a stride window [i0, i1] (W/kg).

    Right Riemann average over the log samples, matching the cost function
    discretization.
    """
    times = np.asarray(times, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if not (0 <= i0 < i1 < len(times)):
        raise IndexError("stride bounds outside the log")
    dt = np.diff(times[i0:i1 + 1])
    total = float(np.sum(rates[i0 + 1:i1 + 1] * dt))
    span = times[i1] - times[i0]
    return total / span
