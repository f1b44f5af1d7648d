"""Mode-count matching between QI1 and QI2 and the resulting integration times.

The bandwidth is treated as a mode rate (modes per second), so that the
time-bandwidth product is ``M = t * bandwidth`` for both protocols.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidParameterError, SubUnityModesError

PROSE_NOTE = (
    "t2/t1 = sqrt(n_b/(t1*bandwidth)); with n_b dropped and t1=100 s, bandwidth=1e6 Hz "
    "this ratio is 1e-4 while t2 itself is 1e-2 s, the order of magnitude quoted in prose"
)


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not (math.isfinite(value) and value > 0):
            raise InvalidParameterError(f"{name} must be a positive finite number, got {value!r}")


def matched_modes(m_prime: float, n_b: float) -> float:
    """Mode count for QI2 that gives the same SNR as QI1 with ``m_prime`` modes."""
    _require_positive(m_prime=m_prime, n_b=n_b)
    m = math.sqrt(n_b * m_prime)
    if m < 1.0:
        raise SubUnityModesError(f"matched mode count sqrt({n_b} * {m_prime}) = {m:.6g} is below one mode")
    return m


def integration_time_2p(t1: float, bandwidth: float, n_b: float) -> float:
    _require_positive(t1=t1, bandwidth=bandwidth, n_b=n_b)
    return math.sqrt(n_b * t1 / bandwidth)


def time_reduction_factor(t1: float, bandwidth: float, n_b: float) -> float:
    _require_positive(t1=t1, bandwidth=bandwidth, n_b=n_b)
    return math.sqrt(n_b / (t1 * bandwidth))


def snr_qi1_kappa(m_modes: float, n_b: float, kappa: float) -> float:
    # (M/n_b) * ((1 - kappa) * n_b/M + kappa), distributed
    return (1.0 - kappa) + kappa * (m_modes / n_b)


def snr_qi2_kappa(m_modes: float, n_b: float, kappa: float) -> float:
    # (M/n_b)**2 * ((1 - kappa) * (n_b/M)**2 + kappa), distributed
    ratio = m_modes / n_b
    return (1.0 - kappa) + kappa * ratio * ratio


def snr_match_residual(m_prime: float, n_b: float, kappa: float) -> float:
    """SNR of QI2 at the matched mode count minus SNR of QI1 at ``m_prime``.

    The two agree identically, so the result is pure rounding residue.
    """
    if not 0.0 <= kappa <= 1.0:
        raise InvalidParameterError(f"kappa must lie in [0, 1], got {kappa}")
    m = matched_modes(m_prime, n_b)
    return snr_qi2_kappa(m, n_b, kappa) - snr_qi1_kappa(m_prime, n_b, kappa)


@dataclass(frozen=True)
class TimeBudget:
    t1: float
    t2: float
    bandwidth: float
    n_b: float
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        _require_positive(t1=self.t1, t2=self.t2, bandwidth=self.bandwidth)
        if self.n_b < 0:
            raise InvalidParameterError(f"n_b must be >= 0, got {self.n_b}")

    @property
    def reduction_factor(self) -> float:
        return self.t2 / self.t1

    @property
    def modes_1p(self) -> float:
        return self.t1 * self.bandwidth

    @property
    def modes_2p(self) -> float:
        return self.t2 * self.bandwidth


def time_budget(t1: float, bandwidth: float, n_b: float) -> TimeBudget:
    """Integration time QI2 needs to match the SNR that QI1 reaches in ``t1``."""
    t2 = integration_time_2p(t1, bandwidth, n_b)
    return TimeBudget(t1=t1, t2=t2, bandwidth=bandwidth, n_b=n_b, notes=(PROSE_NOTE,))
