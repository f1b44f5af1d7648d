"""Single-shot detection statistics for classical and entangled illumination.

Four protocols are covered: classical illumination with one or two signal
photons (CI1, CI2) and idler-gated quantum illumination with one or two
signal photons (QI1, QI2). All quantities derive from the low-noise thermal
background model, in which each mode holds one background photon with
probability ``n_b``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Literal

from .errors import ClampWarning, InvalidParameterError, ValidityWarning, ZeroNoiseError

Which = Literal["false_alarm", "detection", "miss"]

LOW_NOISE_MAX_NB = 0.1


class Protocol(str, enum.Enum):
    CI1 = "ci1"
    CI2 = "ci2"
    QI1 = "qi1"
    QI2 = "qi2"

    @property
    def signal_photons(self) -> int:
        return 2 if self in (Protocol.CI2, Protocol.QI2) else 1

    @property
    def entangled(self) -> bool:
        return self in (Protocol.QI1, Protocol.QI2)

    @classmethod
    def parse(cls, value: "str | Protocol") -> "Protocol":
        if isinstance(value, Protocol):
            return value
        try:
            return cls(value.lower())
        except ValueError:
            raise InvalidParameterError(f"unknown protocol {value!r}") from None


ALL_PROTOCOLS = tuple(Protocol)


@dataclass(frozen=True)
class ChannelParams:
    """Background and target parameters.

    Attributes:
        n_b: Mean background photons per mode.
        m_modes: Time-bandwidth product M. Real-valued so that matched,
            non-integer mode counts can be evaluated.
        eta: Target reflectivity (equivalently round-trip transmissivity kappa).
    """

    n_b: float
    m_modes: float = 1.0
    eta: float = 0.0

    def __post_init__(self) -> None:
        for name in ("n_b", "m_modes", "eta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
        if self.n_b < 0:
            raise InvalidParameterError(f"n_b must be >= 0, got {self.n_b}")
        if self.m_modes < 1:
            raise InvalidParameterError(f"m_modes must be >= 1, got {self.m_modes}")
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidParameterError(f"eta must lie in [0, 1], got {self.eta}")

    @property
    def low_noise_valid(self) -> bool:
        # weight (1 - M*N_B) of the vacuum term must stay positive
        return self.n_b < LOW_NOISE_MAX_NB and self.m_modes * self.n_b < 1.0


@dataclass(frozen=True)
class DetectionProbabilities:
    p_false_alarm: float
    p_true_negative: float
    p_detect: float
    p_miss: float
    clamped: bool = False
    low_noise_valid: bool = True

    @property
    def flags(self) -> tuple[str, ...]:
        out = []
        if not self.low_noise_valid:
            out.append("low_noise_valid=false")
        if self.clamped:
            out.append("clamped")
        return tuple(out)


def single_photon_false_alarm(protocol: Protocol, params: ChannelParams) -> float:
    """Probability that one background photon registers as a (gated) count.

    Idler gating spreads the background over M modes, so only a fraction
    1/M of background counts coincide with the idler.
    """
    protocol = Protocol.parse(protocol)
    if protocol.entangled:
        return params.n_b / params.m_modes
    return params.n_b


def _raw_false_alarm(protocol: Protocol, params: ChannelParams) -> float:
    return single_photon_false_alarm(protocol, params) ** protocol.signal_photons


def _warn_validity(params: ChannelParams) -> None:
    if not params.low_noise_valid:
        warnings.warn(
            f"n_b={params.n_b}, M={params.m_modes} is outside the low-noise region "
            "(n_b < 0.1 and M*n_b < 1)",
            ValidityWarning,
            stacklevel=3,
        )


def _clamped_false_alarm(protocol: Protocol, params: ChannelParams) -> tuple[float, bool]:
    raw = _raw_false_alarm(protocol, params)
    if raw > 1.0:
        warnings.warn(
            f"{protocol.name} false-alarm formula gave {raw:.6g} > 1; clamped to 1",
            ClampWarning,
            stacklevel=3,
        )
        return 1.0, True
    return raw, False


def false_alarm_prob(protocol: Protocol | str, params: ChannelParams) -> float:
    """N_B (CI1), N_B**2 (CI2), N_B/M (QI1) or (N_B/M)**2 (QI2), clamped to [0, 1]."""
    protocol = Protocol.parse(protocol)
    _warn_validity(params)
    return _clamped_false_alarm(protocol, params)[0]


def _detection_from_false_alarm(p0: float, eta: float) -> float:
    # (1 - eta) * p0 + eta; this grouping is exact at eta = 1 and keeps tiny p0
    # free of cancellation
    return min(1.0, max(p0, eta + p0 * (1.0 - eta)))


def detection_prob(protocol: Protocol | str, params: ChannelParams) -> float:
    """Probability of a positive detection with the target present."""
    protocol = Protocol.parse(protocol)
    _warn_validity(params)
    p0, _ = _clamped_false_alarm(protocol, params)
    return _detection_from_false_alarm(p0, params.eta)


def miss_prob(protocol: Protocol | str, params: ChannelParams) -> float:
    protocol = Protocol.parse(protocol)
    _warn_validity(params)
    p0, _ = _clamped_false_alarm(protocol, params)
    return 1.0 - _detection_from_false_alarm(p0, params.eta)


def detection_probabilities(protocol: Protocol | str, params: ChannelParams) -> DetectionProbabilities:
    """All four single-shot outcome probabilities, with validity flags attached."""
    protocol = Protocol.parse(protocol)
    _warn_validity(params)
    p0, clamped = _clamped_false_alarm(protocol, params)
    p1 = _detection_from_false_alarm(p0, params.eta)
    return DetectionProbabilities(
        p_false_alarm=p0,
        p_true_negative=1.0 - p0,
        p_detect=p1,
        p_miss=1.0 - p1,
        clamped=clamped,
        low_noise_valid=params.low_noise_valid,
    )


def snr(protocol: Protocol | str, params: ChannelParams, *, zero_noise_limit: bool = False) -> float:
    """Ratio of detection to false-alarm probability.

    With ``n_b == 0`` the ratio is undefined and ZeroNoiseError is raised,
    unless ``zero_noise_limit`` is set: the limit is then ``inf`` for
    ``eta > 0`` and 1 for ``eta == 0``.
    """
    probs = detection_probabilities(protocol, params)
    if probs.p_false_alarm == 0.0:
        if not zero_noise_limit:
            raise ZeroNoiseError(
                f"SNR undefined for {Protocol.parse(protocol).name}: false-alarm probability is 0 (n_b=0)"
            )
        return math.inf if params.eta > 0 else 1.0
    return probs.p_detect / probs.p_false_alarm


def m_shot_prob(
    protocol: Protocol | str,
    params: ChannelParams,
    m: int,
    which: Which = "false_alarm",
) -> float:
    """Probability that all ``m`` independent shots share the outcome ``which``.

    This is the single-shot probability raised to the power ``m``. Note that
    for ``which="miss"`` the result is the probability of missing on every
    shot, so it is *not* ``1 - m_shot_prob(..., "detection")``.
    """
    if int(m) != m or m < 1:
        raise InvalidParameterError(f"m must be a positive integer, got {m!r}")
    probs = detection_probabilities(protocol, params)
    single = {
        "false_alarm": probs.p_false_alarm,
        "detection": probs.p_detect,
        "miss": probs.p_miss,
    }
    if which not in single:
        raise InvalidParameterError(f"which must be one of {sorted(single)}, got {which!r}")
    return single[which] ** int(m)
