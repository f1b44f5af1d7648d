"""Bayesian error probability for target present/absent discrimination."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .detection import ChannelParams, Protocol, detection_probabilities
from .errors import DegenerateEtaError, InvalidParameterError, UnsupportedProtocolError

PRIOR_SUM_TOL = 1e-12


@dataclass(frozen=True)
class PriorPair:
    """Prior probabilities of target absent (``p0``) and present (``p1``)."""

    p0: float = 0.5
    p1: float = 0.5

    def __post_init__(self) -> None:
        for name in ("p0", "p1"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.0 <= value <= 1.0):
                raise InvalidParameterError(f"prior {name} must lie in [0, 1], got {value!r}")
        if abs(self.p0 + self.p1 - 1.0) > PRIOR_SUM_TOL:
            raise InvalidParameterError(f"priors must sum to 1, got {self.p0} + {self.p1}")

    @classmethod
    def from_p0(cls, p0: float) -> "PriorPair":
        return cls(p0, 1.0 - p0)

    @property
    def symmetric(self) -> bool:
        return self.p0 == self.p1


@dataclass(frozen=True)
class ErrorReport:
    p_err: float
    protocol: Protocol
    priors: PriorPair
    closed_form_used: bool = False
    upper_bound: bool = False
    shots: int = 1


def error_probability(
    protocol: Protocol | str,
    params: ChannelParams,
    priors: PriorPair | None = None,
    *,
    shots: int = 1,
    use_closed_form: bool = False,
) -> ErrorReport:
    """P_err = p0 * P(decide H1 | H0) + p1 * P(decide H0 | H1).

    The conditionals are the false-alarm and miss probabilities of the
    coincidence rule. For ``shots > 1`` both are raised to the power
    ``shots`` (all-shots false alarm, all-shots miss).

    With ``use_closed_form`` and symmetric priors, QI1/QI2 are evaluated
    through :func:`closed_form_error` instead; the two agree to rounding.
    """
    protocol = Protocol.parse(protocol)
    priors = priors or PriorPair()
    if int(shots) != shots or shots < 1:
        raise InvalidParameterError(f"shots must be a positive integer, got {shots!r}")
    upper = protocol is Protocol.QI2
    if use_closed_form and shots == 1 and priors.symmetric and protocol.entangled:
        return ErrorReport(closed_form_error(protocol, params), protocol, priors, True, upper, 1)
    probs = detection_probabilities(protocol, params)
    p_err = priors.p0 * probs.p_false_alarm**shots + priors.p1 * probs.p_miss**shots
    return ErrorReport(p_err, protocol, priors, False, upper, int(shots))


def closed_form_error(protocol: Protocol | str, params: ChannelParams) -> float:
    """Symmetric-prior error, 0.5 * (1 + eta * g - eta) with g the gated false-alarm.

    For QI2 the value is an upper bound on the optimal-measurement error,
    since it is tied to the coincidence measurement.
    """
    protocol = Protocol.parse(protocol)
    if not protocol.entangled:
        raise UnsupportedProtocolError(f"no closed-form error probability for {protocol.name}")
    gate = params.n_b / params.m_modes
    g = gate if protocol is Protocol.QI1 else gate * gate
    eta = params.eta
    # grouped so that eta = 1 leaves eta * g free of cancellation
    return 0.5 * ((1.0 - eta) + eta * g)


def error_ratio(params: ChannelParams) -> float:
    """Error of QI2 relative to QI1; strictly below 1 whenever eta > 0 and 0 < N_B/M < 1."""
    if params.eta == 0.0:
        raise DegenerateEtaError("error ratio is identically 1 at eta = 0")
    g = params.n_b / params.m_modes
    eta = params.eta
    denominator = 1.0 - eta + eta * g
    # (1 - eta + eta g^2) / denominator; near 1 it is written as 1 - deficit so
    # that tiny g does not round the ratio to exactly 1
    deficit = eta * g * (1.0 - g) / denominator
    if deficit < 0.5:
        return 1.0 - deficit
    return (1.0 - eta + eta * g * g) / denominator
