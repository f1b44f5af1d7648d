"""Ziv-Zakai bound on the mean-square range-delay error."""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass

from .detection import ChannelParams, Protocol
from .errors import DegenerateEtaError, InvalidParameterError, InvalidProfileError, NegativeInputError
from .hypothesis import PriorPair, error_probability
from .quadrature import adaptive_simpson

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact SI value
NARROW_PRIOR_FRACTION = 0.1
QUAD_REL_TOL = 1e-10
QUAD_MAX_EVALUATIONS = 1_000_000

Profile = Callable[[float], float]


@dataclass(frozen=True)
class DelayWindow:
    """Prior interval ``[tau_min, tau_max]`` for the round-trip delay, in seconds."""

    tau_min: float
    tau_max: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tau_min) and math.isfinite(self.tau_max)):
            raise InvalidParameterError("delay window bounds must be finite")
        if self.tau_min < 0:
            raise InvalidParameterError(f"tau_min must be >= 0, got {self.tau_min}")
        if not self.tau_max > self.tau_min:
            raise InvalidParameterError(f"tau_max ({self.tau_max}) must exceed tau_min ({self.tau_min})")
        if not self.narrow_prior_ok:
            warnings.warn(
                f"delay window width {self.delta_tau:.3g} s is not small against its "
                f"center {self.center:.3g} s",
                UserWarning,
                stacklevel=3,
            )

    @classmethod
    def from_ranges(cls, r_min: float, r_max: float) -> "DelayWindow":
        return cls(range_to_delay(r_min), range_to_delay(r_max))

    @property
    def delta_tau(self) -> float:
        return self.tau_max - self.tau_min

    @property
    def center(self) -> float:
        return 0.5 * (self.tau_min + self.tau_max)

    @property
    def narrow_prior_ok(self) -> bool:
        return self.delta_tau <= NARROW_PRIOR_FRACTION * self.center


@dataclass(frozen=True)
class ZzbResult:
    mean_square_error: float
    rms_error: float
    protocol: Protocol
    quadrature_abs_error_estimate: float
    p_err: float | None = None
    closed_form: bool = True


def delay_to_range(tau: float) -> float:
    if tau < 0:
        raise NegativeInputError(f"delay must be >= 0, got {tau}")
    return SPEED_OF_LIGHT * tau / 2.0


def range_to_delay(range_m: float) -> float:
    if range_m < 0:
        raise NegativeInputError(f"range must be >= 0, got {range_m}")
    return 2.0 * range_m / SPEED_OF_LIGHT


def zzb_kernel_integral(delta_tau: float) -> float:
    """Closed form of the integral of t * (1 - t / delta_tau) over [0, delta_tau]."""
    return delta_tau * delta_tau / 6.0


def _check_probability(value: float, where: float) -> float:
    if not (0.0 <= value <= 1.0):
        raise InvalidProfileError(f"error-probability profile returned {value!r} at tau'={where!r}")
    return value


def zzb(
    protocol: Protocol | str,
    params: ChannelParams,
    window: DelayWindow,
    p_err_profile: Profile | float | None = None,
    *,
    shots: int = 1,
    quadrature: bool = False,
) -> ZzbResult:
    """Ziv-Zakai bound on the mean-square delay error.

    ``p_err_profile`` is the error probability as a function of the delay
    offset ``tau'`` in ``[0, delta_tau]``. It may be a callable, a constant,
    or None, in which case the protocol's symmetric-prior error probability
    (over ``shots`` shots) is used as a constant.

    Constant profiles use the closed form ``c * delta_tau**2 / 6`` unless
    ``quadrature`` is set. Callables are integrated by adaptive Simpson and
    must be safe to call repeatedly; evaluation is serial.
    """
    protocol = Protocol.parse(protocol)
    if p_err_profile is None:
        p_err_profile = error_probability(
            protocol, params, PriorPair(), shots=shots, use_closed_form=True
        ).p_err
    dt = window.delta_tau

    if not callable(p_err_profile):
        c = _check_probability(float(p_err_profile), 0.0)
        if not quadrature:
            mse = c * zzb_kernel_integral(dt)
            return ZzbResult(mse, math.sqrt(mse), protocol, 0.0, c, True)
        profile: Profile = lambda _t: c  # noqa: E731
        constant: float | None = c
    else:
        profile = p_err_profile
        constant = None

    def integrand(t: float) -> float:
        return t * (1.0 - t / dt) * _check_probability(profile(t), t)

    res = adaptive_simpson(integrand, 0.0, dt, rel_tol=QUAD_REL_TOL, max_evaluations=QUAD_MAX_EVALUATIONS)
    mse = max(res.value, 0.0)
    return ZzbResult(mse, math.sqrt(mse), protocol, res.abs_error, constant, False)


def zzb_ratio(params: ChannelParams, window: DelayWindow, *, quadrature: bool = False) -> float:
    """Bound for QI2 divided by the bound for QI1 with constant error profiles."""
    if params.eta == 0.0:
        raise DegenerateEtaError("ZZB ratio is identically 1 at eta = 0")
    two = zzb(Protocol.QI2, params, window, quadrature=quadrature)
    one = zzb(Protocol.QI1, params, window, quadrature=quadrature)
    return two.mean_square_error / one.mean_square_error
