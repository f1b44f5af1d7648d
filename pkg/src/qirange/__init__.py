"""Detection statistics, error probabilities and Ziv-Zakai delay bounds for
one- and two-photon-signal illumination protocols, with a Monte Carlo oracle."""

__version__ = "0.1.0"

from .detection import (
    ALL_PROTOCOLS,
    ChannelParams,
    DetectionProbabilities,
    Protocol,
    detection_prob,
    detection_probabilities,
    false_alarm_prob,
    m_shot_prob,
    miss_prob,
    snr,
)
from .errors import (
    ClampWarning,
    DegenerateEtaError,
    InvalidParameterError,
    InvalidProfileError,
    NegativeInputError,
    QIRError,
    SubUnityModesError,
    UnsupportedProtocolError,
    ValidityWarning,
    ZeroNoiseError,
)
from .hypothesis import ErrorReport, PriorPair, closed_form_error, error_probability, error_ratio
from .integration_time import (
    TimeBudget,
    integration_time_2p,
    matched_modes,
    snr_match_residual,
    time_budget,
    time_reduction_factor,
)
from .range_delay import (
    SPEED_OF_LIGHT,
    DelayWindow,
    ZzbResult,
    delay_to_range,
    range_to_delay,
    zzb,
    zzb_ratio,
)
