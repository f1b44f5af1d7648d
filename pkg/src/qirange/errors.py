"""Exception and warning types shared across the package."""


class QIRError(Exception):
    """Base class for domain errors (CLI exit code 3)."""


class InvalidParameterError(QIRError, ValueError):
    pass


class ZeroNoiseError(QIRError):
    """SNR requested with zero false-alarm probability."""


class UnsupportedProtocolError(QIRError):
    pass


class DegenerateEtaError(QIRError):
    """An enhancement ratio was requested at eta == 0, where it is identically 1."""


class InvalidProfileError(QIRError):
    pass


class NegativeInputError(QIRError, ValueError):
    pass


class SubUnityModesError(QIRError):
    pass


class ValidityWarning(UserWarning):
    """Parameters fall outside the low-noise region where the formulas hold."""


class ClampWarning(UserWarning):
    """A raw probability formula exceeded 1 and was clamped."""
