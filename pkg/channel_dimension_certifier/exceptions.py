class CertifierError(Exception):
    pass


class InvalidArgumentError(CertifierError, ValueError):
    pass


class UnsupportedDimensionError(InvalidArgumentError):
    pass


class InvalidChannelError(InvalidArgumentError):
    pass


class ConfigError(CertifierError):
    pass


class NumericFailureError(CertifierError):
    pass


class UnguidedModeError(NumericFailureError):
    pass


class OptimizationFailureError(NumericFailureError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual
