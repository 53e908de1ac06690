"""Exception types shared across the package."""


class DataError(Exception):
    """Malformed, inconsistent, or degenerate input data."""


class ConfigError(Exception):
    """Invalid configuration file or option value."""


class DivergenceError(RuntimeError):
    """Optimization produced a non-finite objective or parameter.

    Carries the last finite parameters and the pass/epoch where the
    divergence occurred, when known.
    """

    def __init__(self, message="divergence", *, params=None, pass_index=None,
                 epoch_index=None):
        super().__init__(message)
        self.params = params
        self.pass_index = pass_index
        self.epoch_index = epoch_index
