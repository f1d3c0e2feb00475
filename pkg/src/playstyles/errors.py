"""Exception hierarchy shared across pipeline stages.

Each class carries the process exit code the CLI maps it to.
"""


class PipelineError(Exception):
    """Base class for expected stage failures."""

    exit_code = 1


class ConfigError(PipelineError):
    """Invalid configuration value or parameter combination."""

    exit_code = 2


class DataError(PipelineError):
    """Input data cannot be processed as requested."""

    exit_code = 3


class NumericError(PipelineError):
    """A numerical routine failed to produce a usable result."""

    exit_code = 4
