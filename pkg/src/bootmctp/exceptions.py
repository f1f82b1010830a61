"""Exception hierarchy shared across the package."""


class BootMctpError(Exception):
    """Base class for all package errors."""


class DataError(BootMctpError):
    """Input data is structurally invalid or statistically inadmissible."""


class ContrastError(BootMctpError):
    """A contrast matrix or contrast specification is invalid."""


class EstimationError(BootMctpError):
    """A numerical estimation step cannot be carried out on this data."""


class SimulationError(BootMctpError):
    """A simulation scenario is invalid or data generation failed."""


class ConfigError(BootMctpError):
    """Invalid runtime configuration (flags, config files, paths)."""
