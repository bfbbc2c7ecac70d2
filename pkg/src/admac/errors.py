"""Exception hierarchy mapped to CLI exit codes."""


class AdmacError(Exception):
    """Base class for all package errors."""


class ConfigError(AdmacError):
    """Invalid parameters, config file, or CLI usage (exit code 1)."""


class OracleSizeError(ConfigError):
    """Explicit-chain state count too large; use the closed form instead."""


class InfeasibleModelError(AdmacError):
    """Model cannot be built or solved at these parameters (exit code 2)."""


class OracleError(AdmacError):
    """Stationary solve of the explicit chain failed."""


class InternalConsistencyError(AdmacError):
    """A quantity violated a structural bound that valid inputs cannot."""


class ValidationError(AdmacError):
    """Closed form vs oracle validation exceeded tolerance (exit code 3)."""
