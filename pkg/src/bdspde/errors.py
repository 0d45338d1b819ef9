"""Exception types raised across the package."""


class BDSPDEError(Exception):
    """Base class for all package errors."""


class GridError(BDSPDEError, ValueError):
    pass


class DimensionError(BDSPDEError, ValueError):
    pass


class DomainError(BDSPDEError, ValueError):
    """An argument lies outside the domain of the operation (negative time, p < 1, ...)."""


class PreconditionError(BDSPDEError, ValueError):
    pass


class PositivityError(BDSPDEError):
    """Raised by the ``reject`` positivity policy."""

    def __init__(self, species, index, value):
        self.species = species
        self.index = index
        self.value = value
        super().__init__(
            f"negative {species} density {value:.3e} at grid index {index}"
        )


class BlowUpError(BDSPDEError):
    """Non-finite state encountered during time stepping."""

    def __init__(self, step, trajectory_id=None):
        self.step = step
        self.trajectory_id = trajectory_id
        where = f" (trajectory {trajectory_id})" if trajectory_id is not None else ""
        super().__init__(f"non-finite state at step {step}{where}")


class FitError(BDSPDEError, ValueError):
    pass


class OracleError(BDSPDEError):
    pass


class ConfigError(BDSPDEError, ValueError):
    """Configuration rejected; carries the offending key and line when known."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"{key}: "
        super().__init__(prefix + message)
