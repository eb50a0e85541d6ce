"""Custom exceptions and warnings for waveguide-bh."""

from functools import wraps
from typing import Any, Callable, Optional


class WaveguideError(Exception):
    """Base exception for waveguide-bh."""

    exit_code = 1

    def __init__(self, message: str, recovery_hint: Optional[str] = None):
        super().__init__(message)
        self.recovery_hint = recovery_hint


class ConfigError(WaveguideError):
    """Run configuration could not be loaded or is inconsistent."""

    def __init__(self, message: str, config_file: Optional[str] = None):
        recovery_hint = (
            f"Check configuration file: {config_file}"
            if config_file
            else "Check command-line flags and configuration values"
        )
        super().__init__(message, recovery_hint)


class ParameterError(WaveguideError):
    """Model parameters violate an invariant."""

    def __init__(self, message: str, field: Optional[str] = None):
        recovery_hint = (
            f"Adjust the value of '{field}'" if field else "Adjust model parameters"
        )
        super().__init__(message, recovery_hint)
        self.field = field


class StateFileError(WaveguideError):
    """Amplitude state file is unreadable or invalid."""

    def __init__(self, message: str, path: Optional[str] = None):
        recovery_hint = (
            f"Check state file format in {path}"
            if path
            else "Check the state file format (see docs/state-format.md)"
        )
        super().__init__(message, recovery_hint)


class OracleCapError(WaveguideError):
    """Dense representation would exceed the configured size cap."""

    def __init__(self, message: str, size: int, cap: int):
        super().__init__(
            message, f"Reduce the lattice size (dimension {size} exceeds cap {cap})"
        )
        self.size = size
        self.cap = cap


class InstabilityError(WaveguideError):
    """Integration produced non-finite amplitudes."""

    exit_code = 2

    def __init__(self, message: str, dt: Optional[float] = None):
        recovery_hint = (
            f"Reduce the time step (currently dt={dt!r})"
            if dt is not None
            else "Reduce the time step"
        )
        super().__init__(message, recovery_hint)
        self.dt = dt


class EquivalenceError(WaveguideError):
    """Master-equation and Schrödinger evolutions disagree beyond threshold."""

    exit_code = 3

    def __init__(self, message: str, deviation: float, threshold: float):
        super().__init__(
            message, "Check operator assembly and integrator step size"
        )
        self.deviation = deviation
        self.threshold = threshold


class SweepPointError(WaveguideError):
    """One point of a parameter sweep failed; carries the point's exit code."""

    def __init__(
        self,
        message: str,
        index: int,
        exit_code: int = 1,
        recovery_hint: Optional[str] = None,
    ):
        super().__init__(message, recovery_hint)
        self.index = index
        self.exit_code = exit_code


class GridError(WaveguideError):
    """Amplitude grid has the wrong shape or breaks exchange symmetry."""

    def __init__(self, message: str):
        super().__init__(message, "Check grid dimensions against the lattice size L")


class StepSizeWarning(UserWarning):
    """Time step exceeds the advisory accuracy bound."""


class NormalizationWarning(UserWarning):
    """Loaded state was renormalized."""


def handle_simulation_errors(func: Callable) -> Callable:
    """Decorator converting I/O failures into waveguide-bh errors."""

    @wraps(func)
    def wrapper(*args, **kwargs) -> Any:
        try:
            return func(*args, **kwargs)
        except WaveguideError:
            raise
        except FileNotFoundError as e:
            raise ConfigError(
                f"Required file or directory not found: {e}",
                str(e.filename) if getattr(e, "filename", None) else None,
            )
        except PermissionError as e:
            raise ConfigError(
                f"Permission denied writing results: {e}",
                str(e.filename) if getattr(e, "filename", None) else None,
            )
        except OSError as e:
            raise ConfigError(f"File system error: {e}")

    return wrapper
