"""Test exception hierarchy and error conversion."""

import pytest

from waveguide_bh.exceptions import (
    ConfigError,
    EquivalenceError,
    GridError,
    InstabilityError,
    NormalizationWarning,
    OracleCapError,
    ParameterError,
    StateFileError,
    StepSizeWarning,
    SweepPointError,
    WaveguideError,
    handle_simulation_errors,
)


class TestWaveguideError:
    """Test base WaveguideError class."""

    def test_basic_error(self):
        error = WaveguideError("Test message")
        assert str(error) == "Test message"
        assert error.recovery_hint is None
        assert error.exit_code == 1

    def test_error_with_recovery_hint(self):
        error = WaveguideError("Test message", recovery_hint="Try again")
        assert error.recovery_hint == "Try again"


class TestSpecificExceptions:
    """Test specific exception classes."""

    def test_config_error(self):
        error = ConfigError("Invalid config", "/path/to/config")
        assert "Invalid config" in str(error)
        assert "/path/to/config" in error.recovery_hint

    def test_config_error_no_file(self):
        error = ConfigError("Invalid config")
        assert "command-line flags" in error.recovery_hint

    def test_parameter_error(self):
        error = ParameterError("negative loss: gamma=-1.0", "gamma")
        assert error.field == "gamma"
        assert "'gamma'" in error.recovery_hint
        assert error.exit_code == 1

    def test_state_file_error(self):
        error = StateFileError("state is asymmetric")
        assert "docs/state-format.md" in error.recovery_hint

    def test_oracle_cap_error(self):
        error = OracleCapError("too large", 528, 500)
        assert (error.size, error.cap) == (528, 500)
        assert "528" in error.recovery_hint

    def test_exit_codes(self):
        assert InstabilityError("blew up", dt=0.1).exit_code == 2
        assert "dt=0.1" in InstabilityError("blew up", dt=0.1).recovery_hint
        assert EquivalenceError("mismatch", 1e-2, 1e-5).exit_code == 3
        assert GridError("bad shape").exit_code == 1

    def test_sweep_point_error_carries_exit_code(self):
        error = SweepPointError("point 3 failed", 3, exit_code=2)
        assert error.index == 3
        assert error.exit_code == 2
        assert isinstance(error, WaveguideError)

    def test_warnings_are_user_warnings(self):
        assert issubclass(StepSizeWarning, UserWarning)
        assert issubclass(NormalizationWarning, UserWarning)


class TestErrorHandlingDecorator:
    """Test handle_simulation_errors decorator."""

    def test_passthrough(self):
        @handle_simulation_errors
        def raising():
            raise ParameterError("bad")

        with pytest.raises(ParameterError):
            raising()

    def test_converts_file_not_found(self):
        @handle_simulation_errors
        def file_not_found():
            raise FileNotFoundError("No such file")

        with pytest.raises(ConfigError) as exc_info:
            file_not_found()
        assert "Required file or directory not found" in str(exc_info.value)

    def test_converts_permission_error(self):
        @handle_simulation_errors
        def permission_error():
            raise PermissionError("Access denied")

        with pytest.raises(ConfigError) as exc_info:
            permission_error()
        assert "Permission denied" in str(exc_info.value)

    def test_other_exceptions_propagate(self):
        @handle_simulation_errors
        def value_error():
            raise ValueError("not an I/O problem")

        with pytest.raises(ValueError):
            value_error()

    def test_successful_operation_passthrough(self):
        @handle_simulation_errors
        def ok(x):
            return x * 2

        assert ok(21) == 42
