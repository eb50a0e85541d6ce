"""Base command class for waveguide-bh."""

import warnings
from typing import Iterable, List, Optional

import click

from waveguide_bh.config import RunConfig
from waveguide_bh.database import ResultStore
from waveguide_bh.exceptions import WaveguideError
from waveguide_bh.lattice import AmplitudeGrid
from waveguide_bh.propagation import Trajectory, evolve
from waveguide_bh.states import build_initial_state


class SimulationCommand:
    """Shared state and helpers of every subcommand."""

    def __init__(self, config: Optional[RunConfig] = None):
        """Initialize command with its run configuration.

        Args:
            config: Validated run configuration (None while it is being built)
        """
        self.config = config
        self.store = ResultStore(config.outputs.out_dir) if config else None
        self._seen_warnings: set[str] = set()

    def handle_error(self, error: Exception, context: str = "") -> None:
        """Report an error and exit with the code carried by the exception.

        Args:
            error: Exception that occurred
            context: Optional context for the error
        """
        message = f"✗ Error: {error}"
        if context:
            message = f"✗ Error in {context}: {error}"
        click.echo(message, err=True)
        if isinstance(error, WaveguideError):
            if error.recovery_hint:
                click.echo(f"💡 {error.recovery_hint}", err=True)
            raise click.exceptions.Exit(error.exit_code)
        raise click.ClickException(str(error))

    def report_warnings(self, caught: Iterable) -> List[str]:
        """Echo each distinct captured warning once."""
        echoed = []
        for item in caught:
            text = str(item.message if isinstance(item, warnings.WarningMessage) else item)
            if text in self._seen_warnings:
                continue
            self._seen_warnings.add(text)
            click.echo(f"⚠ Warning: {text}", err=True)
            echoed.append(text)
        return echoed

    def initial_state(self) -> AmplitudeGrid:
        return build_initial_state(self.config.initial, self.config.model.L)

    def simulate(self, sample_times: Iterable[float] = ()) -> Trajectory:
        """Evolve the configured initial state with the configured integrator."""
        return evolve(
            self.initial_state(),
            self.config.model,
            self.config.integrator,
            sample_times=sample_times,
        )
