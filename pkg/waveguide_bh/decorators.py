"""Command decorators and reusable click options for waveguide-bh."""

import warnings
from functools import wraps
from typing import Callable, Optional

import click

from waveguide_bh.base import SimulationCommand
from waveguide_bh.config import KNOWN_KEYS, RunConfigLoader


def simulation_command(
    *options, name: Optional[str] = None, error_context: Optional[str] = None
):
    """Universal subcommand decorator.

    - Adds the shared configuration options (model, initial state, integrator,
      outputs) after any custom options
    - Builds the RunConfig (defaults < config file < flags)
    - Echoes captured warnings once and maps errors to exit codes

    The decorated function receives the SimulationCommand followed by the
    values of its custom options.
    """

    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(**kwargs):
            config_path = kwargs.pop("config_path", None)
            overrides = {key: kwargs.pop(key) for key in list(kwargs) if key in KNOWN_KEYS}
            cmd = SimulationCommand()
            context = error_context or func.__name__

            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                try:
                    config = RunConfigLoader(config_path).build(overrides)
                    cmd = SimulationCommand(config)
                    result = func(cmd, **kwargs)
                except (click.exceptions.Exit, click.ClickException):
                    raise
                except Exception as e:
                    cmd.report_warnings(caught)
                    cmd.handle_error(e, context)
            cmd.report_warnings(caught)
            return result

        command_func = wrapper
        for opt in reversed(shared_options() + list(options)):
            command_func = opt(command_func)
        return click.command(name=name)(command_func)

    return decorator


def shared_options() -> list:
    return [
        config_option(),
        *model_options(),
        *initial_state_options(),
        *integrator_options(),
        *output_options(),
    ]


def config_option() -> Callable:
    return click.option(
        "--config",
        "config_path",
        type=click.Path(dir_okay=False),
        help="Configuration file (key = value lines, or YAML)",
    )


def model_options() -> list:
    """Lattice size and rates."""
    return [
        click.option("--L", "L", type=int, help="Number of lattice sites (default: 15)"),
        click.option("--kappa", type=float, help="Coupling kappa (default: 1)"),
        click.option("--beta-r", "beta_r", type=float, help="Real nonlinearity (default: 0)"),
        click.option("--gamma", type=float, help="On-site two-body loss (default: 0)"),
        click.option(
            "--gamma-nn", "gamma_nn", type=float, help="Nearest-neighbour loss (default: 0)"
        ),
    ]


def initial_state_options() -> list:
    return [
        click.option(
            "--init",
            type=click.Choice(["local", "homogeneous", "file"]),
            help="Initial state (default: local)",
        ),
        click.option("--sites", help="Sites i,j of the localized pair (default: central)"),
        click.option(
            "--alpha-ts", "alpha_ts", type=float, help="Two-site weight (default: 0.9)"
        ),
        click.option(
            "--state-file",
            "state_file",
            type=click.Path(dir_okay=False),
            help="State file for --init file",
        ),
    ]


def integrator_options() -> list:
    return [
        click.option("--t-final", "t_final", type=float, help="Final time in 1/kappa (default: 3)"),
        click.option("--dt", type=float, help="Time step (default: 1e-3)"),
        click.option(
            "--sample-every", "sample_every", type=int, help="Emit every k-th step (default: 10)"
        ),
        click.option(
            "--method", type=click.Choice(["rk4", "expm"]), help="Integrator (default: rk4)"
        ),
    ]


def output_options() -> list:
    return [
        click.option("--out", type=click.Path(file_okay=False), help="Output directory"),
        format_option(),
        jobs_option(),
    ]


def format_option() -> Callable:
    """Standard format option decorator.

    Returns:
        Click option decorator for format
    """
    return click.option(
        "--format",
        "format",
        type=click.Choice(["csv", "json"]),
        help="Output format (default: csv)",
    )


def jobs_option() -> Callable:
    return click.option("--jobs", type=int, help="Parallel sweep workers (default: 1)")


def t0_option() -> Callable:
    return click.option("--t0", type=float, help="Readout time (default: t-final)")


def times_option(flag: str = "--times") -> Callable:
    """Comma-separated snapshot times."""
    return click.option(flag, "snapshot_times", help="Comma-separated snapshot times")
