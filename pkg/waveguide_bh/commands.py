"""waveguide-bh command-line interface."""

import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional

import click
import numpy as np

from waveguide_bh import __version__
from waveguide_bh.decorators import simulation_command, t0_option, times_option
from waveguide_bh.exceptions import (
    ConfigError,
    EquivalenceError,
    SweepPointError,
    WaveguideError,
)
from waveguide_bh.lattice import AmplitudeGrid, ModelParams, validate_params
from waveguide_bh.observables import observe
from waveguide_bh.oracle import check_equivalence
from waveguide_bh.propagation import IntegratorConfig, evolve
from waveguide_bh.utils import format_number, parse_numbers

SWEEP_PARAMS = ("gamma", "gamma_nn", "beta_r")
ALMOST_ZERO_FRACTION = 0.1
DEFAULT_ORACLE_THRESHOLD = 1e-5


@click.group()
@click.version_option(__version__, prog_name="waveguide-bh")
def cli() -> None:
    """Two interacting bosons with two-body loss, simulated as light in a 2D
    waveguide lattice."""


@simulation_command(
    times_option("--snapshot-times"),
    name="run",
    error_context="run",
)
def run(cmd) -> None:
    """Evolve one configuration and write the observable time series."""
    config = cmd.config
    snapshot_times = config.outputs.snapshot_times
    fmt = config.outputs.format

    click.echo(
        f"🚀 Evolving L={config.model.L} to t={config.integrator.t_final:g} "
        f"({config.integrator.method}, dt={config.integrator.dt:g})"
    )
    traj = cmd.simulate(snapshot_times)
    path = cmd.store.save_timeseries(traj.observables(), config.metadata("run"), fmt)
    click.echo(f"✅ Time series written to {path} ({len(traj)} samples)")

    for t in snapshot_times:
        index = int(np.argmin(np.abs(traj.times - t)))
        record = observe(traj.states[index], traj.times[index])
        cmd.store.save_snapshot(record, fmt)
    if snapshot_times:
        click.echo(f"✅ {len(snapshot_times)} snapshot(s) written to {cmd.store.snapshot_dir}")
    click.echo(f"💡 Final n_tot = {format_number(traj.norms[-1])}")


def _sweep_point(
    model: ModelParams,
    c0: np.ndarray,
    integrator: IntegratorConfig,
    param: str,
    value: float,
) -> Dict[str, Any]:
    """Evolve one sweep point; errors are returned, not raised, to cross processes."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            p = validate_params(model.model_copy(update={param: value}))
            final = evolve(AmplitudeGrid(c0), p, integrator).final
            record = observe(final, integrator.n_steps * integrator.dt)
            result: Dict[str, Any] = {"row": (value, record.g2_avg, record.n_tot)}
        except WaveguideError as e:
            result = {
                "error": str(e),
                "exit_code": e.exit_code,
                "hint": e.recovery_hint,
            }
    result["warnings"] = [str(w.message) for w in caught]
    return result


def _first_almost_zero(rows, baseline: float) -> Optional[float]:
    for value, g2, _ in rows:
        if g2 <= ALMOST_ZERO_FRACTION * baseline:
            return value
    return None


@simulation_command(
    click.option(
        "--param",
        type=click.Choice(SWEEP_PARAMS),
        default="gamma",
        show_default=True,
        help="Parameter to sweep",
    ),
    click.option("--values", required=True, help="Comma-separated parameter values"),
    t0_option(),
    name="sweep",
    error_context="sweep",
)
def sweep(cmd, param: str, values: str) -> None:
    """Readout g2_avg and n_tot at t0 across values of one parameter."""
    config = cmd.config
    try:
        points = parse_numbers(values)
    except ValueError:
        points = []
    if not points or not all(np.isfinite(points)):
        raise ConfigError(f"sweep values must be finite numbers, got {values!r}")
    t0 = config.t0 if config.t0 is not None else config.integrator.t_final
    integrator = config.integrator.model_copy(update={"t_final": t0})
    c0 = np.array(cmd.initial_state().values)

    click.echo(f"🚀 Sweeping {param} over {len(points)} value(s) at t0={t0:g}")
    args = [(config.model, c0, integrator, param, v) for v in points]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(_sweep_point, *a) for a in args]
            results = [f.result() for f in futures]
    else:
        results = [_sweep_point(*a) for a in args]

    rows: List[tuple] = []
    for index, result in enumerate(results):
        cmd.report_warnings(result["warnings"])
        if "error" in result:
            raise SweepPointError(
                f"sweep point {index} ({param}={points[index]!r}) failed: {result['error']}",
                index,
                result["exit_code"],
                result["hint"],
            )
        rows.append(result["row"])

    metadata = config.metadata("sweep")
    metadata.update(
        {"sweep_param": param, "t0": t0, "almost_zero_fraction": ALMOST_ZERO_FRACTION}
    )
    path = cmd.store.save_sweep(param, rows, metadata, config.outputs.format)
    click.echo(f"✅ Sweep written to {path}")

    baseline = next((g2 for v, g2, _ in rows if v == 0.0), None)
    if baseline:
        below = _first_almost_zero(rows, baseline)
        if below is not None:
            click.echo(
                f"💡 g2_avg falls below {ALMOST_ZERO_FRACTION:.0%} of its {param}=0 "
                f"value from {param}={below:g}"
            )


@simulation_command(
    click.option(
        "--threshold",
        type=float,
        default=DEFAULT_ORACLE_THRESHOLD,
        show_default=True,
        help="Maximum allowed deviation",
    ),
    click.option(
        "--single-particle",
        is_flag=True,
        help="Include one-particle states in the Fock basis",
    ),
    click.option("--corrupt-sign", is_flag=True, hidden=True),
    name="oracle",
    error_context="oracle check",
)
def oracle(cmd, threshold: float, single_particle: bool, corrupt_sign: bool) -> None:
    """Check the grid evolution against the Lindblad master equation."""
    config = cmd.config
    click.echo(f"🚀 Master-equation check on L={config.model.L}")
    traj = cmd.simulate()
    report = check_equivalence(
        traj,
        config.model,
        config.integrator,
        include_single=single_particle,
        corrupt_sign=corrupt_sign,
    )
    click.echo(cmd.store.formatter.format_report(report))

    data = config.metadata("oracle")
    data.update(
        {
            "report": report.model_dump(),
            "max_deviation": report.max_deviation,
            "threshold": threshold,
            "passed": report.passed(threshold),
        }
    )
    path = cmd.store.save_report("oracle", data)
    click.echo(f"💡 Report written to {path}")

    if not report.passed(threshold):
        raise EquivalenceError(
            f"max deviation {report.max_deviation:.3e} exceeds threshold {threshold:g}",
            report.max_deviation,
            threshold,
        )
    click.echo(f"✅ Equivalence holds (max deviation {report.max_deviation:.3e})")


@simulation_command(times_option("--times"), name="snapshot", error_context="snapshot")
def snapshot(cmd) -> None:
    """Write G2, g2 and intensity matrices at the requested times."""
    config = cmd.config
    times = config.outputs.snapshot_times or (config.integrator.t_final,)
    traj = cmd.simulate(times)
    paths = []
    for t in times:
        index = int(np.argmin(np.abs(traj.times - t)))
        record = observe(traj.states[index], traj.times[index])
        paths += cmd.store.save_snapshot(record, config.outputs.format)
    cmd.store.save_report("metadata", config.metadata("snapshot"))
    click.echo(f"✅ {len(paths)} matrix file(s) written to {cmd.store.snapshot_dir}")


cli.add_command(run)
cli.add_command(sweep)
cli.add_command(oracle)
cli.add_command(snapshot)


def main(argv: Optional[List[str]] = None) -> None:
    """Console entry point; usage errors exit with code 1."""
    try:
        code = cli.main(args=argv, prog_name="waveguide-bh", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        sys.exit(1)
    except click.Abort:
        click.echo("Aborted!", err=True)
        sys.exit(1)
    sys.exit(code if isinstance(code, int) else 0)
