"""Time evolution of amplitude grids.

Two integrators are available: fixed-step classical RK4 on the stencil
(default) and a dense matrix-exponential propagator used as an accuracy
oracle on small lattices.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Literal, Optional

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import trapezoid

from waveguide_bh.exceptions import (
    GridError,
    InstabilityError,
    OracleCapError,
    ParameterError,
    StepSizeWarning,
)
from waveguide_bh.lattice import (
    AmplitudeGrid,
    ModelParams,
    apply_generator,
    assemble_generator,
    loss_rate,
    norm,
    onsite_rates,
    validate_params,
)

EXPM_CAP = 1024
INITIAL_NORM_TOL = 1e-8


class IntegratorConfig(BaseModel):
    """Step size, duration and sampling of an evolution (times in 1/kappa)."""

    model_config = ConfigDict(frozen=True)

    dt: float = Field(default=1e-3, gt=0, allow_inf_nan=False)
    t_final: float = Field(default=3.0, ge=0, allow_inf_nan=False)
    sample_every: int = Field(default=10, ge=1)
    method: Literal["rk4", "expm"] = "rk4"
    expm_cap: int = Field(default=EXPM_CAP, ge=4)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


def step_bound(p: ModelParams) -> float:
    """Advisory upper limit for dt: 0.01 / max(kappa, |beta_r|, gamma, gamma_nn, 1)."""
    return 0.01 / p.max_rate


def check_step_size(p: ModelParams, ic: IntegratorConfig) -> bool:
    """Warn (never fail) when dt is above the advisory bound."""
    bound = step_bound(p)
    if ic.method == "rk4" and ic.dt > bound * (1 + 1e-12):
        warnings.warn(
            f"dt={ic.dt!r} exceeds the advisory bound {bound:.3g} for these rates",
            StepSizeWarning,
            stacklevel=2,
        )
        return False
    return True


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled states of one evolution."""

    times: np.ndarray
    states: tuple[AmplitudeGrid, ...]
    params: ModelParams

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        if len(times) != len(self.states):
            raise ValueError("times and states must have the same length")
        if len(times) == 0 or times[0] != 0.0:
            raise ValueError("trajectory must start at t=0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("trajectory times must be increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", tuple(self.states))

    def __len__(self) -> int:
        return len(self.states)

    @property
    def norms(self) -> np.ndarray:
        return np.array([norm(c) for c in self.states])

    @property
    def final(self) -> AmplitudeGrid:
        return self.states[-1]

    def state_at(self, t: float) -> AmplitudeGrid:
        """Sampled state closest in time to t."""
        return self.states[int(np.argmin(np.abs(self.times - t)))]

    def observables(self, eps: Optional[float] = None):
        from waveguide_bh.observables import observe

        kwargs = {} if eps is None else {"eps": eps}
        return [observe(c, t, **kwargs) for t, c in zip(self.times, self.states)]


def _rk4(c: np.ndarray, rates: np.ndarray, kappa: float, dt: float) -> np.ndarray:
    k1 = apply_generator(c, rates, kappa)
    k2 = apply_generator(c + 0.5 * dt * k1, rates, kappa)
    k3 = apply_generator(c + 0.5 * dt * k2, rates, kappa)
    k4 = apply_generator(c + dt * k3, rates, kappa)
    out = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (out + out.T)


def step_rk4(c: AmplitudeGrid, p: ModelParams, dt: float) -> AmplitudeGrid:
    """One classical RK4 step, re-symmetrized against roundoff drift."""
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt!r}", "dt")
    if c.L != p.L:
        raise GridError(f"Grid shape {c.values.shape} does not match lattice size L={p.L}")
    return AmplitudeGrid(_rk4(c.values, onsite_rates(p), p.kappa, dt))


def propagator_expm(p: ModelParams, t: float, cap: int = EXPM_CAP) -> np.ndarray:
    """Dense exp(t * G) acting on the row-major flattened grid.

    Raises:
        OracleCapError: if L^2 exceeds ``cap``
    """
    validate_params(p)
    size = p.L * p.L
    if size > cap:
        raise OracleCapError(
            f"dense propagator of size {size} exceeds the cap of {cap}", size, cap
        )
    return scipy.linalg.expm(t * assemble_generator(p, sparse=False))


def _sample_steps(
    ic: IntegratorConfig, sample_times: Optional[Iterable[float]]
) -> list[int]:
    n = ic.n_steps
    steps = set(range(0, n + 1, ic.sample_every))
    steps.add(n)
    for t in sample_times or ():
        step = int(round(t / ic.dt))
        if t < 0 or step > n:
            raise ParameterError(
                f"sample time {t!r} lies outside [0, {ic.t_final!r}]", "snapshot_times"
            )
        steps.add(step)
    return sorted(steps)


def _check_finite(c: np.ndarray, step: int, ic: IntegratorConfig) -> None:
    if not np.all(np.isfinite(c)):
        raise InstabilityError(
            f"non-finite amplitude encountered at t={step * ic.dt:g}", ic.dt
        )


def _evolve_rk4(c, p, ic, steps):
    rates = onsite_rates(p)
    samples = [c]
    wanted = set(steps)
    for step in range(1, ic.n_steps + 1):
        c = _rk4(c, rates, p.kappa, ic.dt)
        if step in wanted:
            _check_finite(c, step, ic)
            samples.append(c)
    return samples


def _evolve_expm(c, p, ic, steps):
    L = p.L
    cache: dict[int, np.ndarray] = {}
    samples = [c]
    for prev, step in zip(steps, steps[1:]):
        delta = step - prev
        if delta not in cache:
            cache[delta] = propagator_expm(p, delta * ic.dt, ic.expm_cap)
        c = (cache[delta] @ c.ravel()).reshape(L, L)
        c = 0.5 * (c + c.T)
        _check_finite(c, step, ic)
        samples.append(c)
    return samples


def evolve(
    c0: AmplitudeGrid,
    p: ModelParams,
    ic: IntegratorConfig,
    sample_times: Optional[Iterable[float]] = None,
) -> Trajectory:
    """Evolve c0 to ic.t_final and return the sampled trajectory.

    Samples are taken every ``ic.sample_every`` steps, at the final step, and
    at each of ``sample_times`` (snapped to the nearest step).

    Raises:
        InstabilityError: if a sampled state contains non-finite values
    """
    validate_params(p)
    if c0.L != p.L:
        raise GridError(f"Grid shape {c0.values.shape} does not match lattice size L={p.L}")
    initial_norm = norm(c0)
    if abs(initial_norm - 1.0) > INITIAL_NORM_TOL:
        raise GridError(f"initial state must have unit norm, got {initial_norm:.12g}")
    check_step_size(p, ic)

    steps = _sample_steps(ic, sample_times)
    integrate = _evolve_expm if ic.method == "expm" else _evolve_rk4
    samples = integrate(np.array(c0.values), p, ic, steps)
    return Trajectory(
        times=np.array(steps, dtype=float) * ic.dt,
        states=tuple(AmplitudeGrid(c) for c in samples),
        params=p,
    )


def integrated_loss(traj: Trajectory) -> float:
    """Trapezoid integral of the instantaneous loss rate over the samples."""
    rates = [loss_rate(c, traj.params) for c in traj.states]
    return float(trapezoid(rates, traj.times))


def rk4_order_ratio(
    c0: AmplitudeGrid, p: ModelParams, t: float, dt: float
) -> tuple[float, float, float]:
    """Endpoint errors vs the dense propagator at dt and dt/2, and their ratio."""
    exact = (propagator_expm(p, t) @ c0.values.ravel()).reshape(p.L, p.L)
    errors = []
    for step in (dt, dt / 2):
        ic = IntegratorConfig(dt=step, t_final=t, sample_every=max(1, math.ceil(t / step)))
        final = evolve(c0, p, ic).final.values
        errors.append(float(np.max(np.abs(final - exact))))
    return errors[0], errors[1], errors[0] / errors[1]
