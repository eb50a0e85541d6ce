"""Model parameters, amplitude grid and the coupled-mode generator.

The grid amplitude c[n, m] is the two-boson wave function of a 1D lattice
with L sites. Diagonal waveguides (n == m) carry the doubly occupied sites
and lose amplitude at rate gamma; the first off-diagonals (|n - m| == 1)
carry neighbouring pairs and lose amplitude at rate gamma_nn. Boundaries are
open: out-of-range neighbours contribute nothing.
"""

import math
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from waveguide_bh.exceptions import GridError, ParameterError

SYMMETRY_TOL = 1e-12


def _invariant_violation(
    L: int, kappa: float, beta_r: float, gamma: float, gamma_nn: float
) -> Optional[tuple[str, str]]:
    """Return (field, message) for the first violated invariant, or None."""
    if L < 2:
        return "L", f"L too small: L={L} (need L >= 2)"
    rates = {"kappa": kappa, "beta_r": beta_r, "gamma": gamma, "gamma_nn": gamma_nn}
    for name, value in rates.items():
        if not math.isfinite(value):
            return name, f"non-finite rate: {name}={value!r}"
    if kappa < 0:
        return "kappa", f"negative coupling: kappa={kappa!r}"
    for name in ("gamma", "gamma_nn"):
        if rates[name] < 0:
            return name, f"negative loss: {name}={rates[name]!r}"
    return None


class _InvariantViolation(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


class ModelParams(BaseModel):
    """Lattice size and rates, all rates in units of inverse time."""

    model_config = ConfigDict(frozen=True)

    L: int = 15
    kappa: float = 1.0
    beta_r: float = 0.0
    gamma: float = 0.0
    gamma_nn: float = 0.0
    boundary: Literal["open"] = "open"

    @model_validator(mode="after")
    def _check_invariants(self) -> "ModelParams":
        violation = _invariant_violation(
            self.L, self.kappa, self.beta_r, self.gamma, self.gamma_nn
        )
        if violation:
            raise _InvariantViolation(*violation)
        return self

    @property
    def max_rate(self) -> float:
        """Largest rate magnitude, floored at 1."""
        return max(self.kappa, abs(self.beta_r), self.gamma, self.gamma_nn, 1.0)


def validate_params(p: ModelParams) -> ModelParams:
    """Return p unchanged if every invariant holds.

    Instances produced by ``model_copy(update=...)`` or ``model_construct``
    bypass pydantic validation, so entry points call this explicitly.

    Raises:
        ParameterError: naming the first violated invariant
    """
    violation = _invariant_violation(p.L, p.kappa, p.beta_r, p.gamma, p.gamma_nn)
    if violation:
        field, message = violation
        raise ParameterError(message, field)
    return p


def make_params(**values) -> ModelParams:
    """Build ModelParams, reporting invariant failures as ParameterError."""
    try:
        return ModelParams(**values)
    except ValidationError as e:
        first = e.errors()[0]
        cause = first.get("ctx", {}).get("error")
        if isinstance(cause, _InvariantViolation):
            raise ParameterError(str(cause), cause.field)
        field = str(first["loc"][0]) if first.get("loc") else None
        raise ParameterError(f"invalid {field}: {first['msg']}", field)


@dataclass(frozen=True, eq=False)
class AmplitudeGrid:
    """Symmetric L x L complex amplitude matrix (read-only)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise GridError(f"Amplitude grid must be square, got shape {arr.shape}")
        scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
        asym = float(np.max(np.abs(arr - arr.T))) if arr.size else 0.0
        if asym > SYMMETRY_TOL * scale:
            raise GridError(f"Amplitude grid is asymmetric (max |c - c^T| = {asym:g})")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_array(cls, values, symmetrize: bool = False) -> "AmplitudeGrid":
        """Wrap an array, optionally averaging it with its transpose first."""
        arr = np.asarray(values, dtype=np.complex128)
        if symmetrize:
            arr = 0.5 * (arr + arr.T)
        return cls(arr)

    @property
    def L(self) -> int:
        return self.values.shape[0]

    def transpose_error(self) -> float:
        return float(np.max(np.abs(self.values - self.values.T)))

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


GridLike = Union[AmplitudeGrid, np.ndarray]


def as_array(c: GridLike) -> np.ndarray:
    return c.values if isinstance(c, AmplitudeGrid) else np.asarray(c)


def onsite_rates(p: ModelParams) -> np.ndarray:
    """Diagonal part of the generator as an L x L matrix.

    -i*beta_r - gamma on the main diagonal, -gamma_nn on the first
    off-diagonals, zero elsewhere.
    """
    idx = np.arange(p.L)
    rates = np.zeros((p.L, p.L), dtype=np.complex128)
    rates[idx, idx] = -1j * p.beta_r - p.gamma
    rates[idx[:-1], idx[1:]] = -p.gamma_nn
    rates[idx[1:], idx[:-1]] = -p.gamma_nn
    return rates


def neighbour_sum(c: np.ndarray) -> np.ndarray:
    """c[n, m+1] + c[n, m-1] + c[n+1, m] + c[n-1, m] with open boundaries."""
    hop = np.zeros_like(c)
    hop[:, :-1] += c[:, 1:]
    hop[:, 1:] += c[:, :-1]
    hop[:-1, :] += c[1:, :]
    hop[1:, :] += c[:-1, :]
    return hop


def apply_generator(c: np.ndarray, rates: np.ndarray, kappa: float) -> np.ndarray:
    """Raw-array form of :func:`rhs` for integrator inner loops."""
    return rates * c + 1j * kappa * neighbour_sum(c)


def _check_dims(c: GridLike, p: ModelParams) -> np.ndarray:
    arr = as_array(c)
    if arr.shape != (p.L, p.L):
        raise GridError(
            f"Grid shape {arr.shape} does not match lattice size L={p.L}"
        )
    return arr


def rhs(c: AmplitudeGrid, p: ModelParams) -> AmplitudeGrid:
    """Time derivative dc/dt of the coupled-mode equations."""
    arr = _check_dims(c, p)
    return AmplitudeGrid(apply_generator(arr, onsite_rates(p), p.kappa))


def norm(c: GridLike) -> float:
    """Total intensity sum over all ordered pairs of |c[n, m]|^2."""
    arr = as_array(c)
    return float(np.vdot(arr, arr).real)


def loss_rate(c: GridLike, p: ModelParams) -> float:
    """Instantaneous -d(norm)/dt: 2*gamma*diag + 2*gamma_nn*first off-diagonals."""
    arr = _check_dims(c, p)
    return float(-2.0 * np.sum(onsite_rates(p).real * np.abs(arr) ** 2))


def assemble_generator(p: ModelParams, sparse: bool = True):
    """Explicit L^2 x L^2 generator acting on the row-major flattened grid.

    Index n*L + m addresses c[n, m], so ``(G @ c.ravel()).reshape(L, L)``
    equals ``rhs(c, p)``.
    """
    validate_params(p)
    L = p.L
    chain = sp.diags([np.ones(L - 1), np.ones(L - 1)], [-1, 1], format="csr")
    eye = sp.identity(L, format="csr")
    hopping = sp.kron(eye, chain) + sp.kron(chain, eye)
    generator = sp.diags(onsite_rates(p).ravel()) + 1j * p.kappa * hopping
    generator = generator.tocsr().astype(np.complex128)
    return generator if sparse else generator.toarray()
