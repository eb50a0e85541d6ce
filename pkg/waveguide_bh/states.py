"""Initial amplitude grids: localized pair, homogeneous superposition, file."""

import math
import warnings
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from waveguide_bh.exceptions import (
    NormalizationWarning,
    ParameterError,
    StateFileError,
    handle_simulation_errors,
)
from waveguide_bh.lattice import AmplitudeGrid, norm

FILE_SYMMETRY_TOL = 1e-9
FILE_NORM_TOL = 1e-6


class InitialStateSpec(BaseModel):
    """Which initial state to prepare.

    ``sites`` is only used by the localized pair; None selects the central
    pair of the lattice.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["local", "homogeneous", "file"] = "local"
    sites: Optional[tuple[int, int]] = None
    alpha_ts: float = 0.9
    path: Optional[Path] = None

    @model_validator(mode="after")
    def _check_kind(self) -> "InitialStateSpec":
        if self.kind == "local" and self.sites is not None:
            i, j = self.sites
            if i == j or min(i, j) < 0:
                raise ValueError(f"sites must be two distinct non-negative indices, got {i},{j}")
        if self.kind == "homogeneous" and not 0.0 <= self.alpha_ts <= 1.0:
            raise ValueError(f"alpha_ts out of range [0, 1]: {self.alpha_ts!r}")
        if self.kind == "file" and self.path is None:
            raise ValueError("file initial state requires a path")
        return self


def central_pair(L: int) -> tuple[int, int]:
    """Default sites of the localized pair."""
    return L // 2 - 1, L // 2


def local_pair(L: int, i: int, j: int) -> AmplitudeGrid:
    """Two bosons on distinct sites i and j: c[i, j] = c[j, i] = 1/sqrt(2)."""
    if i == j:
        raise ParameterError(f"local pair needs two distinct sites, got {i} twice", "sites")
    for site in (i, j):
        if not 0 <= site < L:
            raise ParameterError(f"site {site} out of range for L={L}", "sites")
    values = np.zeros((L, L), dtype=np.complex128)
    values[i, j] = values[j, i] = 1.0 / math.sqrt(2.0)
    return AmplitudeGrid(values)


def homogeneous(L: int, alpha_ts: float) -> AmplitudeGrid:
    """sqrt(alpha)|TS> + sqrt(1 - alpha)|SS> with non-negative real amplitudes.

    c[i, i] = sqrt((1 - alpha)/L) and c[i, j] = sqrt(alpha/(L(L - 1))) for i != j.
    """
    if L < 2:
        raise ParameterError(f"L too small: L={L} (need L >= 2)", "L")
    if not 0.0 <= alpha_ts <= 1.0:
        raise ParameterError(f"alpha_ts out of range [0, 1]: {alpha_ts!r}", "alpha_ts")
    values = np.full((L, L), math.sqrt(alpha_ts / (L * (L - 1))), dtype=np.complex128)
    np.fill_diagonal(values, math.sqrt((1.0 - alpha_ts) / L))
    return AmplitudeGrid(values)


def _format_complex(z: complex) -> str:
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{z.real!r}{sign}{abs(z.imag)!r}j"


@handle_simulation_errors
def save_state(grid: AmplitudeGrid, path: Union[str, Path]) -> Path:
    """Write a grid in the plain-text state format.

    Values are written with shortest round-trip formatting, so loading the
    file back reproduces the grid.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"L={grid.L}"]
    for row in grid.values:
        lines.append(" ".join(_format_complex(complex(z)) for z in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _parse_state_text(text: str, source: str) -> np.ndarray:
    lines = [
        line.strip()
        for line in text.splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]
    if not lines or not lines[0].replace(" ", "").startswith("L="):
        raise StateFileError("missing 'L=<int>' header", source)
    try:
        L = int(lines[0].replace(" ", "")[2:])
    except ValueError:
        raise StateFileError(f"invalid header {lines[0]!r}", source)
    rows = lines[1:]
    if L < 1 or len(rows) != L:
        raise StateFileError(f"expected {L} rows, found {len(rows)}", source)

    values = np.empty((L, L), dtype=np.complex128)
    for n, row in enumerate(rows):
        tokens = row.split()
        if len(tokens) != L:
            raise StateFileError(
                f"row {n} has {len(tokens)} values, expected {L} (grid must be square)",
                source,
            )
        try:
            values[n] = [complex(token) for token in tokens]
        except ValueError as e:
            raise StateFileError(f"row {n}: cannot parse complex value ({e})", source)
    return values


@handle_simulation_errors
def load_state(path: Union[str, Path]) -> AmplitudeGrid:
    """Read a state file and return it normalized to unit norm.

    Raises:
        StateFileError: on parse failure, asymmetry beyond 1e-9 or zero norm
    """
    path = Path(path)
    values = _parse_state_text(path.read_text(encoding="utf-8"), str(path))

    if not np.all(np.isfinite(values)):
        raise StateFileError("state contains non-finite values", str(path))
    scale = max(1.0, float(np.max(np.abs(values))))
    asym = float(np.max(np.abs(values - values.T)))
    if asym > FILE_SYMMETRY_TOL * scale:
        raise StateFileError(
            f"state is asymmetric (max |c - c^T| = {asym:g})", str(path)
        )

    total = norm(values)
    if total == 0.0:
        raise StateFileError("state has zero norm", str(path))
    if abs(total - 1.0) > FILE_NORM_TOL:
        warnings.warn(
            f"state in {path} has norm {total:.6g}; renormalized to 1",
            NormalizationWarning,
            stacklevel=2,
        )
    return AmplitudeGrid.from_array(values / math.sqrt(total), symmetrize=True)


def build_initial_state(spec: InitialStateSpec, L: int) -> AmplitudeGrid:
    """Prepare the grid described by ``spec`` on an L-site lattice."""
    if spec.kind == "local":
        i, j = spec.sites if spec.sites is not None else central_pair(L)
        return local_pair(L, i, j)
    if spec.kind == "homogeneous":
        return homogeneous(L, spec.alpha_ts)

    grid = load_state(spec.path)
    if grid.L != L:
        raise StateFileError(
            f"state file has L={grid.L} but the model uses L={L}", str(spec.path)
        )
    return grid
