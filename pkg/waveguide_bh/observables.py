"""Densities, intensity correlations and intensity maps of an amplitude grid.

Densities, G2 and intensities use the unnormalized grid, so they decay with
the surviving norm. g2 is taken in the normalized state: it depends only on
the two-boson state that survives, not on how much of it is left.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from waveguide_bh.lattice import GridLike, as_array

DENSITY_FLOOR = 1e-14


class Correlations(NamedTuple):
    """G2 = 2|c|^2 and g2 = G2 / (<n_n><n_m>) in the normalized state.

    Undefined g2 entries are NaN.
    """

    G2: np.ndarray
    g2: np.ndarray


class IntensityMap(NamedTuple):
    """Raw per-waveguide intensity and the two-boson joint probabilities."""

    raw: np.ndarray
    probability: np.ndarray


@dataclass(frozen=True, eq=False)
class ObservableRecord:
    t: float
    n_k: np.ndarray
    n_tot: float
    G2: np.ndarray
    g2: np.ndarray
    g2_avg: float
    g2_excluded: int
    G2_avg: float
    intensity: np.ndarray

    @property
    def g2_defined(self) -> np.ndarray:
        return ~np.isnan(self.g2)


def site_density(c: GridLike) -> np.ndarray:
    """N_k = sum_n |c[k, n]|^2, half the mean occupation of site k."""
    return np.sum(np.abs(as_array(c)) ** 2, axis=1)


def g2_matrix(c: GridLike, eps: float = DENSITY_FLOOR) -> Correlations:
    """Unnormalized and normalized intensity cross-correlations.

    g2 = G2 * norm / (<n_n><n_m>), so g2(lambda c) = g2(c) for any complex
    lambda != 0. Entries whose normalized density product falls below ``eps``
    are flagged undefined (NaN in g2); a zero grid is undefined everywhere.
    """
    arr = as_array(c)
    G2 = 2.0 * np.abs(arr) ** 2
    g2 = np.full(G2.shape, np.nan)
    total = float(np.sum(np.abs(arr) ** 2))
    if total == 0.0:
        return Correlations(G2, g2)
    occupation = 2.0 * site_density(arr) / total
    denominator = np.outer(occupation, occupation)
    defined = denominator >= eps
    np.divide(G2 / total, denominator, out=g2, where=defined)
    return Correlations(G2, g2)


def _average_diagonal(g2: np.ndarray) -> float:
    diagonal = np.diag(g2)
    return float(np.nansum(diagonal) / len(diagonal))


def _count_excluded(g2: np.ndarray) -> int:
    return int(np.count_nonzero(np.isnan(np.diag(g2))))


def g2_avg(c: GridLike, eps: float = DENSITY_FLOOR) -> float:
    """sum_n g2[n, n] / L; undefined entries contribute 0."""
    return _average_diagonal(g2_matrix(c, eps).g2)


def g2_excluded(c: GridLike, eps: float = DENSITY_FLOOR) -> int:
    """Number of diagonal g2 entries left out of :func:`g2_avg`."""
    return _count_excluded(g2_matrix(c, eps).g2)


def G2_avg(c: GridLike) -> float:
    """sum_n G2[n, n] / L."""
    arr = as_array(c)
    return float(2.0 * np.sum(np.abs(np.diag(arr)) ** 2) / arr.shape[0])


def intensity_map(c: GridLike) -> IntensityMap:
    raw = np.abs(as_array(c)) ** 2
    probability = 2.0 * raw
    np.fill_diagonal(probability, np.diag(raw))
    return IntensityMap(raw, probability)


def pair_probability_total(probability: np.ndarray) -> float:
    """Sum of joint probabilities over the diagonal and unordered pairs n < m."""
    return float(np.trace(probability) + np.sum(np.triu(probability, k=1)))


def observe(c: GridLike, t: float = 0.0, eps: float = DENSITY_FLOOR) -> ObservableRecord:
    """Every observable of one grid at time t."""
    arr = as_array(c)
    n_k = site_density(arr)
    G2, g2 = g2_matrix(arr, eps)
    return ObservableRecord(
        t=float(t),
        n_k=n_k,
        n_tot=float(np.sum(n_k)),
        G2=G2,
        g2=g2,
        g2_avg=_average_diagonal(g2),
        g2_excluded=_count_excluded(g2),
        G2_avg=G2_avg(arr),
        intensity=intensity_map(arr).raw,
    )
