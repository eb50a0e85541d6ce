"""Shared fixtures for waveguide-bh tests."""

import numpy as np
import pytest

from waveguide_bh.lattice import AmplitudeGrid


def random_symmetric_grid(
    rng: np.random.Generator, L: int, normalize: bool = True
) -> AmplitudeGrid:
    """Random complex symmetric grid, optionally scaled to unit norm."""
    values = rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L))
    values = 0.5 * (values + values.T)
    if normalize:
        values = values / np.sqrt(np.vdot(values, values).real)
    return AmplitudeGrid(values)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random generator."""
    return np.random.default_rng(20240611)


@pytest.fixture
def make_grid(rng):
    """Factory for random symmetric grids."""

    def factory(L: int, normalize: bool = True) -> AmplitudeGrid:
        return random_symmetric_grid(rng, L, normalize)

    return factory


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    """Isolated working directory without any discoverable config file."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setattr(
        "waveguide_bh.config.user_config_dir", lambda app: str(tmp_path / "no-config")
    )
    return tmp_path
