"""Shared construction helpers for the test suite."""

import numpy as np

from mfglab import MFGModels, TorusGrid, coefficient_field


def default_models(grid: TorusGrid, sign: str = "paper_literal",
                   gamma: float = 1.25, alpha: float = 1.0) -> MFGModels:
    """Default problem data: a = 1 + 0.5 sin(2 pi x1), b = 0.5 cos(2 pi x1)."""
    return MFGModels(grid, alpha, gamma,
                     coefficient_field(grid, "sin_bump"),
                     coefficient_field(grid, "cos_bump"), sign)


def smooth_field(grid: TorusGrid, rng: np.random.Generator,
                 amplitude: float = 1.0, modes: int = 3) -> np.ndarray:
    """Random band-limited field: low Fourier modes with decaying weights."""
    x = grid.coords()
    out = np.zeros(grid.npoints)
    for k in range(1, modes + 1):
        for ax in range(grid.d):
            out += rng.normal(scale=amplitude / k) * np.sin(2 * np.pi * k * x[:, ax])
            out += rng.normal(scale=amplitude / k) * np.cos(2 * np.pi * k * x[:, ax])
    return out


def smooth_positive_density(grid: TorusGrid, rng: np.random.Generator,
                            amplitude: float = 0.4) -> np.ndarray:
    """Smooth density bounded well away from zero (min >= 0.15)."""
    m = 1.0 + amplitude * np.tanh(smooth_field(grid, rng, 0.5))
    return np.maximum(m, 0.15)
