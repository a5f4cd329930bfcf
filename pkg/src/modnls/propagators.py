"""Free-flow Fourier multipliers exp(i theta d_x^2) and the twisted variables.

Mode k is multiplied by exp(-i theta |k|^2). With theta = g(t) this is S(t),
with theta = g(t) - g(r) it is U(t, r) = S(t) S(r)^{-1}.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .modulation import ModulationPath, evaluate
from .spectral import Grid, SpectralField


def multiplier(grid: Grid, theta: float) -> np.ndarray:
    """The table exp(-i theta |k|^2) over the grid's wavenumbers."""
    return np.exp(-1j * theta * grid.ksq)


def propagate_coeffs(coeffs: np.ndarray, grid: Grid, theta) -> np.ndarray:
    """Apply the multiplier to a (batched) coefficient array; ``theta`` may vary per row."""
    return _kernels.phase_multiply(coeffs, grid.ksq, theta)


def apply_free_propagator(field: SpectralField, theta: float) -> SpectralField:
    return SpectralField(field.grid, propagate_coeffs(field.coefficients, field.grid, theta))


def apply_evolution(field: SpectralField, g: ModulationPath, t: float, r: float) -> SpectralField:
    """U(t, r) field, i.e. the free flow with phase g(t) - g(r)."""
    return apply_free_propagator(field, evaluate(g, t) - evaluate(g, r))


def to_twisted(field: SpectralField, g: ModulationPath, t: float) -> SpectralField:
    """v = S(t)^{-1} u."""
    return apply_free_propagator(field, -evaluate(g, t))


def from_twisted(field: SpectralField, g: ModulationPath, t: float) -> SpectralField:
    """u = S(t) v."""
    return apply_free_propagator(field, evaluate(g, t))
