"""Periodic grids on [0, 2pi)^d and fields stored by their Fourier coefficients.

Coefficients are the analysis coefficients of the trigonometric interpolant,
``values(x_j) = sum_k c_k exp(i k.x_j)``, stored in numpy FFT order so the
wavenumbers per axis are ``-M/2 .. M/2-1``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``points`` nodes per axis on [0, 2pi)^dim."""

    dim: int
    points: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"grid dimension must be >= 1, got {self.dim}")
        if self.points < 2 or self.points % 2:
            raise ValueError(f"points per axis must be even and >= 2, got {self.points}")

    @property
    def largest_mode(self) -> int:
        return self.points // 2

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.points

    @property
    def spacing_per_mode(self) -> float:
        # 2pi / K, the half-grid convention (0.049 for K = 2^7)
        return 2.0 * np.pi / self.largest_mode

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        k = np.fft.fftfreq(self.points, d=1.0 / self.points)
        k = np.rint(k).astype(np.int64)
        k.setflags(write=False)
        return k

    @cached_property
    def nodes(self) -> np.ndarray:
        x = 2.0 * np.pi * np.arange(self.points) / self.points
        x.setflags(write=False)
        return x

    @cached_property
    def ksq(self) -> np.ndarray:
        """|k|^2 on the full coefficient array, as floats."""
        axes = np.meshgrid(*([self.wavenumbers.astype(np.float64)] * self.dim), indexing="ij")
        out = sum(a * a for a in axes)
        out.setflags(write=False)
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on modes kept by the 2/3 rule (all |k_i| <= M/3)."""
        keep = np.abs(self.wavenumbers) <= self.points // 3
        axes = np.meshgrid(*([keep] * self.dim), indexing="ij")
        mask = np.logical_and.reduce(axes)
        mask.setflags(write=False)
        return mask

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    def metadata(self) -> dict:
        return {
            "dim": self.dim,
            "points": self.points,
            "largest_mode": self.largest_mode,
            "dx": self.spacing,
            "dx_per_mode": self.spacing_per_mode,
        }


def make_grid(d: int, largest_mode: int) -> Grid:
    """Grid with ``2 * largest_mode`` points per axis in ``d`` dimensions."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if largest_mode < 1:
        raise ValueError(f"largest mode must be >= 1, got {largest_mode}")
    return Grid(dim=d, points=2 * largest_mode)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable field on a grid, held as Fourier coefficients."""

    grid: Grid
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def values(self) -> np.ndarray:
        return transform_inverse(self)

    def norm(self, sigma: float = 0.0) -> float:
        return h_sigma_norm(self, sigma)

    def is_real_valued(self, tol: float = 1e-13) -> bool:
        c = self.coefficients
        mirrored = np.conj(_reflect(c, self.grid.dim))
        scale = max(np.max(np.abs(c)), 1.0)
        return bool(np.max(np.abs(c - mirrored)) <= tol * scale)

    def __add__(self, other: SpectralField) -> SpectralField:
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coefficients + other.coefficients)

    def __sub__(self, other: SpectralField) -> SpectralField:
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coefficients - other.coefficients)

    def __mul__(self, scalar: complex) -> SpectralField:
        return SpectralField(self.grid, self.coefficients * scalar)

    __rmul__ = __mul__


def _check_same_grid(a: SpectralField, b: SpectralField) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def _reflect(c: np.ndarray, dim: int) -> np.ndarray:
    # coefficient at -k; -(-M/2) wraps onto itself, matching its real-input constraint
    out = c
    for ax in range(-dim, 0):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


# -- array level (batched over leading axes) ---------------------------------

def forward(values: np.ndarray, grid: Grid) -> np.ndarray:
    if grid.dim == 1:
        return np.fft.fft(values) * (1.0 / grid.points)
    return np.fft.fftn(values, axes=grid.axes) / grid.points ** grid.dim


def inverse(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    if grid.dim == 1:
        return np.fft.ifft(coeffs) * float(grid.points)
    return np.fft.ifftn(coeffs, axes=grid.axes) * grid.points ** grid.dim


@lru_cache(maxsize=64)
def sobolev_weights(grid: Grid, sigma: float) -> np.ndarray:
    w = (1.0 + grid.ksq) ** sigma
    w.setflags(write=False)
    return w


def norms(coeffs: np.ndarray, grid: Grid, sigma: float) -> np.ndarray:
    """H^sigma norms over the trailing grid axes of a (batched) coefficient array."""
    w = sobolev_weights(grid, sigma)
    sq = coeffs.real ** 2 + coeffs.imag ** 2
    return np.sqrt(np.sum(w * sq, axis=grid.axes))


def cubic_coeffs(coeffs: np.ndarray, grid: Grid, dealias: bool = False) -> np.ndarray:
    if dealias:
        coeffs = coeffs * grid.dealias_mask
    u = inverse(coeffs, grid)
    out = forward(_kernels.cubic(u), grid)
    if dealias:
        out = out * grid.dealias_mask
    return out


# -- field level -------------------------------------------------------------

def transform_forward(values, grid: Grid) -> SpectralField:
    """Fourier coefficients of physical values sampled at the grid nodes."""
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise ValueError(f"values of shape {values.shape} do not fit grid {grid.shape}")
    return SpectralField(grid, forward(values.astype(np.complex128), grid))


def transform_inverse(field: SpectralField) -> np.ndarray:
    return inverse(field.coefficients, field.grid)


def h_sigma_norm(field: SpectralField, sigma: float) -> float:
    r"""Sobolev norm :math:`(\sum_k (1+|k|^2)^\sigma |c_k|^2)^{1/2}`."""
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    return float(norms(field.coefficients, field.grid, sigma))


def cubic_nonlinearity(field: SpectralField, dealias: bool = False) -> SpectralField:
    """|u|^2 u evaluated pointwise on the grid, optionally with 2/3-rule dealiasing."""
    return SpectralField(field.grid, cubic_coeffs(field.coefficients, field.grid, dealias))


def initial_datum(grid: Grid) -> SpectralField:
    """u0(x) = cos(x) / (2 - sin(x)) along the first axis."""
    x = grid.nodes
    u = np.cos(x) / (2.0 - np.sin(x))
    full = np.broadcast_to(u.reshape((-1,) + (1,) * (grid.dim - 1)), grid.shape)
    return transform_forward(full, grid)


# -- snapshots ---------------------------------------------------------------

def write_snapshot(field: SpectralField, path, meta: dict | None = None) -> tuple[Path, Path]:
    """Write physical values as CSV (index, x, re_u, im_u) plus a JSON sidecar."""
    path = Path(path)
    grid = field.grid
    vals = field.values()
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if grid.dim == 1:
            w.writerow(["index", "x", "re_u", "im_u"])
            for j, (x, v) in enumerate(zip(grid.nodes, vals)):
                w.writerow([j, f"{x:.15g}", f"{v.real:.15g}", f"{v.imag:.15g}"])
        else:
            w.writerow([f"index_{a}" for a in range(grid.dim)]
                       + [f"x_{a}" for a in range(grid.dim)] + ["re_u", "im_u"])
            for idx in np.ndindex(*grid.shape):
                v = vals[idx]
                w.writerow(list(idx) + [f"{grid.nodes[i]:.15g}" for i in idx]
                           + [f"{v.real:.15g}", f"{v.imag:.15g}"])
    side = path.with_suffix(".json")
    record = {"grid": grid.metadata()}
    record.update(meta or {})
    side.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return path, side


def read_snapshot(path) -> tuple[SpectralField, dict]:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    g = meta["grid"]
    grid = Grid(dim=g["dim"], points=g["points"])
    data = np.genfromtxt(path, delimiter=",", names=True)
    vals = (data["re_u"] + 1j * data["im_u"]).reshape(grid.shape)
    return transform_forward(vals, grid), meta
