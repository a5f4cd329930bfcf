"""Time steppers for the modulated cubic NLS  i u_t + g'(t) u_xx = |u|^2 u.

Three schemes share one driver:

* ``randomized_exponential``: exponential integrator whose quadrature node
  t_n + tau xi_n is drawn uniformly inside each step,
* ``classical_exponential``: the same with the node frozen at t_n,
* ``strang``: nonlinear half phase, exact linear flow, nonlinear half phase.

The driver works on coefficient arrays with a leading batch axis so many
random sequences advance together; every row is computed independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .modulation import ModulationPath, evaluate
from .propagators import propagate_coeffs
from .spectral import Grid, SpectralField, cubic_coeffs, forward, inverse, norms

RANDOMIZED = "randomized_exponential"
CLASSICAL = "classical_exponential"
STRANG = "strang"
SCHEMES = (RANDOMIZED, CLASSICAL, STRANG)

_MASK64 = (1 << 64) - 1


class BlowUpError(FloatingPointError):
    """A trajectory produced non-finite values."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite field values at step {step}")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed: int, index: int) -> int:
    """Seed of sequence ``index``: base XOR a 64-bit hash of the index."""
    return (int(base_seed) ^ splitmix64(int(index))) & _MASK64


@dataclass(frozen=True)
class RandomSequence:
    """Uniform draws xi_0, xi_1, ... on [0, 1) addressed by position.

    Draw n is always the n-th output of the generator seeded with ``seed``,
    whatever else has been drawn in the program.
    """

    seed: int

    def draws(self, count: int) -> np.ndarray:
        return np.random.default_rng(self.seed).random(count)

    def draw(self, n: int) -> float:
        return float(self.draws(n + 1)[n])


@dataclass(frozen=True)
class SchemeSpec:
    scheme: str = RANDOMIZED
    dealias: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")

    @property
    def randomized(self) -> bool:
        return self.scheme == RANDOMIZED


@dataclass(frozen=True, eq=False)
class TrajectoryResult:
    final: SpectralField
    times: np.ndarray
    xi: np.ndarray | None = None
    # columns: H^0 norm, H^1 norm; one row per recorded time
    norms: np.ndarray | None = None
    states: np.ndarray | None = None

    @property
    def steps(self) -> int:
        return len(self.times) - 1


# -- coefficient-level step maps ---------------------------------------------

def _randomized_coeffs(c, grid, g0, gxi, g1, tau, dealias):
    w = propagate_coeffs(c, grid, gxi - g0)
    p = cubic_coeffs(w, grid, dealias)
    return propagate_coeffs(c, grid, g1 - g0) - 1j * tau * propagate_coeffs(p, grid, g1 - gxi)


def _classical_coeffs(c, grid, g0, g1, tau, dealias):
    p = cubic_coeffs(c, grid, dealias)
    return propagate_coeffs(c, grid, g1 - g0) - 1j * tau * propagate_coeffs(p, grid, g1 - g0)


def _half_phase(c, grid, h, dealias):
    if dealias:
        c = c * grid.dealias_mask
    out = forward(_kernels.nonlinear_phase(inverse(c, grid), h), grid)
    if dealias:
        out = out * grid.dealias_mask
    return out


def _strang_coeffs(c, grid, g0, g1, tau, dealias):
    c = _half_phase(c, grid, 0.5 * tau, dealias)
    c = propagate_coeffs(c, grid, g1 - g0)
    return _half_phase(c, grid, 0.5 * tau, dealias)


def _twisted_coeffs(v, grid, gxi, tau, dealias):
    w = propagate_coeffs(v, grid, gxi)
    p = cubic_coeffs(w, grid, dealias)
    return v - 1j * tau * propagate_coeffs(p, grid, -gxi)


# -- field-level step maps ---------------------------------------------------

def _check_step(tau: float, xi: float | None = None) -> None:
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if xi is not None and not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi must lie in [0, 1], got {xi}")


def step_randomized(u: SpectralField, g: ModulationPath, t_n: float, tau: float, xi_n: float,
                    dealias: bool = False) -> SpectralField:
    """One step of the randomized exponential integrator.

    Returns ``U(t+tau, t) u - i tau U(t+tau, s) f(U(s, t) u)`` with
    ``s = t + tau xi_n`` and ``f(z) = |z|^2 z``.
    """
    _check_step(tau, xi_n)
    g0, gxi, g1 = evaluate(g, [t_n, t_n + tau * xi_n, t_n + tau])
    return SpectralField(u.grid, _randomized_coeffs(u.coefficients, u.grid, g0, gxi, g1,
                                                    tau, dealias))


def step_classical_exponential(u: SpectralField, g: ModulationPath, t_n: float, tau: float,
                               dealias: bool = False) -> SpectralField:
    """``U(t+tau, t) (u - i tau |u|^2 u)``."""
    _check_step(tau)
    g0, g1 = evaluate(g, [t_n, t_n + tau])
    return SpectralField(u.grid, _classical_coeffs(u.coefficients, u.grid, g0, g1, tau, dealias))


def step_strang(u: SpectralField, g: ModulationPath, t_n: float, tau: float,
                dealias: bool = False) -> SpectralField:
    _check_step(tau)
    g0, g1 = evaluate(g, [t_n, t_n + tau])
    return SpectralField(u.grid, _strang_coeffs(u.coefficients, u.grid, g0, g1, tau, dealias))


def step_randomized_twisted(v: SpectralField, g: ModulationPath, t_n: float, tau: float,
                            xi_n: float, dealias: bool = False) -> SpectralField:
    """The randomized step written for v = S(t)^{-1} u."""
    _check_step(tau, xi_n)
    gxi = evaluate(g, t_n + tau * xi_n)
    return SpectralField(v.grid, _twisted_coeffs(v.coefficients, v.grid, gxi, tau, dealias))


# -- drivers -------------------------------------------------------------------

def time_grid(T: float, N: int) -> np.ndarray:
    return T * np.arange(N + 1) / N


@dataclass
class BatchResult:
    final: np.ndarray            # (B, *grid.shape)
    blowup_step: np.ndarray      # (B,), -1 when the row stayed finite
    norms: np.ndarray | None = None        # (B, N+1, 2)
    states: np.ndarray | None = None       # (B, N+1, *grid.shape)
    max_errors: np.ndarray | None = None   # (B,)


def run_batch(c0: np.ndarray, grid: Grid, g: ModulationPath, spec: SchemeSpec, T: float,
              N: int, xi: np.ndarray | None = None, *, record_norms: bool = False,
              record_states: bool = False, reference_states: np.ndarray | None = None,
              sigma: float = 1.0) -> BatchResult:
    """Advance a batch of initial coefficient arrays through N steps of size T/N.

    ``xi`` has shape (B, N) for the randomized scheme. For the others the batch
    size is taken from ``c0`` (shape (B, *grid.shape)). When ``reference_states``
    (N+1 arrays on the same time grid) is given, the running maximum of the
    H^sigma error over all steps is tracked per row.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    c = np.array(c0, dtype=np.complex128)
    if c.shape == grid.shape:
        c = c[None]
    B = c.shape[0]
    tau = T / N
    times = time_grid(T, N)
    gt = np.asarray(evaluate(g, times), dtype=np.float64)
    if spec.randomized:
        if xi is None:
            raise ValueError("the randomized scheme needs xi draws")
        xi = np.asarray(xi, dtype=np.float64)
        if xi.shape != (B, N):
            raise ValueError(f"xi must have shape {(B, N)}, got {xi.shape}")
        gxi = np.asarray(evaluate(g, times[:-1][None, :] + tau * xi), dtype=np.float64)
        gxi = gxi.reshape(B, N)

    blowup = np.full(B, -1, dtype=np.int64)
    norm_log = np.empty((B, N + 1, 2)) if record_norms else None
    state_log = np.empty((B, N + 1) + grid.shape, dtype=np.complex128) if record_states else None
    max_err = np.zeros(B) if reference_states is not None else None

    def record(n, c):
        if norm_log is not None:
            norm_log[:, n, 0] = norms(c, grid, 0.0)
            norm_log[:, n, 1] = norms(c, grid, 1.0)
        if state_log is not None:
            state_log[:, n] = c
        if max_err is not None:
            np.maximum(max_err, norms(c - reference_states[n], grid, sigma), out=max_err)

    record(0, c)
    with np.errstate(all="ignore"):
        for n in range(N):
            g0, g1 = gt[n], gt[n + 1]
            if spec.scheme == RANDOMIZED:
                c = _randomized_coeffs(c, grid, g0, gxi[:, n], g1, tau, spec.dealias)
            elif spec.scheme == CLASSICAL:
                c = _classical_coeffs(c, grid, g0, g1, tau, spec.dealias)
            else:
                c = _strang_coeffs(c, grid, g0, g1, tau, spec.dealias)
            bad = ~np.isfinite(c.reshape(B, -1)).all(axis=1)
            if bad.any():
                fresh = bad & (blowup < 0)
                blowup[fresh] = n + 1
            record(n + 1, c)
    return BatchResult(final=c, blowup_step=blowup, norms=norm_log, states=state_log,
                       max_errors=max_err)


def run_trajectory(u0: SpectralField, g: ModulationPath, spec: SchemeSpec, T: float, N: int,
                   xi: RandomSequence | None = None, *, record_norms: bool = True,
                   record_states: bool = False) -> TrajectoryResult:
    """Run one trajectory from t=0 to t=T with N equal steps.

    Step n of the randomized scheme consumes draw n of ``xi``. Raises
    :class:`BlowUpError` naming the first step with non-finite values.
    """
    draws = None
    if spec.randomized:
        if xi is None:
            raise ValueError("the randomized scheme needs a RandomSequence")
        draws = xi.draws(N)
    res = run_batch(u0.coefficients, u0.grid, g, spec, T, N,
                    None if draws is None else draws[None],
                    record_norms=record_norms, record_states=record_states)
    if res.blowup_step[0] >= 0:
        raise BlowUpError(int(res.blowup_step[0]))
    return TrajectoryResult(
        final=SpectralField(u0.grid, res.final[0]),
        times=time_grid(T, N),
        xi=draws,
        norms=None if res.norms is None else res.norms[0],
        states=None if res.states is None else res.states[0],
    )
