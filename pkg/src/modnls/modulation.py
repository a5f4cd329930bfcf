"""Modulation functions g(t) driving the dispersion.

Four kinds are supported: ``affine`` (a t + b), ``sine`` (sin t), ``rough_fourier``
(a random trigonometric polynomial with power-law damped coefficients) and
``brownian`` (piecewise-linear Brownian path).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

SMOOTH_KINDS = ("affine", "sine")
KINDS = SMOOTH_KINDS + ("rough_fourier", "brownian")
DEFAULT_ROUGH_MODES = 2 ** 14

# relative slack on the domain end point, absorbs t_n + tau rounding
_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class ModulationPath:
    """A deterministic real function on [0, horizon].

    ``params`` records everything needed to rebuild the path; the arrays in
    ``_data`` are derived from them.
    """

    kind: str
    params: dict
    horizon: float = np.inf
    _data: dict = field(default_factory=dict, repr=False)

    @property
    def is_smooth(self) -> bool:
        return self.kind in SMOOTH_KINDS

    def __call__(self, t):
        return evaluate(self, t)

    def describe(self) -> dict:
        out = {"kind": self.kind, "horizon": None if np.isinf(self.horizon) else self.horizon}
        out.update(self.params)
        return out


def make_smooth_path(kind: str, slope: float = 1.0, intercept: float = 0.0,
                     horizon: float = np.inf) -> ModulationPath:
    """``affine``: g(t) = slope t + intercept; ``sine``: g(t) = sin(t)."""
    if kind == "affine":
        return ModulationPath("affine", {"slope": float(slope), "intercept": float(intercept)},
                              horizon=float(horizon))
    if kind == "sine":
        return ModulationPath("sine", {}, horizon=float(horizon))
    raise ValueError(f"unknown smooth modulation kind {kind!r}")


def synthesize_rough_samples(alpha: float, n_modes: int, seed: int) -> np.ndarray:
    """Damped-noise samples on the synthesis grid, before normalisation.

    Uniform noise on [-1, 1] is transformed, mode k is divided by
    (1 + |k|)^(alpha + 1/2), and the real part of the inverse transform is kept.
    """
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-1.0, 1.0, n_modes)
    k = np.fft.fftfreq(n_modes, d=1.0 / n_modes)
    damped = np.fft.fft(noise) / (1.0 + np.abs(k)) ** (alpha + 0.5)
    return np.fft.ifft(damped).real


def make_rough_path(alpha: float, n_modes: int = DEFAULT_ROUGH_MODES, seed: int = 0,
                    horizon: float = 1.0, amplitude: float = 1.0) -> ModulationPath:
    """Random trigonometric polynomial lying in W^{gamma,2} for every gamma < alpha.

    The synthesised samples are scaled so their maximum modulus is one, and the
    path is the trigonometric interpolant of those samples with period ``horizon``,
    so evaluation between nodes is exact.

    Parameters
    ----------
    alpha : float
        Regularity exponent in (0, 1).
    n_modes : int
        Number of synthesis samples (and Fourier modes); must be even.
    seed : int
        Seed of the uniform noise.
    horizon : float
        Length of the time domain, mapped onto one period.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if n_modes < 2 or n_modes % 2:
        raise ValueError(f"n_modes must be even and >= 2, got {n_modes}")
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    samples = synthesize_rough_samples(alpha, n_modes, seed)
    if amplitude <= 0:
        raise ValueError(f"amplitude must be positive, got {amplitude}")
    scale = amplitude / np.max(np.abs(samples))
    samples = samples * scale
    c = np.fft.fft(samples) / n_modes
    half = n_modes // 2
    # real form of Re(sum_k c_k e^{2 pi i k s}) over k = 0..N/2
    cos_coef = np.zeros(half + 1)
    sin_coef = np.zeros(half + 1)
    cos_coef[0] = c[0].real
    pos = c[1:half]
    neg = c[-1:-half:-1]
    cos_coef[1:half] = pos.real + neg.real
    sin_coef[1:half] = neg.imag - pos.imag
    cos_coef[half] = c[half].real
    sin_coef[half] = c[half].imag
    params = {"alpha": float(alpha), "n_modes": int(n_modes), "seed": int(seed),
              "amplitude": float(amplitude), "normalization": float(scale)}
    data = {"cos": cos_coef, "sin": sin_coef, "samples": samples}
    for arr in data.values():
        arr.setflags(write=False)
    return ModulationPath("rough_fourier", params, horizon=float(horizon), _data=data)


def make_brownian_path(n_steps: int, horizon: float = 1.0, seed: int = 0) -> ModulationPath:
    """Brownian path with ``n_steps`` Gaussian increments, linearly interpolated."""
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    rng = np.random.default_rng(seed)
    incr = np.sqrt(horizon / n_steps) * rng.standard_normal(n_steps)
    knots = np.linspace(0.0, horizon, n_steps + 1)
    values = np.concatenate(([0.0], np.cumsum(incr)))
    data = {"knots": knots, "values": values}
    for arr in data.values():
        arr.setflags(write=False)
    return ModulationPath("brownian", {"n_steps": int(n_steps), "seed": int(seed)},
                          horizon=float(horizon), _data=data)


def make_path(spec: dict, horizon: float = 1.0) -> ModulationPath:
    """Build a path from a config mapping with a ``kind`` key."""
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind == "affine":
        return make_smooth_path("affine", spec.get("slope", 1.0), spec.get("intercept", 0.0))
    if kind == "sine":
        return make_smooth_path("sine")
    if kind == "rough_fourier":
        return make_rough_path(spec["alpha"], spec.get("n_modes", DEFAULT_ROUGH_MODES),
                               spec.get("seed", 0), spec.get("horizon", horizon),
                               spec.get("amplitude", 1.0))
    if kind == "brownian":
        return make_brownian_path(spec.get("n_steps", 2 ** 14), spec.get("horizon", horizon),
                                  spec.get("seed", 0))
    raise ValueError(f"unknown modulation kind {kind!r}")


def evaluate(g: ModulationPath, t):
    """Evaluate g at scalar or array ``t``; raises ValueError outside [0, horizon]."""
    t_arr = np.asarray(t, dtype=np.float64)
    if np.isfinite(g.horizon):
        slack = _DOMAIN_SLACK * max(g.horizon, 1.0)
        if np.any(t_arr < -slack) or np.any(t_arr > g.horizon + slack):
            raise ValueError(f"time outside modulation domain [0, {g.horizon}]")
    if g.kind == "affine":
        out = g.params["slope"] * t_arr + g.params["intercept"]
    elif g.kind == "sine":
        out = np.sin(t_arr)
    elif g.kind == "rough_fourier":
        out = _kernels.trig_eval(t_arr / g.horizon, g._data["cos"], g._data["sin"])
    elif g.kind == "brownian":
        out = np.interp(t_arr, g._data["knots"], g._data["values"])
    else:
        raise ValueError(f"unknown modulation kind {g.kind!r}")
    if np.ndim(out) == 0:
        return float(out)
    return out


def estimate_w_norm(g: ModulationPath, alpha: float, resolution: int = 2000,
                    horizon: float | None = None) -> float:
    """Midpoint-rule estimate of the W^{alpha,2} (Sobolev-Slobodeckij) norm on (0, T).

    Both the L^2 integral and the Gagliardo double integral use ``resolution``
    midpoints per axis; the diagonal cells are left out of the double sum.
    """
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    T = g.horizon if horizon is None else horizon
    if not np.isfinite(T):
        raise ValueError("a finite horizon is needed to estimate the W-norm")
    h = T / resolution
    s = (np.arange(resolution) + 0.5) * h
    vals = np.asarray(evaluate(g, s), dtype=np.float64)
    l2 = h * float(np.dot(vals, vals))
    return float(np.sqrt(l2 + _kernels.gagliardo_sum(vals, h, alpha)))
