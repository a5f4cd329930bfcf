"""Convergence experiments: references, Monte Carlo errors, slopes, diagnostics."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .integrators import (RANDOMIZED, SCHEMES, STRANG, RandomSequence, SchemeSpec,
                          derive_seed, run_batch)
from .modulation import ModulationPath, evaluate, make_path
from .propagators import propagate_coeffs
from .spectral import Grid, SpectralField, cubic_coeffs, initial_datum, make_grid, norms

log = logging.getLogger(__name__)

# sequences per work unit; fixed so results never depend on the worker count
CHUNK = 10
MAX_EXCLUDED_FRACTION = 0.10


class ReferenceError(RuntimeError):
    """The reference run blew up or failed its refinement check."""


@dataclass
class RunConfig:
    dim: int = 1
    largest_mode: int = 2 ** 7
    sigma: float = 1.0
    T: float = 1.0
    steps: list = field(default_factory=lambda: [2 ** j for j in range(4, 11)])
    m: int = 100
    schemes: list = field(default_factory=lambda: list(SCHEMES))
    dealias: bool = False
    modulation: dict = field(default_factory=lambda: {"kind": "sine"})
    base_seed: int | None = 20240601
    reference_seed: int | None = 777
    refinement: int = 64
    reference_check: bool = True
    max_over_steps: bool = False
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def bad(key, why):
            raise ValueError(f"{key}: {why}")

        if self.dim < 1:
            bad("dim", "must be >= 1")
        if self.largest_mode < 1:
            bad("largest_mode", "must be >= 1")
        if self.sigma < 0:
            bad("sigma", "must be >= 0")
        if not self.T > 0:
            bad("T", "must be positive")
        if not self.steps or any(int(n) != n or n < 1 for n in self.steps):
            bad("steps", "must be a nonempty list of positive integers")
        if self.m < 1:
            bad("m", "must be >= 1")
        for s in self.schemes:
            if s not in SCHEMES:
                bad("schemes", f"unknown scheme {s!r}")
        if self.refinement < 16:
            bad("refinement", "must be >= 16")
        if "kind" not in self.modulation:
            bad("modulation.kind", "missing")
        if self.workers < 1:
            bad("workers", "must be >= 1")
        self.steps = sorted(int(n) for n in self.steps)

    @property
    def grid(self) -> Grid:
        return make_grid(self.dim, self.largest_mode)

    def path(self) -> ModulationPath:
        return make_path(self.modulation, horizon=self.T)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ErrorRecord:
    scheme: str
    N: int
    tau: float
    m: int
    errors: np.ndarray
    rms: float
    stddev: float
    excluded: int = 0
    valid: bool = True
    max_errors: np.ndarray | None = None
    max_rms: float | None = None

    def row(self) -> dict:
        return {"scheme": self.scheme, "tau": self.tau, "N": self.N, "m": self.m,
                "rms_error": self.rms, "stddev": self.stddev, "excluded_count": self.excluded}


@dataclass
class SlopeFit:
    taus: np.ndarray
    errors: np.ndarray
    slope: float
    intercept: float
    residual: float


@dataclass
class SweepResult:
    records: list
    fits: dict
    reference_diagnostics: dict

    @property
    def valid(self) -> bool:
        refs_ok = all(d.get("consistent", True) for d in self.reference_diagnostics.values())
        return refs_ok and all(r.valid for r in self.records)


def rms(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    return float(np.sqrt(np.mean(values * values)))


def fit_slope(pairs) -> SlopeFit:
    """Least-squares line through (log tau, log error)."""
    pairs = sorted((float(t), float(e)) for t, e in pairs)
    if len(pairs) < 3:
        raise ValueError(f"need at least 3 (tau, error) pairs, got {len(pairs)}")
    taus = np.array([p[0] for p in pairs])
    errs = np.array([p[1] for p in pairs])
    if np.any(taus <= 0) or np.any(errs <= 0) or not np.all(np.isfinite(errs)):
        raise ValueError("tau and error values must be positive and finite")
    x, y = np.log(taus), np.log(errs)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return SlopeFit(taus, errs, float(slope), float(intercept), resid)


# -- references ----------------------------------------------------------------

def reference_scheme(g: ModulationPath, scheme: str) -> str:
    """Strang for smooth modulations, the scheme itself otherwise."""
    return STRANG if g.is_smooth else scheme


def _reference_run(c0, grid, g, config: RunConfig, scheme: str, refinement: int):
    """Final state plus states at the times of the finest sweep grid."""
    n_fine = max(config.steps)
    n_ref = n_fine * refinement
    spec = SchemeSpec(scheme, config.dealias)
    xi = None
    if spec.randomized:
        xi = RandomSequence(config.reference_seed).draws(n_ref)[None]
    stride_states = config.max_over_steps
    res = run_batch(c0, grid, g, spec, config.T, n_ref, xi, record_states=stride_states)
    if res.blowup_step[0] >= 0:
        raise ReferenceError(f"reference run blew up at step {res.blowup_step[0]}")
    states = res.states[0, ::refinement] if stride_states else None
    return res.final[0], states


def compute_reference(u0: SpectralField, g: ModulationPath, config: RunConfig,
                      scheme: str = RANDOMIZED, refinement: int | None = None) -> SpectralField:
    """Reference solution at T with step min(tau)/refinement.

    Smooth modulations use Strang splitting; rough ones run ``scheme`` itself,
    the randomized scheme with the fixed reference seed.
    """
    refinement = config.refinement if refinement is None else refinement
    if refinement < 16:
        raise ValueError("refinement must be >= 16")
    final, _ = _reference_run(u0.coefficients, u0.grid, g, config,
                              reference_scheme(g, scheme), refinement)
    return SpectralField(u0.grid, final)


# -- Monte Carlo error -----------------------------------------------------------

def _sequence_seeds(seeds, m: int) -> list[int]:
    if np.ndim(seeds) == 0:
        return [derive_seed(int(seeds), k) for k in range(m)]
    seeds = [int(s) for s in seeds]
    if len(seeds) != m:
        raise ValueError(f"expected {m} sequence seeds, got {len(seeds)}")
    return seeds


def _chunk_errors(args):
    (c0, grid, g, spec, T, N, seeds, ref_final, ref_states, sigma) = args
    B = len(seeds)
    xi = None
    if spec.randomized:
        xi = np.stack([RandomSequence(s).draws(N) for s in seeds])
    c = np.broadcast_to(c0, (B,) + grid.shape)
    res = run_batch(c, grid, g, spec, T, N, xi, reference_states=ref_states, sigma=sigma)
    with np.errstate(all="ignore"):
        errs = norms(res.final - ref_final, grid, sigma)
    return errs, res.blowup_step, res.max_errors


def _map(func, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs))


def mc_error(u0: SpectralField, g: ModulationPath, scheme: str, N: int, m: int, seeds,
             config: RunConfig, reference: SpectralField | None = None,
             reference_states: np.ndarray | None = None) -> ErrorRecord:
    """RMS over m sequences of the H^sigma error at T against the reference.

    ``seeds`` is either a base seed (sequence k then uses ``derive_seed(base, k)``)
    or an explicit list of m per-sequence seeds. Deterministic schemes are run
    once and the single error is reported for every sequence.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    grid = u0.grid
    spec = SchemeSpec(scheme, config.dealias)
    if reference is None:
        reference = compute_reference(u0, g, config, scheme)
    ref_states = None
    if config.max_over_steps:
        if reference_states is None:
            raise ValueError("max-over-steps errors need reference states")
        stride = (reference_states.shape[0] - 1) // N
        ref_states = reference_states[::stride]
    c0 = u0.coefficients
    if spec.randomized:
        seq = _sequence_seeds(seeds, m)
        chunks = [seq[i:i + CHUNK] for i in range(0, m, CHUNK)]
    else:
        chunks = [[0]]
    jobs = [(c0, grid, g, spec, config.T, N, ch, reference.coefficients, ref_states, config.sigma)
            for ch in chunks]
    out = _map(_chunk_errors, jobs, config.workers)
    errors = np.concatenate([o[0] for o in out])
    blow = np.concatenate([o[1] for o in out])
    maxes = np.concatenate([o[2] for o in out]) if config.max_over_steps else None
    if not spec.randomized:
        errors = np.repeat(errors, m)
        blow = np.repeat(blow, m)
        maxes = None if maxes is None else np.repeat(maxes, m)
    ok = blow < 0
    excluded = int(np.count_nonzero(~ok))
    if excluded:
        log.warning("%s N=%d: %d of %d trajectories blew up and were excluded",
                    scheme, N, excluded, m)
    kept = errors[ok]
    valid = excluded <= MAX_EXCLUDED_FRACTION * m and kept.size > 0
    agg = rms(kept) if kept.size else math.nan
    sd = float(np.std(kept, ddof=1)) if kept.size > 1 else 0.0
    return ErrorRecord(
        scheme=scheme, N=N, tau=config.T / N, m=m, errors=errors, rms=agg, stddev=sd,
        excluded=excluded, valid=bool(valid),
        max_errors=maxes,
        max_rms=None if maxes is None or not kept.size else rms(maxes[ok]),
    )


def convergence_sweep(config: RunConfig, u0: SpectralField | None = None,
                      g: ModulationPath | None = None) -> SweepResult:
    """Errors over the step-count grid for every configured scheme, with slopes."""
    if len(config.steps) < 3:
        raise ValueError("a sweep needs at least 3 step counts")
    if u0 is None:
        u0 = initial_datum(config.grid)
    if g is None:
        g = config.path()
    grid = u0.grid
    refs = {}
    diagnostics = {}
    for scheme in config.schemes:
        rs = reference_scheme(g, scheme)
        if rs not in refs:
            log.info("reference %s at refinement %d", rs, config.refinement)
            refs[rs] = _reference_run(u0.coefficients, grid, g, config, rs, config.refinement)
            diagnostics[rs] = {"scheme": rs, "refinement": config.refinement,
                               "tau_ref": config.T / (max(config.steps) * config.refinement)}
    records = []
    fits = {}
    for scheme in config.schemes:
        final, states = refs[reference_scheme(g, scheme)]
        ref = SpectralField(grid, final)
        recs = []
        for N in config.steps:
            rec = mc_error(u0, g, scheme, N, config.m, config.base_seed, config, ref, states)
            log.info("%s N=%d rms=%.3e", scheme, N, rec.rms)
            recs.append(rec)
        records.extend(recs)
        good = [(r.tau, r.rms) for r in recs if r.valid and r.rms > 0]
        fits[scheme] = fit_slope(good) if len(good) >= 3 else None
    if config.reference_check:
        for rs, (final, _) in refs.items():
            finer, _ = _reference_run(u0.coefficients, grid, g, config, rs, 2 * config.refinement)
            diff = float(norms(final - finer, grid, config.sigma))
            coarsest = max(r.rms for r in records
                           if reference_scheme(g, r.scheme) == rs and r.valid)
            d = diagnostics[rs]
            d.update(check_refinement=2 * config.refinement, difference=diff,
                     coarsest_error=coarsest, consistent=bool(diff < 0.01 * coarsest))
            if not d["consistent"]:
                log.warning("reference %s: refinement difference %.3e exceeds 1%% of %.3e",
                            rs, diff, coarsest)
    return SweepResult(records, fits, diagnostics)


# -- oracles and diagnostics -----------------------------------------------------

def compute_frozen_flow_reference(u: SpectralField, g: ModulationPath, t_n: float, tau: float,
                                  quad_points: int = 4096, dealias: bool = False,
                                  batch: int = 512) -> SpectralField:
    """One step of the frozen-flow Duhamel approximation with composite midpoint quadrature.

    ``U(t+tau, t) u - i int_0^tau U(t+tau, t+r) f(U(t+r, t) u) dr`` where the
    nonlinearity acts on the freely evolved state.
    """
    if quad_points < 2:
        raise ValueError("quad_points must be >= 2")
    grid = u.grid
    c = u.coefficients
    g0, g1 = evaluate(g, [t_n, t_n + tau])
    h = tau / quad_points
    acc = np.zeros(grid.shape, dtype=np.complex128)
    for start in range(0, quad_points, batch):
        j = np.arange(start, min(start + batch, quad_points))
        gr = np.asarray(evaluate(g, t_n + (j + 0.5) * h))
        w = propagate_coeffs(np.broadcast_to(c, (j.size,) + grid.shape), grid, gr - g0)
        p = cubic_coeffs(w, grid, dealias)
        acc += propagate_coeffs(p, grid, g1 - gr).sum(axis=0)
    return SpectralField(grid, propagate_coeffs(c, grid, g1 - g0) - 1j * h * acc)


@dataclass
class MartingaleStats:
    resonance: float
    tau: float
    m: int
    sample_mean: complex
    integral: complex
    difference: complex
    stddev: float
    stddev_real: float
    stddev_imag: float
    steps: np.ndarray
    partial_rms: np.ndarray

    def growth_exponent(self, lo: int = 1) -> float:
        """Fitted exponent p in partial_rms ~ M^p over steps M >= lo."""
        sel = self.steps >= lo
        x, y = np.log(self.steps[sel]), np.log(self.partial_rms[sel])
        return float(np.polyfit(x, y, 1)[0])


def _midpoint_integral(g, K, a, tau, quad_points):
    r = a + (np.arange(quad_points) + 0.5) * (tau / quad_points)
    return np.exp(1j * K * np.asarray(evaluate(g, r))).sum() * (tau / quad_points)


def martingale_diagnostic(g: ModulationPath, resonance: float, t_n: float, tau: float, m: int,
                          seed: int, n_steps: int = 1, quad_points: int = 4096) -> MartingaleStats:
    """Stratified Monte Carlo estimate of int_0^tau exp(i K g(t_n + r)) dr.

    The first step's samples tau exp(i K g(t_n + tau xi)) are compared with a
    midpoint-rule value of the integral. Over ``n_steps`` consecutive steps
    the partial sums E^M of (integral - sample) are accumulated per sample and
    their root mean square is returned for M = 1..n_steps.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    xi = rng.random((m, n_steps))
    starts = t_n + tau * np.arange(n_steps)
    gs = np.asarray(evaluate(g, starts[None, :] + tau * xi)).reshape(m, n_steps)
    samples = tau * np.exp(1j * resonance * gs)
    integrals = np.array([_midpoint_integral(g, resonance, a, tau, quad_points) for a in starts])
    first = samples[:, 0]
    mean = complex(first.mean())
    sd_re = float(first.real.std(ddof=1)) if m > 1 else 0.0
    sd_im = float(first.imag.std(ddof=1)) if m > 1 else 0.0
    sd = float(np.sqrt(np.mean(np.abs(first - mean) ** 2))) if m > 1 else 0.0
    partial = np.cumsum(integrals[None, :] - samples, axis=1)
    prms = np.sqrt(np.mean(np.abs(partial) ** 2, axis=0))
    return MartingaleStats(
        resonance=float(resonance), tau=float(tau), m=m, sample_mean=mean,
        integral=complex(integrals[0]), difference=mean - complex(integrals[0]),
        stddev=sd, stddev_real=sd_re, stddev_imag=sd_im,
        steps=np.arange(1, n_steps + 1), partial_rms=prms,
    )
