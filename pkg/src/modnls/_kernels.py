"""Hot inner loops, compiled with numba when available.

Set ``MODNLS_DISABLE_NUMBA=1`` to force the pure-numpy path. Both paths
compute the same quantities; results agree to rounding, not bit for bit.
"""

import os
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi
# re-anchor the e^{ik theta} recurrence this often to bound rounding drift
_ANCHOR = 32
_SQ_ANCHOR = 16


@lru_cache(maxsize=16)
def _abs_wavenumbers(points):
    k = np.abs(np.rint(np.fft.fftfreq(points, d=1.0 / points))).astype(np.int64)
    k.setflags(write=False)
    return k


def _numba_requested() -> bool:
    flag = os.environ.get("MODNLS_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------
# numpy path

def phase_multiply_numpy(coeffs, ksq, theta):
    """coeffs * exp(-i theta |k|^2); theta is a scalar or one value per row."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim == 0:
        return coeffs * np.exp(-1j * theta * ksq)
    shape = theta.shape + (1,) * ksq.ndim
    return coeffs * np.exp(-1j * theta.reshape(shape) * ksq)


def cubic_numpy(u):
    return (u.real * u.real + u.imag * u.imag) * u


def nonlinear_phase_numpy(u, h):
    """exp(-i h |u|^2) u pointwise."""
    return np.exp(-1j * h * (u.real * u.real + u.imag * u.imag)) * u


def trig_eval_numpy(s, cos_coef, sin_coef, chunk=256):
    """sum_k a_k cos(2 pi k s) + b_k sin(2 pi k s) for k = 0..len-1."""
    s = np.asarray(s, dtype=np.float64)
    flat = s.ravel()
    out = np.empty(flat.shape, dtype=np.float64)
    k = np.arange(cos_coef.shape[0], dtype=np.float64)
    for start in range(0, flat.size, chunk):
        blk = flat[start:start + chunk]
        cyc = np.multiply.outer(blk, k)
        cyc -= np.floor(cyc)
        ang = TWO_PI * cyc
        out[start:start + chunk] = np.cos(ang) @ cos_coef + np.sin(ang) @ sin_coef
    return out.reshape(s.shape)


def gagliardo_sum_numpy(vals, h, alpha):
    """h^2 sum_{i != j} |v_i - v_j|^2 / |i h - j h|^(2 alpha + 1)."""
    n = vals.shape[0]
    total = 0.0
    for lag in range(1, n):
        d = vals[lag:] - vals[:-lag]
        total += 2.0 * np.dot(d, d) / (lag * h) ** (2.0 * alpha + 1.0)
    return total * h * h


# ---------------------------------------------------------------------------
# numba path

try:
    if not _numba_requested():
        raise ImportError("numba disabled by MODNLS_DISABLE_NUMBA")
    from numba import njit
except ImportError:
    njit = None

if njit is not None:

    @njit(cache=True)
    def _square_phases(kmax, theta, out):
        # out[k] = exp(-i theta k^2), k = 0..kmax, by the recurrence
        # z_{k+1} = z_k w_k, w_{k+1} = w_k exp(-2 i theta), re-anchored directly
        rot = complex(np.cos(2.0 * theta), -np.sin(2.0 * theta))
        z = 1.0 + 0.0j
        w = 1.0 + 0.0j
        for k in range(kmax + 1):
            if k % _SQ_ANCHOR == 0:
                a = theta * k * k
                z = complex(np.cos(a), -np.sin(a))
                b = theta * (2 * k + 1)
                w = complex(np.cos(b), -np.sin(b))
            out[k] = z
            z = z * w
            w = w * rot

    @njit(cache=True)
    def _phase_rows_1d(coeffs, absk, theta):
        rows, n = coeffs.shape
        kmax = 0
        for j in range(n):
            kmax = max(kmax, absk[j])
        table = np.empty(kmax + 1, dtype=np.complex128)
        out = np.empty_like(coeffs)
        for r in range(rows):
            _square_phases(kmax, theta[r], table)
            for j in range(n):
                out[r, j] = coeffs[r, j] * table[absk[j]]
        return out

    @njit(cache=True)
    def _phase_rows(coeffs, ksq, theta):
        rows, n = coeffs.shape
        out = np.empty_like(coeffs)
        for r in range(rows):
            th = theta[r]
            for j in range(n):
                ang = th * ksq[j]
                out[r, j] = coeffs[r, j] * complex(np.cos(ang), -np.sin(ang))
        return out

    @njit(cache=True)
    def _cubic_flat(u):
        out = np.empty_like(u)
        for j in range(u.shape[0]):
            z = u[j]
            out[j] = (z.real * z.real + z.imag * z.imag) * z
        return out

    @njit(cache=True)
    def _nlphase_flat(u, h):
        out = np.empty_like(u)
        for j in range(u.shape[0]):
            z = u[j]
            ang = h * (z.real * z.real + z.imag * z.imag)
            out[j] = complex(np.cos(ang), -np.sin(ang)) * z
        return out

    @njit(cache=True)
    def _trig_flat(s, cos_coef, sin_coef):
        # points in the inner loop so the recurrence vectorises across them
        n = cos_coef.shape[0]
        npts = s.shape[0]
        out = np.empty(npts)
        blk = 64
        zr = np.empty(blk)
        zi = np.empty(blk)
        sr = np.empty(blk)
        sn = np.empty(blk)
        acc = np.empty(blk)
        for start in range(0, npts, blk):
            m = min(blk, npts - start)
            for p in range(m):
                c1 = s[start + p] - np.floor(s[start + p])
                sr[p] = np.cos(TWO_PI * c1)
                sn[p] = np.sin(TWO_PI * c1)
                acc[p] = 0.0
            for k0 in range(0, n, _ANCHOR):
                for p in range(m):
                    cyc = k0 * s[start + p]
                    cyc -= np.floor(cyc)
                    zr[p] = np.cos(TWO_PI * cyc)
                    zi[p] = np.sin(TWO_PI * cyc)
                for k in range(k0, min(k0 + _ANCHOR, n)):
                    a = cos_coef[k]
                    b = sin_coef[k]
                    for p in range(m):
                        re = zr[p]
                        im = zi[p]
                        acc[p] += a * re + b * im
                        zr[p] = re * sr[p] - im * sn[p]
                        zi[p] = re * sn[p] + im * sr[p]
            for p in range(m):
                out[start + p] = acc[p]
        return out

    @njit(cache=True)
    def _gagliardo(vals, h, alpha):
        n = vals.shape[0]
        p = 2.0 * alpha + 1.0
        total = 0.0
        for lag in range(1, n):
            acc = 0.0
            for i in range(n - lag):
                d = vals[i + lag] - vals[i]
                acc += d * d
            total += 2.0 * acc / (lag * h) ** p
        return total * h * h

    def phase_multiply(coeffs, ksq, theta):
        c = np.ascontiguousarray(coeffs, dtype=np.complex128)
        rows = c.size // ksq.size
        th = np.ascontiguousarray(np.broadcast_to(theta, c.shape[: c.ndim - ksq.ndim]),
                                  dtype=np.float64).reshape(rows)
        c2 = c.reshape(rows, ksq.size)
        if ksq.ndim == 1:
            absk = _abs_wavenumbers(ksq.shape[0])
            return _phase_rows_1d(c2, absk, th).reshape(c.shape)
        return _phase_rows(c2, ksq.ravel(), th).reshape(c.shape)

    def cubic(u):
        u = np.ascontiguousarray(u, dtype=np.complex128)
        return _cubic_flat(u.ravel()).reshape(u.shape)

    def nonlinear_phase(u, h):
        u = np.ascontiguousarray(u, dtype=np.complex128)
        return _nlphase_flat(u.ravel(), float(h)).reshape(u.shape)

    def trig_eval(s, cos_coef, sin_coef):
        s = np.asarray(s, dtype=np.float64)
        flat = np.ascontiguousarray(s.ravel())
        return _trig_flat(flat, cos_coef, sin_coef).reshape(s.shape)

    def gagliardo_sum(vals, h, alpha):
        return float(_gagliardo(np.ascontiguousarray(vals, dtype=np.float64),
                                float(h), float(alpha)))

    BACKEND = "numba"
else:
    phase_multiply = phase_multiply_numpy
    cubic = cubic_numpy
    nonlinear_phase = nonlinear_phase_numpy
    trig_eval = trig_eval_numpy
    gagliardo_sum = gagliardo_sum_numpy
    BACKEND = "numpy"
